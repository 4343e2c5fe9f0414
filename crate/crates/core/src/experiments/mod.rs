//! Robustness experiments around closed-loop deployment and the degree of
//! autonomy metric.

mod analysis;
mod report;

pub use analysis::{prediction_analysis, subset_by_time, PredictionRow, PredictionTrace};
pub use report::{format_bounds, LatencyStats, SuiteReport, TrainingSummary};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::nnet::Model;
use crate::presets::{Behavior, TRAINING_SPEED_LIMIT_KMH};
use crate::rng::Rng;
pub use crate::simworld::{ObstacleSet, ScenarioVariation};
use crate::simworld::{check_model, deploy, DeployConfig, ExpertPolicy, ModelPolicy, Policy, SimError, World};

/// Time charged per interference, seconds.
pub const INTERFERENCE_PENALTY_S: f64 = 6.0;

/// Degree of autonomy in percent: `(1 - 6 n / t) * 100`, floored at 0.
pub fn autonomy(n_int: usize, t_lap: f64) -> f64 {
    if !(t_lap > 0.0) {
        return 0.0;
    }
    ((1.0 - INTERFERENCE_PENALTY_S * n_int as f64 / t_lap) * 100.0).clamp(0.0, 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    NoVariation,
    ObstacleVariation,
    LightIntensity,
    LightDirection,
    Position,
    Orientation,
    HeadingInversion,
    SpeedLimit,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::NoVariation,
        ExperimentId::ObstacleVariation,
        ExperimentId::LightIntensity,
        ExperimentId::LightDirection,
        ExperimentId::Position,
        ExperimentId::Orientation,
        ExperimentId::HeadingInversion,
        ExperimentId::SpeedLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::NoVariation => "no_variation",
            ExperimentId::ObstacleVariation => "obstacle_variation",
            ExperimentId::LightIntensity => "light_intensity",
            ExperimentId::LightDirection => "light_direction",
            ExperimentId::Position => "position",
            ExperimentId::Orientation => "orientation",
            ExperimentId::HeadingInversion => "heading_inversion",
            ExperimentId::SpeedLimit => "speed_limit",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ExperimentId::NoVariation => "No variation",
            ExperimentId::ObstacleVariation => "Scene obstacle variation",
            ExperimentId::LightIntensity => "Scene light intensity variation",
            ExperimentId::LightDirection => "Scene light direction variation",
            ExperimentId::Position => "Vehicle position variation",
            ExperimentId::Orientation => "Vehicle orientation variation",
            ExperimentId::HeadingInversion => "Vehicle heading inversion",
            ExperimentId::SpeedLimit => "Vehicle speed limit variation",
        }
    }

    /// Obstacle variation only makes sense where cones were trained on.
    pub fn applies_to(self, b: Behavior) -> bool {
        self != ExperimentId::ObstacleVariation || b == Behavior::Collision
    }

    pub fn suite(b: Behavior) -> Vec<ExperimentId> {
        Self::ALL.into_iter().filter(|e| e.applies_to(b)).collect()
    }

    /// Step, unit and search directions of the sweep experiments.
    pub fn sweep(self) -> Option<Sweep> {
        let (step, unit, both) = match self {
            ExperimentId::LightIntensity => (0.1, "cd", true),
            ExperimentId::LightDirection => (1.0, "deg", true),
            ExperimentId::Orientation => (5.0, "deg", true),
            ExperimentId::SpeedLimit => (5.0, "km/h", false),
            _ => return None,
        };
        Some(Sweep { step, unit, both_directions: both })
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub step: f64,
    pub unit: &'static str,
    /// Speed limits are only raised.
    pub both_directions: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Steps tried per sweep direction before giving up on finding a limit.
    pub max_steps: usize,
    pub laps_per_condition: usize,
    /// Seeds re-randomized obstacle placements.
    pub seed: u64,
    /// Spawn arc-length shift for the position experiment, as a fraction
    /// of the lap.
    pub position_shift: f64,
    /// Speed limit the sweep starts from, km/h.
    pub base_speed_kmh: f64,
    pub deploy: DeployConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            max_steps: 20,
            laps_per_condition: 1,
            seed: 0,
            position_shift: 0.5,
            base_speed_kmh: TRAINING_SPEED_LIMIT_KMH,
            deploy: DeployConfig::default(),
        }
    }
}

/// What drives the vehicle.
#[derive(Debug, Clone, Copy)]
pub enum Driver<'a> {
    Model(&'a Model),
    Expert,
}

impl<'a> Driver<'a> {
    fn policy(&self) -> Box<dyn Policy + 'a> {
        match *self {
            Driver::Model(m) => Box::new(ModelPolicy(m)),
            Driver::Expert => Box::new(ExpertPolicy::default()),
        }
    }
}

/// One variation and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    /// Variation value in the experiment's unit (delta, count or absolute
    /// speed limit).
    pub value: f64,
    pub variation: ScenarioVariation,
    pub eta: f64,
    pub lap_time: f64,
    pub interferences: usize,
    pub completed: bool,
}

impl Condition {
    /// Operational "approximately 100 % autonomy": a finished lap without
    /// interference.
    pub fn full_autonomy(&self) -> bool {
        self.completed && self.interferences == 0
    }
}

/// Range of values with full autonomy. A `None` side means no value on that
/// side passed, including the unvaried baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// The search stopped at the step cap, not at a failure.
    pub lower_capped: bool,
    pub upper_capped: bool,
}

impl Bounds {
    /// The passing interval, `None` when empty.
    pub fn interval(&self) -> Option<(f64, f64)> {
        Some((self.lower?, self.upper?))
    }

    /// True when `self` covers `other` and reaches strictly further on at
    /// least one side. Any non-empty range strictly contains an empty one.
    pub fn strictly_contains(&self, other: &Bounds) -> bool {
        const EPS: f64 = 1e-9;
        match (self.interval(), other.interval()) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some((a, b)), Some((c, d))) => a <= c + EPS && b >= d - EPS && (a < c - EPS || b > d + EPS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: ExperimentId,
    pub behavior: Behavior,
    pub unit: String,
    /// Sorted by value.
    pub conditions: Vec<Condition>,
    /// Sweep experiments only.
    pub bounds: Option<Bounds>,
    /// Policy latency over every lap of the experiment.
    pub latency: Option<LatencyStats>,
}

impl ExperimentReport {
    /// Mean autonomy over the conditions.
    pub fn mean_eta(&self) -> f64 {
        if self.conditions.is_empty() {
            return 0.0;
        }
        self.conditions.iter().map(|c| c.eta).sum::<f64>() / self.conditions.len() as f64
    }
}

struct Outcome {
    condition: Condition,
    latency_ms: Vec<f64>,
}

fn run_condition(world: &World, driver: Driver<'_>, cfg: &ExperimentConfig, value: f64, variation: ScenarioVariation) -> Result<Outcome, SimError> {
    let mut policy = driver.policy();
    let (mut n, mut t, mut completed) = (0, 0.0, true);
    let mut latency_ms = Vec::new();
    for _ in 0..cfg.laps_per_condition.max(1) {
        let log = deploy(world, policy.as_mut(), &cfg.deploy, &variation)?;
        n += log.interference_count();
        t += log.lap_time;
        completed &= log.completed;
        latency_ms.extend(log.latency_ms);
    }
    Ok(Outcome {
        condition: Condition {
            value,
            variation,
            eta: if completed { autonomy(n, t) } else { 0.0 },
            lap_time: t,
            interferences: n,
            completed,
        },
        latency_ms,
    })
}

fn sweep_variation(id: ExperimentId, value: f64) -> ScenarioVariation {
    let mut v = ScenarioVariation::default();
    match id {
        ExperimentId::LightIntensity => v.light_intensity_delta = value,
        ExperimentId::LightDirection => v.light_direction_delta = value,
        ExperimentId::Orientation => v.spawn_yaw_delta = value,
        ExperimentId::SpeedLimit => v.speed_limit = Some(value),
        _ => unreachable!("{id} is not a sweep"),
    }
    v
}

/// Step outward from the base value until the first condition without full
/// autonomy or the step cap. Returns the conditions run and the furthest
/// passing value (`None` if even the base failed).
fn search(
    id: ExperimentId,
    world: &World,
    driver: Driver<'_>,
    cfg: &ExperimentConfig,
    base: f64,
    step: f64,
    base_passed: bool,
) -> Result<(Vec<Outcome>, Option<f64>, bool), SimError> {
    let mut out = Vec::new();
    if !base_passed {
        return Ok((out, None, false));
    }
    let mut best = base;
    for k in 1..=cfg.max_steps {
        // Decimal steps are rebuilt from integers to avoid drift.
        let value = ((base + k as f64 * step) * 1e6).round() / 1e6;
        let o = run_condition(world, driver, cfg, value, sweep_variation(id, value))?;
        let pass = o.condition.full_autonomy();
        out.push(o);
        if !pass {
            return Ok((out, Some(best), false));
        }
        best = value;
    }
    Ok((out, Some(best), true))
}

/// Run one experiment of the suite for `world`'s behavior.
pub fn run_experiment(id: ExperimentId, world: &World, driver: Driver<'_>, cfg: &ExperimentConfig) -> Result<ExperimentReport, SimError> {
    let behavior = world.scenario.id;
    if !id.applies_to(behavior) {
        return Err(SimError::Scenario(format!("{id} does not apply to the {behavior} scenario")));
    }
    if let Driver::Model(m) = driver {
        check_model(m)?;
    }
    let mut outcomes: Vec<Outcome>;
    let mut bounds = None;
    let unit;
    if let Some(sweep) = id.sweep() {
        unit = sweep.unit.to_string();
        let base = if id == ExperimentId::SpeedLimit { cfg.base_speed_kmh } else { 0.0 };
        let first = run_condition(world, driver, cfg, base, sweep_variation(id, base))?;
        let ok = first.condition.full_autonomy();
        let (up, down) = if sweep.both_directions {
            let (a, b) = rayon::join(
                || search(id, world, driver, cfg, base, sweep.step, ok),
                || search(id, world, driver, cfg, base, -sweep.step, ok),
            );
            (a?, Some(b?))
        } else {
            (search(id, world, driver, cfg, base, sweep.step, ok)?, None)
        };
        outcomes = vec![first];
        let (up_runs, upper, upper_capped) = up;
        outcomes.extend(up_runs);
        let (lower, lower_capped) = match down {
            Some((runs, lower, capped)) => {
                outcomes.extend(runs);
                (lower, capped)
            }
            None => (ok.then_some(base), false),
        };
        bounds = Some(Bounds { lower, upper, lower_capped, upper_capped });
    } else {
        let line = world.centerline();
        let variations: Vec<(f64, ScenarioVariation)> = match id {
            ExperimentId::NoVariation => vec![(0.0, ScenarioVariation::default())],
            ExperimentId::Position => {
                let s = line.wrap_s(world.scenario.spawn.s + cfg.position_shift * line.length());
                vec![(s, ScenarioVariation { spawn_s: Some(s), ..Default::default() })]
            }
            ExperimentId::HeadingInversion => {
                vec![(180.0, ScenarioVariation { heading_inverted: true, ..Default::default() })]
            }
            ExperimentId::ObstacleVariation => [20usize, 10, 0]
                .into_iter()
                .map(|count| {
                    let seed = Rng::derive(cfg.seed, &[0x0B5, count as u64]).next_u64();
                    (count as f64, ScenarioVariation { obstacles: Some(ObstacleSet { count, seed }), ..Default::default() })
                })
                .collect(),
            _ => unreachable!("sweeps handled above"),
        };
        unit = match id {
            ExperimentId::Position => "m",
            ExperimentId::HeadingInversion => "deg",
            ExperimentId::ObstacleVariation => "cones",
            _ => "",
        }
        .to_string();
        use rayon::prelude::*;
        outcomes = variations
            .into_par_iter()
            .map(|(value, v)| run_condition(world, driver, cfg, value, v))
            .collect::<Result<_, _>>()?;
    }
    outcomes.sort_by(|a, b| a.condition.value.total_cmp(&b.condition.value));
    let latency: Vec<f64> = outcomes.iter().flat_map(|o| o.latency_ms.iter().copied()).collect();
    Ok(ExperimentReport {
        id,
        behavior,
        unit,
        conditions: outcomes.into_iter().map(|o| o.condition).collect(),
        bounds,
        latency: LatencyStats::from_samples(&latency),
    })
}

/// Every experiment that applies to `world`'s behavior, in order.
pub fn run_suite(ids: &[ExperimentId], world: &World, driver: Driver<'_>, cfg: &ExperimentConfig) -> Result<Vec<ExperimentReport>, SimError> {
    ids.iter().map(|&id| run_experiment(id, world, driver, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autonomy_values() {
        assert_eq!(autonomy(0, 57.3), 100.0);
        assert!((autonomy(2, 120.0) - 90.0).abs() < 1e-12);
        assert_eq!(autonomy(10, 60.0), 0.0);
        assert_eq!(autonomy(50, 60.0), 0.0);
        assert!(autonomy(1, 100.0) > autonomy(2, 100.0));
    }

    #[test]
    fn names_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("nope".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn obstacle_variation_only_for_collision() {
        assert!(ExperimentId::suite(Behavior::Collision).contains(&ExperimentId::ObstacleVariation));
        assert!(!ExperimentId::suite(Behavior::Simplistic).contains(&ExperimentId::ObstacleVariation));
        assert_eq!(ExperimentId::suite(Behavior::Rigorous).len(), 7);
    }

    #[test]
    fn containment() {
        let b = |l: Option<f64>, u: Option<f64>| Bounds { lower: l, upper: u, lower_capped: false, upper_capped: false };
        assert!(b(Some(-0.4), Some(0.3)).strictly_contains(&b(Some(-0.2), Some(0.3))));
        assert!(!b(Some(-0.2), Some(0.3)).strictly_contains(&b(Some(-0.2), Some(0.3))));
        assert!(!b(Some(-0.4), Some(0.2)).strictly_contains(&b(Some(-0.2), Some(0.3))));
        assert!(b(Some(0.0), Some(0.0)).strictly_contains(&b(None, None)));
        assert!(!b(None, None).strictly_contains(&b(None, None)));
    }

    #[test]
    fn expert_no_variation_is_full() {
        let w = World::builtin(Behavior::Simplistic).unwrap();
        let r = run_experiment(ExperimentId::NoVariation, &w, Driver::Expert, &ExperimentConfig::default()).unwrap();
        assert_eq!(r.conditions.len(), 1);
        assert_eq!(r.conditions[0].eta, 100.0);
    }

    #[test]
    fn obstacle_protocol_runs_three_sets() {
        let w = World::builtin(Behavior::Collision).unwrap();
        let r = run_experiment(ExperimentId::ObstacleVariation, &w, Driver::Expert, &ExperimentConfig::default()).unwrap();
        let counts: Vec<f64> = r.conditions.iter().map(|c| c.value).collect();
        assert_eq!(counts, vec![0.0, 10.0, 20.0]);
        assert!(r.conditions.iter().all(|c| c.eta == 100.0));
        let w = World::builtin(Behavior::Rigorous).unwrap();
        assert!(run_experiment(ExperimentId::ObstacleVariation, &w, Driver::Expert, &ExperimentConfig::default()).is_err());
    }

    #[test]
    fn speed_sweep_starts_at_training_limit() {
        let w = World::builtin(Behavior::Simplistic).unwrap();
        let cfg = ExperimentConfig { max_steps: 2, ..ExperimentConfig::default() };
        let r = run_experiment(ExperimentId::SpeedLimit, &w, Driver::Expert, &cfg).unwrap();
        let values: Vec<f64> = r.conditions.iter().map(|c| c.value).collect();
        assert_eq!(values, vec![30.0, 35.0, 40.0]);
        let b = r.bounds.unwrap();
        assert_eq!((b.upper, b.upper_capped), (Some(40.0), true));
    }
}
