use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::expert::{expert_policy, ExpertConfig};
use super::geometry::{dist, wrap_angle};
use super::vehicle::{step_vehicle, Command, VehicleState};
use super::world::{ScenarioVariation, World};
use super::SimError;
use crate::control::{coupled_control, split_command, ControlConfig};
use crate::imgproc::{CameraSlot, ImageU8};
use crate::nnet::Model;
use crate::presets::DEPLOY_SPEED_LIMIT_KMH;

/// Produces a normalized steering command each control step.
pub trait Policy {
    /// Whether [`Policy::steering`] reads the center frame. Frame-free
    /// policies skip rendering.
    fn needs_frame(&self) -> bool {
        true
    }

    fn steering(&mut self, frame: Option<&ImageU8>, world: &World, state: &VehicleState) -> f64;
}

/// A trained network driving from the center camera.
#[derive(Debug, Clone, Copy)]
pub struct ModelPolicy<'a>(pub &'a Model);

impl Policy for ModelPolicy<'_> {
    fn steering(&mut self, frame: Option<&ImageU8>, _world: &World, _state: &VehicleState) -> f64 {
        self.0.predict(frame.expect("model policy needs a frame")) as f64
    }
}

impl<P: Policy + ?Sized> Policy for &mut P {
    fn needs_frame(&self) -> bool {
        (**self).needs_frame()
    }

    fn steering(&mut self, frame: Option<&ImageU8>, world: &World, state: &VehicleState) -> f64 {
        (**self).steering(frame, world, state)
    }
}

/// The scripted expert's steering.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpertPolicy(pub ExpertConfig);

impl Policy for ExpertPolicy {
    fn needs_frame(&self) -> bool {
        false
    }

    fn steering(&mut self, _frame: Option<&ImageU8>, world: &World, state: &VehicleState) -> f64 {
        expert_policy(world, state, &self.0).steering
    }
}

/// Fixed steering, whatever the camera shows.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantPolicy(pub f64);

impl Policy for ConstantPolicy {
    fn needs_frame(&self) -> bool {
        false
    }

    fn steering(&mut self, _frame: Option<&ImageU8>, _world: &World, _state: &VehicleState) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeployConfig {
    pub control: ControlConfig,
    pub rate_hz: f64,
    /// Abort the lap after this long; `None` picks a limit from track
    /// length and speed.
    pub max_time_s: Option<f64>,
    /// No forward progress of 1 m within this window counts as an
    /// interference.
    pub stall_s: f64,
    /// Clearance kept from cones around the body points.
    pub cone_clearance_m: f64,
    /// Half-length of the body, for cone contact checks.
    pub body_half_length_m: f64,
}

impl Default for DeployConfig {
    fn default() -> Self {
        Self {
            control: ControlConfig {
                speed_limit_kmh: DEPLOY_SPEED_LIMIT_KMH,
                ..ControlConfig::default()
            },
            rate_hz: 30.0,
            max_time_s: None,
            stall_s: 10.0,
            cone_clearance_m: 1.0,
            body_half_length_m: 1.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceKind {
    /// The body center left the drivable corridor.
    Corridor,
    Cone,
    Stall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interference {
    pub t: f64,
    pub kind: InterferenceKind,
    /// Lap progress at the event, metres.
    pub progress: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub steering: f64,
    pub throttle: f64,
    pub brake: f64,
    pub speed: f64,
    pub progress: f64,
}

/// One deployment lap.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LapLog {
    pub steps: Vec<StepRecord>,
    pub interferences: Vec<Interference>,
    /// Seconds from spawn to lap completion (or abort).
    pub lap_time: f64,
    pub completed: bool,
    /// Per-step latency from frame to actuator command, milliseconds.
    pub latency_ms: Vec<f64>,
}

impl LapLog {
    pub fn interference_count(&self) -> usize {
        self.interferences.len()
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,x,y,yaw,steering,throttle,brake,speed,progress,event")?;
        let mut events = self.interferences.iter().peekable();
        for r in &self.steps {
            let mut event = String::new();
            while let Some(e) = events.next_if(|e| e.t <= r.t + 1e-9) {
                if !event.is_empty() {
                    event.push('+');
                }
                event.push_str(match e.kind {
                    InterferenceKind::Corridor => "corridor",
                    InterferenceKind::Cone => "cone",
                    InterferenceKind::Stall => "stall",
                });
            }
            writeln!(
                w,
                "{:.4},{:.4},{:.4},{:.6},{:.6},{:.6},{:.6},{:.4},{:.3},{}",
                r.t, r.x, r.y, r.yaw, r.steering, r.throttle, r.brake, r.speed, r.progress, event
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), SimError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// Deploy `model` for one lap of `world` under `variation`.
pub fn deploy_model(world: &World, model: &Model, cfg: &DeployConfig, variation: &ScenarioVariation) -> Result<LapLog, SimError> {
    check_model(model)?;
    deploy(world, &mut ModelPolicy(model), cfg, variation)
}

/// Reject models that cannot consume the rendered camera frames.
pub fn check_model(model: &Model) -> Result<(), SimError> {
    if model.spec.input.channels != 3 {
        return Err(SimError::Incompatible(format!(
            "model expects {} input channels; the camera renders RGB",
            model.spec.input.channels
        )));
    }
    Ok(())
}

/// Closed-loop lap: render the center camera, query the policy, apply the
/// coupled longitudinal law, integrate. Leaving the corridor, touching a
/// cone or stalling logs one interference and resets the vehicle to the
/// corridor center nearby, tangent to the track.
pub fn deploy(world: &World, policy: &mut dyn Policy, cfg: &DeployConfig, variation: &ScenarioVariation) -> Result<LapLog, SimError> {
    cfg.control.validate()?;
    if !(cfg.rate_hz >= 10.0) {
        return Err(SimError::Scenario(format!("control rate {} Hz must be at least 10 Hz", cfg.rate_hz)));
    }
    let w = world.vary(variation)?;
    let mut control = cfg.control;
    if let Some(limit) = variation.speed_limit {
        control.speed_limit_kmh = limit;
    }
    let line = w.centerline();
    let length = line.length();
    let dir = w.direction();
    let dt = 1.0 / cfg.rate_hz;
    let max_time = cfg
        .max_time_s
        .unwrap_or_else(|| (6.0 * length / (control.speed_limit_kmh / 3.6)).max(120.0));
    let window = (line.len() / 8).max(4);

    let mut state = w.spawn_state();
    state.yaw = wrap_angle(state.yaw + variation.spawn_yaw_delta.to_radians());
    let body = |st: &VehicleState| st.ahead(w.params.center_offset());
    let start = line.project(body(&state));
    let mut seg = start.segment;
    let mut last_s = start.s;
    let mut progress = 0.0;
    let (mut best_progress, mut best_t) = (0.0f64, 0.0f64);

    let mut log = LapLog::default();
    let mut t = 0.0;
    while progress < length {
        if t >= max_time {
            log.lap_time = t;
            return Ok(log);
        }
        let frame = policy.needs_frame().then(|| w.render(&state, CameraSlot::Center));
        let clock = Instant::now();
        let steering = policy.steering(frame.as_ref(), &w, &state).clamp(-1.0, 1.0);
        let xi = coupled_control(steering, state.v, &control)?;
        let (throttle, brake) = split_command(xi);
        log.latency_ms.push(clock.elapsed().as_secs_f64() * 1e3);
        let cmd = Command { steering, throttle, brake };
        state = step_vehicle(&state, &cmd, &w.params, control.speed_limit_kmh, dt);
        t += dt;

        let centre = body(&state);
        let p = line.project_near(centre, seg, window);
        seg = p.segment;
        progress += dir * line.arc_delta(last_s, p.s);
        last_s = p.s;
        if progress > best_progress + 1.0 {
            best_progress = progress;
            best_t = t;
        }
        log.steps.push(StepRecord {
            t,
            x: state.x,
            y: state.y,
            yaw: state.yaw,
            steering,
            throttle,
            brake,
            speed: state.v,
            progress,
        });

        let (c, half) = w.scenario.corridor_at(line, p.s);
        let kind = if (dir * p.lateral - c).abs() > half {
            Some(InterferenceKind::Corridor)
        } else if cone_contact(&w, &state, cfg) {
            Some(InterferenceKind::Cone)
        } else if t - best_t > cfg.stall_s {
            Some(InterferenceKind::Stall)
        } else {
            None
        };
        if let Some(kind) = kind {
            log.interferences.push(Interference { t, kind, progress });
            let mut s = p.s;
            if kind == InterferenceKind::Cone {
                // Restart just past the cone so the reset does not repeat.
                let clear = cfg.body_half_length_m + cfg.cone_clearance_m + super::scenario::CONE_RADIUS_M + 2.0;
                if let Some(cone) = nearest_cone(&w, &state) {
                    let ahead = dir * line.arc_delta(s, cone.s);
                    let skip = (ahead + clear).max(0.0);
                    s = line.wrap_s(s + dir * skip);
                    progress += skip;
                }
            }
            state = w.corridor_pose(s, state.v);
            let q = line.project(body(&state));
            seg = q.segment;
            last_s = q.s;
            best_progress = progress;
            best_t = t;
        }
    }
    log.lap_time = t;
    log.completed = true;
    Ok(log)
}

fn body_points(world: &World, state: &VehicleState, half_len: f64) -> [[f64; 2]; 3] {
    let c = state.ahead(world.params.center_offset());
    let h = state.heading();
    [
        c,
        [c[0] + half_len * h[0], c[1] + half_len * h[1]],
        [c[0] - half_len * h[0], c[1] - half_len * h[1]],
    ]
}

fn cone_contact(world: &World, state: &VehicleState, cfg: &DeployConfig) -> bool {
    let pts = body_points(world, state, cfg.body_half_length_m);
    world.scenario.obstacles.iter().any(|cone| {
        let limit = cone.radius + cfg.cone_clearance_m;
        pts.iter().any(|p| dist(*p, [cone.x, cone.y]) < limit)
    })
}

fn nearest_cone<'a>(world: &'a World, state: &VehicleState) -> Option<&'a super::geometry::Projection> {
    let c = state.ahead(world.params.center_offset());
    world
        .scenario
        .obstacles
        .iter()
        .zip(world.cone_projections())
        .min_by(|a, b| dist(c, [a.0.x, a.0.y]).total_cmp(&dist(c, [b.0.x, b.0.y])))
        .map(|(_, p)| p)
}
