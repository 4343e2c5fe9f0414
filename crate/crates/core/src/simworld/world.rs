use serde::{Deserialize, Serialize};

use super::geometry::{wrap_angle, Centerline, Projection};
use super::render::{CameraRig, Renderer};
use super::scenario::TrackScenario;
use super::vehicle::{VehicleParams, VehicleState};
use super::SimError;
use crate::imgproc::{CameraSlot, ImageU8};
use crate::presets::Behavior;

/// Re-randomized obstacle layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstacleSet {
    pub count: usize,
    pub seed: u64,
}

/// Departure from the scenario as collected. Unset axes keep the
/// collected value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioVariation {
    /// Added to the light intensity, cd.
    pub light_intensity_delta: f64,
    /// Added to the light direction, degrees.
    pub light_direction_delta: f64,
    /// Spawn arc length override.
    pub spawn_s: Option<f64>,
    /// Added to the spawn yaw, degrees.
    pub spawn_yaw_delta: f64,
    /// Spawn facing the opposite way round the track.
    pub heading_inverted: bool,
    /// Speed limit override, km/h.
    pub speed_limit: Option<f64>,
    pub obstacles: Option<ObstacleSet>,
}

/// A validated scenario with its centerline and renderer.
#[derive(Debug, Clone)]
pub struct World {
    pub scenario: TrackScenario,
    pub params: VehicleParams,
    line: Centerline,
    renderer: Renderer,
    cones: Vec<Projection>,
}

impl World {
    pub fn new(scenario: TrackScenario, rig: CameraRig) -> Result<Self, SimError> {
        let line = scenario.validate()?;
        let renderer = Renderer::new(&scenario, &line, rig);
        let cones = project_cones(&scenario, &line);
        Ok(Self {
            scenario,
            params: VehicleParams::default(),
            line,
            renderer,
            cones,
        })
    }

    /// Built-in scenario with the rig its behavior was collected with.
    pub fn builtin(id: Behavior) -> Result<Self, SimError> {
        Self::with_preset_rig(TrackScenario::builtin(id))
    }

    /// `scenario` seen through the rig of its behavior preset.
    pub fn with_preset_rig(scenario: TrackScenario) -> Result<Self, SimError> {
        let rig = if scenario.id.preset().cameras == 1 { CameraRig::single() } else { CameraRig::default() };
        Self::new(scenario, rig)
    }

    pub fn centerline(&self) -> &Centerline {
        &self.line
    }

    pub fn renderer(&self) -> &Renderer {
        &self.renderer
    }

    /// Cone positions relative to the centerline, in scenario order.
    pub fn cone_projections(&self) -> &[Projection] {
        &self.cones
    }

    pub fn rig(&self) -> &CameraRig {
        self.renderer.rig()
    }

    /// Travel direction along the centerline: +1 or -1.
    pub fn direction(&self) -> f64 {
        if self.scenario.spawn.reverse { -1.0 } else { 1.0 }
    }

    pub fn render(&self, state: &VehicleState, slot: CameraSlot) -> ImageU8 {
        self.renderer.render(&self.scenario, state, slot, &self.scenario.light)
    }

    /// Pose at the scenario spawn, on the corridor center, tangent to the
    /// direction of travel.
    pub fn spawn_state(&self) -> VehicleState {
        self.corridor_pose(self.scenario.spawn.s, 0.0)
    }

    /// Rear-axle pose such that the body center sits on the corridor center
    /// at arc length `s`.
    pub(crate) fn corridor_pose(&self, s: f64, v: f64) -> VehicleState {
        let dir = self.direction();
        let (centre, _) = self.scenario.corridor_at(&self.line, s);
        let body = self.line.offset_point(s, dir * centre);
        let t = self.line.tangent_at(s);
        let yaw = wrap_angle(t[1].atan2(t[0]) + if dir < 0.0 { std::f64::consts::PI } else { 0.0 });
        let back = self.params.center_offset();
        VehicleState {
            x: body[0] - back * yaw.cos(),
            y: body[1] - back * yaw.sin(),
            yaw,
            v,
        }
    }

    /// Apply `v`. Geometry is unchanged, so the baked ground raster is
    /// shared; only shadows are recast when the light direction moves.
    pub fn vary(&self, v: &ScenarioVariation) -> Result<World, SimError> {
        let mut sc = self.scenario.clone();
        sc.light.intensity_cd += v.light_intensity_delta;
        sc.light.direction_deg += v.light_direction_delta;
        if let Some(s) = v.spawn_s {
            sc.spawn.s = self.line.wrap_s(s);
        }
        if v.heading_inverted {
            sc.spawn.reverse = !sc.spawn.reverse;
        }
        if let Some(limit) = v.speed_limit {
            sc.speed_limit_kmh = limit;
        }
        if let Some(set) = v.obstacles {
            sc = sc.with_obstacles(set.count, set.seed)?;
        }
        sc.validate()?;
        let renderer = self.renderer.relit(&sc, &sc.light);
        let cones = project_cones(&sc, &self.line);
        Ok(World {
            scenario: sc,
            params: self.params,
            line: self.line.clone(),
            renderer,
            cones,
        })
    }
}

fn project_cones(sc: &TrackScenario, line: &Centerline) -> Vec<Projection> {
    sc.obstacles.iter().map(|c| line.project([c.x, c.y])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spawn_is_centred_and_tangent() {
        let w = World::builtin(Behavior::Rigorous).unwrap();
        let st = w.spawn_state();
        let body = [st.x + 1.3 * st.yaw.cos(), st.y + 1.3 * st.yaw.sin()];
        let p = w.centerline().project(body);
        assert!((p.lateral + 2.0).abs() < 0.05, "right lane center, got {}", p.lateral);
        assert!(wrap_angle(st.yaw - w.centerline().heading_at(p.s)).abs() < 0.05);
    }

    #[test]
    fn inverted_heading_faces_backwards() {
        let w = World::builtin(Behavior::Simplistic).unwrap();
        let inv = w.vary(&ScenarioVariation { heading_inverted: true, ..Default::default() }).unwrap();
        let d = wrap_angle(inv.spawn_state().yaw - w.spawn_state().yaw);
        assert!((d.abs() - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn obstacle_sets_replace_cones() {
        let w = World::builtin(Behavior::Collision).unwrap();
        for count in [20, 10, 0] {
            let v = w.vary(&ScenarioVariation { obstacles: Some(ObstacleSet { count, seed: 99 }), ..Default::default() }).unwrap();
            assert_eq!(v.scenario.obstacles.len(), count);
        }
    }
}
