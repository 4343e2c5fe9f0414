use serde::{Deserialize, Serialize};

use super::geometry::{dist, wrap_angle};
use super::vehicle::{Command, VehicleState};
use super::world::World;
use crate::control::{coupled_control, split_command, ControlConfig};

/// Scripted demonstrator: pure pursuit on the corridor center, shifted
/// away from cones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertConfig {
    /// Lookahead at standstill, metres.
    pub lookahead_m: f64,
    /// Extra lookahead per m/s of speed.
    pub lookahead_s: f64,
    /// Lateral shift of the reference when passing a cone.
    pub avoid_offset_m: f64,
    /// Full shift is held this far either side of a cone.
    pub avoid_hold_m: f64,
    /// Length of the cosine ramp into and out of the shift.
    pub avoid_ramp_m: f64,
    pub tau: f64,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        Self {
            lookahead_m: 5.0,
            lookahead_s: 0.5,
            avoid_offset_m: 2.2,
            avoid_hold_m: 4.0,
            avoid_ramp_m: 14.0,
            tau: 1.0,
        }
    }
}

/// Reference offset in the travel frame (left positive) at arc length `s`.
pub(crate) fn avoidance_offset(world: &World, s: f64, cfg: &ExpertConfig) -> f64 {
    let line = world.centerline();
    let dir = world.direction();
    let mut off = 0.0;
    for cone in world.cone_projections() {
        let ds = line.arc_delta(s, cone.s).abs();
        let w = if ds <= cfg.avoid_hold_m {
            1.0
        } else if ds <= cfg.avoid_hold_m + cfg.avoid_ramp_m {
            0.5 * (1.0 + (std::f64::consts::PI * (ds - cfg.avoid_hold_m) / cfg.avoid_ramp_m).cos())
        } else {
            continue;
        };
        let side = (dir * cone.lateral).signum();
        off -= side * cfg.avoid_offset_m * w;
    }
    off.clamp(-cfg.avoid_offset_m, cfg.avoid_offset_m)
}

/// Expert command at `state`: pure-pursuit steering toward the reference
/// path and the coupled longitudinal law at the scenario speed limit.
pub fn expert_policy(world: &World, state: &VehicleState, cfg: &ExpertConfig) -> Command {
    let steering = expert_steering(world, state, cfg);
    let control = ControlConfig {
        speed_limit_kmh: world.scenario.speed_limit_kmh,
        steering_limit: 1.0,
        tau: cfg.tau,
    };
    let xi = coupled_control(steering, state.v, &control).unwrap_or(0.0);
    let (throttle, brake) = split_command(xi);
    Command { steering, throttle, brake }
}

pub(crate) fn expert_steering(world: &World, state: &VehicleState, cfg: &ExpertConfig) -> f64 {
    let line = world.centerline();
    let dir = world.direction();
    let rear = [state.x, state.y];
    let s0 = line.project(rear).s;
    let ld = cfg.lookahead_m + cfg.lookahead_s * state.v / 3.6;
    let st = line.wrap_s(s0 + dir * ld);
    let (centre, _) = world.scenario.corridor_at(line, st);
    let lateral = centre + avoidance_offset(world, st, cfg);
    let target = line.offset_point(st, dir * lateral);
    let d = dist(target, rear).max(1e-6);
    let alpha = wrap_angle((target[1] - rear[1]).atan2(target[0] - rear[0]) - state.yaw);
    let p = &world.params;
    let steer = (2.0 * p.wheelbase_m * alpha.sin() / d).atan();
    // A left turn is negative steering.
    (-steer / p.max_steer_deg.to_radians()).clamp(-1.0, 1.0)
}
