use serde::{Deserialize, Serialize};

use super::geometry::{wrap_angle, Vec2};

/// Rear-axle pose and speed. `yaw` is counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    /// km/h, never negative.
    pub v: f64,
}

impl VehicleState {
    pub fn heading(&self) -> Vec2 {
        [self.yaw.cos(), self.yaw.sin()]
    }

    /// Point `forward` metres ahead of the rear axle along the heading.
    pub fn ahead(&self, forward: f64) -> Vec2 {
        [self.x + forward * self.yaw.cos(), self.y + forward * self.yaw.sin()]
    }
}

/// Normalized actuator commands.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Command {
    /// `[-1, 1]`, positive turns right.
    pub steering: f64,
    pub throttle: f64,
    pub brake: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub wheelbase_m: f64,
    pub max_steer_deg: f64,
    /// Speed gain at full throttle, km/h per second.
    pub accel_kmh_s: f64,
    /// Speed loss at full brake, km/h per second.
    pub brake_kmh_s: f64,
    /// Linear drag coefficient, 1/s.
    pub drag_per_s: f64,
    pub width_m: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase_m: 2.6,
            max_steer_deg: 25.0,
            accel_kmh_s: 12.0,
            brake_kmh_s: 30.0,
            drag_per_s: 0.05,
            width_m: 1.9,
        }
    }
}

impl VehicleParams {
    /// Rear axle to body center.
    pub fn center_offset(&self) -> f64 {
        self.wheelbase_m / 2.0
    }
}

/// Kinematic bicycle update with explicit Euler integration.
///
/// Commands are clamped to their ranges. Position and yaw advance with the
/// speed at the start of the step; the speed is then clamped to
/// `[0, speed_limit]`.
pub fn step_vehicle(s: &VehicleState, cmd: &Command, p: &VehicleParams, speed_limit_kmh: f64, dt: f64) -> VehicleState {
    debug_assert!(dt > 0.0 && dt <= 0.1, "dt {dt} outside (0, 0.1]");
    let steer = cmd.steering.clamp(-1.0, 1.0) * p.max_steer_deg.to_radians();
    let throttle = cmd.throttle.clamp(0.0, 1.0);
    let brake = cmd.brake.clamp(0.0, 1.0);
    let v_ms = s.v / 3.6;
    let x = s.x + v_ms * s.yaw.cos() * dt;
    let y = s.y + v_ms * s.yaw.sin() * dt;
    // Positive steering turns right, i.e. clockwise.
    let yaw = wrap_angle(s.yaw - v_ms / p.wheelbase_m * steer.tan() * dt);
    let dv = p.accel_kmh_s * throttle - p.brake_kmh_s * brake - p.drag_per_s * s.v;
    let v = (s.v + dv * dt).clamp(0.0, speed_limit_kmh.max(0.0));
    VehicleState { x, y, yaw, v }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_speed(v: f64) -> VehicleState {
        VehicleState { x: 0.0, y: 0.0, yaw: 0.3, v }
    }

    #[test]
    fn coasting_without_drag() {
        let p = VehicleParams { drag_per_s: 0.0, ..VehicleParams::default() };
        let s = step_vehicle(&at_speed(36.0), &Command::default(), &p, 50.0, 0.1);
        assert_eq!(s.v, 36.0);
        assert_eq!(s.yaw, 0.3);
        assert!((s.x - 0.3f64.cos()).abs() < 1e-12 && (s.y - 0.3f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn throttle_saturates_at_limit() {
        let p = VehicleParams::default();
        let mut s = at_speed(0.0);
        let cmd = Command { throttle: 1.0, ..Command::default() };
        for _ in 0..600 {
            s = step_vehicle(&s, &cmd, &p, 30.0, 1.0 / 30.0);
        }
        assert_eq!(s.v, 30.0);
        assert_eq!(s.yaw, 0.3);
        // Motion stays on the initial heading.
        assert!((s.y / s.x - 0.3f64.tan()).abs() < 1e-9);
    }

    #[test]
    fn steering_is_mirror_symmetric() {
        let p = VehicleParams::default();
        let start = VehicleState { x: 0.0, y: 0.0, yaw: 0.0, v: 25.0 };
        let (mut a, mut b) = (start, start);
        for _ in 0..90 {
            a = step_vehicle(&a, &Command { steering: 0.4, throttle: 0.3, brake: 0.0 }, &p, 30.0, 1.0 / 30.0);
            b = step_vehicle(&b, &Command { steering: -0.4, throttle: 0.3, brake: 0.0 }, &p, 30.0, 1.0 / 30.0);
        }
        assert!((a.x - b.x).abs() < 1e-9 && (a.y + b.y).abs() < 1e-9 && (a.yaw + b.yaw).abs() < 1e-9);
        assert!(a.y < 0.0, "positive steering turns right");
    }

    #[test]
    fn speed_never_increases_without_throttle() {
        let p = VehicleParams::default();
        let mut s = at_speed(28.0);
        for k in 0..100 {
            let cmd = Command { steering: 0.1, throttle: 0.0, brake: if k % 3 == 0 { 0.2 } else { 0.0 } };
            let next = step_vehicle(&s, &cmd, &p, 30.0, 1.0 / 30.0);
            assert!(next.v <= s.v && next.v >= 0.0);
            s = next;
        }
    }
}
