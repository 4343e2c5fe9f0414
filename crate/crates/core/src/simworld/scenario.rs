use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::{polar_track, Centerline, Vec2};
use super::SimError;
use crate::presets::{Behavior, TRAINING_SPEED_LIMIT_KMH};
use crate::rng::Rng;

/// Cone radius in metres.
pub const CONE_RADIUS_M: f64 = 1.3;
/// Lateral offset of cone centres from the centerline.
pub const CONE_LATERAL_M: f64 = 2.5;
/// Obstacle count in the collision scenario as collected.
pub const TRAINING_OBSTACLES: usize = 20;
const OBSTACLE_SEED: u64 = 20;
/// Leave the spawn area free of cones.
const SPAWN_CLEARANCE_M: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corridor {
    /// The full road width is drivable.
    Road,
    /// Only the right-hand lane (relative to the direction of travel).
    RightLane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

/// Trackside prop (bush or tree) that casts a ground shadow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneLight {
    /// Intensity in cd-equivalent units; rendered brightness scales with
    /// `intensity_cd * brightness_per_cd`.
    pub intensity_cd: f64,
    /// Elevation of the light about the scene X axis, degrees from vertical.
    pub direction_deg: f64,
    pub brightness_per_cd: f64,
}

impl Default for SceneLight {
    fn default() -> Self {
        Self {
            intensity_cd: 1.0,
            direction_deg: 35.0,
            brightness_per_cd: 1.0,
        }
    }
}

impl SceneLight {
    pub fn brightness_scale(&self) -> f64 {
        (self.intensity_cd * self.brightness_per_cd).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spawn {
    /// Arc length of the start point.
    pub s: f64,
    /// Drive against the centerline direction.
    pub reverse: bool,
}

/// A driving scenario: track geometry, surface, obstacles, lighting, limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackScenario {
    pub id: Behavior,
    pub name: String,
    pub speed_limit_kmh: f64,
    /// 1 or 2; two lanes get a dashed center divider.
    pub lanes: u8,
    pub corridor: Corridor,
    pub light: SceneLight,
    pub spawn: Spawn,
    pub texture_seed: u64,
    /// Arc-length ranges `[start, end]` rendered as a bridge over water.
    pub bridges: Vec<[f64; 2]>,
    /// Closed centerline, metres.
    pub centerline: Vec<Vec2>,
    /// Road width at each centerline vertex.
    pub widths: Vec<f64>,
    pub obstacles: Vec<Cone>,
    pub props: Vec<Prop>,
}

impl TrackScenario {
    /// One of the three shipped scenarios.
    pub fn builtin(id: Behavior) -> Self {
        match id {
            Behavior::Simplistic => simplistic(),
            Behavior::Rigorous => rigorous(),
            Behavior::Collision => collision(),
        }
    }

    pub fn validate(&self) -> Result<Centerline, SimError> {
        let line = Centerline::new(self.centerline.clone())?;
        if self.widths.len() != self.centerline.len() {
            return Err(SimError::Scenario(format!(
                "{} widths for {} centerline vertices",
                self.widths.len(),
                self.centerline.len()
            )));
        }
        if self.widths.iter().any(|w| !(*w > 2.0)) {
            return Err(SimError::Scenario("road widths must exceed 2 m".into()));
        }
        if !(1..=2).contains(&self.lanes) {
            return Err(SimError::Scenario(format!("{} lanes; expected 1 or 2", self.lanes)));
        }
        if self.corridor == Corridor::RightLane && self.lanes != 2 {
            return Err(SimError::Scenario("lane corridor needs a two-lane road".into()));
        }
        if !(self.speed_limit_kmh > 0.0) {
            return Err(SimError::Scenario("speed limit must be positive".into()));
        }
        if !line.is_simple() {
            return Err(SimError::Scenario("centerline intersects itself".into()));
        }
        for (i, c) in self.obstacles.iter().enumerate() {
            let p = line.project([c.x, c.y]);
            let half = self.half_width_at(&line, p.s);
            if !(c.radius > 0.0) || p.lateral.abs() - c.radius < -1e-9 || p.lateral.abs() > half + c.radius {
                return Err(SimError::Scenario(format!(
                    "obstacle {i} must block at most half of the road"
                )));
            }
        }
        Ok(line)
    }

    /// Road half-width at arc length `s`, linearly interpolated.
    pub fn half_width_at(&self, line: &Centerline, s: f64) -> f64 {
        let n = line.len();
        let s = line.wrap_s(s);
        let mut lo = 0;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if line.vertex_s(mid) <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (s - line.vertex_s(lo)) / (line.vertex_s(lo + 1) - line.vertex_s(lo));
        0.5 * (self.widths[lo] * (1.0 - t) + self.widths[(lo + 1) % n] * t)
    }

    /// Corridor center and half-width at `s` in the travel frame (lateral
    /// positive to the left of the direction of travel).
    pub fn corridor_at(&self, line: &Centerline, s: f64) -> (f64, f64) {
        let half = self.half_width_at(line, s);
        match self.corridor {
            Corridor::Road => (0.0, half),
            Corridor::RightLane => (-half / 2.0, half / 2.0),
        }
    }

    pub fn on_bridge(&self, s: f64) -> bool {
        self.bridges.iter().any(|&[a, b]| s >= a && s <= b)
    }

    /// Copy with `count` cones re-placed from `seed`.
    pub fn with_obstacles(&self, count: usize, seed: u64) -> Result<Self, SimError> {
        let line = Centerline::new(self.centerline.clone())?;
        let mut out = self.clone();
        out.obstacles = place_cones(&line, count, seed);
        Ok(out)
    }

    pub fn to_toml(&self) -> Result<String, SimError> {
        toml::to_string(self).map_err(|e| SimError::Scenario(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let s: Self = toml::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

/// `count` cones spread around the lap, one per equal arc slot with seeded
/// jitter, each on a random side so it blocks about half of the road.
pub fn place_cones(line: &Centerline, count: usize, seed: u64) -> Vec<Cone> {
    if count == 0 {
        return Vec::new();
    }
    let mut rng = Rng::derive(seed, &[0xC0E]);
    let usable = line.length() - 2.0 * SPAWN_CLEARANCE_M;
    let slot = usable / count as f64;
    let jitter = 0.15 * slot;
    (0..count)
        .map(|k| {
            let s = SPAWN_CLEARANCE_M + (k as f64 + 0.5) * slot + rng.uniform(-jitter, jitter);
            let side = if rng.unit() < 0.5 { 1.0 } else { -1.0 };
            let p = line.offset_point(s, side * CONE_LATERAL_M);
            Cone {
                x: p[0],
                y: p[1],
                radius: CONE_RADIUS_M,
            }
        })
        .collect()
}

/// Props every `spacing` metres on a random side, clear of the road.
fn place_props(line: &Centerline, half_width: f64, spacing: f64, seed: u64) -> Vec<Prop> {
    let mut rng = Rng::derive(seed, &[0x960]);
    let n = (line.length() / spacing) as usize;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let s = k as f64 * spacing + rng.uniform(0.0, spacing * 0.5);
        let side = if rng.unit() < 0.5 { 1.0 } else { -1.0 };
        let radius = rng.uniform(1.0, 2.2);
        let lateral = side * (half_width + 1.5 + radius + rng.uniform(0.0, 5.0));
        let height = rng.uniform(3.0, 7.0);
        let p = line.offset_point(s, lateral);
        // Where the track doubles back, keep props off the other carriageway.
        if line.project(p).lateral.abs() < half_width + 1.0 + radius {
            continue;
        }
        out.push(Prop {
            x: p[0],
            y: p[1],
            radius,
            height,
        });
    }
    out
}

fn base(id: Behavior, name: &str, points: Vec<Vec2>, width: f64, lanes: u8, corridor: Corridor, seed: u64) -> TrackScenario {
    let n = points.len();
    TrackScenario {
        id,
        name: name.into(),
        speed_limit_kmh: TRAINING_SPEED_LIMIT_KMH,
        lanes,
        corridor,
        light: SceneLight::default(),
        spawn: Spawn { s: 0.0, reverse: false },
        texture_seed: seed,
        bridges: Vec::new(),
        centerline: points,
        widths: vec![width; n],
        obstacles: Vec::new(),
        props: Vec::new(),
    }
}

fn simplistic_points() -> Vec<Vec2> {
    polar_track(86.0, &[(3, 9.0, 0.4), (5, 5.0, 1.3)], 1.0)
}

fn simplistic() -> TrackScenario {
    let mut s = base(Behavior::Simplistic, "lakeside loop", simplistic_points(), 8.0, 1, Corridor::Road, 11);
    s.bridges = vec![[240.0, 285.0]];
    let line = Centerline::new(s.centerline.clone()).expect("builtin centerline");
    s.props = place_props(&line, 4.0, 14.0, 11);
    s
}

fn rigorous() -> TrackScenario {
    let points = polar_track(82.0, &[(3, 12.0, 0.2), (4, 5.0, 2.2), (6, 5.0, 1.7), (7, 2.0, 0.9)], 1.0);
    let mut s = base(Behavior::Rigorous, "hill circuit", points, 8.0, 2, Corridor::RightLane, 23);
    let line = Centerline::new(s.centerline.clone()).expect("builtin centerline");
    s.props = place_props(&line, 4.0, 7.0, 23);
    s
}

fn collision() -> TrackScenario {
    let mut s = base(Behavior::Collision, "cone course", simplistic_points(), 8.0, 1, Corridor::Road, 37);
    let line = Centerline::new(s.centerline.clone()).expect("builtin centerline");
    s.props = place_props(&line, 4.0, 14.0, 37);
    s.obstacles = place_cones(&line, TRAINING_OBSTACLES, OBSTACLE_SEED);
    s
}
