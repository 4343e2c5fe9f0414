use std::path::Path;

use serde::{Deserialize, Serialize};

use super::expert::{expert_policy, ExpertConfig};
use super::vehicle::{step_vehicle, Command, VehicleState};
use super::world::{ScenarioVariation, World};
use super::SimError;
use crate::dataset::{save_manifest, Dataset, DrivingSample, MemoryFrames};
use crate::imgproc::{CameraSlot, ImageU8};
use crate::presets::{Behavior, COLLECTION_RATE_HZ};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    pub laps: usize,
    /// Recording rate, Hz.
    pub rate_hz: f64,
    /// Drive the second half of the laps the other way round.
    pub bidirectional: bool,
    pub physics_hz: f64,
    /// Ornstein-Uhlenbeck perturbation of the executed steering; the
    /// recorded label stays the expert's command.
    pub noise_sigma: f64,
    pub noise_theta: f64,
    pub seed: u64,
    pub expert: ExpertConfig,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            laps: 1,
            rate_hz: COLLECTION_RATE_HZ,
            bidirectional: false,
            physics_hz: 30.0,
            noise_sigma: 0.2,
            noise_theta: 1.5,
            seed: 0,
            expert: ExpertConfig::default(),
        }
    }
}

impl CollectConfig {
    /// Lap count and direction from the behavior preset.
    pub fn for_behavior(b: Behavior) -> Self {
        let p = b.preset();
        Self {
            laps: p.collection_laps,
            bidirectional: p.bidirectional,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.laps == 0 {
            return Err(SimError::Scenario("at least one lap is needed".into()));
        }
        if !(self.rate_hz > 0.0) || !(self.physics_hz >= self.rate_hz) || self.physics_hz > 1000.0 {
            return Err(SimError::Scenario(format!(
                "rate {} Hz must be positive and at most the physics rate {} Hz",
                self.rate_hz, self.physics_hz
            )));
        }
        if !(self.noise_sigma >= 0.0) || !(self.noise_theta >= 0.0) {
            return Err(SimError::Scenario("noise parameters must be non-negative".into()));
        }
        Ok(())
    }
}

fn frame_key(slot: CameraSlot, index: usize) -> String {
    let name = match slot {
        CameraSlot::Center => "center",
        CameraSlot::Left => "left",
        CameraSlot::Right => "right",
    };
    format!("IMG/{name}_{index:06}.png")
}

/// Drive the expert and hand every recorded frame to `sink`.
fn drive(world: &World, cfg: &CollectConfig, mut sink: impl FnMut(&str, ImageU8) -> Result<(), SimError>) -> Result<Dataset, SimError> {
    cfg.validate()?;
    let forward_laps = if cfg.bidirectional { cfg.laps.div_ceil(2) } else { cfg.laps };
    let reversed = world.vary(&ScenarioVariation { heading_inverted: true, ..Default::default() })?;
    let slots = world.rig().slots();
    let dt = 1.0 / cfg.physics_hz;
    let mut rng = Rng::derive(cfg.seed, &[0xC011]);
    let mut samples = Vec::new();
    let mut noise = 0.0;
    let mut t: f64 = 0.0;
    let mut next_sample = 0.0;
    let mut state = world.spawn_state();

    for (phase_world, laps) in [(world, forward_laps), (&reversed, cfg.laps - forward_laps)] {
        if laps == 0 {
            continue;
        }
        if t > 0.0 {
            // Turn round on the spot.
            let back = phase_world.params.wheelbase_m;
            state = VehicleState {
                x: state.x + back * state.yaw.cos(),
                y: state.y + back * state.yaw.sin(),
                yaw: super::geometry::wrap_angle(state.yaw + std::f64::consts::PI),
                v: state.v,
            };
        }
        let line = phase_world.centerline();
        let dir = phase_world.direction();
        let goal = laps as f64 * line.length();
        let window = (line.len() / 8).max(4);
        let start = line.project(state.ahead(phase_world.params.center_offset()));
        let (mut seg, mut last_s, mut progress) = (start.segment, start.s, 0.0);
        while progress < goal {
            let expert = expert_policy(phase_world, &state, &cfg.expert);
            if t + 1e-9 >= next_sample {
                let index = samples.len();
                let mut keys = [None, None, None];
                for &slot in slots {
                    let key = frame_key(slot, index);
                    sink(&key, phase_world.render(&state, slot))?;
                    let k = match slot {
                        CameraSlot::Center => 0,
                        CameraSlot::Left => 1,
                        CameraSlot::Right => 2,
                    };
                    keys[k] = Some(key);
                }
                let [center, left, right] = keys;
                samples.push(DrivingSample {
                    timestamp: (t * 1e4).round() / 1e4,
                    center: center.expect("center camera is always mounted"),
                    left,
                    right,
                    steering: expert.steering as f32,
                    throttle: expert.throttle as f32,
                    brake: expert.brake as f32,
                    speed: state.v as f32,
                });
                next_sample += 1.0 / cfg.rate_hz;
            }
            noise += -cfg.noise_theta * noise * dt + cfg.noise_sigma * dt.sqrt() * rng.normal();
            let executed = Command {
                steering: (expert.steering + noise).clamp(-1.0, 1.0),
                ..expert
            };
            state = step_vehicle(&state, &executed, &phase_world.params, phase_world.scenario.speed_limit_kmh, dt);
            t += dt;
            let p = line.project_near(state.ahead(phase_world.params.center_offset()), seg, window);
            seg = p.segment;
            progress += dir * line.arc_delta(last_s, p.s);
            last_s = p.s;
        }
    }
    Ok(Dataset::new(samples, Some(world.scenario.id)))
}

/// Collect demonstrations into memory.
pub fn collect_in_memory(world: &World, cfg: &CollectConfig) -> Result<(Dataset, MemoryFrames), SimError> {
    let mut frames = MemoryFrames::default();
    let ds = drive(world, cfg, |key, img| {
        frames.insert(key, img);
        Ok(())
    })?;
    Ok((ds, frames))
}

/// Collect demonstrations under `out`: frames in `IMG/`, the manifest
/// `driving_log.csv` and a `collection.json` sidecar.
pub fn collect(world: &World, cfg: &CollectConfig, out: &Path) -> Result<Dataset, SimError> {
    std::fs::create_dir_all(out.join("IMG"))?;
    let ds = drive(world, cfg, |key, img| Ok(img.save_png(&out.join(key))?))?;
    save_manifest(&out.join("driving_log.csv"), &ds)?;
    let meta = serde_json::json!({
        "behavior": world.scenario.id.name(),
        "scenario": world.scenario.name,
        "laps": cfg.laps,
        "bidirectional": cfg.bidirectional,
        "rate_hz": cfg.rate_hz,
        "cameras": world.rig().count,
        "seed": cfg.seed,
        "samples": ds.len(),
    });
    crate::dataset::save_meta(out, &meta)?;
    Ok(ds)
}
