//! Desk-scale driving simulator: track scenarios, a kinematic vehicle, a
//! software-rendered camera rig, a scripted expert and the closed-loop
//! deployment runner.

mod collect;
mod deploy;
mod expert;
mod geometry;
mod render;
mod scenario;
mod vehicle;
mod world;

pub use collect::{collect, collect_in_memory, CollectConfig};
pub use deploy::{
    check_model, deploy, deploy_model, ConstantPolicy, DeployConfig, ExpertPolicy, Interference, InterferenceKind, LapLog,
    ModelPolicy, Policy, StepRecord,
};
pub use expert::{expert_policy, ExpertConfig};
pub use geometry::{polar_track, wrap_angle, Centerline, Projection, Vec2};
pub use render::{CameraRig, Renderer};
pub use scenario::{
    place_cones, Cone, Corridor, Prop, SceneLight, Spawn, TrackScenario, CONE_LATERAL_M, CONE_RADIUS_M,
    TRAINING_OBSTACLES,
};
pub use vehicle::{step_vehicle, Command, VehicleParams, VehicleState};
pub use world::{ObstacleSet, ScenarioVariation, World};

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::imgproc::ImgError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("image: {0}")]
    Image(#[from] ImgError),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("model incompatible with scenario: {0}")]
    Incompatible(String),
    #[error("control: {0}")]
    Control(#[from] crate::control::ControlError),
}
