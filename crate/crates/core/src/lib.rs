//! Behavioral cloning of driving policies from camera frames.
//!
//! The crate covers the whole loop: demonstration collection in a small
//! driving simulator, dataset balancing and augmentation, a convolutional
//! steering regressor trained from scratch, a coupled throttle/brake law
//! for deployment, and the robustness experiments run on the deployed model.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dataset;
pub mod experiments;
pub mod imgproc;
pub mod nnet;
pub mod pipeline;
pub mod presets;
pub mod rng;
pub mod simworld;

pub use control::{coupled_control, split_command, ControlConfig, ControlError};
pub use dataset::{Dataset, DatasetError, DrivingSample};
pub use imgproc::{AugmentationProbabilities, CameraSlot, ImageU8, ImgError, PerspectiveShiftConfig};
pub use nnet::{Model, NetParams, NetSpec, NnError, TrainConfig};
pub use presets::{Behavior, Preset};
pub use rng::Rng;
pub use simworld::{ScenarioVariation, SimError, TrackScenario, World};
