use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use steerclone::{AugmentationProbabilities, Behavior};

/// Run settings read from a TOML file. Every field is optional; command-line
/// flags take precedence, then these values, then the behavior preset.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<Behavior>,
    pub scenario_file: Option<PathBuf>,
    pub behavior: Option<Behavior>,
    pub seed: Option<u64>,
    pub data_root: Option<PathBuf>,
    pub collect: CollectSection,
    pub train: TrainSection,
    pub deploy: DeploySection,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectSection {
    pub laps: Option<usize>,
    pub rate_hz: Option<f64>,
    pub bidirectional: Option<bool>,
    pub noise_sigma: Option<f64>,
    pub noise_theta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f32>,
    pub deletion_rate: Option<f64>,
    pub augmentation_loops: Option<usize>,
    pub split_ratio: Option<f64>,
    pub augmentation: Option<AugmentationProbabilities>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeploySection {
    pub speed_limit_kmh: Option<f64>,
    pub tau: Option<f64>,
    pub max_time_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub max_steps: Option<usize>,
    pub laps_per_condition: Option<usize>,
    pub position_shift: Option<f64>,
    pub base_speed_kmh: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::parse(
            "behavior = \"rigorous\"\nseed = 7\n[train]\nepochs = 2\n[train.augmentation]\n\
             perspective = 0.5\nshadows = 0\nbrightness = 0\nflip = 0.5\npan = 0\ntilt = 0\n",
        )
        .unwrap();
        assert_eq!(c.behavior, Some(Behavior::Rigorous));
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.train.epochs, Some(2));
        assert_eq!(c.train.augmentation.unwrap().flip, 0.5);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("epochs = 3").is_err());
        assert!(RunConfig::parse("[train]\nepoch = 3").is_err());
    }
}
