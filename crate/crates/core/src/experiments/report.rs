use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bounds, ExperimentId, ExperimentReport};
use crate::nnet::EpochStats;
use crate::presets::Behavior;
use crate::simworld::SimError;

/// Latency histogram bin width for the mode, milliseconds.
const MODE_BIN_MS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub samples: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    /// Center of the most populated 0.1 ms bin (lowest on ties).
    pub mode_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(ms: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = ms.iter().copied().filter(|x| x.is_finite() && *x >= 0.0).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let pick = |q: f64| v[((q * (n - 1) as f64).round() as usize).min(n - 1)];
        let mut counts = std::collections::BTreeMap::<u64, usize>::new();
        for x in &v {
            *counts.entry((x / MODE_BIN_MS).floor() as u64).or_default() += 1;
        }
        let (bin, _) = counts
            .iter()
            .fold((0u64, 0usize), |best, (&b, &c)| if c > best.1 { (b, c) } else { best });
        Some(Self {
            samples: n,
            mean_ms: v.iter().sum::<f64>() / n as f64,
            median_ms: pick(0.5),
            p95_ms: pick(0.95),
            min_ms: v[0],
            max_ms: v[n - 1],
            mode_ms: (bin as f64 + 0.5) * MODE_BIN_MS,
        })
    }

    /// Range and mode, e.g. `1-3 ms (mode = 1.05 ms)`.
    pub fn summary(&self) -> String {
        format!("{:.0}-{:.0} ms (mode = {:.2} ms)", self.min_ms.floor(), self.max_ms.ceil(), self.mode_ms)
    }
}

/// Training figures reported next to the robustness results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub train_samples: usize,
    pub validation_samples: usize,
    pub seconds: f64,
    pub epochs: Vec<EpochStats>,
}

/// Everything measured for one trained behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub behavior: Behavior,
    pub model_checksum: Option<String>,
    pub training: Option<TrainingSummary>,
    /// Policy latency pooled over all experiments.
    pub latency: Option<LatencyStats>,
    pub experiments: Vec<ExperimentReport>,
}

fn num(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    let s = format!("{r}");
    if s == "-0" { "0".into() } else { s }
}

/// `[lower, upper]`; a capped side is left open and an empty range is `( )`.
pub fn format_bounds(b: &Bounds, unit: &str) -> String {
    match (b.lower, b.upper) {
        (Some(lo), Some(hi)) => format!(
            "{}{} {unit}, {} {unit}{}",
            if b.lower_capped { "(" } else { "[" },
            num(lo),
            num(hi),
            if b.upper_capped { ")" } else { "]" }
        ),
        _ => "( )".into(),
    }
}

impl SuiteReport {
    pub fn new(behavior: Behavior, experiments: Vec<ExperimentReport>) -> Self {
        let pooled: Vec<LatencyStats> = experiments.iter().filter_map(|e| e.latency).collect();
        Self {
            behavior,
            model_checksum: None,
            training: None,
            latency: pool(&pooled),
            experiments,
        }
    }

    pub fn to_json(&self) -> Result<String, SimError> {
        serde_json::to_string_pretty(self).map_err(|e| SimError::Scenario(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Scenario(format!("report: {e}")))
    }

    /// Plain-text tables: training, latency, then one row per experiment.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Behavior: {}", self.behavior);
        if let Some(sum) = &self.model_checksum {
            let _ = writeln!(out, "Model checksum: {sum}");
        }
        if let Some(t) = &self.training {
            let _ = writeln!(out, "\nTraining");
            let _ = writeln!(out, "  samples (train/validation): {}/{}", t.train_samples, t.validation_samples);
            let _ = writeln!(out, "  training time: {:.1} s, epochs: {}", t.seconds, t.epochs.len());
            let _ = writeln!(out, "  {:>5}  {:>10}  {:>10}  {:>6}  {:>8}", "epoch", "train MSE", "val MSE", "steps", "seconds");
            for e in &t.epochs {
                let val = e.val_loss.map_or("-".to_string(), |v| format!("{v:.6}"));
                let _ = writeln!(out, "  {:>5}  {:>10.6}  {:>10}  {:>6}  {:>8.1}", e.epoch, e.train_loss, val, e.steps, e.seconds);
            }
        }
        if let Some(l) = &self.latency {
            let _ = writeln!(out, "\nDeployment latency ({} frames)", l.samples);
            let _ = writeln!(
                out,
                "  {}; mean {:.3} ms, median {:.3} ms, p95 {:.3} ms",
                l.summary(),
                l.mean_ms,
                l.median_ms,
                l.p95_ms
            );
        }
        let _ = writeln!(out, "\nRobustness");
        let _ = writeln!(out, "  {:<34}  {:<28}  {:>8}  {:>5}  {:>9}", "experiment", "result", "eta (%)", "n_int", "t_lap (s)");
        for e in &self.experiments {
            let result = match (&e.bounds, e.id) {
                (Some(b), ExperimentId::SpeedLimit) => match b.upper {
                    Some(u) => format!("{} {}{}", num(u), e.unit, if b.upper_capped { "+" } else { "" }),
                    None => "( )".into(),
                },
                (Some(b), _) => format_bounds(b, &e.unit),
                (None, _) => e
                    .conditions
                    .iter()
                    .map(|c| match e.id {
                        ExperimentId::ObstacleVariation => format!("{}: {:.1}%", num(c.value), c.eta),
                        _ => format!("{:.1}%", c.eta),
                    })
                    .collect::<Vec<_>>()
                    .join(", "),
            };
            let n: usize = e.conditions.iter().map(|c| c.interferences).sum();
            let t: f64 = e.conditions.iter().map(|c| c.lap_time).sum();
            let _ = writeln!(out, "  {:<34}  {:<28}  {:>8.1}  {:>5}  {:>9.1}", e.id.title(), result, e.mean_eta(), n, t);
        }
        out
    }

    /// Write `<stem>.json` and `<stem>.txt` into `dir`.
    pub fn emit(&self, dir: &Path, stem: &str) -> Result<(), SimError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json()?)?;
        std::fs::write(dir.join(format!("{stem}.txt")), self.render_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Combine per-experiment statistics: sample-weighted mean, extreme
/// min/max, and the mode, median and p95 of the largest group.
fn pool(stats: &[LatencyStats]) -> Option<LatencyStats> {
    let n: usize = stats.iter().map(|s| s.samples).sum();
    let largest = stats.iter().max_by_key(|s| s.samples)?;
    Some(LatencyStats {
        samples: n,
        mean_ms: stats.iter().map(|s| s.mean_ms * s.samples as f64).sum::<f64>() / n as f64,
        min_ms: stats.iter().map(|s| s.min_ms).fold(f64::INFINITY, f64::min),
        max_ms: stats.iter().map(|s| s.max_ms).fold(0.0, f64::max),
        ..*largest
    })
}

#[cfg(test)]
mod tests {
    use super::super::Condition;
    use super::*;
    use crate::simworld::ScenarioVariation;

    fn sample() -> SuiteReport {
        let cond = |value: f64, eta: f64| Condition {
            value,
            variation: ScenarioVariation { light_intensity_delta: value, ..Default::default() },
            eta,
            lap_time: 81.3,
            interferences: usize::from(eta < 100.0),
            completed: true,
        };
        let e = ExperimentReport {
            id: ExperimentId::LightIntensity,
            behavior: Behavior::Simplistic,
            unit: "cd".into(),
            conditions: vec![cond(-0.2, 92.6), cond(-0.1, 100.0), cond(0.0, 100.0), cond(0.1, 92.6)],
            bounds: Some(Bounds { lower: Some(-0.1), upper: Some(0.0), lower_capped: false, upper_capped: false }),
            latency: LatencyStats::from_samples(&[1.04, 1.06, 1.31, 0.97, 1.01]),
        };
        SuiteReport::new(Behavior::Simplistic, vec![e])
    }

    #[test]
    fn latency_mode_uses_tenth_ms_bins() {
        let l = LatencyStats::from_samples(&[1.04, 1.06, 1.31, 0.97, 1.01, 2.5]).unwrap();
        assert!((l.mode_ms - 1.05).abs() < 1e-12);
        assert_eq!(l.samples, 6);
        assert_eq!(l.max_ms, 2.5);
        assert!(LatencyStats::from_samples(&[]).is_none());
    }

    #[test]
    fn bounds_rendering() {
        let b = |lo, hi, lc, uc| Bounds { lower: lo, upper: hi, lower_capped: lc, upper_capped: uc };
        assert_eq!(format_bounds(&b(Some(-0.4), Some(0.1), false, false), "cd"), "[-0.4 cd, 0.1 cd]");
        assert_eq!(format_bounds(&b(None, None, false, false), "deg"), "( )");
        assert_eq!(format_bounds(&b(Some(-100.0), Some(15.0), true, false), "deg"), "(-100 deg, 15 deg]");
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(SuiteReport::from_json(&r.to_json().unwrap()).unwrap(), r);
        let dir = tempfile::tempdir().unwrap();
        r.emit(dir.path(), "simplistic").unwrap();
        assert_eq!(SuiteReport::load(&dir.path().join("simplistic.json")).unwrap(), r);
        let text = std::fs::read_to_string(dir.path().join("simplistic.txt")).unwrap();
        assert!(text.contains("[-0.1 cd, 0 cd]"));
        assert!(text.contains("0-2 ms (mode = 1.05 ms)"), "{text}");
    }
}
