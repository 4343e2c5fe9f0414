use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetError, FrameSource};
use crate::nnet::Model;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub t: f64,
    pub truth: f32,
    pub prediction: f32,
}

/// Predicted against recorded steering over an ordered run of frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionTrace {
    pub rows: Vec<PredictionRow>,
    pub mae: f64,
    /// Pearson correlation; `None` when either column is constant.
    pub correlation: Option<f64>,
}

/// Samples with `start <= timestamp < end`, in timestamp order.
pub fn subset_by_time(ds: &Dataset, start: f64, end: f64) -> Dataset {
    let mut samples: Vec<_> = ds
        .samples
        .iter()
        .filter(|s| s.timestamp >= start && s.timestamp < end)
        .cloned()
        .collect();
    samples.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Dataset::new(samples, ds.behavior)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 1e-18 || sbb <= 1e-18 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

impl PredictionTrace {
    pub fn from_rows(rows: Vec<PredictionRow>) -> Self {
        if rows.is_empty() {
            return Self { rows, mae: 0.0, correlation: None };
        }
        let truth: Vec<f64> = rows.iter().map(|r| r.truth as f64).collect();
        let pred: Vec<f64> = rows.iter().map(|r| r.prediction as f64).collect();
        let mae = truth.iter().zip(&pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / rows.len() as f64;
        Self {
            correlation: pearson(&truth, &pred),
            rows,
            mae,
        }
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,ground_truth,prediction")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.t, r.truth, r.prediction)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()
    }
}

/// Run `model` over the center frames of `ds` (ordered by timestamp).
pub fn prediction_analysis(model: &Model, ds: &Dataset, frames: &dyn FrameSource) -> Result<PredictionTrace, DatasetError> {
    if ds.samples.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(DatasetError::Invalid("subset must be ordered by timestamp".into()));
    }
    let rows = ds
        .samples
        .par_iter()
        .map(|s| {
            let img = frames.load(&s.center)?;
            Ok(PredictionRow {
                t: s.timestamp,
                truth: s.steering,
                prediction: model.predict(&img),
            })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(PredictionTrace::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(pairs: &[(f32, f32)]) -> Vec<PredictionRow> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, &(truth, prediction))| PredictionRow { t: i as f64, truth, prediction })
            .collect()
    }

    #[test]
    fn oracle_echo() {
        let tr = PredictionTrace::from_rows(rows(&[(0.1, 0.1), (-0.3, -0.3), (0.25, 0.25)]));
        assert_eq!(tr.mae, 0.0);
        assert!((tr.correlation.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_prediction_has_no_correlation() {
        let tr = PredictionTrace::from_rows(rows(&[(0.1, 0.0), (-0.3, 0.0), (0.2, 0.0)]));
        assert!((tr.mae - 0.2).abs() < 1e-7);
        assert_eq!(tr.correlation, None);
    }

    #[test]
    fn hand_correlation() {
        // x = (1, 2, 3), y = (1, 3, 2): r = 0.5.
        let tr = PredictionTrace::from_rows(rows(&[(1.0, 1.0), (2.0, 3.0), (3.0, 2.0)]));
        assert!((tr.correlation.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_model_predicts_zero() {
        use crate::dataset::{DrivingSample, MemoryFrames};
        use crate::imgproc::ImageU8;
        use crate::nnet::{NetParams, NetSpec};
        let spec = NetSpec::default();
        let model = Model::new(spec.clone(), NetParams::zeros(&spec).unwrap()).unwrap();
        let mut frames = MemoryFrames::default();
        let samples = (0..4)
            .map(|i| {
                let key = format!("c{i}.png");
                frames.insert(key.clone(), ImageU8::filled(320, 160, [i * 40, 90, 30]));
                DrivingSample {
                    timestamp: i as f64 / 1.5,
                    center: key,
                    left: None,
                    right: None,
                    steering: 0.1 * i as f32,
                    throttle: 0.3,
                    brake: 0.0,
                    speed: 20.0,
                }
            })
            .collect();
        let ds = Dataset::new(samples, None);
        let tr = prediction_analysis(&model, &ds, &frames).unwrap();
        assert!(tr.rows.iter().all(|r| r.prediction == 0.0));
        let mut csv = Vec::new();
        tr.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);
        assert_eq!(subset_by_time(&ds, 1.0, 10.0).len(), 2);
    }
}
