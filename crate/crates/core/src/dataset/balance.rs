use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError};
use crate::rng::Rng;

/// Number of steering strata used by the stratified split.
pub const STRATA: usize = 25;

const SPLIT_STREAM: u64 = 0x5917;

/// Zero-steering deletion settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceConfig {
    /// Fraction of zero-steer samples removed per pass.
    pub deletion_rate: f64,
    /// `|steering| <= zero_epsilon` counts as zero.
    pub zero_epsilon: f32,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            deletion_rate: 0.0,
            zero_epsilon: 1e-6,
        }
    }
}

impl BalanceConfig {
    pub fn with_rate(deletion_rate: f64) -> Self {
        Self {
            deletion_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(0.0..=1.0).contains(&self.deletion_rate) {
            return Err(DatasetError::Invalid(format!(
                "deletion rate {} outside [0, 1]",
                self.deletion_rate
            )));
        }
        if !(self.zero_epsilon >= 0.0) {
            return Err(DatasetError::Invalid("zero epsilon must be >= 0".into()));
        }
        Ok(())
    }

    /// Number of zero-steer samples removed out of `d`: `round(d * rate)`,
    /// halves rounded away from zero.
    pub fn deletions(&self, d: usize) -> usize {
        ((d as f64 * self.deletion_rate).round() as usize).min(d)
    }
}

fn stratum(steering: f32, bins: usize) -> usize {
    let t = ((steering as f64 + 1.0) / 2.0 * bins as f64).floor();
    (t.max(0.0) as usize).min(bins - 1)
}

/// Count samples per uniform steering bin over `[-1, 1]`. A steering of
/// exactly 1 falls in the last bin.
pub fn steering_histogram(ds: &Dataset, bins: usize) -> Vec<usize> {
    assert!(bins >= 1, "histogram needs at least one bin");
    let mut counts = vec![0; bins];
    for s in &ds.samples {
        counts[stratum(s.steering, bins)] += 1;
    }
    counts
}

pub fn zero_steer_count(ds: &Dataset, cfg: &BalanceConfig) -> usize {
    ds.samples
        .iter()
        .filter(|s| s.steering.abs() <= cfg.zero_epsilon)
        .count()
}

/// Split into training and validation subsets.
///
/// The training subset receives `floor(n * ratio)` samples. Allocation is
/// stratified over [`STRATA`] steering bins (largest-remainder rounding, ties
/// to the lower bin) so both subsets share the steering distribution; the
/// members of each bin are chosen by a seeded shuffle. Both outputs keep the
/// original sample order.
pub fn split(ds: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
    let n = ds.len();
    if n < 2 {
        return Err(DatasetError::Invalid(format!(
            "cannot split {n} sample(s); need at least 2"
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::Invalid(format!("split ratio {ratio} outside (0, 1)")));
    }
    let n_train = ((n as f64 * ratio + 1e-9).floor() as usize).clamp(1, n - 1);

    let mut strata: Vec<Vec<usize>> = vec![Vec::new(); STRATA];
    for (i, s) in ds.samples.iter().enumerate() {
        strata[stratum(s.steering, STRATA)].push(i);
    }
    // Exact proportional quotas count * n_train / n, rounded by largest remainder.
    let mut quota: Vec<usize> = strata.iter().map(|b| b.len() * n_train / n).collect();
    let mut remainders: Vec<(usize, usize)> = strata
        .iter()
        .enumerate()
        .map(|(b, members)| ((members.len() * n_train) % n, b))
        .collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = n_train - quota.iter().sum::<usize>();
    for &(_, b) in remainders.iter().take(missing) {
        quota[b] += 1;
    }

    let mut in_train = vec![false; n];
    for (b, members) in strata.iter_mut().enumerate() {
        let mut rng = Rng::derive(seed, &[SPLIT_STREAM, b as u64]);
        rng.shuffle(members);
        for &i in members.iter().take(quota[b]) {
            in_train[i] = true;
        }
    }
    let (mut train, mut val) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for (i, s) in ds.samples.iter().enumerate() {
        if in_train[i] {
            train.push(s.clone());
        } else {
            val.push(s.clone());
        }
    }
    Ok((ds.with_samples(train), ds.with_samples(val)))
}

/// Remove `round(d * deletion_rate)` of the `d` zero-steer samples, chosen
/// uniformly at random. Other samples and the overall order are untouched.
pub fn balance_zero_steer(ds: &Dataset, cfg: &BalanceConfig, rng: &mut Rng) -> Dataset {
    let zeros: Vec<usize> = ds
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.steering.abs() <= cfg.zero_epsilon)
        .map(|(i, _)| i)
        .collect();
    let removed = cfg.deletions(zeros.len());
    let mut drop = vec![false; ds.len()];
    for k in rng.sample_indices(zeros.len(), removed) {
        drop[zeros[k]] = true;
    }
    let kept = ds
        .samples
        .iter()
        .zip(&drop)
        .filter(|(_, &d)| !d)
        .map(|(s, _)| s.clone())
        .collect();
    ds.with_samples(kept)
}

/// Optimizer steps per epoch: `ceil(n * loops / batch)`.
pub fn train_steps(n: usize, batch: usize, loops: usize) -> usize {
    assert!(n >= 1 && batch >= 1 && loops >= 1, "train_steps arguments must be >= 1");
    (n * loops).div_ceil(batch)
}

/// Validation batches per epoch: `ceil(n / batch)`.
pub fn validation_steps(n: usize, batch: usize) -> usize {
    assert!(n >= 1 && batch >= 1, "validation_steps arguments must be >= 1");
    n.div_ceil(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DrivingSample;

    fn ds(steers: &[f32]) -> Dataset {
        Dataset::new(
            steers
                .iter()
                .enumerate()
                .map(|(i, &s)| DrivingSample {
                    timestamp: i as f64,
                    center: format!("c{i}.png"),
                    left: None,
                    right: None,
                    steering: s,
                    throttle: 0.0,
                    brake: 0.0,
                    speed: 0.0,
                })
                .collect(),
            None,
        )
    }

    fn spread(n: usize) -> Dataset {
        let steers: Vec<f32> = (0..n).map(|i| ((i * 7919) % 2001) as f32 / 1000.0 - 1.0).collect();
        ds(&steers)
    }

    #[test]
    fn split_counts_match_table() {
        for (n, train, val) in [(12101, 9680, 2421), (50911, 40728, 10183), (25471, 20376, 5095)] {
            let (t, v) = split(&spread(n), 0.8, 1).unwrap();
            assert_eq!((t.len(), v.len()), (train, val), "n = {n}");
        }
    }

    #[test]
    fn split_half_preserves_bins() {
        // Two samples in each of five strata.
        let d = ds(&[-0.9, -0.9, -0.5, -0.5, 0.0, 0.0, 0.5, 0.5, 0.9, 0.9]);
        let (t, v) = split(&d, 0.5, 3).unwrap();
        assert_eq!((t.len(), v.len()), (5, 5));
        assert_eq!(steering_histogram(&t, STRATA), steering_histogram(&v, STRATA));
    }

    #[test]
    fn split_is_partition() {
        let d = spread(1000);
        let (t, v) = split(&d, 0.8, 42).unwrap();
        let mut all: Vec<f64> = t.samples.iter().chain(&v.samples).map(|s| s.timestamp).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..1000).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_errors() {
        assert!(split(&spread(1), 0.8, 0).is_err());
        assert!(split(&spread(10), 0.0, 0).is_err());
        assert!(split(&spread(10), 1.0, 0).is_err());
    }

    #[test]
    fn balance_removes_exact_count() {
        let mut steers = vec![0.0f32; 1000];
        steers.extend((0..300).map(|i| (i as f32 + 1.0) / 400.0));
        let d = ds(&steers);
        let cfg = BalanceConfig::with_rate(0.7);
        let b = balance_zero_steer(&d, &cfg, &mut Rng::seed_from(1));
        assert_eq!(zero_steer_count(&b, &cfg), 300);
        assert_eq!(b.len(), 1300 - 700);
        // Non-zero samples untouched and in order.
        let nz: Vec<f32> = b.samples.iter().map(|s| s.steering).filter(|&s| s != 0.0).collect();
        assert_eq!(nz, steers[1000..].to_vec());
    }

    #[test]
    fn balance_extremes() {
        let d = ds(&[0.0, 0.0, 0.5, 0.0, -0.2]);
        let none = balance_zero_steer(&d, &BalanceConfig::with_rate(0.0), &mut Rng::seed_from(0));
        assert_eq!(none, d);
        let all = BalanceConfig::with_rate(1.0);
        let b = balance_zero_steer(&d, &all, &mut Rng::seed_from(0));
        assert_eq!(zero_steer_count(&b, &all), 0);
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn deletions_round_half_away() {
        let cfg = BalanceConfig::with_rate(0.5);
        assert_eq!(cfg.deletions(3), 2);
        assert_eq!(BalanceConfig::with_rate(0.7).deletions(1000), 700);
    }

    #[test]
    fn histogram_basics() {
        let zeros = ds(&[0.0; 10]);
        let h = steering_histogram(&zeros, 25);
        assert_eq!(h[12], 10);
        assert_eq!(h.iter().sum::<usize>(), 10);
        let ends = ds(&[-1.0, 1.0]);
        let h = steering_histogram(&ends, 5);
        assert_eq!(h, vec![1, 0, 0, 0, 1]);
    }

    #[test]
    fn histogram_after_balance_only_center_changes() {
        let mut steers = vec![0.0f32; 100];
        steers.extend([0.5, -0.5, 0.9]);
        let d = ds(&steers);
        let cfg = BalanceConfig::with_rate(0.8);
        let before = steering_histogram(&d, 25);
        let after = steering_histogram(&balance_zero_steer(&d, &cfg, &mut Rng::seed_from(2)), 25);
        for b in 0..25 {
            if b == 12 {
                assert_eq!(before[b] - after[b], cfg.deletions(100));
            } else {
                assert_eq!(before[b], after[b]);
            }
        }
    }

    #[test]
    fn steps_match_table() {
        assert_eq!(train_steps(9680, 256, 64), 2420);
        assert_eq!(train_steps(40728, 256, 64), 10182);
        assert_eq!(train_steps(20376, 256, 64), 5094);
        assert_eq!(validation_steps(2421, 256), 10);
        assert_eq!(validation_steps(10183, 256), 40);
        assert_eq!(validation_steps(256, 256), 1);
    }
}
