//! Deterministic random number generation.
//!
//! Every stochastic operation in the crate draws from [`Rng`], a thin wrapper
//! around `ChaCha8Rng`. ChaCha8 has a fixed, documented output stream for a
//! given seed on every platform, and the conversions below (floats from the
//! top 53 bits, bounded integers by rejection sampling, Fisher-Yates shuffle)
//! are implemented here rather than delegated to `rand`'s distribution code,
//! so a seed pins every draw independently of `rand`'s internal algorithms.
//!
//! Independent sub-streams (one per pass, per augmented sample, per dropout
//! batch...) are derived with [`Rng::derive`], which mixes a root seed and a
//! path of stream identifiers through SplitMix64.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded deterministic generator.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn seed_from(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for the sub-stream identified by `path` under `seed`.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        let mut state = splitmix64(seed);
        for &id in path {
            state = splitmix64(state ^ splitmix64(id.wrapping_add(0x632B_E59B_D9B4_E019)));
        }
        Self::seed_from(state)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "Rng::below called with n = 0");
        // Rejection zone keeps the result exactly uniform.
        let zone = u64::MAX - (u64::MAX % n) - 1;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }

    /// Uniform integer in `[lo, hi)`.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(hi > lo, "empty integer range");
        lo + self.below((hi - lo) as u64) as i64
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Bernoulli gate: `true` with probability `p` (a `U(0,1)` draw `x` passes when `x < p`).
    pub fn gate(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `k` distinct indices drawn uniformly from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::seed_from(42);
        let mut b = Rng::seed_from(42);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn chacha8_stream_is_pinned() {
        // Frozen outputs; a change here breaks every stored seed.
        assert_eq!(Rng::seed_from(0).next_u64(), 0xb585_f767_a79a_3b6c);
        assert_eq!(Rng::derive(3, &[4, 5]).next_u64(), 0xe7e1_4c04_48ed_af8c);
    }

    #[test]
    fn derived_streams_differ() {
        let a = Rng::derive(7, &[1, 2]).next_u64();
        let b = Rng::derive(7, &[2, 1]).next_u64();
        let c = Rng::derive(8, &[1, 2]).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, Rng::derive(7, &[1, 2]).next_u64());
    }

    #[test]
    fn unit_in_range() {
        let mut r = Rng::seed_from(3);
        for _ in 0..10_000 {
            let x = r.unit();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn gate_extremes() {
        let mut r = Rng::seed_from(5);
        assert!((0..1000).all(|_| !r.gate(0.0)));
        assert!((0..1000).all(|_| r.gate(1.0)));
    }

    #[test]
    fn below_covers_range() {
        let mut r = Rng::seed_from(11);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[r.below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn sample_indices_distinct() {
        let mut r = Rng::seed_from(9);
        let mut idx = r.sample_indices(100, 40);
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 40);
        assert!(idx.iter().all(|&i| i < 100));
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut r = Rng::seed_from(1);
        let mut v: Vec<u32> = (0..50).collect();
        r.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
