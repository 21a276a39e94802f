//! Seeded random variates with per-kind draw accounting.
//!
//! Every trajectory owns one [`RandomStream`] derived from a master seed and
//! the trajectory index. A stream has two independent channels: reaction
//! selection (uniforms and discrete indices) and timing (exponential and
//! Gamma variates). Keeping them apart means a timed and a time-free run on
//! the same stream make identical reaction choices.

use std::iter::Sum;
use std::ops::{Add, AddAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

/// Number of variates drawn, by distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RngCounters {
    pub uniform: u64,
    pub exponential: u64,
    pub gamma: u64,
}

impl Add for RngCounters {
    type Output = RngCounters;

    fn add(self, rhs: Self) -> Self {
        RngCounters {
            uniform: self.uniform + rhs.uniform,
            exponential: self.exponential + rhs.exponential,
            gamma: self.gamma + rhs.gamma,
        }
    }
}

impl AddAssign for RngCounters {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for RngCounters {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(RngCounters::default(), Add::add)
    }
}

const SELECTION_CHANNEL: u8 = 0x53;
const TIMING_CHANNEL: u8 = 0x54;

fn channel(seed: u64, stream_id: u64, tag: u8) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = tag;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    selection: ChaCha8Rng,
    timing: ChaCha8Rng,
    counters: RngCounters,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            seed,
            stream_id,
            selection: channel(seed, stream_id, SELECTION_CHANNEL),
            timing: channel(seed, stream_id, TIMING_CHANNEL),
            counters: RngCounters::default(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn counters(&self) -> RngCounters {
        self.counters
    }

    /// Uniform on `[0, 1)` from the selection channel.
    pub fn uniform(&mut self) -> f64 {
        self.counters.uniform += 1;
        self.selection.random::<f64>()
    }

    /// Exponential holding time with the given rate.
    ///
    /// # Panics
    /// If `rate` is not a positive finite number.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        assert!(
            rate > 0.0 && rate.is_finite(),
            "exponential rate must be positive, got {rate}"
        );
        self.counters.exponential += 1;
        // 1 - u lies in (0, 1], so the logarithm is finite.
        let r1 = 1.0 - self.timing.random::<f64>();
        exponential_from_uniform(r1, rate)
    }

    /// Index `j` drawn with probability `weights[j] / sum(weights)`.
    ///
    /// # Panics
    /// If no weight is positive.
    pub fn discrete_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "discrete_index needs a positive weight");
        let r2 = self.uniform();
        select_index(weights, r2)
    }

    /// Erlang variate with `shape` phases of mean `scale` each. Counts as a
    /// single Gamma draw whatever the sampler does internally.
    ///
    /// # Panics
    /// If `scale <= 0` or `shape == 0`.
    pub fn gamma(&mut self, scale: f64, shape: u64) -> f64 {
        assert!(
            scale > 0.0 && scale.is_finite(),
            "gamma scale must be positive, got {scale}"
        );
        assert!(shape >= 1, "gamma shape must be >= 1");
        self.counters.gamma += 1;
        Gamma::new(shape as f64, scale)
            .expect("validated gamma parameters")
            .sample(&mut self.timing)
    }
}

/// Inverse-transform exponential: `-ln(r1) / rate` for `r1` in `(0, 1]`.
pub fn exponential_from_uniform(r1: f64, rate: f64) -> f64 {
    debug_assert!(r1 > 0.0 && r1 <= 1.0);
    // -ln(1) is -0.0; report +0.
    (-r1.ln() / rate).max(0.0)
}

/// Smallest `j` with `sum(weights[..j]) < r2 * total <= sum(weights[..=j])`,
/// skipping zero weights so a zero-propensity reaction is never chosen.
pub fn select_index(weights: &[f64], r2: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = r2 * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = j;
        if target <= acc {
            return j;
        }
    }
    // rounding left the target just above the running sum
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RandomStream::new(7, 3);
        let mut b = RandomStream::new(7, 3);
        for _ in 0..50 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
            assert_eq!(a.exponential(2.0).to_bits(), b.exponential(2.0).to_bits());
            assert_eq!(a.gamma(0.5, 3).to_bits(), b.gamma(0.5, 3).to_bits());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RandomStream::new(7, 0);
        let mut b = RandomStream::new(7, 1);
        let xs: Vec<f64> = (0..100).map(|_| a.uniform()).collect();
        let ys: Vec<f64> = (0..100).map(|_| b.uniform()).collect();
        assert_ne!(xs, ys);
        assert!(xs.iter().zip(&ys).filter(|(x, y)| x == y).count() < 2);
    }

    #[test]
    fn distinct_seeds_differ() {
        let mut a = RandomStream::new(1, 0);
        let mut b = RandomStream::new(2, 0);
        assert_ne!(a.uniform(), b.uniform());
    }

    #[test]
    fn timing_draws_leave_selection_untouched() {
        let mut a = RandomStream::new(11, 5);
        let mut b = RandomStream::new(11, 5);
        for _ in 0..20 {
            a.exponential(1.0);
            a.gamma(1.0, 4);
            assert_eq!(a.uniform(), b.uniform());
        }
    }

    #[test]
    fn uniform_mean() {
        let mut s = RandomStream::new(42, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| s.uniform()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        assert_eq!(s.counters().uniform, n);
    }

    #[test]
    fn exponential_inverse_transform() {
        let tau = exponential_from_uniform((-1.0f64).exp(), 2.0);
        assert!((tau - 0.5).abs() < 1e-15);
        assert_eq!(exponential_from_uniform(1.0, 3.0), 0.0);
        assert!(exponential_from_uniform(1.0 - 1e-16, 3.0) >= 0.0);
    }

    #[test]
    #[should_panic]
    fn exponential_rejects_nonpositive_rate() {
        RandomStream::new(0, 0).exponential(0.0);
    }

    #[test]
    fn select_index_follows_cumulative_sums() {
        assert_eq!(select_index(&[1.0, 3.0], 0.1), 0);
        assert_eq!(select_index(&[1.0, 3.0], 0.25), 0);
        assert_eq!(select_index(&[1.0, 3.0], 0.5), 1);
        assert_eq!(select_index(&[1.0, 3.0], 0.999_999), 1);
        assert_eq!(select_index(&[0.0, 2.0, 0.0], 0.0), 1);
        for r in [0.0, 0.3, 0.99] {
            assert_eq!(select_index(&[5.0, 0.0, 0.0], r), 0);
        }
    }

    #[test]
    #[should_panic]
    fn discrete_index_rejects_all_zero() {
        RandomStream::new(0, 0).discrete_index(&[0.0, 0.0]);
    }

    #[test]
    fn counters_track_calls() {
        let mut s = RandomStream::new(3, 9);
        for _ in 0..4 {
            s.uniform();
        }
        for _ in 0..3 {
            s.exponential(1.0);
        }
        s.discrete_index(&[1.0, 1.0]);
        s.gamma(2.0, 50);
        s.gamma(2.0, 1);
        assert_eq!(
            s.counters(),
            RngCounters {
                uniform: 5,
                exponential: 3,
                gamma: 2
            }
        );
    }

    #[test]
    fn counters_sum() {
        let a = RngCounters {
            uniform: 1,
            exponential: 2,
            gamma: 3,
        };
        let total: RngCounters = [a, a, a].into_iter().sum();
        assert_eq!(total.gamma, 9);
        assert_eq!(total.exponential, 6);
    }
}
