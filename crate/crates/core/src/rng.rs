//! Counter-based deterministic random streams.
//!
//! Streams are derived by hashing a `(seed, labels...)` tuple, so a worker can
//! open the stream for e.g. `(seed, snr_index, trial)` without coordination and
//! results do not depend on scheduling.

use crate::scalar::Real;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// SplitMix64 generator.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            state: mix(seed.wrapping_add(GOLDEN)),
        }
    }

    /// Stream keyed by a label path, e.g. `Rng::stream(seed, &[snr_idx, trial])`.
    pub fn stream(seed: u64, labels: &[u64]) -> Self {
        let mut s = mix(seed.wrapping_add(GOLDEN));
        for &l in labels {
            s = mix(s ^ l.wrapping_mul(GOLDEN));
        }
        Rng { state: s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn uniform<T: Real>(&mut self) -> T {
        let x = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        T::from_f64c(x)
    }

    /// Uniform integer in [lo, hi] inclusive.
    pub fn int_range(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + (self.next_u64() % span) as i64
    }

    /// Standard normal pair (Box-Muller).
    pub fn normal_pair<T: Real>(&mut self) -> (T, T) {
        let mut u1: f64 = 0.0;
        while u1 <= 0.0 {
            u1 = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        }
        let u2 = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        (T::from_f64c(r * t.cos()), T::from_f64c(r * t.sin()))
    }

    /// Standard complex Gaussian: real and imaginary parts N(0, 1/2) each,
    /// so the complex variance is 1.
    pub fn complex_gaussian<T: Real>(&mut self) -> (T, T) {
        let (a, b) = self.normal_pair::<T>();
        let s = T::from_f64c(0.5f64.sqrt());
        (a * s, b * s)
    }
}
