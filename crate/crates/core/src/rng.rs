//! Deterministic random streams.
//!
//! Every simulated run owns one [`RngStream`]. Ensemble member `i` draws
//! from the stream seeded with `master ^ splitmix64(i)`, so any single run
//! can be replayed without the others and results do not depend on the
//! order in which a worker pool schedules them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// One round of the splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of ensemble member `index` under `master`.
pub fn member_seed(master: u64, index: u64) -> u64 {
    master ^ splitmix64(index)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn member(master: u64, index: u64) -> Self {
        Self::new(member_seed(master, index))
    }

    /// Uniform variate on the half-open interval (0, 1].
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}
