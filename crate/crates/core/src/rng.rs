//! Seeded standard-normal streams.
//!
//! Generator `chacha20-invcdf-v1`: ChaCha20 keyed by the 64-bit seed with
//! the stream id set to the sample index; each 64-bit output `x` becomes the
//! uniform `u = ((x >> 11) + 0.5) · 2⁻⁵³ ∈ (0, 1)` and then `z = Φ⁻¹(u)`.
//! Inverse-CDF transformation consumes exactly one word per variate, so the
//! stream is identical on every platform and for every thread count.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ContinuousCDF, Normal};

pub const GENERATOR: &str = "chacha20-invcdf-v1";

pub struct NormalStream {
    rng: ChaCha20Rng,
    normal: Normal,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, normal: Normal::standard() }
    }

    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        let u = self.next_uniform();
        self.normal.inverse_cdf(u)
    }

    pub fn take(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_normal()).collect()
    }
}

/// The first `n` variates of stream `stream` under `seed`.
pub fn standard_normals(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    NormalStream::new(seed, stream).take(n)
}
