//! Seeded random streams. Every stochastic routine takes an explicit generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SamplerRng = ChaCha8Rng;

/// Stream `stream` of the generator seeded by `seed`. Distinct streams are independent,
/// which gives every chain its own reproducible randomness.
pub fn stream(seed: u64, stream: u64) -> SamplerRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for o in out {
        *o = standard_normal(rng);
    }
}

/// Uniform draw on `[0, 1)`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
