//! Fixtures shared by the benchmarks in `benches/`.

use nterm_core::CoefficientSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Signed coefficients with a `j^{-1}` envelope in random order.
pub fn decaying_sequence(len: usize, seed: u64) -> CoefficientSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (1..=len)
        .map(|j| {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            sign * rng.random::<f64>() / j as f64
        })
        .collect();
    for i in (1..x.len()).rev() {
        x.swap(i, rng.random_range(0..=i));
    }
    CoefficientSequence::new(x).expect("finite, nonempty")
}
