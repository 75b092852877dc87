//! Fixtures shared by the benchmarks under `benches/`.

use dmoc_core::DataSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` load profiles of `slots` values with one evening bump each.
pub fn peak_profiles(n: usize, slots: usize, seed: u64) -> DataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let at = rng.gen_range(slots * 3 / 5..slots);
            (0..slots)
                .map(|t| rng.gen_range(0.3..0.7) + if t == at { 3.0 } else { 0.0 })
                .collect()
        })
        .collect();
    DataSet::new(rows).expect("nonempty")
}
