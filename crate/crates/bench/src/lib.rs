//! Seeded inputs shared by the criterion benchmarks.

use matxai_core::models::{synth_model_fixture, ModelFixture, ModelKind};
use matxai_core::shapley::CoalitionGame;
use matxai_core::{Complex64, ComplexMatrix, RealMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn real_matrix(seed: u64, rows: usize, cols: usize) -> RealMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RealMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn complex_matrix(seed: u64, rows: usize, cols: usize) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn game(seed: u64, n: usize) -> CoalitionGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CoalitionGame::from_fn(n, |_| rng.gen_range(-1.0..1.0)).expect("n within limits")
}

pub fn model(kind: ModelKind, seed: u64, features: usize) -> ModelFixture {
    synth_model_fixture(kind, seed, (1, features)).expect("nonempty shape")
}
