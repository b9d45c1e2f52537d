//! Seeded inputs shared by the criterion benchmarks.

use fairscale::{FisConfig, FisState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scores with ties and roughly balanced labels.
pub fn auc_input(n: usize, seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let label = rng.random_bool(0.5);
            let shift = if label { 0.3 } else { 0.0 };
            let score = ((rng.random::<f64>() + shift) * 1000.0).round() / 1000.0;
            (score, label)
        })
        .unzip()
}

/// A state with random group weights and half the batch remembered, plus the
/// batch and its current losses.
pub fn fis_input(
    batch: usize,
    groups: usize,
    seed: u64,
) -> (FisState, Vec<(u64, usize)>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = (0..groups).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut state = FisState::with_beta(FisConfig::default(), beta).expect("valid config");
    let ids: Vec<u64> = (0..batch as u64).collect();
    let prior: Vec<f64> = (0..batch / 2).map(|_| rng.random_range(0.0..3.0)).collect();
    state
        .update_loss_memory(&ids[..batch / 2], &prior)
        .expect("matching lengths");
    let items = ids
        .iter()
        .map(|&i| (i, rng.random_range(0..groups)))
        .collect();
    let losses = (0..batch).map(|_| rng.random_range(0.0..3.0)).collect();
    (state, items, losses)
}
