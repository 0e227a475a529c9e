//! Shared fixtures for the benchmarks under `benches/`.

use polystap_core::{presets, CVector, CovarianceModel, FilterVector, WaveformFactor, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The reference 4×4, L = 13, M = 16 scenario.
pub fn reference_model() -> CovarianceModel {
    CovarianceModel::new(presets::fig1()).expect("preset is valid")
}

pub fn random_factor(model: &CovarianceModel, rank: usize, seed: u64) -> WaveformFactor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WaveformFactor::random(rank, model.dims().tx_len(), model.symbol_power(), &mut rng)
}

pub fn random_filter(model: &CovarianceModel, seed: u64) -> FilterVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = CVector::from_fn(model.dims().rx_len(), |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    FilterVector::new(w).expect("random filter is nonzero")
}
