//! Finite-alphabet waveforms recovered from the relaxed solution by Gaussian
//! randomization.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, FilterVector, WaveformFactor};
use crate::error::{Error, Result};
use crate::evaluation::true_sinr;
use crate::linalg::{cis, inner, CMatrix, CVector, C64};
use crate::model::Scenario;

/// Constant-modulus waveform with phases on the grid `2πk/D`, stored in the
/// same layout as `s` (transmit element fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyphaseWaveform {
    phase_indices: Vec<u32>,
    alphabet_size: u32,
    amplitude: f64,
}

impl PolyphaseWaveform {
    pub fn new(phase_indices: Vec<u32>, alphabet_size: u32, amplitude: f64) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::InvalidConfig(
                "alphabet size must be at least 2".into(),
            ));
        }
        if let Some(bad) = phase_indices.iter().find(|&&k| k >= alphabet_size) {
            return Err(Error::InvalidConfig(format!(
                "phase index {bad} outside alphabet of size {alphabet_size}"
            )));
        }
        if !(amplitude > 0.0) {
            return Err(Error::InvalidConfig("amplitude must be positive".into()));
        }
        Ok(Self {
            phase_indices,
            alphabet_size,
            amplitude,
        })
    }

    pub fn phase_indices(&self) -> &[u32] {
        &self.phase_indices
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn len(&self) -> usize {
        self.phase_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase_indices.is_empty()
    }

    pub fn phase_step(&self) -> f64 {
        2.0 * PI / self.alphabet_size as f64
    }

    /// Phase of element `i` in radians, in `[0, 2π)`.
    pub fn phase(&self, i: usize) -> f64 {
        self.phase_indices[i] as f64 * self.phase_step()
    }

    pub fn samples(&self) -> CVector {
        let step = self.phase_step();
        CVector::from_iterator(
            self.len(),
            self.phase_indices
                .iter()
                .map(|&k| cis(k as f64 * step) * self.amplitude),
        )
    }

    /// `sᴴs`.
    pub fn energy(&self) -> f64 {
        self.amplitude * self.amplitude * self.len() as f64
    }

    /// Every index shifted by `k` modulo `D`, i.e. a global phase rotation.
    pub fn rotated(&self, k: u32) -> Self {
        Self {
            phase_indices: self
                .phase_indices
                .iter()
                .map(|&i| (i + k) % self.alphabet_size)
                .collect(),
            ..self.clone()
        }
    }
}

/// Nearest index on the `D`-ary grid. The argument is first mapped to
/// `[0, 2π)`; ties round up and `D` wraps to `0`.
pub fn quantize_phase(z: C64, alphabet: u32) -> u32 {
    let two_pi = 2.0 * PI;
    let mut arg = z.arg();
    if arg < 0.0 {
        arg += two_pi;
    }
    let x = arg / (two_pi / alphabet as f64);
    ((x + 0.5).floor() as u64 % alphabet as u64) as u32
}

/// The continuous-phase vectors `χ̃ = Uᴴχ` with `χ ~ CN(0, I_r)`, in draw
/// order. Quantizing the same draws at several alphabet sizes keeps the
/// comparison between alphabets paired.
pub fn gaussian_draws(factor: &WaveformFactor, n_draws: usize, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uh = factor.matrix().adjoint();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..n_draws)
        .map(|_| {
            let chi = CVector::from_fn(factor.rank(), |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re * scale, im * scale)
            });
            &uh * chi
        })
        .collect()
}

/// Candidate waveforms for one alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePool {
    pub candidates: Vec<PolyphaseWaveform>,
    pub draws_seed: u64,
}

impl CandidatePool {
    /// Quantize previously drawn `χ̃` vectors.
    pub fn from_draws(draws: &[CVector], alphabet: u32, amplitude: f64, seed: u64) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::InvalidConfig("at least one draw is required".into()));
        }
        let candidates = draws
            .iter()
            .map(|chi| {
                let idx = chi.iter().map(|&z| quantize_phase(z, alphabet)).collect();
                PolyphaseWaveform::new(idx, alphabet, amplitude)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            candidates,
            draws_seed: seed,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// `n_draws` randomized `D`-ary candidates from `U*`.
pub fn draw_candidates(
    factor: &WaveformFactor,
    n_draws: usize,
    alphabet: u32,
    amplitude: f64,
    seed: u64,
) -> Result<CandidatePool> {
    if alphabet < 2 {
        return Err(Error::InvalidConfig(
            "alphabet size must be at least 2".into(),
        ));
    }
    CandidatePool::from_draws(
        &gaussian_draws(factor, n_draws, seed),
        alphabet,
        amplitude,
        seed,
    )
}

/// The chosen candidate and its score under the rule that chose it.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub waveform: PolyphaseWaveform,
    pub score: f64,
    /// Score of every candidate, in pool order.
    pub scores: Vec<f64>,
}

fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

fn selection(pool: &CandidatePool, scores: Vec<f64>) -> Result<Selection> {
    if pool.is_empty() {
        return Err(Error::InvalidConfig("candidate pool is empty".into()));
    }
    let index = argmax_first(&scores);
    Ok(Selection {
        index,
        waveform: pool.candidates[index].clone(),
        score: scores[index],
        scores,
    })
}

/// Pick the candidate maximizing `|qᴴš|² / šᴴ R_u(w*) š` with `q = V_tᴴw*`.
pub fn select_method1(
    pool: &CandidatePool,
    model: &CovarianceModel,
    filter: &FilterVector,
) -> Result<Selection> {
    let q = model.qt_factor_of_w(filter)?;
    let rw: CMatrix = model.ru_of_w(filter)?;
    let scores = pool
        .candidates
        .iter()
        .map(|c| {
            let s = c.samples();
            let num = inner(q.as_slice(), s.as_slice()).norm_sqr();
            let den = inner(s.as_slice(), (&rw * &s).as_slice()).re;
            num / den
        })
        .collect();
    selection(pool, scores)
}

/// Pick the candidate with the largest true SINR. Candidates are scored
/// independently and reduced in pool order, so threading does not change
/// the result.
pub fn select_method2(pool: &CandidatePool, model: &CovarianceModel) -> Result<Selection> {
    let scores = pool
        .candidates
        .par_iter()
        .map(|c| true_sinr(model, c.samples().as_slice()))
        .collect::<Result<Vec<_>>>()?;
    selection(pool, scores)
}

/// Which selection rule to apply.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionMethod {
    /// Relaxed-problem ratio at the designed filter.
    Method1,
    /// True SINR.
    #[default]
    Method2,
}

pub fn select(
    pool: &CandidatePool,
    model: &CovarianceModel,
    filter: &FilterVector,
    method: SelectionMethod,
) -> Result<Selection> {
    match method {
        SelectionMethod::Method1 => select_method1(pool, model, filter),
        SelectionMethod::Method2 => select_method2(pool, model),
    }
}

/// The 13-element Barker code.
pub const BARKER_13: [i8; 13] = [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1];

/// `S = a_T*(θ_t)·√p_s·b_13ᵀ`, vectorized in waveform layout.
pub fn barker_waveform(scenario: &Scenario) -> Result<CVector> {
    let d = scenario.dims();
    if d.code_length != BARKER_13.len() {
        return Err(Error::InvalidConfig(format!(
            "the Barker baseline needs code length 13 (got {})",
            d.code_length
        )));
    }
    let a = crate::model::steering_tx(
        &scenario.geometry,
        scenario.pulses.wavelength_m,
        scenario.target.doa_rad,
    );
    let amp = scenario.symbol_power().sqrt();
    Ok(CVector::from_fn(d.tx_len(), |i, _| {
        let (l, t) = (i / d.n_tx, i % d.n_tx);
        a[t].conj() * (amp * BARKER_13[l] as f64)
    }))
}
