//! True SINR of concrete waveforms, Doppler sweeps and the exhaustive
//! polyphase oracle.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, FilterVector};
use crate::error::{Error, Result};
use crate::linalg::{inner, to_db, CVector, PdFactor, C64};
use crate::synthesis::PolyphaseWaveform;

/// Factor of `R_u(s)`, shared with the cached jammer-noise factor when the
/// clutter is silent.
enum InterferenceFactor<'a> {
    Shared(&'a PdFactor),
    Owned(PdFactor),
}

impl InterferenceFactor<'_> {
    fn get(&self) -> &PdFactor {
        match self {
            Self::Shared(f) => f,
            Self::Owned(f) => f,
        }
    }
}

fn interference_factor<'a>(
    model: &'a CovarianceModel,
    s: &[C64],
) -> Result<InterferenceFactor<'a>> {
    if model.scenario().clutter.is_silent() {
        return Ok(InterferenceFactor::Shared(model.jammer_noise_factor()?));
    }
    let r = model.ru_of_s(s)?;
    Ok(InterferenceFactor::Owned(PdFactor::new(
        r,
        "interference covariance R_u(s)",
    )?))
}

/// `|α_t|²·v_tᴴ R_u(s)⁻¹ v_t`, linear.
pub fn true_sinr(model: &CovarianceModel, s: &[C64]) -> Result<f64> {
    let vt = model.apply_vt(s)?;
    let chol = interference_factor(model, s)?;
    Ok(model.scenario().target.amplitude_power * chol.get().quad_inverse(&vt))
}

pub fn true_sinr_db(model: &CovarianceModel, s: &[C64]) -> Result<f64> {
    true_sinr(model, s).map(to_db)
}

/// Scaling applied to the optimal filter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterNormalization {
    /// `‖w‖ = 1`.
    #[default]
    Unit,
    /// `wᴴ v_t = 1`.
    Mvdr,
}

/// `w ∝ R_u(s)⁻¹ v_t(s)`.
pub fn optimal_filter(
    model: &CovarianceModel,
    s: &[C64],
    normalization: FilterNormalization,
) -> Result<FilterVector> {
    let vt = model.apply_vt(s)?;
    let chol = interference_factor(model, s)?;
    let w = chol.get().solve(&vt);
    let w = match normalization {
        FilterNormalization::Unit => w.normalize(),
        FilterNormalization::Mvdr => {
            let gain = inner(w.as_slice(), vt.as_slice());
            w * (C64::new(1.0, 0.0) / gain.conj())
        }
    };
    FilterVector::new(w)
}

/// `|wᴴ v_t|² / wᴴ R_u(s) w`, scaled by `|α_t|²`.
pub fn filter_sinr(model: &CovarianceModel, s: &[C64], filter: &FilterVector) -> Result<f64> {
    let w = filter.as_vector();
    let vt = model.apply_vt(s)?;
    let r = model.ru_of_s(s)?;
    let num = inner(w.as_slice(), vt.as_slice()).norm_sqr();
    let den = inner(w.as_slice(), (&r * w).as_slice()).re;
    Ok(model.scenario().target.amplitude_power * num / den)
}

/// A waveform evaluated over a grid of target Doppler values.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub doppler_grid: Vec<f64>,
    pub waveform: CVector,
    pub label: String,
}

impl SweepSpec {
    pub fn new(
        doppler_grid: Vec<f64>,
        waveform: CVector,
        label: impl Into<String>,
    ) -> Result<Self> {
        if doppler_grid.is_empty() {
            return Err(Error::InvalidConfig("Doppler grid is empty".into()));
        }
        if doppler_grid.iter().any(|f| !(f.abs() <= 0.5)) {
            return Err(Error::InvalidConfig(
                "Doppler grid must lie in [-0.5, 0.5]".into(),
            ));
        }
        Ok(Self {
            doppler_grid,
            waveform,
            label: label.into(),
        })
    }
}

/// `count` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub normalized_doppler: f64,
    pub sinr: f64,
    pub sinr_db: f64,
}

/// SINR of a fixed waveform as the target Doppler moves. The interference
/// covariance does not depend on the target, so it is factorized once.
pub fn doppler_sweep(model: &CovarianceModel, spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    let s = spec.waveform.as_slice();
    let chol = interference_factor(model, s)?;
    let power = model.scenario().target.amplitude_power;
    spec.doppler_grid
        .iter()
        .map(|&f| {
            let vt = model.apply_vt_at_doppler(s, 2.0 * std::f64::consts::PI * f)?;
            let sinr = power * chol.get().quad_inverse(&vt);
            Ok(SweepPoint {
                normalized_doppler: f,
                sinr,
                sinr_db: to_db(sinr),
            })
        })
        .collect()
}

/// Default cap on the number of enumerated waveforms.
pub const ORACLE_LIMIT: u128 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleOptions {
    pub limit: u128,
    /// Fix the first phase index to zero; every other waveform is a global
    /// rotation of one of these and has the same SINR.
    pub phase_classes: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            limit: ORACLE_LIMIT,
            phase_classes: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub alphabet_size: u32,
    pub best_indices: Vec<u32>,
    pub best_sinr: f64,
    pub best_sinr_db: f64,
    /// `D^{L·N_T}`, the number of waveforms covered.
    pub enumerated: u128,
    /// Waveforms actually evaluated (fewer under phase-class reduction).
    pub evaluated: u128,
    pub runtime_s: f64,
}

/// Best `D`-ary waveform by brute force. Ties go to the lowest enumeration
/// index, where element 0 is the least significant digit.
pub fn exhaustive_oracle(
    model: &CovarianceModel,
    alphabet: u32,
    options: OracleOptions,
) -> Result<OracleReport> {
    if alphabet < 2 {
        return Err(Error::InvalidConfig(
            "alphabet size must be at least 2".into(),
        ));
    }
    let n = model.dims().tx_len();
    let total = (alphabet as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    if total > options.limit {
        return Err(Error::InstanceTooLarge {
            count: total,
            limit: options.limit,
        });
    }
    let evaluated = if options.phase_classes {
        total / alphabet as u128
    } else {
        total
    };
    let start = Instant::now();
    let amplitude = model.symbol_power().sqrt();
    let decode = |mut k: u128| -> Vec<u32> {
        let mut idx = vec![0u32; n];
        let first = usize::from(options.phase_classes);
        for slot in idx.iter_mut().skip(first) {
            *slot = (k % alphabet as u128) as u32;
            k /= alphabet as u128;
        }
        idx
    };
    const CHUNK: u128 = 4096;
    let chunks: Vec<u128> = (0..evaluated.div_ceil(CHUNK)).collect();
    let best = chunks
        .par_iter()
        .map(|&c| -> Result<Option<(f64, u128)>> {
            let mut best: Option<(f64, u128)> = None;
            for k in c * CHUNK..((c + 1) * CHUNK).min(evaluated) {
                let w = PolyphaseWaveform::new(decode(k), alphabet, amplitude)?;
                let sinr = true_sinr(model, w.samples().as_slice())?;
                if best.is_none_or(|(b, _)| sinr > b) {
                    best = Some((sinr, k));
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(f64, u128)>, cur| match acc {
            Some(a) if a.0 >= cur.0 => Some(a),
            _ => Some(cur),
        })
        .expect("at least one waveform");
    Ok(OracleReport {
        alphabet_size: alphabet,
        best_indices: decode(best.1),
        best_sinr: best.0,
        best_sinr_db: to_db(best.0),
        enumerated: total,
        evaluated,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}
