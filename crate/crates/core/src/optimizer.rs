//! Cyclic maximization of the relaxed SINR over the waveform factor `U` and
//! the receive filter `w`.
//!
//! For fixed `U` the best filter is a generalized eigenvector. For fixed `w`
//! the ratio `tr(U Q_t(w) Uᴴ) / tr(U R_u(w) Uᴴ)` is raised by Dinkelbach
//! iterations, each of which maximizes `tr(U K Uᴴ)` over the column-norm
//! constraint by minorization-maximization.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, FastCovariance, FilterVector, WaveformFactor};
use crate::error::{Error, Result};
use crate::linalg::{inner, to_db, CMatrix, CVector, HermitianEigen, PdFactor, C64};
use crate::model::Scenario;

/// Default factor rank `⌊√(L·N_T + 1)⌋ − 1`, never below 1.
pub fn default_rank(tx_len: usize) -> usize {
    ((tx_len + 1).isqrt()).saturating_sub(1).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Rank of `U`; `None` selects [`default_rank`].
    pub rank: Option<usize>,
    pub eps_outer: f64,
    pub eps_dinkelbach: f64,
    pub eps_mm: f64,
    pub max_outer: usize,
    pub max_dinkelbach: usize,
    pub max_mm: usize,
    pub seed: u64,
    pub fast_covariance: FastCovariance,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            rank: None,
            eps_outer: 1e-3,
            eps_dinkelbach: 1e-3,
            eps_mm: 1e-6,
            max_outer: 200,
            max_dinkelbach: 50,
            max_mm: 500,
            seed: 0,
            fast_covariance: FastCovariance::Auto,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = Some(rank);
        self
    }

    /// The rank actually used for a waveform of length `tx_len`.
    pub fn resolved_rank(&self, tx_len: usize) -> usize {
        self.rank.unwrap_or_else(|| default_rank(tx_len))
    }

    pub fn validate(&self, tx_len: usize) -> Result<()> {
        let tolerances = [self.eps_outer, self.eps_dinkelbach, self.eps_mm];
        if tolerances.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_outer == 0 || self.max_dinkelbach == 0 || self.max_mm == 0 {
            return Err(Error::InvalidConfig(
                "iteration caps must be positive".into(),
            ));
        }
        let r = self.resolved_rank(tx_len);
        if r == 0 || r > tx_len {
            return Err(Error::InvalidConfig(format!(
                "rank must lie in 1..={tx_len} (got {r})"
            )));
        }
        Ok(())
    }
}

/// Objective histories of one design run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// `g⁽⁰⁾, g⁽¹⁾, …`
    pub outer_objectives: Vec<f64>,
    /// `x⁽ⁿ'⁰⁾, x⁽ⁿ'¹⁾, …` for each outer iteration `n`.
    pub dinkelbach_objectives: Vec<Vec<f64>>,
    /// MM objective sequences, one per Dinkelbach iteration.
    pub mm_objectives: Vec<Vec<Vec<f64>>>,
    /// `‖K‖·e_t` of each MM problem, the scale of its monotonicity slack.
    pub mm_scales: Vec<Vec<f64>>,
    /// `|tr(U K Uᴴ)| / tr(U Q_t(w) Uᴴ)` at each Dinkelbach entry.
    pub entry_residuals: Vec<Vec<f64>>,
    /// Seconds spent in each outer iteration.
    pub wall_times: Vec<f64>,
}

/// A place where a recorded sequence decreased by more than its slack.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityViolation {
    pub level: &'static str,
    pub outer: usize,
    pub dinkelbach: Option<usize>,
    pub step: usize,
    pub drop: f64,
}

impl std::fmt::Display for MonotonicityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} sequence drops by {:e} at outer {}",
            self.level, self.drop, self.outer
        )?;
        if let Some(k) = self.dinkelbach {
            write!(f, ", Dinkelbach {k}")?;
        }
        write!(f, ", step {}", self.step)
    }
}

impl RunTrace {
    pub fn outer_iterations(&self) -> usize {
        self.dinkelbach_objectives.len()
    }

    /// Every decrease beyond the documented slack: `rel·|next|` for the
    /// outer and Dinkelbach levels, `rel·(|prev| + ‖K‖·e_t)` for MM.
    pub fn monotonicity_violations(&self, rel: f64) -> Vec<MonotonicityViolation> {
        let mut out = Vec::new();
        for (i, w) in self.outer_objectives.windows(2).enumerate() {
            if w[1] < w[0] - rel * w[1].abs() {
                out.push(MonotonicityViolation {
                    level: "outer",
                    outer: i,
                    dinkelbach: None,
                    step: i + 1,
                    drop: w[0] - w[1],
                });
            }
        }
        for (n, xs) in self.dinkelbach_objectives.iter().enumerate() {
            for (k, w) in xs.windows(2).enumerate() {
                if w[1] < w[0] - rel * w[1].abs() {
                    out.push(MonotonicityViolation {
                        level: "dinkelbach",
                        outer: n,
                        dinkelbach: None,
                        step: k + 1,
                        drop: w[0] - w[1],
                    });
                }
            }
        }
        for (n, (loops, scales)) in self.mm_objectives.iter().zip(&self.mm_scales).enumerate() {
            for (k, (fs, scale)) in loops.iter().zip(scales).enumerate() {
                for (j, w) in fs.windows(2).enumerate() {
                    if w[1] < w[0] - rel * (w[0].abs() + scale) {
                        out.push(MonotonicityViolation {
                            level: "mm",
                            outer: n,
                            dinkelbach: Some(k),
                            step: j + 1,
                            drop: w[0] - w[1],
                        });
                    }
                }
            }
        }
        out
    }

    pub fn max_entry_residual(&self) -> f64 {
        self.entry_residuals
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    /// CSV with columns `outer_iter, dinkelbach_iter, mm_iter, objective,
    /// wall_time_s`. Levels that do not apply to a row are left empty; wall
    /// times are written as zero unless `with_times` is set.
    pub fn write_csv<W: Write>(&self, out: W, with_times: bool) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(
            w,
            "outer_iter,dinkelbach_iter,mm_iter,objective,wall_time_s"
        )?;
        for (n, g) in self.outer_objectives.iter().enumerate() {
            // row n closes outer iteration n − 1; row 0 is the starting point
            let t = match n.checked_sub(1) {
                Some(i) if with_times => self.wall_times.get(i).copied().unwrap_or(0.0),
                _ => 0.0,
            };
            writeln!(w, "{n},,,{g:.17e},{t}")?;
        }
        for (n, xs) in self.dinkelbach_objectives.iter().enumerate() {
            for (k, x) in xs.iter().enumerate() {
                writeln!(w, "{n},{k},,{x:.17e},")?;
            }
        }
        for (n, loops) in self.mm_objectives.iter().enumerate() {
            for (k, fs) in loops.iter().enumerate() {
                for (j, f) in fs.iter().enumerate() {
                    writeln!(w, "{n},{k},{j},{f:.17e},")?;
                }
            }
        }
        w.flush()
    }
}

/// Result of [`cyclic_design`].
#[derive(Clone, Debug)]
pub struct DesignOutput {
    pub factor: WaveformFactor,
    pub filter: FilterVector,
    /// `|α_t|²·g` at convergence.
    pub relaxed_sinr: f64,
    pub trace: RunTrace,
    pub converged: bool,
}

impl DesignOutput {
    pub fn relaxed_sinr_db(&self) -> f64 {
        to_db(self.relaxed_sinr)
    }
}

/// Largest `λ` with `Q v = λ R v`, and its unit-norm `v`.
pub fn largest_generalized_eigpair(q: &CMatrix, r: &CMatrix) -> Result<(f64, CVector)> {
    if q.shape() != r.shape() || q.nrows() != q.ncols() {
        return Err(Error::DimensionMismatch {
            what: "generalized eigenproblem",
            expected: r.nrows(),
            got: q.nrows(),
        });
    }
    let factor = PdFactor::new(r.clone(), "R")?;
    // C = L⁻¹ Q L⁻ᴴ
    let lq = factor.whiten(q);
    let mut c = factor.whiten(&lq.adjoint());
    crate::linalg::hermitize(&mut c);
    let eig = HermitianEigen::new(&c);
    let v = factor.unwhiten(&eig.top_vector());
    let v = v.normalize();
    Ok((eig.max().max(0.0), v))
}

/// Best filter for a fixed waveform factor: the top generalized eigenvector
/// of `(Q_t(U), R_u(U))`, unit norm.
///
/// `Q_t(U) = G Gᴴ` has rank `r`, so after whitening with the Cholesky
/// factor of `R_u(U)` only the `r × r` problem `FᴴF` is solved.
pub fn filter_step(model: &CovarianceModel, factor: &WaveformFactor) -> Result<FilterVector> {
    let ru = model.ru_of_u(factor)?;
    let chol = PdFactor::new(ru, "interference covariance R_u(U)")?;
    let g = model.qt_factor_of_u(factor)?;
    let f = chol.whiten(&g);
    let mut small = f.adjoint() * &f;
    crate::linalg::hermitize(&mut small);
    let eig = HermitianEigen::new(&small);
    if !(eig.max() > 0.0) {
        return Err(Error::ZeroFilter);
    }
    let y = &f * eig.top_vector();
    let w = chol.unwhiten(&y).normalize();
    FilterVector::new(w)
}

/// Outcome of one MM solve.
#[derive(Clone, Debug)]
pub struct MmOutcome {
    pub factor: WaveformFactor,
    /// `tr(U K Uᴴ)` at the start and after every sweep.
    pub objectives: Vec<f64>,
    /// `‖K‖₂·e_t`.
    pub scale: f64,
}

/// Maximize `tr(U K Uᴴ)` subject to `‖u_l‖² = p_s` for every column.
///
/// Each sweep computes `B = U K₊` with `K₊ = K − (k_min − δ) I ⪰ 0` and sets
/// `u_l = √p_s·b_l/‖b_l‖`; a column whose `b_l` vanishes is kept.
pub fn mm_quadratic_maximize(
    k: &CMatrix,
    start: &WaveformFactor,
    symbol_power: f64,
    eps_mm: f64,
    max_mm: usize,
) -> Result<MmOutcome> {
    let n = start.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "MM quadratic form",
            expected: n,
            got: k.nrows(),
        });
    }
    let eig = HermitianEigen::new(k);
    let norm = eig.norm();
    let shift = eig.min() - 1e-12 * norm;
    let mut k_pos = k.clone();
    for i in 0..n {
        k_pos[(i, i)] -= C64::new(shift, 0.0);
    }
    let k_pos_norm = eig.max() - shift;
    let energy = symbol_power * n as f64;
    let scale = norm * energy;
    let amp = symbol_power.sqrt();
    let degenerate = 1e-14 * amp * k_pos_norm;

    let mut u = start.matrix().clone();
    let mut f = trace_quadratic(&u, k);
    let mut objectives = vec![f];
    for _ in 0..max_mm {
        let b = &u * &k_pos;
        for (mut col, bcol) in u.column_iter_mut().zip(b.column_iter()) {
            let bn = bcol.norm();
            if bn > degenerate {
                col.copy_from(&(bcol * C64::new(amp / bn, 0.0)));
            }
        }
        let next = trace_quadratic(&u, k);
        objectives.push(next);
        let change = (next - f).abs();
        f = next;
        if change <= eps_mm * f.abs().max(1e-12 * scale) {
            break;
        }
    }
    Ok(MmOutcome {
        factor: WaveformFactor::from_matrix_unchecked(u),
        objectives,
        scale,
    })
}

fn trace_quadratic(u: &CMatrix, k: &CMatrix) -> f64 {
    let uk = u * k;
    uk.iter()
        .zip(u.iter())
        .map(|(a, b)| (a * b.conj()).re)
        .sum()
}

/// Outcome of one Dinkelbach loop.
#[derive(Clone, Debug)]
pub struct DinkelbachOutcome {
    pub factor: WaveformFactor,
    /// `x⁽ᵏ⁾` at each accepted `U`, the last one at the returned factor.
    pub ratios: Vec<f64>,
    pub mm_objectives: Vec<Vec<f64>>,
    pub mm_scales: Vec<f64>,
    pub entry_residuals: Vec<f64>,
}

/// Raise `tr(U q qᴴ Uᴴ) / tr(U R_u(w) Uᴴ)` for a fixed filter by Dinkelbach
/// iterations with warm-started MM solves.
pub fn dinkelbach_u_step(
    model: &CovarianceModel,
    filter: &FilterVector,
    start: &WaveformFactor,
    cfg: &OptimizerConfig,
) -> Result<DinkelbachOutcome> {
    let q = model.qt_factor_of_w(filter)?;
    let rw = model.ru_of_w(filter)?;
    let qq = &q * q.adjoint();
    let ps = model.symbol_power();
    let ratio = |u: &CMatrix| -> (f64, f64) {
        let uq = u * &q;
        let num = uq.norm_squared();
        let den = trace_quadratic(u, &rw);
        (num / den, num)
    };

    let mut u = start.clone();
    let (mut x, mut num) = ratio(u.matrix());
    let mut out = DinkelbachOutcome {
        factor: u.clone(),
        ratios: vec![x],
        mm_objectives: Vec::new(),
        mm_scales: Vec::new(),
        entry_residuals: Vec::new(),
    };
    for _ in 0..cfg.max_dinkelbach {
        let k = &qq - &rw * C64::new(x, 0.0);
        let entry = trace_quadratic(u.matrix(), &k);
        out.entry_residuals.push(if num > 0.0 {
            entry.abs() / num
        } else {
            entry.abs()
        });
        let mm = mm_quadratic_maximize(&k, &u, ps, cfg.eps_mm, cfg.max_mm)?;
        out.mm_objectives.push(mm.objectives);
        out.mm_scales.push(mm.scale);
        u = mm.factor;
        let (next, next_num) = ratio(u.matrix());
        out.ratios.push(next);
        let gain = (next - x) / next;
        x = next;
        num = next_num;
        if gain < cfg.eps_dinkelbach {
            break;
        }
    }
    out.factor = u;
    Ok(out)
}

/// Cyclic design from a seeded random start.
pub fn cyclic_design(model: &CovarianceModel, cfg: &OptimizerConfig) -> Result<DesignOutput> {
    let d = model.dims();
    cfg.validate(d.tx_len())?;
    let rank = cfg.resolved_rank(d.tx_len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = WaveformFactor::random(rank, d.tx_len(), model.symbol_power(), &mut rng);
    cyclic_design_from(model, cfg, start)
}

/// Cyclic design from a given feasible factor.
pub fn cyclic_design_from(
    model: &CovarianceModel,
    cfg: &OptimizerConfig,
    start: WaveformFactor,
) -> Result<DesignOutput> {
    let d = model.dims();
    cfg.validate(d.tx_len())?;
    Error::check_factor(&start, d.tx_len(), model.symbol_power())?;
    let mut trace = RunTrace::default();
    let mut u = start;
    let mut clock = Instant::now();
    let mut w = filter_step(model, &u).map_err(|e| e.at_iteration(0))?;
    let mut converged = false;
    for n in 0..cfg.max_outer {
        let dk = dinkelbach_u_step(model, &w, &u, cfg).map_err(|e| e.at_iteration(n))?;
        if n == 0 {
            trace.outer_objectives.push(dk.ratios[0]);
        }
        let g_prev = *trace.outer_objectives.last().expect("seeded above");
        let g = *dk.ratios.last().expect("at least the entry ratio");
        trace.outer_objectives.push(g);
        trace.dinkelbach_objectives.push(dk.ratios);
        trace.mm_objectives.push(dk.mm_objectives);
        trace.mm_scales.push(dk.mm_scales);
        trace.entry_residuals.push(dk.entry_residuals);
        u = dk.factor;
        if (g - g_prev) / g <= cfg.eps_outer {
            trace.wall_times.push(clock.elapsed().as_secs_f64());
            converged = true;
            break;
        }
        w = filter_step(model, &u).map_err(|e| e.at_iteration(n + 1))?;
        trace.wall_times.push(clock.elapsed().as_secs_f64());
        clock = Instant::now();
    }
    let g = *trace
        .outer_objectives
        .last()
        .expect("at least one outer iteration");
    Ok(DesignOutput {
        factor: u,
        filter: w,
        relaxed_sinr: model.scenario().target.amplitude_power * g,
        trace,
        converged,
    })
}

/// Build the model for `scenario` with the configured covariance route and
/// run [`cyclic_design`].
pub fn design(
    scenario: &Scenario,
    cfg: &OptimizerConfig,
) -> Result<(CovarianceModel, DesignOutput)> {
    let model = CovarianceModel::new(scenario.clone())?.with_fast_covariance(cfg.fast_covariance);
    let out = cyclic_design(&model, cfg)?;
    Ok((model, out))
}

/// `wᴴ Q_t(U) w / wᴴ R_u(U) w`.
pub fn rayleigh_quotient(
    model: &CovarianceModel,
    factor: &WaveformFactor,
    filter: &FilterVector,
) -> Result<f64> {
    let w = filter.as_vector();
    let g = model.qt_factor_of_u(factor)?;
    let num = (g.adjoint() * w).norm_squared();
    let ru = model.ru_of_u(factor)?;
    let den = inner(w.as_slice(), (&ru * w).as_slice()).re;
    Ok(num / den)
}

impl Error {
    fn check_factor(factor: &WaveformFactor, len: usize, symbol_power: f64) -> Result<()> {
        if factor.len() != len {
            return Err(Error::DimensionMismatch {
                what: "waveform factor",
                expected: len,
                got: factor.len(),
            });
        }
        WaveformFactor::new(factor.matrix().clone(), symbol_power).map(|_| ())
    }
}

#[cfg(test)]
mod tests;
