//! Structured space-time operators and interference covariance assembly.
//!
//! Layout conventions, fixed for the whole crate:
//!
//! * a transmit waveform `s = vec(S)` stacks one length-`N_T` block per code
//!   sample, index `l·N_T + t`;
//! * a received snapshot stacks receive elements fastest, then fast time,
//!   then pulses, index `(m·L + l)·N_R + r`.
//!
//! The per-patch operators `V = d ⊗ J_pᵀ ⊗ a_R a_Tᵀ` are only ever applied
//! blockwise. Both the direct sums over patches and the fast assembly through
//! precomputed clutter spectral tables are provided; they agree to rounding.

mod spectral;
mod structure;

use std::io::Write;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitize, inner, CMatrix, CVector, PdFactor, C64, ZERO};
use crate::model::{
    enumerate_clutter_patches, steering_rx, steering_tx, temporal_steering, ClutterPatch, Dims,
    Scenario,
};

pub use spectral::ClutterSpectralTables;
pub use structure::{CommutationPermutation, ShiftMatrix};

/// Steering vectors of one angle/Doppler cell.
#[derive(Clone, Debug)]
pub struct SpaceTimeSteering {
    pub a_tx: CVector,
    pub a_rx: CVector,
    pub doppler: CVector,
}

/// The `r × (L·N_T)` factor `U` standing in for the relaxed waveform
/// covariance `UᴴU`. Every column has squared norm `p_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveformFactor {
    data: CMatrix,
}

impl WaveformFactor {
    const NORM_TOLERANCE: f64 = 1e-10;

    /// Wrap a matrix, checking the column-norm constraint.
    pub fn new(data: CMatrix, symbol_power: f64) -> Result<Self> {
        let f = Self { data };
        let dev = f.max_column_deviation(symbol_power);
        if !(dev <= Self::NORM_TOLERANCE) {
            return Err(Error::InvalidConfig(format!(
                "waveform factor columns violate the power constraint (relative deviation {dev:e})"
            )));
        }
        Ok(f)
    }

    pub(crate) fn from_matrix_unchecked(data: CMatrix) -> Self {
        Self { data }
    }

    /// I.i.d. complex Gaussian entries, columns rescaled to norm `√p_s`.
    pub fn random<R: Rng + ?Sized>(
        rank: usize,
        len: usize,
        symbol_power: f64,
        rng: &mut R,
    ) -> Self {
        let mut data = CMatrix::from_fn(rank, len, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        });
        let target = symbol_power.sqrt();
        for mut col in data.column_iter_mut() {
            let n = col.norm();
            col *= C64::new(target / n, 0.0);
        }
        Self { data }
    }

    /// Rank-one factor with `UᴴU = s sᴴ`, i.e. the single row is `sᴴ`.
    pub fn from_waveform(s: &[C64]) -> Self {
        Self {
            data: CMatrix::from_fn(1, s.len(), |_, l| s[l].conj()),
        }
    }

    pub fn rank(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    /// Column `i` of `Uᴴ` (the conjugated `i`-th row), a length-`L·N_T`
    /// vector in waveform layout.
    pub fn row_conj(&self, i: usize) -> CVector {
        CVector::from_fn(self.len(), |l, _| self.data[(i, l)].conj())
    }

    /// `max_l |‖u_l‖² − p_s| / p_s`.
    pub fn max_column_deviation(&self, symbol_power: f64) -> f64 {
        self.data
            .column_iter()
            .map(|c| (c.norm_squared() - symbol_power).abs() / symbol_power)
            .fold(0.0, f64::max)
    }

    /// `tr(U K Uᴴ)`, real for Hermitian `K`.
    pub fn quadratic_trace(&self, k: &CMatrix) -> f64 {
        let uk = &self.data * k;
        uk.iter()
            .zip(self.data.iter())
            .map(|(a, u)| (a * u.conj()).re)
            .sum()
    }
}

/// A receive filter of length `L·M·N_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterVector(CVector);

impl FilterVector {
    pub fn new(w: CVector) -> Result<Self> {
        if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidConfig("filter has non-finite entries".into()));
        }
        if w.iter().all(|z| *z == ZERO) {
            return Err(Error::ZeroFilter);
        }
        Ok(Self(w))
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Which assembly route to use for `R_u(U)` and `R_u(w)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FastCovariance {
    /// Fast unless the clutter is too sparse to amortize the tables.
    #[default]
    Auto,
    On,
    Off,
}

impl std::str::FromStr for FastCovariance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "on" => Ok(Self::On),
            "off" => Ok(Self::Off),
            other => Err(Error::InvalidConfig(format!(
                "fast covariance mode must be auto, on or off (got {other:?})"
            ))),
        }
    }
}

/// A scenario with all steering quantities precomputed; the entry point for
/// every covariance operation.
pub struct CovarianceModel {
    scenario: Scenario,
    dims: Dims,
    target: SpaceTimeSteering,
    /// Per clutter azimuth index, shared by every ring.
    azimuths: Vec<SpaceTimeSteering>,
    patches: Vec<ClutterPatch>,
    /// `Σ_j σ²_J a_R a_Rᴴ`, the spatial jammer covariance.
    jammer_spatial: CMatrix,
    fast: FastCovariance,
    tables: OnceLock<ClutterSpectralTables>,
    jammer_noise_factor: OnceLock<PdFactor>,
}

impl CovarianceModel {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let dims = scenario.dims();
        let lambda = scenario.pulses.wavelength_m;
        let geometry = &scenario.geometry;
        let steering = |theta: f64, omega: f64| SpaceTimeSteering {
            a_tx: steering_tx(geometry, lambda, theta),
            a_rx: steering_rx(geometry, lambda, theta),
            doppler: temporal_steering(dims.pulses, omega),
        };
        let target = steering(scenario.target.doa_rad, scenario.target.omega());
        let patches = enumerate_clutter_patches(&scenario);
        let azimuths = patches[..scenario.clutter.patches_per_ring]
            .iter()
            .map(|p| steering(p.azimuth_rad, p.doppler_rad))
            .collect();
        let mut jammer_spatial = CMatrix::zeros(dims.n_rx, dims.n_rx);
        for j in &scenario.jammers.jammers {
            let a = steering_rx(geometry, lambda, j.doa_rad);
            jammer_spatial += (&a * a.adjoint()) * C64::new(j.power, 0.0);
        }
        Ok(Self {
            scenario,
            dims,
            target,
            azimuths,
            patches,
            jammer_spatial,
            fast: FastCovariance::Auto,
            tables: OnceLock::new(),
            jammer_noise_factor: OnceLock::new(),
        })
    }

    pub fn with_fast_covariance(mut self, mode: FastCovariance) -> Self {
        self.fast = mode;
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn symbol_power(&self) -> f64 {
        self.scenario.symbol_power()
    }

    pub fn patches(&self) -> &[ClutterPatch] {
        &self.patches
    }

    pub fn target_steering(&self) -> &SpaceTimeSteering {
        &self.target
    }

    pub fn patch_steering(&self, patch: &ClutterPatch) -> &SpaceTimeSteering {
        &self.azimuths[patch.index]
    }

    pub fn jammer_spatial(&self) -> &CMatrix {
        &self.jammer_spatial
    }

    /// True when the fast route is selected for a factor of the given rank.
    ///
    /// The fast route costs about `(2P+1)·r·N_T/2` blockwise products against
    /// `(2P+1)·N_c` for the direct sums (each of order `(L·M·N_R)²`), so it
    /// wins as soon as the azimuth grid is denser than `r·N_T`.
    pub fn uses_fast_path(&self, rank: usize) -> bool {
        match self.fast {
            FastCovariance::On => true,
            FastCovariance::Off => false,
            FastCovariance::Auto => self.scenario.clutter.patches_per_ring > rank * self.dims.n_tx,
        }
    }

    fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                got,
            });
        }
        Ok(())
    }

    // -----------------------------------------------------------------------
    // Structured operators.

    /// `(d ⊗ J_pᵀ ⊗ a_R a_Tᵀ) s`, never densified.
    fn apply_space_time(
        &self,
        st: &SpaceTimeSteering,
        doppler: &CVector,
        ring: isize,
        s: &[C64],
    ) -> CVector {
        let Dims {
            n_tx,
            n_rx,
            code_length: l_len,
            pulses,
        } = self.dims;
        // z_l = a_Tᵀ s_{l−p}
        let shift = ShiftMatrix::new(l_len, ring).expect("positive code length");
        let z: Vec<C64> = (0..l_len)
            .map(|l| match shift.source_transposed(l) {
                Some(src) => st
                    .a_tx
                    .iter()
                    .zip(&s[src * n_tx..(src + 1) * n_tx])
                    .fold(ZERO, |acc, (a, x)| acc + a * x),
                None => ZERO,
            })
            .collect();
        let mut out = CVector::zeros(self.dims.rx_len());
        let buf = out.as_mut_slice();
        for m in 0..pulses {
            let dm = doppler[m];
            for (l, zl) in z.iter().enumerate() {
                let base = (m * l_len + l) * n_rx;
                let scale = dm * zl;
                for (r, a) in st.a_rx.iter().enumerate() {
                    buf[base + r] = scale * a;
                }
            }
        }
        out
    }

    /// `(d ⊗ J_pᵀ ⊗ a_R a_Tᵀ)ᴴ w`.
    fn apply_space_time_adjoint(
        &self,
        st: &SpaceTimeSteering,
        doppler: &CVector,
        ring: isize,
        w: &[C64],
    ) -> CVector {
        let Dims {
            n_tx,
            n_rx,
            code_length: l_len,
            pulses,
        } = self.dims;
        // y_l = Σ_m Σ_r conj(d_m a_R[r]) w[m, l, r]
        let mut y = vec![ZERO; l_len];
        for m in 0..pulses {
            let dm = doppler[m].conj();
            for (l, yl) in y.iter_mut().enumerate() {
                let base = (m * l_len + l) * n_rx;
                let acc = inner(st.a_rx.as_slice(), &w[base..base + n_rx]);
                *yl += dm * acc;
            }
        }
        // out[l, t] = conj(a_T[t]) · y_{l+p}
        let shift = ShiftMatrix::new(l_len, ring).expect("positive code length");
        let mut out = CVector::zeros(self.dims.tx_len());
        for l in 0..l_len {
            if let Some(src) = shift.source(l) {
                for t in 0..n_tx {
                    out[l * n_tx + t] = st.a_tx[t].conj() * y[src];
                }
            }
        }
        out
    }

    /// Target response `v_t(s) = (d(ω_t) ⊗ I_L ⊗ A(θ_t)) s`.
    pub fn apply_vt(&self, s: &[C64]) -> Result<CVector> {
        Self::check_len("waveform", self.dims.tx_len(), s.len())?;
        Ok(self.apply_space_time(&self.target, &self.target.doppler, 0, s))
    }

    /// Target response with the target Doppler replaced by `omega`.
    pub fn apply_vt_at_doppler(&self, s: &[C64], omega: f64) -> Result<CVector> {
        Self::check_len("waveform", self.dims.tx_len(), s.len())?;
        let d = temporal_steering(self.dims.pulses, omega);
        Ok(self.apply_space_time(&self.target, &d, 0, s))
    }

    /// Clutter patch response `(d ⊗ J_pᵀ ⊗ A) s`.
    pub fn apply_vc(&self, patch: &ClutterPatch, s: &[C64]) -> Result<CVector> {
        Self::check_len("waveform", self.dims.tx_len(), s.len())?;
        let st = self.patch_steering(patch);
        Ok(self.apply_space_time(st, &st.doppler, patch.ring, s))
    }

    pub fn apply_vt_adjoint(&self, w: &[C64]) -> Result<CVector> {
        Self::check_len("filter", self.dims.rx_len(), w.len())?;
        Ok(self.apply_space_time_adjoint(&self.target, &self.target.doppler, 0, w))
    }

    pub fn apply_vc_adjoint(&self, patch: &ClutterPatch, w: &[C64]) -> Result<CVector> {
        Self::check_len("filter", self.dims.rx_len(), w.len())?;
        let st = self.patch_steering(patch);
        Ok(self.apply_space_time_adjoint(st, &st.doppler, patch.ring, w))
    }

    // -----------------------------------------------------------------------
    // Jammer and noise.

    /// `R_Jn = I_{LM} ⊗ (Σ_j σ²_J a_R a_Rᴴ) + σ² I` in snapshot layout.
    pub fn jammer_noise_cov(&self) -> CMatrix {
        let n = self.dims.rx_len();
        let nr = self.dims.n_rx;
        let mut r = CMatrix::zeros(n, n);
        for block in 0..n / nr {
            let o = block * nr;
            for j in 0..nr {
                for i in 0..nr {
                    r[(o + i, o + j)] = self.jammer_spatial[(i, j)];
                }
            }
        }
        for i in 0..n {
            r[(i, i)] += C64::new(self.scenario.noise_power, 0.0);
        }
        r
    }

    /// Cholesky factor of `R_Jn`, built on first use.
    pub fn jammer_noise_factor(&self) -> Result<&PdFactor> {
        if let Some(f) = self.jammer_noise_factor.get() {
            return Ok(f);
        }
        let f = PdFactor::new(self.jammer_noise_cov(), "jammer-plus-noise covariance")?;
        Ok(self.jammer_noise_factor.get_or_init(|| f))
    }

    /// `wᴴ R_Jn w` without forming `R_Jn`.
    pub fn jammer_noise_quadratic(&self, w: &[C64]) -> f64 {
        let nr = self.dims.n_rx;
        let mut total = self.scenario.noise_power * w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !self.scenario.jammers.jammers.is_empty() {
            for block in w.chunks_exact(nr) {
                let v = CVector::from_column_slice(block);
                total += inner(v.as_slice(), (&self.jammer_spatial * &v).as_slice()).re;
            }
        }
        total
    }

    /// `β(w) = wᴴ R_Jn w / e_t`.
    pub fn beta(&self, w: &[C64]) -> f64 {
        self.jammer_noise_quadratic(w) / self.scenario.total_energy
    }

    // -----------------------------------------------------------------------
    // R_u as a function of the waveform.

    /// Direct clutter sum `Σ_p Σ_k σ² V (UᴴU) Vᴴ`.
    ///
    /// Each `V c_i` factors as `d ⊗ z ⊗ a_R` with `z_l = a_Tᵀ c_{i,l−p}`, so
    /// the fast-time outer products are summed per azimuth first and spread
    /// over pulses and receive elements once.
    fn clutter_direct(&self, factor: &WaveformFactor) -> CMatrix {
        let Dims {
            n_tx,
            n_rx,
            code_length: l_len,
            pulses,
        } = self.dims;
        let n = self.dims.rx_len();
        let rows: Vec<CVector> = (0..factor.rank()).map(|i| factor.row_conj(i)).collect();
        let mut r = CMatrix::zeros(n, n);
        let mut by_azimuth = vec![CMatrix::zeros(l_len, l_len); self.azimuths.len()];
        for patch in self.patches.iter().filter(|p| p.power > 0.0) {
            let st = &self.azimuths[patch.index];
            let shift = ShiftMatrix::new(l_len, patch.ring).expect("positive code length");
            let g = &mut by_azimuth[patch.index];
            for c in &rows {
                let z: Vec<C64> = (0..l_len)
                    .map(|l| match shift.source_transposed(l) {
                        Some(src) => st
                            .a_tx
                            .iter()
                            .zip(&c.as_slice()[src * n_tx..(src + 1) * n_tx])
                            .fold(ZERO, |acc, (a, x)| acc + a * x),
                        None => ZERO,
                    })
                    .collect();
                for j in 0..l_len {
                    let zj = z[j].conj() * patch.power;
                    for i in 0..l_len {
                        g[(i, j)] += z[i] * zj;
                    }
                }
            }
        }
        let buf = r.as_mut_slice();
        for (st, g) in self.azimuths.iter().zip(&by_azimuth) {
            if g.iter().all(|z| *z == ZERO) {
                continue;
            }
            for m2 in 0..pulses {
                for l2 in 0..l_len {
                    for r2 in 0..n_rx {
                        let col = (m2 * l_len + l2) * n_rx + r2;
                        let cf = (st.doppler[m2] * st.a_rx[r2]).conj();
                        let colbuf = &mut buf[col * n..(col + 1) * n];
                        for m1 in 0..pulses {
                            let dm = st.doppler[m1] * cf;
                            for l1 in 0..l_len {
                                let f = dm * g[(l1, l2)];
                                let base = (m1 * l_len + l1) * n_rx;
                                for (r1, a) in st.a_rx.iter().enumerate() {
                                    colbuf[base + r1] += f * a;
                                }
                            }
                        }
                    }
                }
            }
        }
        r
    }

    /// `R_u(s) = Σ_p Σ_k σ² v_c(s) v_c(s)ᴴ + R_Jn`.
    pub fn ru_of_s(&self, s: &[C64]) -> Result<CMatrix> {
        Self::check_len("waveform", self.dims.tx_len(), s.len())?;
        let factor = WaveformFactor::from_waveform(s);
        if self.uses_fast_path(1) {
            self.ru_of_u_fast(self.spectral_tables(), &factor)
        } else {
            self.ru_of_u_direct(&factor)
        }
    }

    /// `R_u(U)` by direct summation over clutter patches.
    pub fn ru_of_u_direct(&self, factor: &WaveformFactor) -> Result<CMatrix> {
        Self::check_len("waveform factor", self.dims.tx_len(), factor.len())?;
        let mut r = self.clutter_direct(factor);
        r += self.jammer_noise_cov();
        hermitize(&mut r);
        Ok(r)
    }

    /// `R_u(U)` on the configured route.
    pub fn ru_of_u(&self, factor: &WaveformFactor) -> Result<CMatrix> {
        if self.uses_fast_path(factor.rank()) {
            self.ru_of_u_fast(self.spectral_tables(), factor)
        } else {
            self.ru_of_u_direct(factor)
        }
    }

    // -----------------------------------------------------------------------
    // R_u as a function of the filter.

    /// `R_u(w) = Σ_p Σ_k σ² (Vᴴw)(Vᴴw)ᴴ + β(w) I` by direct summation.
    pub fn ru_of_w_direct(&self, w: &FilterVector) -> Result<CMatrix> {
        let w = w.as_vector().as_slice();
        Self::check_len("filter", self.dims.rx_len(), w.len())?;
        let n = self.dims.tx_len();
        let mut r = CMatrix::zeros(n, n);
        for patch in self.patches.iter().filter(|p| p.power > 0.0) {
            let st = &self.azimuths[patch.index];
            let g = self.apply_space_time_adjoint(st, &st.doppler, patch.ring, w);
            for j in 0..n {
                let gj = g[j].conj() * patch.power;
                for i in 0..n {
                    r[(i, j)] += g[i] * gj;
                }
            }
        }
        let beta = self.beta(w);
        for i in 0..n {
            r[(i, i)] += C64::new(beta, 0.0);
        }
        hermitize(&mut r);
        Ok(r)
    }

    pub fn ru_of_w(&self, w: &FilterVector) -> Result<CMatrix> {
        if self.uses_fast_path(1) {
            self.ru_of_w_fast(self.spectral_tables(), w)
        } else {
            self.ru_of_w_direct(w)
        }
    }

    // -----------------------------------------------------------------------
    // Target terms.

    /// `[V_t c_1, …, V_t c_r]`, so that `Q_t(U) = G Gᴴ`.
    pub fn qt_factor_of_u(&self, factor: &WaveformFactor) -> Result<CMatrix> {
        Self::check_len("waveform factor", self.dims.tx_len(), factor.len())?;
        let mut g = CMatrix::zeros(self.dims.rx_len(), factor.rank());
        for i in 0..factor.rank() {
            let v = self.apply_vt(factor.row_conj(i).as_slice())?;
            g.set_column(i, &v);
        }
        Ok(g)
    }

    /// `Q_t(U) = V_t UᴴU V_tᴴ`.
    pub fn qt_of_u(&self, factor: &WaveformFactor) -> Result<CMatrix> {
        let g = self.qt_factor_of_u(factor)?;
        let mut q = &g * g.adjoint();
        hermitize(&mut q);
        Ok(q)
    }

    /// `q = V_tᴴ w`, with `Q_t(w) = q qᴴ`.
    pub fn qt_factor_of_w(&self, w: &FilterVector) -> Result<CVector> {
        self.apply_vt_adjoint(w.as_vector().as_slice())
    }
}

/// Write a matrix as row-major `(re, im)` pairs of little-endian `f64`.
pub fn write_matrix_dump<W: Write>(mut out: W, m: &CMatrix) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}
