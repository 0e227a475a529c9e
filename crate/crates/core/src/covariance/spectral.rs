//! Precomputed clutter spectral tables and the fast `R_u` assembly built on
//! them.
//!
//! With `c_i` the `i`-th column of `Uᴴ` reshaped to `C_i` (`N_T × L`) and
//! `C_{p,i} = C_i J_p`, every clutter response factors as
//! `V c_i = (I_M ⊗ C_{p,i}ᵀ ⊗ I_{N_R}) ṽ`, so the azimuth sum collapses into
//! one table per ring. The filter side works the same way with the reshaped
//! filter `Ŵ` (`L × M·N_R`).

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::model::Dims;

use super::{CommutationPermutation, CovarianceModel, FilterVector, WaveformFactor};

/// Everything the tables depend on, compared before use.
#[derive(Clone, Debug, PartialEq)]
struct TableKey {
    dims: Dims,
    azimuths: Vec<f64>,
    powers: Vec<f64>,
    dopplers: Vec<f64>,
    spacings: (f64, f64),
    rings: usize,
}

/// `R̃_p = Σ_k σ² ṽ ṽᴴ` with `ṽ = d ⊗ a_T ⊗ a_R`, and
/// `R̆_p = Σ_k σ² v̆* v̆ᵀ` with `v̆ = d ⊗ a_R ⊗ a_T`, both of order
/// `M·N_T·N_R`.
///
/// Every ring shares the azimuth grid and power profile, so one pair of
/// matrices serves all rings.
#[derive(Clone, Debug)]
pub struct ClutterSpectralTables {
    key: TableKey,
    tilde: CMatrix,
    breve: CMatrix,
}

impl ClutterSpectralTables {
    pub fn order(&self) -> usize {
        self.tilde.nrows()
    }

    pub fn rings(&self) -> impl Iterator<Item = isize> {
        let p = (self.key.rings / 2) as isize;
        -p..=p
    }

    pub fn tilde(&self, ring: isize) -> &CMatrix {
        debug_assert!(ring.unsigned_abs() <= self.key.rings / 2);
        &self.tilde
    }

    pub fn breve(&self, ring: isize) -> &CMatrix {
        debug_assert!(ring.unsigned_abs() <= self.key.rings / 2);
        &self.breve
    }
}

impl CovarianceModel {
    fn table_key(&self) -> TableKey {
        let s = self.scenario();
        TableKey {
            dims: self.dims(),
            azimuths: s.clutter.azimuth_grid_rad.clone(),
            powers: s.clutter.patch_power.clone(),
            dopplers: self.patches()[..s.clutter.patches_per_ring]
                .iter()
                .map(|p| p.doppler_rad)
                .collect(),
            spacings: (s.geometry.d_tx, s.geometry.d_rx),
            rings: s.clutter.ring_count(),
        }
    }

    /// Build both tables for this scenario.
    pub fn precompute_spectral_tables(&self) -> ClutterSpectralTables {
        let Dims {
            n_tx, n_rx, pulses, ..
        } = self.dims();
        let order = self.dims().spectral_len();
        let powers = &self.scenario().clutter.patch_power;
        let live: Vec<usize> = (0..powers.len()).filter(|&k| powers[k] > 0.0).collect();
        // Columns √σ²·ṽ_k and √σ²·v̆*_k, so each table is one Gram product.
        let mut vt = CMatrix::zeros(order, live.len());
        let mut vb = CMatrix::zeros(order, live.len());
        for (col, &k) in live.iter().enumerate() {
            let st = &self.azimuths[k];
            let amp = powers[k].sqrt();
            for m in 0..pulses {
                for t in 0..n_tx {
                    for r in 0..n_rx {
                        let v = st.doppler[m] * st.a_tx[t] * st.a_rx[r] * amp;
                        vt[(m * n_tx * n_rx + t * n_rx + r, col)] = v;
                        vb[((m * n_rx + r) * n_tx + t, col)] = v.conj();
                    }
                }
            }
        }
        let mut tilde = &vt * vt.adjoint();
        let mut breve = &vb * vb.adjoint();
        crate::linalg::hermitize(&mut tilde);
        crate::linalg::hermitize(&mut breve);
        ClutterSpectralTables {
            key: self.table_key(),
            tilde,
            breve,
        }
    }

    /// Tables for this model, built on first use.
    pub fn spectral_tables(&self) -> &ClutterSpectralTables {
        self.tables
            .get_or_init(|| self.precompute_spectral_tables())
    }

    fn check_tables(&self, tables: &ClutterSpectralTables) -> Result<()> {
        if tables.key != self.table_key() {
            return Err(Error::TableMismatch);
        }
        Ok(())
    }

    /// `R_u(U) = Σ_p Σ_i C̃_{p,i} R̃_p C̃_{p,i}ᴴ + R_Jn`.
    pub fn ru_of_u_fast(
        &self,
        tables: &ClutterSpectralTables,
        factor: &WaveformFactor,
    ) -> Result<CMatrix> {
        Self::check_len("waveform factor", self.dims().tx_len(), factor.len())?;
        self.check_tables(tables)?;
        let Dims {
            n_tx,
            n_rx,
            code_length: l_len,
            pulses,
        } = self.dims();
        let n = self.dims().rx_len();
        let order = tables.order();
        let mut r = self.jammer_noise_cov();
        if !self.scenario().clutter.is_silent() {
            let mut x = CMatrix::zeros(n, order);
            let mut cpl = vec![ZERO; n_tx * l_len];
            for ring in tables.rings() {
                let rt = tables.tilde(ring);
                for i in 0..factor.rank() {
                    // Cpl[t, j] = c_i[(j − p)·N_T + t], stored t-fastest.
                    let mut any = false;
                    for j in 0..l_len {
                        let src = j as isize - ring;
                        for t in 0..n_tx {
                            cpl[j * n_tx + t] = if (0..l_len as isize).contains(&src) {
                                any = true;
                                factor.matrix()[(i, src as usize * n_tx + t)].conj()
                            } else {
                                ZERO
                            };
                        }
                    }
                    if !any {
                        continue;
                    }
                    // X = C̃ R̃
                    for col in 0..order {
                        let src = rt.column(col);
                        let src = src.as_slice();
                        let mut dst = x.column_mut(col);
                        let dst = dst.as_mut_slice();
                        for m in 0..pulses {
                            for j in 0..l_len {
                                let base = (m * l_len + j) * n_rx;
                                let coeffs = &cpl[j * n_tx..(j + 1) * n_tx];
                                for rx in 0..n_rx {
                                    let mut acc = ZERO;
                                    for (t, c) in coeffs.iter().enumerate() {
                                        acc += c * src[m * n_tx * n_rx + t * n_rx + rx];
                                    }
                                    dst[base + rx] = acc;
                                }
                            }
                        }
                    }
                    // R += X C̃ᴴ, upper triangle only.
                    let buf = r.as_mut_slice();
                    for m in 0..pulses {
                        for j in 0..l_len {
                            let coeffs = &cpl[j * n_tx..(j + 1) * n_tx];
                            for rx in 0..n_rx {
                                let c = (m * l_len + j) * n_rx + rx;
                                let dst = &mut buf[c * n..c * n + c + 1];
                                for (t, cf) in coeffs.iter().enumerate() {
                                    if *cf == ZERO {
                                        continue;
                                    }
                                    let f = cf.conj();
                                    let xc = x.column(m * n_tx * n_rx + t * n_rx + rx);
                                    for (d, v) in dst.iter_mut().zip(&xc.as_slice()[..=c]) {
                                        *d += f * v;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        mirror_upper(&mut r);
        Ok(r)
    }

    /// `R_u(w) = Σ_p W̃_p R̆_p W̃_pᴴ + β(w) I`.
    pub fn ru_of_w_fast(
        &self,
        tables: &ClutterSpectralTables,
        w: &FilterVector,
    ) -> Result<CMatrix> {
        let w = w.as_vector().as_slice();
        Self::check_len("filter", self.dims().rx_len(), w.len())?;
        self.check_tables(tables)?;
        let Dims {
            n_tx,
            n_rx,
            code_length: l_len,
            pulses,
        } = self.dims();
        let n = self.dims().tx_len();
        let cols = pulses * n_rx;
        // vec(Ŵ) = (I_M ⊗ K) w, Ŵ stored column-major as L × M·N_R.
        let k = CommutationPermutation::new(n_rx, l_len);
        let mut w_hat = Vec::with_capacity(w.len());
        for block in w.chunks_exact(l_len * n_rx) {
            w_hat.extend(k.apply(block));
        }
        let w_at = |l: usize, c: usize| w_hat[c * l_len + l];

        let mut r = CMatrix::zeros(n, n);
        if !self.scenario().clutter.is_silent() {
            let order = tables.order();
            let mut y = CMatrix::zeros(n, order);
            for ring in tables.rings() {
                let rb = tables.breve(ring);
                let rows: Vec<(usize, usize)> = (0..l_len)
                    .filter_map(|l| {
                        let src = l as isize + ring;
                        (0..l_len as isize)
                            .contains(&src)
                            .then_some((l, src as usize))
                    })
                    .collect();
                if rows.is_empty() {
                    continue;
                }
                // Y[(l,t), col] = Σ_c Ŵ[l+p, c] R̆[c·N_T + t, col]
                y.fill(ZERO);
                for col in 0..order {
                    let src = rb.column(col);
                    let src = src.as_slice();
                    for &(l, sl) in &rows {
                        for t in 0..n_tx {
                            let mut acc = ZERO;
                            for c in 0..cols {
                                acc += w_at(sl, c) * src[c * n_tx + t];
                            }
                            y[(l * n_tx + t, col)] = acc;
                        }
                    }
                }
                // R[(l,t), (l',t')] += Σ_c Y[(l,t), c·N_T + t'] conj(Ŵ[l'+p, c])
                for &(l2, sl2) in &rows {
                    for t2 in 0..n_tx {
                        let col = l2 * n_tx + t2;
                        for c in 0..cols {
                            let f = w_at(sl2, c).conj();
                            if f == ZERO {
                                continue;
                            }
                            let yc = y.column(c * n_tx + t2);
                            let mut dst = r.column_mut(col);
                            for (d, v) in dst.as_mut_slice()[..=col]
                                .iter_mut()
                                .zip(&yc.as_slice()[..=col])
                            {
                                *d += f * v;
                            }
                        }
                    }
                }
            }
        }
        let beta = self.beta(w);
        for i in 0..n {
            r[(i, i)] += C64::new(beta, 0.0);
        }
        mirror_upper(&mut r);
        Ok(r)
    }
}

/// Fill the strict lower triangle from the upper one and drop imaginary
/// parts on the diagonal.
fn mirror_upper(m: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
        for i in (j + 1)..n {
            m[(i, j)] = m[(j, i)].conj();
        }
    }
}
