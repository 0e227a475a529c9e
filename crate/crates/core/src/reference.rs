//! Dense reference constructions for small instances.
//!
//! Every structured operator in [`crate::covariance`] has a dense counterpart
//! here, built literally from Kronecker products. These are only meant for
//! checking the production paths at toy sizes.

use crate::covariance::{CommutationPermutation, CovarianceModel};
use crate::linalg::{hermitize, CMatrix, CVector, C64};
use crate::model::ClutterPatch;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `J_p` with `J_p(i, j) = 1` iff `i − j + p = 0`.
pub fn shift(order: usize, offset: isize) -> CMatrix {
    CMatrix::from_fn(order, order, |i, j| {
        if i as isize - j as isize + offset == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Dense commutation matrix for `rows × cols` matrices.
pub fn commutation(rows: usize, cols: usize) -> CMatrix {
    let k = CommutationPermutation::new(rows, cols);
    let n = rows * cols;
    let mut m = CMatrix::zeros(n, n);
    for (i, &j) in k.gather_indices().iter().enumerate() {
        m[(i, j)] = C64::new(1.0, 0.0);
    }
    m
}

fn column(v: &CVector) -> CMatrix {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// `d ⊗ J_pᵀ ⊗ a_R a_Tᵀ`.
fn space_time(
    d: &CVector,
    a_tx: &CVector,
    a_rx: &CVector,
    code_length: usize,
    ring: isize,
) -> CMatrix {
    let a = a_rx * a_tx.transpose();
    kron(&kron(&column(d), &shift(code_length, ring).transpose()), &a)
}

pub fn vt(model: &CovarianceModel) -> CMatrix {
    let st = model.target_steering();
    space_time(&st.doppler, &st.a_tx, &st.a_rx, model.dims().code_length, 0)
}

pub fn vc(model: &CovarianceModel, patch: &ClutterPatch) -> CMatrix {
    let st = model.patch_steering(patch);
    space_time(
        &st.doppler,
        &st.a_tx,
        &st.a_rx,
        model.dims().code_length,
        patch.ring,
    )
}

/// `(Σ σ²_J a_R a_Rᴴ) ⊗ I_{LM} + σ² I` in receive-major order, permuted to
/// the snapshot layout by `K R Kᵀ` with `K` the commutation matrix of
/// `LM × N_R` matrices.
pub fn jammer_noise(model: &CovarianceModel) -> CMatrix {
    let d = model.dims();
    let lm = d.code_length * d.pulses;
    let receive_major = kron(model.jammer_spatial(), &identity(lm))
        + identity(d.rx_len()) * C64::new(model.scenario().noise_power, 0.0);
    let k = commutation(lm, d.n_rx);
    &k * receive_major * k.transpose()
}

pub fn ru_of_u(model: &CovarianceModel, u: &CMatrix) -> CMatrix {
    let rs = u.adjoint() * u;
    let mut r = jammer_noise(model);
    for patch in model.patches() {
        let v = vc(model, patch);
        r += (&v * &rs * v.adjoint()) * C64::new(patch.power, 0.0);
    }
    hermitize(&mut r);
    r
}

pub fn ru_of_w(model: &CovarianceModel, w: &CVector) -> CMatrix {
    let d = model.dims();
    let rjn = jammer_noise(model);
    let beta = (w.adjoint() * &rjn * w)[(0, 0)].re / model.scenario().total_energy;
    let ww = w * w.adjoint();
    let mut r = identity(d.tx_len()) * C64::new(beta, 0.0);
    for patch in model.patches() {
        let v = vc(model, patch);
        r += (v.adjoint() * &ww * &v) * C64::new(patch.power, 0.0);
    }
    hermitize(&mut r);
    r
}

pub fn qt_of_u(model: &CovarianceModel, u: &CMatrix) -> CMatrix {
    let v = vt(model);
    &v * u.adjoint() * u * v.adjoint()
}

/// Right-hand side of the waveform-side identity:
/// `(I_M ⊗ X_pᵀ ⊗ I_{N_R})(d ⊗ a_T ⊗ a_R)` with `vec(X) = x`, `X_p = X J_p`.
pub fn waveform_identity_rhs(
    model: &CovarianceModel,
    patch: &ClutterPatch,
    x: &CVector,
) -> CVector {
    let d = model.dims();
    let st = model.patch_steering(patch);
    let xm = CMatrix::from_column_slice(d.n_tx, d.code_length, x.as_slice());
    let xp = xm * shift(d.code_length, patch.ring);
    let op = kron(
        &kron(&identity(d.pulses), &xp.transpose()),
        &identity(d.n_rx),
    );
    let v = kron(
        &kron(&column(&st.doppler), &column(&st.a_tx)),
        &column(&st.a_rx),
    );
    (op * v).column(0).into_owned()
}

/// Right-hand side of the filter-side identity:
/// `(J_p Ŵ ⊗ I_{N_T})(d* ⊗ a_R* ⊗ a_T*)` with `vec(Ŵ) = (I_M ⊗ K) w`.
pub fn filter_identity_rhs(model: &CovarianceModel, patch: &ClutterPatch, w: &CVector) -> CVector {
    let d = model.dims();
    let st = model.patch_steering(patch);
    let perm = kron(&identity(d.pulses), &commutation(d.n_rx, d.code_length));
    let w_hat_vec = perm * w;
    let w_hat = CMatrix::from_column_slice(d.code_length, d.pulses * d.n_rx, w_hat_vec.as_slice());
    let op = kron(
        &(shift(d.code_length, patch.ring) * w_hat),
        &identity(d.n_tx),
    );
    let v = kron(
        &kron(&column(&st.doppler), &column(&st.a_rx)),
        &column(&st.a_tx),
    )
    .map(|z| z.conj());
    (op * v).column(0).into_owned()
}
