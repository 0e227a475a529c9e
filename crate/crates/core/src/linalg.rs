//! Small dense complex linear-algebra helpers shared by the other modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Unit-modulus phasor `exp(j·phase)`.
#[inline]
pub fn cis(phase: f64) -> C64 {
    let (s, c) = phase.sin_cos();
    C64::new(c, s)
}

/// Replace `m` by `(m + mᴴ)/2`.
pub fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for j in 0..n {
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
        for i in (j + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `‖a − b‖_F / ‖b‖_F` (absolute when `b` is zero).
pub fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `‖a − b‖ / ‖b‖` for vectors.
pub fn rel_error(a: &CVector, b: &CVector) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `xᴴy`.
#[inline]
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Cholesky factor of a Hermitian positive definite matrix.
pub struct PdFactor {
    chol: Cholesky<C64, Dyn>,
}

impl PdFactor {
    pub fn new(m: CMatrix, what: &'static str) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotPositiveDefinite(what));
        }
        let chol = Cholesky::new(m).ok_or(Error::NotPositiveDefinite(what))?;
        // A negative pivot comes back as an imaginary square root rather than
        // a failure for complex scalars.
        let l = chol.l_dirty();
        let healthy = (0..l.nrows()).all(|i| {
            let d = l[(i, i)];
            d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-6 * d.re
        });
        if !healthy {
            return Err(Error::NotPositiveDefinite(what));
        }
        Ok(Self { chol })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// `R⁻¹ b`.
    pub fn solve(&self, b: &CVector) -> CVector {
        self.chol.solve(b)
    }

    /// `L⁻¹ B` where `R = L Lᴴ`.
    pub fn whiten(&self, b: &CMatrix) -> CMatrix {
        self.chol
            .l_dirty()
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a nonzero diagonal")
    }

    /// `L⁻ᴴ y`.
    pub fn unwhiten(&self, y: &CVector) -> CVector {
        self.chol
            .l_dirty()
            .ad_solve_lower_triangular(y)
            .expect("Cholesky factor has a nonzero diagonal")
    }

    /// `bᴴ R⁻¹ b`, real and non-negative.
    pub fn quad_inverse(&self, b: &CVector) -> f64 {
        let x = self.solve(b);
        inner(b.as_slice(), x.as_slice()).re
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let eig = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty matrix")
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    pub fn top_vector(&self) -> CVector {
        self.vectors.column(self.values.len() - 1).into_owned()
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitize_averages_with_adjoint() {
        let mut m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.3),
                C64::new(2.0, 1.0),
                C64::new(4.0, 1.0),
                C64::new(3.0, 0.0),
            ],
        );
        hermitize(&mut m);
        assert_eq!(m[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(m[(0, 1)], C64::new(3.0, 0.0));
        assert_eq!(m[(1, 0)], C64::new(3.0, 0.0));
        assert_eq!(hermitian_defect(&m), 0.0);
    }

    #[test]
    fn pd_factor_rejects_indefinite() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
        ]));
        assert!(matches!(
            PdFactor::new(m, "test"),
            Err(Error::NotPositiveDefinite("test"))
        ));
    }

    #[test]
    fn whiten_unwhiten_round_trip_solves() {
        let a = CMatrix::from_fn(4, 4, |i, j| {
            C64::new((i + 2 * j) as f64, (i * j) as f64 * 0.1)
        });
        let mut r = &a * a.adjoint();
        for i in 0..4 {
            r[(i, i)] += C64::new(1.0, 0.0);
        }
        let f = PdFactor::new(r.clone(), "r").unwrap();
        let b = CVector::from_fn(4, |i, _| C64::new(1.0, i as f64));
        let x = f.unwhiten(
            &f.whiten(&CMatrix::from_column_slice(4, 1, b.as_slice()))
                .column(0)
                .into_owned(),
        );
        assert!(rel_error(&(&r * &x), &b) < 1e-12);
        assert!(rel_error(&f.solve(&b), &x) < 1e-12);
    }

    #[test]
    fn eigen_sorted_ascending() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(2.0, 0.0),
            C64::new(-3.0, 0.0),
            C64::new(1.0, 0.0),
        ]));
        let e = HermitianEigen::new(&m);
        assert_eq!(e.values, vec![-3.0, 1.0, 2.0]);
        assert_eq!(e.norm(), 3.0);
        assert!((e.top_vector()[0].norm() - 1.0).abs() < 1e-15);
        assert_eq!(min_eigenvalue(&m), -3.0);
    }
}
