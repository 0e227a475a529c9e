//! Index-level shift and commutation operators.

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

/// The fast-time shift `J_p` of order `L`, with `J_p(i, j) = 1` iff
/// `i − j + p = 0`. Stored as its offset and applied by index arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShiftMatrix {
    order: usize,
    offset: isize,
}

impl ShiftMatrix {
    pub fn new(order: usize, offset: isize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidConfig("shift order must be positive".into()));
        }
        Ok(Self { order, offset })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn offset(&self) -> isize {
        self.offset
    }

    /// The shift in the opposite direction, `J_{−p} = J_pᵀ`.
    pub fn transpose(&self) -> Self {
        Self {
            order: self.order,
            offset: -self.offset,
        }
    }

    /// Input index read by output `i` of `J_p x`, i.e. `i + p` when in range.
    #[inline]
    pub fn source(&self, i: usize) -> Option<usize> {
        let j = i as isize + self.offset;
        (0..self.order as isize).contains(&j).then_some(j as usize)
    }

    /// Input index read by output `j` of `J_pᵀ x`, i.e. `j − p` when in range.
    #[inline]
    pub fn source_transposed(&self, j: usize) -> Option<usize> {
        self.transpose().source(j)
    }

    /// `J_p x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.order);
        (0..self.order)
            .map(|i| self.source(i).map_or(ZERO, |j| x[j]))
            .collect()
    }

    /// `J_pᵀ x`.
    pub fn apply_transpose(&self, x: &[C64]) -> Vec<C64> {
        self.transpose().apply(x)
    }
}

/// The commutation matrix `K` with `K·vec(M) = vec(Mᵀ)` for `M` of size
/// `rows × cols`, held as a gather permutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutationPermutation {
    rows: usize,
    cols: usize,
    /// `out[i] = in[gather[i]]`.
    gather: Vec<usize>,
}

impl CommutationPermutation {
    pub fn new(rows: usize, cols: usize) -> Self {
        // vec(Mᵀ)[r·cols + c] = M[r, c] = vec(M)[c·rows + r]
        let mut gather = vec![0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                gather[r * cols + c] = c * rows + r;
            }
        }
        Self { rows, cols, gather }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.gather.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gather.is_empty()
    }

    pub fn gather_indices(&self) -> &[usize] {
        &self.gather
    }

    /// `K v`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.gather.len());
        self.gather.iter().map(|&i| v[i]).collect()
    }

    /// The commutation matrix for the transposed shape, which is `K⁻¹ = Kᵀ`.
    pub fn inverse(&self) -> Self {
        Self::new(self.cols, self.rows)
    }
}
