//! Streaming Cholesky factorization of block-banded Hermitian matrices.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laurent::CMatrix;

/// Computes `A = L L^*` one block row at a time, keeping only the last `bandwidth` rows.
///
/// Row `i` of the factor is stored as `[L_{i,i}, L_{i,i-1}, …, L_{i,i-k}]`.
pub(crate) struct BandedCholesky {
    block: usize,
    bandwidth: usize,
    rows: VecDeque<Vec<CMatrix>>,
    next: usize,
}

impl BandedCholesky {
    pub fn new(block: usize, bandwidth: usize) -> Self {
        Self {
            block,
            bandwidth,
            rows: VecDeque::with_capacity(bandwidth + 1),
            next: 0,
        }
    }

    /// Index of the row that the next call to [`push`](Self::push) will produce.
    pub fn next_index(&self) -> usize {
        self.next
    }

    fn stored(&self, row: usize) -> &Vec<CMatrix> {
        let back = self.next - 1 - row;
        &self.rows[self.rows.len() - 1 - back]
    }

    /// Factors the next block row, given `a(k) = A_{i, i-k}` for `k = 0..=min(i, bandwidth)`.
    pub fn push(&mut self, a: impl Fn(usize) -> CMatrix) -> Result<&[CMatrix]> {
        let i = self.next;
        let width = i.min(self.bandwidth);
        let mut row: Vec<CMatrix> = vec![CMatrix::zeros(self.block, self.block); width + 1];
        for k in (1..=width).rev() {
            let j = i - k;
            let mut acc = a(k);
            let lo = i.saturating_sub(self.bandwidth);
            for l in lo..j {
                if j - l > self.bandwidth {
                    continue;
                }
                acc -= &row[i - l] * self.stored(j)[j - l].adjoint();
            }
            let diag_j = &self.stored(j)[0];
            // acc · (L_jj^*)^{-1}  ==  (L_jj^{-1} acc^*)^*
            let solved = diag_j
                .solve_lower_triangular(&acc.adjoint())
                .ok_or_else(|| Error::NotInvertible("singular diagonal block".into()))?;
            row[k] = solved.adjoint();
        }
        let mut diag = a(0);
        for k in 1..=width {
            diag -= &row[k] * row[k].adjoint();
        }
        let diag = hermitize(&diag);
        let chol = diag
            .cholesky()
            .ok_or_else(|| Error::NotInvertible(format!("block row {i} is not positive definite")))?;
        let l = chol.l();
        // nalgebra takes complex square roots, so an indefinite block shows up as a non-real diagonal.
        if (0..self.block).any(|d| !(l[(d, d)].re > 0.0) || l[(d, d)].im.abs() > 1e-12 * l[(d, d)].re) {
            return Err(Error::NotInvertible(format!("block row {i} is not positive definite")));
        }
        row[0] = l;
        if self.rows.len() == self.bandwidth + 1 {
            self.rows.pop_front();
        }
        self.rows.push_back(row);
        self.next += 1;
        Ok(self.rows.back().unwrap())
    }
}

pub(crate) fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}
