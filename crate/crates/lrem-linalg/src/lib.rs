//! Singular value decomposition of complex nalgebra matrices.
//!
//! nalgebra's bidiagonal SVD loses accuracy on rank-deficient input (the factors stop
//! reconstructing the matrix), which is exactly the case null-space computations care
//! about, so decompositions go through faer.

use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// The iterative SVD did not converge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoConvergence;

impl std::fmt::Display for NoConvergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("singular value decomposition did not converge")
    }
}

impl std::error::Error for NoConvergence {}

pub type Result<T> = std::result::Result<T, NoConvergence>;

/// `A = U diag(s) V^*` with `U`, `V` square unitary and `s` nonincreasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

fn to_faer(a: &CMatrix) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Ok(Svd {
            u: CMatrix::identity(r, r),
            s: Vec::new(),
            v: CMatrix::identity(c, c),
        });
    }
    let dec = to_faer(a)
        .svd()
        .map_err(|_| NoConvergence)?;
    let s = dec.S().column_vector().iter().map(|x| x.re).collect();
    Ok(Svd {
        u: from_faer(dec.U()),
        s,
        v: from_faer(dec.V()),
    })
}

/// Nonincreasing singular values.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    to_faer(a)
        .singular_values()
        .map_err(|_| NoConvergence)
}

impl Svd {
    pub fn max(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.s.last().copied().unwrap_or(0.0)
    }

    /// Pseudo-inverse applied to `b`, dropping singular values at or below `cut`.
    pub fn solve(&self, b: &CMatrix, cut: f64) -> CMatrix {
        let uh_b = self.u.adjoint() * b;
        let mut scaled = CMatrix::zeros(self.v.nrows(), b.ncols());
        for (k, &sk) in self.s.iter().enumerate() {
            if sk > cut {
                scaled.set_row(k, &(uh_b.row(k) / Complex64::new(sk, 0.0)));
            }
        }
        &self.v * scaled
    }

    /// Right singular vectors whose singular value is at most `cut`, as columns, including
    /// the directions beyond `min(rows, cols)`.
    pub fn null_space(&self, cut: f64) -> CMatrix {
        let n = self.v.ncols();
        let first = self.s.iter().position(|&sk| sk <= cut).unwrap_or(self.s.len());
        self.v.columns(first, n - first).into_owned()
    }
}
