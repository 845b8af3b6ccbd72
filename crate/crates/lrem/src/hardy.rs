//! The causal space `H₀` of series in nonpositive powers of `z`, under the white-noise measure.
//!
//! Besides truncated elements with tail bounds this module provides the truncated shift
//! `V` and its right inverse, the symbol operator `φ ↦ P₋(Mφ)`, dense finite sections of
//! that operator (used as a brute-force oracle), and the inverse of a positive Toeplitz
//! operator through a canonical factorization of its symbol.

use num_complex::Complex64;
use lrem_linalg as linalg;

use crate::error::{Error, Result};
use crate::laurent::{project_minus_quotient, CMatrix, LaurentMatrix, Location, RationalMatrix, TransferFunction};
use crate::whf::spectral_factor;

/// Absolute tail tolerance used when expanding factors analytic inside the disk.
const PLUS_TAIL_TOL: f64 = 1e-15;

/// A truncated element of `H₀`: a series with no positive powers and a bound on the
/// Wiener norm of whatever was discarded.
#[derive(Clone, Debug)]
pub struct HardyElement {
    series: LaurentMatrix,
    tail: f64,
}

impl HardyElement {
    pub fn new(series: LaurentMatrix, tail: f64) -> Result<Self> {
        if !series.is_zero() && series.hi() > 0 {
            return Err(Error::NotCausal(format!("series reaches z^{}", series.hi())));
        }
        Ok(Self { series, tail })
    }

    /// Expansion of a transfer function with discarded mass at most `tol`.
    pub fn from_transfer(t: &TransferFunction, tol: f64) -> Result<Self> {
        let (series, tail) = t.series(tol)?;
        Self::new(series, tail)
    }

    pub fn series(&self) -> &LaurentMatrix {
        &self.series
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn shape(&self) -> (usize, usize) {
        self.series.shape()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.series.l2_inner(&other.series)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).re
    }
}

/// `[f]₋`: keeps the nonpositive powers.
pub fn project_minus(f: &LaurentMatrix) -> HardyElement {
    HardyElement {
        series: f.project_minus(),
        tail: 0.0,
    }
}

/// The truncated shift `V f = P₋(z f)`.
pub fn shift_forward(f: &HardyElement) -> HardyElement {
    HardyElement {
        series: f.series.shift(1).project_minus(),
        tail: f.tail,
    }
}

/// The right inverse `V⁻¹ f = z⁻¹ f` of the truncated shift.
pub fn shift_back(f: &HardyElement) -> HardyElement {
    HardyElement {
        series: f.series.shift(-1),
        tail: f.tail,
    }
}

/// The symbol operator `f ↦ P₋(M f)`; the tail grows by at most the Wiener norm of `M`.
pub fn apply_symbol(m: &LaurentMatrix, f: &HardyElement) -> Result<HardyElement> {
    if m.cols() != f.shape().0 {
        return Err(Error::Dimension(format!(
            "symbol has {} columns, element has {} rows",
            m.cols(),
            f.shape().0
        )));
    }
    Ok(HardyElement {
        series: (m * &f.series).project_minus(),
        tail: m.wiener_norm() * f.tail,
    })
}

/// `P₋(A f)` for a rational matrix `A` analytic in the closed disk and a causal `f`.
///
/// `A` is expanded in nonnegative powers until the discarded mass is negligible; the
/// projection of each term against the denominator of `f` is exact.
pub fn project_causal(a: &RationalMatrix, f: &TransferFunction) -> Result<TransferFunction> {
    let (series, tail) = a.expand_plus(PLUS_TAIL_TOL)?;
    project_causal_series(&series, tail, f)
}

fn project_causal_series(series: &LaurentMatrix, tail: f64, f: &TransferFunction) -> Result<TransferFunction> {
    let num = project_minus_quotient(&(series * f.num()), f.den());
    let bound = tail * f.wiener_bound() + f.tail() * series.wiener_norm();
    TransferFunction::new(num, f.den().clone(), bound)
}

/// Dense section of `φ ↦ P₋(Mφ)` acting on the coefficients of `z⁰, z⁻¹, …, z⁻ⁿ`.
///
/// Block `(i, j)` is the coefficient `M_{j-i}`, so block row `i` produces the coefficient
/// of `z^(-i)` from the coefficients `f_{-j}`. The oldest `reach` block rows would need
/// coefficients beyond `z⁻ⁿ` and are the only ones affected by the truncation.
#[derive(Clone, Debug)]
pub struct ToeplitzSlice {
    rows: usize,
    cols: usize,
    n: usize,
    reach: usize,
    matrix: CMatrix,
}

/// Builds the section of order `n`; `n` must be at least four times the symbol's width.
pub fn toeplitz_oracle(m: &LaurentMatrix, n: usize) -> Result<ToeplitzSlice> {
    let width = if m.is_zero() { 0 } else { (m.hi() - m.lo()) as usize };
    if n < 4 * width {
        return Err(Error::GridTooSmall { width, n });
    }
    let (rows, cols) = m.shape();
    let mut matrix = CMatrix::zeros(rows * (n + 1), cols * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            if let Some(c) = m.coeff(j as i64 - i as i64) {
                matrix.view_mut((i * rows, j * cols), (rows, cols)).copy_from(c);
            }
        }
    }
    let reach = if m.is_zero() { 0 } else { m.hi().max(0) as usize };
    Ok(ToeplitzSlice {
        rows,
        cols,
        n,
        reach,
        matrix,
    })
}

impl ToeplitzSlice {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Number of oldest block rows affected by truncation.
    pub fn reach(&self) -> usize {
        self.reach
    }

    fn stack(&self, f: &LaurentMatrix) -> CMatrix {
        let k = f.cols();
        let mut v = CMatrix::zeros(self.cols * (self.n + 1), k);
        for j in 0..=self.n {
            v.view_mut((j * self.cols, 0), (self.cols, k))
                .copy_from(&f.coeff_or_zero(-(j as i64)));
        }
        v
    }

    fn unstack(&self, v: &CMatrix, block: usize, blocks: usize) -> LaurentMatrix {
        let k = v.ncols();
        LaurentMatrix::from_terms(
            block,
            k,
            (0..blocks).map(|i| (-(i as i64), v.view((i * block, 0), (block, k)).into_owned())),
        )
    }

    /// Applies the section to the first `n + 1` coefficients of `f`.
    pub fn apply(&self, f: &HardyElement) -> Result<HardyElement> {
        if f.shape().0 != self.cols {
            return Err(Error::Dimension("element does not match the section".into()));
        }
        let out = &self.matrix * self.stack(f.series());
        HardyElement::new(self.unstack(&out, self.rows, self.n + 1), f.tail())
    }

    /// Block rows unaffected by truncation.
    pub fn interior(&self) -> CMatrix {
        let keep = self.n + 1 - self.reach;
        self.matrix.rows(0, keep * self.rows).into_owned()
    }

    /// Minimum-norm least-squares solution of the interior equations with right side `rhs`.
    pub fn min_norm_solve(&self, rhs: &LaurentMatrix) -> Result<HardyElement> {
        let keep = self.n + 1 - self.reach;
        let a = self.interior();
        let mut b = CMatrix::zeros(keep * self.rows, rhs.cols());
        for i in 0..keep {
            b.view_mut((i * self.rows, 0), (self.rows, rhs.cols()))
                .copy_from(&rhs.coeff_or_zero(-(i as i64)));
        }
        let svd = linalg::svd(&a)?;
        let x = svd.solve(&b, 1e-12 * svd.max());
        HardyElement::new(self.unstack(&x, self.cols, self.n + 1), 0.0)
    }

    /// Number of singular values below `rel_tol` times the largest.
    pub fn small_singular_values(&self, rel_tol: f64) -> Result<usize> {
        let sv = linalg::singular_values(&self.matrix)?;
        Ok(sv.iter().filter(|&&s| s <= rel_tol * sv[0]).count())
    }

    /// Estimated kernel dimension of the untruncated operator.
    ///
    /// Small singular values of a section come in two kinds: genuine kernel elements,
    /// whose coefficients decay away from `z⁰`, and truncation artifacts concentrated at
    /// the oldest coefficients. Only the part of the near-null space living in the newer
    /// half of the coefficients is counted.
    pub fn kernel_dimension(&self, rel_tol: f64) -> Result<usize> {
        let svd = linalg::svd(&self.matrix)?;
        let null = svd.null_space(rel_tol * svd.max());
        if null.ncols() == 0 {
            return Ok(0);
        }
        let head = self.cols * (self.n / 2 + 1);
        let sv = linalg::singular_values(&null.rows(0, head).into_owned())?;
        Ok(sv.iter().filter(|&&s| s > 0.5).count())
    }
}

/// Partial indices of a square Laurent polynomial read off finite sections.
///
/// The kernel of `φ ↦ P₋(z^k M φ)` has dimension `Σ_i max(κ_i + k, 0)`, so the second
/// difference of this profile in `k` counts the indices equal to `-k`. This needs no
/// factorization and serves as a cross-check.
pub fn partial_indices_by_sections(m: &LaurentMatrix) -> Result<Vec<i64>> {
    let (rows, cols) = m.shape();
    if rows != cols || m.is_zero() {
        return Err(Error::Dimension("sections need a nonzero square symbol".into()));
    }
    let det = m.det()?;
    let roots = det.roots();
    let circle = roots.expanded(Location::OnCircle);
    if !circle.is_empty() {
        return Err(Error::CircleSingularity { points: circle });
    }
    let nearest = roots
        .roots
        .iter()
        .map(|r| {
            let a = r.value.norm();
            if a < 1.0 {
                a
            } else {
                1.0 / a
            }
        })
        .fold(0.0, f64::max);
    let width = (m.hi() - m.lo()) as usize;
    let decay_len = if nearest > 0.0 {
        (1e-12f64.ln() / nearest.ln()).ceil() as usize
    } else {
        0
    };
    let bound = (rows * width + m.lo().unsigned_abs() as usize + m.hi().unsigned_abs() as usize + 1) as i64;
    let n = (64 + 2 * decay_len + 4 * (width + 2 * bound as usize)).min(4096 / rows);
    let count = |k: i64| -> Result<i64> {
        let slice = toeplitz_oracle(&m.shift(k), n)?;
        Ok(slice.kernel_dimension(1e-8)? as i64)
    };
    let profile: Vec<i64> = (-bound - 1..=bound + 1).map(count).collect::<Result<_>>()?;
    let mut kappa = Vec::new();
    for (idx, k) in (-bound..=bound).enumerate() {
        let second = profile[idx + 2] - 2 * profile[idx + 1] + profile[idx];
        if second < 0 {
            return Err(Error::Factorization(format!("inconsistent section profile at shift {k}")));
        }
        kappa.extend(std::iter::repeat_n(-k, second as usize));
    }
    if kappa.len() != rows {
        return Err(Error::Factorization(format!(
            "section profile yields {} indices for a {rows}x{rows} symbol",
            kappa.len()
        )));
    }
    kappa.sort_unstable_by(|a, b| b.cmp(a));
    Ok(kappa)
}

/// Inverse of the Toeplitz operator `ψ ↦ P₋(S ψ)` for `S` Hermitian and positive definite
/// on the circle.
///
/// With `S = G^* G`, `G` causal and outer, the inverse is `f ↦ G⁻¹ P₋((G^*)⁻¹ f)`.
#[derive(Clone, Debug)]
pub struct ToeplitzInverse {
    factor: LaurentMatrix,
    factor_inv: RationalMatrix,
    adjoint_inv: LaurentMatrix,
    adjoint_inv_tail: f64,
}

impl ToeplitzInverse {
    pub fn new(s: &LaurentMatrix) -> Result<Self> {
        // W W^* = S^T gives (W^T)^* W^T = S.
        let factor = spectral_factor(&s.transpose())?.w.transpose();
        let star = factor.adjoint();
        let star_inv = RationalMatrix::new(star.adjugate()?, star.det()?)?;
        let (adjoint_inv, adjoint_inv_tail) = star_inv.expand_plus(PLUS_TAIL_TOL)?;
        let factor_inv = RationalMatrix::new(factor.adjugate()?, factor.det()?)?;
        Ok(Self {
            factor,
            factor_inv,
            adjoint_inv,
            adjoint_inv_tail,
        })
    }

    /// The causal outer factor `G` with `G^* G = S`.
    pub fn factor(&self) -> &LaurentMatrix {
        &self.factor
    }

    pub fn apply(&self, f: &TransferFunction) -> Result<TransferFunction> {
        let inner = project_causal_series(&self.adjoint_inv, self.adjoint_inv_tail, f)?;
        inner.left_mul_rational(&self.factor_inv)
    }
}
