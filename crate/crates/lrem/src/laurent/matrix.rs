//! Matrix-valued Laurent polynomials.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::poly::LaurentPoly;
use super::DROP_TOL;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Finite two-sided series `Σ M_s z^s` with `rows × cols` complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentMatrix {
    rows: usize,
    cols: usize,
    lo: i64,
    coeffs: Vec<CMatrix>,
}

impl LaurentMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            lo: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn identity(m: usize) -> Self {
        Self::constant(CMatrix::identity(m, m))
    }

    pub fn constant(c: CMatrix) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: CMatrix, power: i64) -> Self {
        let (rows, cols) = c.shape();
        Self::new(rows, cols, power, vec![c])
    }

    /// Builds `Σ coeffs[k] z^(lo+k)`, pruning zero end coefficients.
    ///
    /// Only exact zeros are dropped so that truncated series keep their small tails;
    /// use [`trimmed`](Self::trimmed) to clean rounding noise.
    pub fn new(rows: usize, cols: usize, lo: i64, coeffs: Vec<CMatrix>) -> Self {
        assert!(
            coeffs.iter().all(|c| c.shape() == (rows, cols)),
            "coefficient shape mismatch"
        );
        let mut m = Self {
            rows,
            cols,
            lo,
            coeffs,
        };
        m.trim(0.0);
        m
    }

    /// Builds a series from `(power, coefficient)` pairs; repeated powers are summed.
    pub fn from_terms(rows: usize, cols: usize, terms: impl IntoIterator<Item = (i64, CMatrix)>) -> Self {
        let terms: Vec<(i64, CMatrix)> = terms.into_iter().collect();
        if terms.is_empty() {
            return Self::zeros(rows, cols);
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![CMatrix::zeros(rows, cols); (hi - lo + 1) as usize];
        for (p, c) in terms {
            coeffs[(p - lo) as usize] += c;
        }
        Self::new(rows, cols, lo, coeffs)
    }

    /// Assembles a matrix from scalar entries given in row-major order.
    pub fn from_entries(rows: usize, cols: usize, entries: &[LaurentPoly]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        let nonzero: Vec<&LaurentPoly> = entries.iter().filter(|e| !e.is_zero()).collect();
        if nonzero.is_empty() {
            return Self::zeros(rows, cols);
        }
        let lo = nonzero.iter().map(|e| e.lo()).min().unwrap();
        let hi = nonzero.iter().map(|e| e.hi()).max().unwrap();
        let coeffs = (lo..=hi)
            .map(|p| CMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j].coeff(p)))
            .collect();
        Self::new(rows, cols, lo, coeffs)
    }

    pub fn from_poly(p: &LaurentPoly) -> Self {
        Self::from_entries(1, 1, std::slice::from_ref(p))
    }

    fn trim(&mut self, tol: f64) {
        let first = self.coeffs.iter().position(|c| c.norm() > tol);
        match first {
            None => {
                self.coeffs.clear();
                self.lo = 0;
            }
            Some(f) => {
                let last = self.coeffs.iter().rposition(|c| c.norm() > tol).unwrap();
                self.coeffs.truncate(last + 1);
                self.coeffs.drain(..f);
                self.lo += f as i64;
            }
        }
    }

    /// Drops end coefficients with norm below the absolute drop tolerance.
    pub fn trimmed(&self) -> Self {
        let mut m = self.clone();
        m.trim(DROP_TOL);
        m
    }

    /// Drops end coefficients whose norm is below `rel` times the largest coefficient norm.
    pub fn trimmed_relative(&self, rel: f64) -> Self {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut m = self.clone();
        m.trim(rel * scale);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest stored power (zero for the zero series).
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest stored power (`lo - 1` for the zero series).
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, power: i64) -> Option<&CMatrix> {
        let k = power - self.lo;
        if k < 0 {
            None
        } else {
            self.coeffs.get(k as usize)
        }
    }

    pub fn coeff_or_zero(&self, power: i64) -> CMatrix {
        self.coeff(power)
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.rows, self.cols))
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &CMatrix)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, c)| (self.lo + k as i64, c))
    }

    pub fn entry(&self, i: usize, j: usize) -> LaurentPoly {
        LaurentPoly::new(self.lo, self.coeffs.iter().map(|c| c[(i, j)]).collect())
    }

    pub fn entries(&self) -> Vec<LaurentPoly> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self.entry(i, j));
            }
        }
        out
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let mut acc = CMatrix::zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        if self.is_zero() {
            acc
        } else {
            acc * z.powi(self.lo as i32)
        }
    }

    /// Para-Hermitian conjugate `Σ M_s^* z^(-s)`, the pointwise adjoint on the circle.
    pub fn adjoint(&self) -> Self {
        let coeffs = self.coeffs.iter().rev().map(|c| c.adjoint()).collect();
        Self::new(self.cols, self.rows, -self.hi(), coeffs)
    }

    /// Coefficientwise transpose.
    pub fn transpose(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c.transpose()).collect();
        Self::new(self.cols, self.rows, self.lo, coeffs)
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            lo: self.lo + k,
            ..self.clone()
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.rows, self.cols, self.lo, self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn scale_poly(&self, p: &LaurentPoly) -> Self {
        let terms = p
            .terms()
            .flat_map(|(ps, c)| self.terms().map(move |(pm, m)| (ps + pm, m * c)))
            .collect::<Vec<_>>();
        Self::from_terms(self.rows, self.cols, terms)
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul(&self, a: &CMatrix) -> Self {
        assert_eq!(a.ncols(), self.rows);
        Self::new(a.nrows(), self.cols, self.lo, self.coeffs.iter().map(|c| a * c).collect())
    }

    /// Right multiplication by a constant matrix.
    pub fn right_mul(&self, a: &CMatrix) -> Self {
        assert_eq!(a.nrows(), self.cols);
        Self::new(self.rows, a.ncols(), self.lo, self.coeffs.iter().map(|c| c * a).collect())
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c.select_rows(rows)).collect();
        Self::new(rows.len(), self.cols, self.lo, coeffs)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c.select_columns(cols)).collect();
        Self::new(self.rows, cols.len(), self.lo, coeffs)
    }

    /// Multiplies row `i` by `z^(shifts[i])`.
    pub fn shift_rows(&self, shifts: &[i64]) -> Self {
        assert_eq!(shifts.len(), self.rows);
        let mut terms = Vec::new();
        for (p, c) in self.terms() {
            for (i, &s) in shifts.iter().enumerate() {
                let mut row = CMatrix::zeros(self.rows, self.cols);
                row.set_row(i, &c.row(i));
                terms.push((p + s, row));
            }
        }
        Self::from_terms(self.rows, self.cols, terms)
    }

    /// Multiplies column `j` by `z^(shifts[j])`.
    pub fn shift_columns(&self, shifts: &[i64]) -> Self {
        self.transpose().shift_rows(shifts).transpose()
    }

    /// Stacks `self` above `other`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let rows = self.rows + other.rows;
        if self.is_zero() && other.is_zero() {
            return Self::zeros(rows, self.cols);
        }
        let coeffs = (lo..=hi)
            .map(|p| {
                let mut c = CMatrix::zeros(rows, self.cols);
                c.rows_mut(0, self.rows).copy_from(&self.coeff_or_zero(p));
                c.rows_mut(self.rows, other.rows).copy_from(&other.coeff_or_zero(p));
                c
            })
            .collect();
        Self::new(rows, self.cols, lo, coeffs)
    }

    pub fn hstack(&self, other: &Self) -> Self {
        self.transpose().vstack(&other.transpose()).transpose()
    }

    /// Keeps powers in `[lo, hi]`.
    pub fn window(&self, lo: i64, hi: i64) -> Self {
        let terms = self
            .terms()
            .filter(|(p, _)| *p >= lo && *p <= hi)
            .map(|(p, c)| (p, c.clone()));
        Self::from_terms(self.rows, self.cols, terms)
    }

    /// Orthogonal projection onto nonpositive powers.
    pub fn project_minus(&self) -> Self {
        self.window(i64::MIN, 0)
    }

    /// Part with strictly positive powers.
    pub fn project_strict_plus(&self) -> Self {
        self.window(1, i64::MAX)
    }

    /// Hilbert inner product `Σ_s tr(A_s B_s^*)` (white-noise measure).
    pub fn l2_inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.shape(), other.shape());
        self.terms()
            .filter_map(|(p, a)| other.coeff(p).map(|b| (a, b)))
            .map(|(a, b)| a.component_mul(&b.map(|x| x.conj())).sum())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt()
    }

    /// Sum of coefficient Frobenius norms, an upper bound for the sup norm on the circle.
    pub fn wiener_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Determinant, computed by evaluation at roots of unity and inverse DFT.
    pub fn det(&self) -> Result<LaurentPoly> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "determinant of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let m = self.rows;
        if self.is_zero() {
            return Ok(LaurentPoly::zero());
        }
        if m == 1 {
            return Ok(self.entry(0, 0));
        }
        let poly = self.shift(-self.lo);
        let degree = (self.hi() - self.lo) as usize;
        let points = m * degree + 1;
        let values: Vec<Complex64> = (0..points)
            .map(|k| {
                let z = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / points as f64);
                poly.eval(z).determinant()
            })
            .collect();
        let coeffs: Vec<Complex64> = (0..points)
            .map(|j| {
                values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let angle = -std::f64::consts::TAU * ((j * k) % points) as f64 / points as f64;
                        v * Complex64::from_polar(1.0, angle)
                    })
                    .sum::<Complex64>()
                    / points as f64
            })
            .collect();
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cleaned = coeffs
            .into_iter()
            .map(|c| if c.norm() < 1e-13 * scale { Complex64::new(0.0, 0.0) } else { c })
            .collect();
        Ok(LaurentPoly::new(m as i64 * self.lo, cleaned))
    }

    /// Classical adjugate, so that `M · adj(M) = det(M) I`.
    pub fn adjugate(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Dimension("adjugate of a non-square matrix".into()));
        }
        let m = self.rows;
        if m == 1 {
            return Ok(Self::identity(1));
        }
        let mut entries = vec![LaurentPoly::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                let keep_r: Vec<usize> = (0..m).filter(|&r| r != j).collect();
                let keep_c: Vec<usize> = (0..m).filter(|&c| c != i).collect();
                let minor = self.select_rows(&keep_r).select_columns(&keep_c).det()?;
                entries[i * m + j] = if (i + j) % 2 == 0 { minor } else { -&minor };
            }
        }
        Ok(Self::from_entries(m, m, &entries))
    }
}

impl Add for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn add(self, rhs: &LaurentMatrix) -> LaurentMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in addition");
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(rhs.lo);
        let hi = self.hi().max(rhs.hi());
        let coeffs = (lo..=hi)
            .map(|p| match (self.coeff(p), rhs.coeff(p)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => CMatrix::zeros(self.rows, self.cols),
            })
            .collect();
        LaurentMatrix::new(self.rows, self.cols, lo, coeffs)
    }
}

impl Sub for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn sub(self, rhs: &LaurentMatrix) -> LaurentMatrix {
        self + &(-rhs)
    }
}

impl Neg for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn neg(self) -> LaurentMatrix {
        LaurentMatrix {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            ..self.clone()
        }
    }
}

impl Mul for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn mul(self, rhs: &LaurentMatrix) -> LaurentMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        if self.is_zero() || rhs.is_zero() {
            return LaurentMatrix::zeros(self.rows, rhs.cols);
        }
        let mut coeffs = vec![CMatrix::zeros(self.rows, rhs.cols); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j].gemm(Complex64::new(1.0, 0.0), a, b, Complex64::new(1.0, 0.0));
            }
        }
        LaurentMatrix::new(self.rows, rhs.cols, self.lo + rhs.lo, coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn mat(rows: usize, cols: usize, v: &[f64]) -> CMatrix {
        CMatrix::from_row_slice(rows, cols, &v.iter().map(|&x| re(x)).collect::<Vec<_>>())
    }

    fn sample() -> LaurentMatrix {
        LaurentMatrix::from_terms(
            2,
            2,
            [
                (-1, mat(2, 2, &[0.5, 0.0, 1.0, -0.2])),
                (0, mat(2, 2, &[1.0, 2.0, 0.0, 1.0])),
                (2, mat(2, 2, &[0.0, 0.3, 0.7, 0.0])),
            ],
        )
    }

    #[test]
    fn product_evaluates_pointwise() {
        let a = sample();
        let b = a.adjoint();
        let z = Complex64::from_polar(1.0, 1.1);
        let lhs = (&a * &b).eval(z);
        let rhs = a.eval(z) * b.eval(z);
        assert!((lhs - rhs).norm() < 1e-13);
        assert!((b.eval(z) - a.eval(z).adjoint()).norm() < 1e-13);
    }

    #[test]
    fn determinant_matches_pointwise_determinant() {
        let a = sample();
        let d = a.det().unwrap();
        for k in 0..7 {
            let z = Complex64::from_polar(0.9 + 0.05 * k as f64, 0.3 * k as f64);
            assert!((d.eval(z) - a.eval(z).determinant()).norm() < 1e-12);
        }
        assert_eq!(d.lo(), -2);
    }

    #[test]
    fn determinant_of_nongeneric_symbol() {
        let theta = 0.7;
        let m = LaurentMatrix::from_terms(
            2,
            2,
            [(1, mat(2, 2, &[0.0, 0.0, theta, 0.0])), (2, mat(2, 2, &[1.0, 0.0, 0.0, 0.0])), (0, mat(2, 2, &[0.0, 0.0, 0.0, 1.0]))],
        );
        let d = m.det().unwrap();
        assert_eq!((d.lo(), d.hi()), (2, 2));
        assert!((d.coeff(2) - re(1.0)).norm() < 1e-14);
    }

    #[test]
    fn adjugate_inverts_up_to_determinant() {
        let a = sample();
        let adj = a.adjugate().unwrap();
        let d = a.det().unwrap();
        let prod = &a * &adj;
        let expect = LaurentMatrix::identity(2).scale_poly(&d);
        assert!((&prod - &expect).max_abs() < 1e-12);
    }

    #[test]
    fn inner_product_and_projection() {
        let a = sample();
        assert!((a.l2_inner(&a).re - a.l2_norm().powi(2)).abs() < 1e-14);
        let minus = a.project_minus();
        assert_eq!(minus.hi(), 0);
        assert!((&(&minus + &a.project_strict_plus()) - &a).is_zero());
    }

    #[test]
    fn row_shifts_and_stacking() {
        let a = sample();
        let s = a.shift_rows(&[1, -1]);
        let z = Complex64::from_polar(1.0, 0.4);
        let mut expect = a.eval(z);
        let r0 = expect.row(0) * z;
        let r1 = expect.row(1) / z;
        expect.set_row(0, &r0);
        expect.set_row(1, &r1);
        assert!((s.eval(z) - expect).norm() < 1e-13);
        let st = a.vstack(&a.select_rows(&[1]));
        assert_eq!(st.shape(), (3, 2));
        assert!((st.eval(z).row(2) - a.eval(z).row(1)).norm() < 1e-13);
    }
}
