//! Causal stable transfer functions: elements of the Hardy space stored as `num / den`.

use num_complex::Complex64;

use super::grid::{GridValues, UnitCircleGrid};
use super::matrix::{CMatrix, LaurentMatrix};
use super::poly::LaurentPoly;
use super::rational::{project_minus_quotient, series_quotient, Expansion, RationalMatrix};
use super::CIRCLE_TOL;
use crate::error::{Error, Result};

const MAX_TERMS: usize = 1 << 17;

/// `num(z) / den(z)` with `num` supported on nonpositive powers and `den(∞) = 1`,
/// all denominator roots strictly inside the disk.
///
/// `tail` bounds (in Wiener norm) any truncation already made in `num`; it is zero for
/// exact rational objects.
#[derive(Clone, Debug)]
pub struct TransferFunction {
    num: LaurentMatrix,
    den: LaurentPoly,
    tail: f64,
    decay: f64,
}

impl TransferFunction {
    pub fn new(num: LaurentMatrix, den: LaurentPoly, tail: f64) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Degenerate("zero denominator".into()));
        }
        let shift = -den.hi();
        let lead = den.coeff(den.hi());
        let den = den.shift(shift).scale(lead.inv());
        let num = num.shift(shift).scale(lead.inv());
        if !num.is_zero() && num.hi() > 0 {
            return Err(Error::NotCausal(format!("numerator reaches power z^{}", num.hi())));
        }
        let decay = den.roots().roots.iter().map(|r| r.value.norm()).fold(0.0, f64::max);
        if decay >= 1.0 - CIRCLE_TOL {
            return Err(Error::NotCausal(format!("denominator root of modulus {decay}")));
        }
        Ok(Self { num, den, tail, decay })
    }

    /// Finite series (a Laurent polynomial in `z⁻¹`).
    pub fn from_series(series: LaurentMatrix, tail: f64) -> Result<Self> {
        Self::new(series, LaurentPoly::one(), tail)
    }

    pub fn constant(c: CMatrix) -> Self {
        Self::from_series(LaurentMatrix::constant(c), 0.0).expect("constant is causal")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_series(LaurentMatrix::zeros(rows, cols), 0.0).expect("zero is causal")
    }

    pub fn num(&self) -> &LaurentMatrix {
        &self.num
    }

    pub fn den(&self) -> &LaurentPoly {
        &self.den
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Largest modulus of a denominator root; impulse responses decay at this rate.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn shape(&self) -> (usize, usize) {
        self.num.shape()
    }

    pub fn rows(&self) -> usize {
        self.num.rows()
    }

    pub fn cols(&self) -> usize {
        self.num.cols()
    }

    /// Value at infinity, i.e. the lag-zero impulse response.
    pub fn at_infinity(&self) -> CMatrix {
        self.num.coeff_or_zero(0)
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        self.num.eval(z) / self.den.eval(z)
    }

    pub fn eval_grid(&self, grid: &UnitCircleGrid) -> Result<GridValues> {
        let num = grid.eval(&self.num)?;
        let den = grid.eval_poly(&self.den)?;
        let (r, c) = self.shape();
        Ok(num.map_points(r, c, |k, v| v / den[k]))
    }

    /// Impulse responses `h_0, …, h_{n-1}`, where `h_k` multiplies `z^(-k)`.
    pub fn impulse_responses(&self, n: usize) -> Vec<CMatrix> {
        let (r, c) = self.shape();
        if self.num.is_zero() {
            return vec![CMatrix::zeros(r, c); n];
        }
        let lead = (-self.num.hi()) as usize;
        let s = series_quotient(&self.num, &self.den, Expansion::PowersOfZInv, n.saturating_sub(lead));
        (0..n).map(|k| s.coeff_or_zero(-(k as i64))).collect()
    }

    /// Truncated expansion with a tail bound not exceeding `tol` (plus any stored tail).
    pub fn series(&self, tol: f64) -> Result<(LaurentMatrix, f64)> {
        let q = (-self.den.lo()) as usize;
        if q == 0 || self.num.is_zero() {
            return Ok((self.num.clone(), self.tail));
        }
        let depth = (-self.num.lo()) as usize;
        let rho = self.decay.max(1e-3);
        let mut n = depth + q + ((tol.ln() / rho.ln()).ceil().max(0.0) as usize) + 8;
        loop {
            let h = self.impulse_responses(2 * n + 1);
            let mut tail: f64 = h[n + 1..].iter().map(|c| c.norm()).sum();
            tail += h[2 * n].norm() * rho / (1.0 - rho);
            if tail <= tol || 2 * n >= MAX_TERMS {
                if tail > tol {
                    return Err(Error::Convergence(format!(
                        "impulse responses decay too slowly (rate {rho}, tail {tail:e})"
                    )));
                }
                let (r, c) = self.shape();
                let mut kept: Vec<CMatrix> = h.into_iter().take(n + 1).collect();
                kept.reverse();
                return Ok((LaurentMatrix::new(r, c, -(n as i64), kept), tail + self.tail));
            }
            n *= 2;
        }
    }

    /// Upper bound on the Wiener norm, from `‖1/(1 - r z⁻¹)‖_W = 1/(1 - |r|)`.
    pub fn wiener_bound(&self) -> f64 {
        let roots = self.den.roots();
        let factor: f64 = roots
            .roots
            .iter()
            .map(|r| (1.0 - r.value.norm()).powi(-(r.multiplicity as i32)))
            .product();
        self.num.wiener_norm() * factor + self.tail
    }

    /// Product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let tail = self.tail * other.wiener_bound() + other.tail * self.wiener_bound();
        Self::new(&self.num * &other.num, &self.den * &other.den, tail).expect("product of stable denominators")
    }

    /// `r · self` for a rational matrix `r` analytic outside the disk; fails if the product is not causal.
    pub fn left_mul_rational(&self, r: &RationalMatrix) -> Result<Self> {
        let factor = Self::new(r.num.clone(), r.den.clone(), 0.0)?;
        Ok(factor.mul(self))
    }

    fn same_den(&self, other: &Self) -> bool {
        self.den.lo() == other.den.lo()
            && self.den.coeffs().len() == other.den.coeffs().len()
            && self
                .den
                .coeffs()
                .iter()
                .zip(other.den.coeffs())
                .all(|(a, b)| (a - b).norm() <= 1e-15 * (1.0 + a.norm()))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let tail = self.tail + other.tail;
        if self.same_den(other) {
            return Self {
                num: &self.num + &other.num,
                tail,
                ..self.clone()
            };
        }
        let num = &self.num.scale_poly(&other.den) + &other.num.scale_poly(&self.den);
        Self::new(num, &self.den * &other.den, tail).expect("product of stable denominators")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            num: self.num.scale(c),
            tail: self.tail * c.norm(),
            ..self.clone()
        }
    }

    pub fn left_mul(&self, a: &CMatrix) -> Self {
        Self {
            num: self.num.left_mul(a),
            tail: self.tail * a.norm(),
            ..self.clone()
        }
    }

    pub fn right_mul(&self, a: &CMatrix) -> Self {
        Self {
            num: self.num.right_mul(a),
            tail: self.tail * a.norm(),
            ..self.clone()
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            num: self.num.select_rows(rows),
            ..self.clone()
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            num: self.num.select_columns(cols),
            ..self.clone()
        }
    }

    /// Stacks rows of `self` above rows of `other`.
    pub fn vstack(&self, other: &Self) -> Self {
        if self.same_den(other) {
            return Self {
                num: self.num.vstack(&other.num),
                tail: self.tail + other.tail,
                ..self.clone()
            };
        }
        let num = self.num.scale_poly(&other.den).vstack(&other.num.scale_poly(&self.den));
        Self::new(num, &self.den * &other.den, self.tail + other.tail).expect("stable denominators")
    }

    /// Causal projection of `a · self` for a Laurent matrix `a`.
    pub fn apply_symbol(&self, a: &LaurentMatrix) -> Self {
        let num = project_minus_quotient(&(a * &self.num), &self.den);
        Self {
            num,
            tail: self.tail * a.wiener_norm(),
            ..self.clone()
        }
    }

    /// Multiplies row `i` by `z^(-shifts[i])`; every shift must be nonnegative.
    pub fn delay_rows(&self, shifts: &[i64]) -> Self {
        assert!(shifts.iter().all(|&s| s >= 0));
        let neg: Vec<i64> = shifts.iter().map(|s| -s).collect();
        Self {
            num: self.num.shift_rows(&neg),
            ..self.clone()
        }
    }

    /// Hilbert inner product `Σ_k tr(h_k g_k^*)`, evaluated on expansions accurate to `tol`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        let (a, _) = self.series(1e-15)?;
        let (b, _) = other.series(1e-15)?;
        Ok(a.l2_inner(&b))
    }

    pub fn norm_sq(&self) -> Result<f64> {
        Ok(self.inner(self)?.re)
    }

    /// Largest Frobenius distance between `self` and `other` on the grid.
    pub fn sup_distance(&self, other: &Self, grid: &UnitCircleGrid) -> Result<f64> {
        let a = self.eval_grid(grid)?;
        let b = other.eval_grid(grid)?;
        let (r, c) = self.shape();
        Ok(a.map_points(r, c, |k, v| v - b.at(k)).sup_norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn ar1(a: f64) -> TransferFunction {
        TransferFunction::new(LaurentMatrix::identity(1), LaurentPoly::one_minus(re(a), -1), 0.0).unwrap()
    }

    #[test]
    fn normalizes_denominator_and_rejects_unstable() {
        let t = TransferFunction::new(
            LaurentMatrix::identity(1).shift(-1),
            LaurentPoly::from_real(-1, &[-1.0, 2.0]),
            0.0,
        )
        .unwrap();
        assert_eq!(t.den().hi(), 0);
        assert!((t.den().coeff(0) - re(1.0)).norm() < 1e-15);
        assert!(TransferFunction::new(LaurentMatrix::identity(1), LaurentPoly::one_minus(re(2.0), -1), 0.0).is_err());
        assert!(TransferFunction::from_series(LaurentMatrix::identity(1).shift(1), 0.0).is_err());
    }

    #[test]
    fn series_tail_bound_dominates_discarded_mass() {
        let t = ar1(0.9);
        let (s, tail) = t.series(1e-10).unwrap();
        let n = (-s.lo()) as i32;
        let exact_tail: f64 = 0.9f64.powi(n + 1) / (1.0 - 0.9);
        assert!(tail >= exact_tail * 0.999);
        assert!(tail <= 1e-10);
    }

    #[test]
    fn inner_product_of_geometric_responses() {
        let a = ar1(0.5);
        let b = ar1(-0.3);
        let ip = a.inner(&b).unwrap();
        assert!((ip - re(1.0 / (1.0 + 0.15))).norm() < 1e-13);
        assert!((a.norm_sq().unwrap() - 1.0 / 0.75).abs() < 1e-13);
    }

    #[test]
    fn addition_over_different_denominators() {
        let s = ar1(0.5).add(&ar1(-0.2));
        let z = Complex64::from_polar(1.0, 0.8);
        let expect = ar1(0.5).eval(z) + ar1(-0.2).eval(z);
        assert!((s.eval(z) - expect).norm() < 1e-13);
    }

    #[test]
    fn symbol_application_projects() {
        // P₋((1 - 2z) / (1 - 0.5 z⁻¹)) has coefficients 1 - 2·0.5 = 0 at z^0 and 0.5^k - 2·0.5^(k+1) = 0 below.
        let a = LaurentMatrix::from_poly(&LaurentPoly::one_minus(re(2.0), 1));
        let out = ar1(0.5).apply_symbol(&a);
        let h = out.impulse_responses(6);
        assert!(h.iter().all(|c| c.norm() < 1e-14));
    }
}
