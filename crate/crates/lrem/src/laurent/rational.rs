//! Scalar and matrix rational functions with a common scalar denominator.

use num_complex::Complex64;

use super::matrix::{CMatrix, LaurentMatrix};
use super::poly::{LaurentPoly, Location, RootSet};
use crate::error::{Error, Result};

/// Direction of a one-sided series expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expansion {
    /// Nonnegative powers of `z`, valid inside the disk.
    PowersOfZ,
    /// Nonpositive powers of `z`, valid outside the disk.
    PowersOfZInv,
}

/// First `n_terms` coefficients of `num / den` expanded in the given direction.
///
/// `PowersOfZ` starts at power `num.lo - den.lo` and climbs; `PowersOfZInv` starts at
/// `num.hi - den.hi` and descends.
pub fn series_quotient(num: &LaurentMatrix, den: &LaurentPoly, dir: Expansion, n_terms: usize) -> LaurentMatrix {
    let (rows, cols) = num.shape();
    assert!(!den.is_zero(), "division by the zero polynomial");
    if num.is_zero() || n_terms == 0 {
        return LaurentMatrix::zeros(rows, cols);
    }
    let q = (den.hi() - den.lo()) as usize;
    let (d, start): (Vec<Complex64>, i64) = match dir {
        Expansion::PowersOfZ => (
            (0..=q).map(|j| den.coeff(den.lo() + j as i64)).collect(),
            num.lo() - den.lo(),
        ),
        Expansion::PowersOfZInv => (
            (0..=q).map(|j| den.coeff(den.hi() - j as i64)).collect(),
            num.hi() - den.hi(),
        ),
    };
    let num_at = |k: usize| -> CMatrix {
        match dir {
            Expansion::PowersOfZ => num.coeff_or_zero(num.lo() + k as i64),
            Expansion::PowersOfZInv => num.coeff_or_zero(num.hi() - k as i64),
        }
    };
    let inv_d0 = d[0].inv();
    let mut h: Vec<CMatrix> = Vec::with_capacity(n_terms);
    for k in 0..n_terms {
        let mut acc = num_at(k);
        for j in 1..=q.min(k) {
            acc -= &h[k - j] * d[j];
        }
        h.push(acc * inv_d0);
    }
    match dir {
        Expansion::PowersOfZ => LaurentMatrix::new(rows, cols, start, h),
        Expansion::PowersOfZInv => {
            h.reverse();
            LaurentMatrix::new(rows, cols, start - n_terms as i64 + 1, h)
        }
    }
}

/// Numerator `N` with `P₋(x / d) = N / d`, where `P₋` keeps nonpositive powers.
///
/// `d` must satisfy `d.hi() == 0` and have all roots inside the disk, so that `1/d`
/// expands in nonpositive powers. The result has powers in `[min(x.lo, 1 - deg d), 0]`.
pub fn project_minus_quotient(x: &LaurentMatrix, d: &LaurentPoly) -> LaurentMatrix {
    assert_eq!(d.hi(), 0, "denominator must be normalized to d.hi() == 0");
    let (rows, cols) = x.shape();
    let mut out = x.project_minus();
    let q = (-d.lo()) as usize;
    if q == 0 || x.hi() <= 0 {
        return out;
    }
    let s_max = x.hi() as usize;
    let e = series_quotient(
        &LaurentMatrix::constant(CMatrix::identity(1, 1)),
        d,
        Expansion::PowersOfZInv,
        s_max + q + 1,
    );
    let e_at = |k: i64| e.coeff(-k).map(|c| c[(0, 0)]).unwrap_or_default();
    let dj: Vec<Complex64> = (0..=q).map(|j| d.coeff(-(j as i64))).collect();
    let mut terms = Vec::new();
    for s in 1..=s_max as i64 {
        let Some(xs) = x.coeff(s) else { continue };
        for p in (1 - q as i64)..=0 {
            let mut r = Complex64::new(0.0, 0.0);
            for j in ((-p + 1) as usize)..=q {
                let k = s - p - j as i64;
                if k >= 0 {
                    r -= dj[j] * e_at(k);
                }
            }
            if r != Complex64::new(0.0, 0.0) {
                terms.push((p, xs * r));
            }
        }
    }
    out = &out + &LaurentMatrix::from_terms(rows, cols, terms);
    out
}

/// Ratio of two scalar Laurent polynomials together with their classified roots.
#[derive(Clone, Debug)]
pub struct ScalarRational {
    num: LaurentPoly,
    den: LaurentPoly,
    zeros: RootSet,
    poles: RootSet,
}

impl ScalarRational {
    pub fn new(num: LaurentPoly, den: LaurentPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Degenerate("zero denominator".into()));
        }
        let zeros = num.roots();
        let poles = den.roots();
        Ok(Self { num, den, zeros, poles })
    }

    pub fn from_poly(num: LaurentPoly) -> Self {
        Self::new(num, LaurentPoly::one()).expect("unit denominator")
    }

    pub fn num(&self) -> &LaurentPoly {
        &self.num
    }

    pub fn den(&self) -> &LaurentPoly {
        &self.den
    }

    /// Nonzero zeros of the numerator.
    pub fn zeros(&self) -> &RootSet {
        &self.zeros
    }

    /// Nonzero zeros of the denominator.
    pub fn poles(&self) -> &RootSet {
        &self.poles
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Zeros inside the disk minus poles inside the disk, including those at the origin.
    pub fn winding_number(&self) -> Result<i64> {
        let mut circle = self.zeros.expanded(Location::OnCircle);
        circle.extend(self.poles.expanded(Location::OnCircle));
        if !circle.is_empty() {
            return Err(Error::CircleSingularity { points: circle });
        }
        Ok(self.num.winding_number()? - self.den.winding_number()?)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.num * &other.num, &self.den * &other.den).expect("nonzero denominators")
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }
}

/// Matrix of rational functions sharing the scalar denominator `den`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    pub num: LaurentMatrix,
    pub den: LaurentPoly,
}

impl RationalMatrix {
    pub fn new(num: LaurentMatrix, den: LaurentPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Degenerate("zero denominator".into()));
        }
        Ok(Self { num, den })
    }

    pub fn from_laurent(num: LaurentMatrix) -> Self {
        Self {
            num,
            den: LaurentPoly::one(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.num.shape()
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        self.num.eval(z) / self.den.eval(z)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }

    pub fn det(&self) -> Result<ScalarRational> {
        let m = self.num.rows();
        let mut den_pow = LaurentPoly::one();
        for _ in 0..m {
            den_pow = &den_pow * &self.den;
        }
        ScalarRational::new(self.num.det()?, den_pow)
    }

    /// `adj(num) · den / det(num)`.
    pub fn inverse(&self) -> Result<Self> {
        let det = self.num.det()?;
        if det.is_zero() {
            return Err(Error::Degenerate("singular rational matrix".into()));
        }
        Ok(Self {
            num: self.num.adjugate()?.scale_poly(&self.den),
            den: det,
        })
    }

    /// One-sided expansion with `n_terms` coefficients.
    pub fn series(&self, dir: Expansion, n_terms: usize) -> LaurentMatrix {
        series_quotient(&self.num, &self.den, dir, n_terms)
    }

    /// Expansion in nonnegative powers of `z` with a Wiener-norm tail bound below `tol`.
    ///
    /// The denominator must have no zeros in the closed disk.
    pub fn expand_plus(&self, tol: f64) -> Result<(LaurentMatrix, f64)> {
        if self.num.is_zero() {
            return Ok((self.num.clone(), 0.0));
        }
        let start = self.num.lo() - self.den.lo();
        if start < 0 {
            return Err(Error::NotCausal(format!("expansion starts at z^{start}")));
        }
        let roots = self.den.roots();
        if roots.count(Location::Inside) + roots.count(Location::OnCircle) > 0 {
            return Err(Error::NotInvertible("denominator vanishes in the closed disk".into()));
        }
        let degree = (self.den.hi() - self.den.lo()) as usize;
        if degree == 0 {
            return Ok((self.num.scale(self.den.coeff(self.den.lo()).inv()), 0.0));
        }
        let rate = 1.0 / roots.min_modulus(Location::Outside);
        let width = (self.num.hi() - self.num.lo()) as usize;
        let mut n = width + degree + ((tol.ln() / rate.max(1e-3).ln()).ceil().max(0.0) as usize) + 8;
        loop {
            let s = self.series(Expansion::PowersOfZ, 2 * n + 1);
            let h: Vec<f64> = (0..=2 * n).map(|k| s.coeff_or_zero(start + k as i64).norm()).collect();
            let tail = h[n + 1..].iter().sum::<f64>() + h[2 * n] * rate / (1.0 - rate);
            if tail <= tol {
                return Ok((s.window(start, start + n as i64), tail));
            }
            if n > 1 << 16 {
                return Err(Error::Convergence(format!("plus expansion tail {tail:e} at rate {rate}")));
            }
            n *= 2;
        }
    }
}
