//! Scalar Laurent polynomials and their roots.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CIRCLE_TOL, CLUSTER_TOL, DROP_TOL};
use crate::error::{Error, Result};

/// Finite sum `Σ c_s z^s` with complex coefficients, stored densely from the lowest power.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly {
    lo: i64,
    coeffs: Vec<Complex64>,
}

/// Position of a root relative to the unit circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Inside,
    OnCircle,
    Outside,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl Root {
    pub fn location(&self) -> Location {
        locate(self.value)
    }
}

pub(crate) fn locate(z: Complex64) -> Location {
    let r = z.norm();
    if (r - 1.0).abs() <= CIRCLE_TOL {
        Location::OnCircle
    } else if r < 1.0 {
        Location::Inside
    } else {
        Location::Outside
    }
}

/// Nonzero roots of a Laurent polynomial, clustered by multiplicity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Root>,
}

impl RootSet {
    /// Number of roots at `loc`, counted with multiplicity.
    pub fn count(&self, loc: Location) -> usize {
        self.roots
            .iter()
            .filter(|r| r.location() == loc)
            .map(|r| r.multiplicity)
            .sum()
    }

    pub fn total(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn at(&self, loc: Location) -> impl Iterator<Item = &Root> {
        self.roots.iter().filter(move |r| r.location() == loc)
    }

    /// Root values at `loc`, each repeated according to its multiplicity.
    pub fn expanded(&self, loc: Location) -> Vec<Complex64> {
        self.at(loc)
            .flat_map(|r| std::iter::repeat(r.value).take(r.multiplicity))
            .collect()
    }

    /// Largest modulus among roots at `loc` (zero when there are none).
    pub fn max_modulus(&self, loc: Location) -> f64 {
        self.at(loc).map(|r| r.value.norm()).fold(0.0, f64::max)
    }

    /// Smallest modulus among roots at `loc` (infinite when there are none).
    pub fn min_modulus(&self, loc: Location) -> f64 {
        self.at(loc)
            .map(|r| r.value.norm())
            .fold(f64::INFINITY, f64::min)
    }
}

impl LaurentPoly {
    /// Builds `Σ coeffs[k] z^(lo+k)`, pruning negligible end coefficients.
    pub fn new(lo: i64, coeffs: Vec<Complex64>) -> Self {
        let mut p = Self { lo, coeffs };
        p.trim(DROP_TOL);
        p
    }

    pub fn from_real(lo: i64, coeffs: &[f64]) -> Self {
        Self::new(lo, coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { lo: 0, coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(0, vec![c])
    }

    pub fn monomial(c: Complex64, power: i64) -> Self {
        Self::new(power, vec![c])
    }

    /// `1 - a z^power`, the elementary factor used throughout the factorizations.
    pub fn one_minus(a: Complex64, power: i64) -> Self {
        let one = Self::one();
        &one - &Self::monomial(a, power)
    }

    fn trim(&mut self, tol: f64) {
        let first = self.coeffs.iter().position(|c| c.norm() >= tol);
        match first {
            None => {
                self.coeffs.clear();
                self.lo = 0;
            }
            Some(f) => {
                let last = self.coeffs.iter().rposition(|c| c.norm() >= tol).unwrap();
                self.coeffs.truncate(last + 1);
                self.coeffs.drain(..f);
                self.lo += f as i64;
            }
        }
    }

    /// Drops end coefficients below `rel` times the largest coefficient.
    pub fn trimmed_relative(&self, rel: f64) -> Self {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut p = self.clone();
        p.trim(rel * scale);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    /// Coefficients from the lowest stored power upwards.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, power: i64) -> Complex64 {
        let k = power - self.lo;
        if k < 0 || k >= self.coeffs.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[k as usize]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.lo + k as i64, c))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.lo as i32)
    }

    /// Para-Hermitian conjugate `Σ conj(c_s) z^(-s)`, equal to the pointwise conjugate on the circle.
    pub fn adjoint(&self) -> Self {
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        Self::new(-self.hi(), coeffs)
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            lo: self.lo + k,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.lo, self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Nonzero roots of `z^(-lo) f(z)`, computed as companion-matrix eigenvalues,
    /// polished by Newton steps and clustered into multiplicities.
    pub fn roots(&self) -> RootSet {
        let c = &self.coeffs;
        if c.len() < 2 {
            return RootSet::default();
        }
        let deg = c.len() - 1;
        let lead = c[deg];
        let raw: Vec<Complex64> = if deg == 1 {
            vec![-c[0] / c[1]]
        } else {
            let mut comp = DMatrix::<Complex64>::zeros(deg, deg);
            for i in 1..deg {
                comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
            }
            for i in 0..deg {
                comp[(i, deg - 1)] = -c[i] / lead;
            }
            let schur = nalgebra::linalg::Schur::new(comp);
            let (_, t) = schur.unpack();
            (0..deg).map(|i| t[(i, i)]).collect()
        };
        let polished: Vec<Complex64> = raw.into_iter().map(|r| newton_polish(c, r)).collect();
        RootSet {
            roots: cluster(polished),
        }
    }

    /// Winding number about the origin of the image of the unit circle.
    ///
    /// Counted as `lo + #roots inside the disk` and checked against phase unwrapping.
    pub fn winding_number(&self) -> Result<i64> {
        if self.is_zero() {
            return Err(Error::Degenerate("zero polynomial".into()));
        }
        let roots = self.roots();
        let circle: Vec<Complex64> = roots.expanded(Location::OnCircle);
        if !circle.is_empty() {
            return Err(Error::CircleSingularity { points: circle });
        }
        let w = self.lo + roots.count(Location::Inside) as i64;
        let phase = winding_by_phase(|z| self.eval(z), 4096);
        if phase != w {
            let finer = winding_by_phase(|z| self.eval(z), 1 << 16);
            if finer != w {
                return Err(Error::WindingMismatch { roots: w, phase: finer });
            }
        }
        Ok(w)
    }
}

/// Winding number of `f` about the origin by unwrapping its phase on `n` circle points.
pub fn winding_by_phase(f: impl Fn(Complex64) -> Complex64, n: usize) -> i64 {
    let values: Vec<Complex64> = (0..n)
        .map(|k| f(Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64)))
        .collect();
    let mut total = 0.0;
    for k in 0..n {
        let a = values[k];
        let b = values[(k + 1) % n];
        total += (b / a).arg();
    }
    (total / std::f64::consts::TAU).round() as i64
}

fn poly_and_derivative(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for coef in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + coef;
    }
    (p, dp)
}

fn newton_polish(c: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = poly_and_derivative(c, z);
    for _ in 0..4 {
        let (_, dp) = poly_and_derivative(c, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = poly_and_derivative(c, cand);
        if pc.norm() < p.norm() {
            z = cand;
            p = pc;
        } else {
            break;
        }
    }
    z
}

fn cluster(mut roots: Vec<Complex64>) -> Vec<Root> {
    roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![roots[i]];
        for j in (i + 1)..roots.len() {
            if !used[j] {
                let scale = roots[i].norm().max(1.0);
                if (roots[j] - roots[i]).norm() <= CLUSTER_TOL * scale {
                    used[j] = true;
                    members.push(roots[j]);
                }
            }
        }
        let n = members.len();
        let mean = members.iter().sum::<Complex64>() / n as f64;
        out.push(Root {
            value: mean,
            multiplicity: n,
        });
    }
    out
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(rhs.lo);
        let hi = self.hi().max(rhs.hi());
        let coeffs = (lo..=hi).map(|p| self.coeff(p) + rhs.coeff(p)).collect();
        LaurentPoly::new(lo, coeffs)
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self + &(-rhs)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || rhs.is_zero() {
            return LaurentPoly::zero();
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentPoly::new(self.lo + rhs.lo, coeffs)
    }
}
