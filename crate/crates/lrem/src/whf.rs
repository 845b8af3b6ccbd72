//! Wiener–Hopf factorization `M = M₊ · diag(z^κ) · M₋` and spectral factorization.
//!
//! `M₊` is analytic and invertible on the closed disk, `M₋` analytic and invertible
//! outside it including infinity, and the partial indices `κ` are sorted in descending
//! order. Scalar symbols are factored exactly from their roots. Matrix Laurent
//! polynomials are factored over polynomials: zeros of `det M` outside the disk are
//! peeled off to the left one at a time, and the remaining polynomial is brought to
//! row-reduced form by unimodular row operations; the row degrees are the partial
//! indices.

use num_complex::Complex64;
use serde::Serialize;
use lrem_linalg as linalg;

use crate::banded::BandedCholesky;
use crate::error::{Error, Result};
use crate::laurent::{
    c64, CMatrix, LaurentMatrix, LaurentPoly, Location, RationalMatrix, ScalarRational, UnitCircleGrid,
};

/// How a factorization was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    ScalarExact,
    PolynomialReduction,
}

/// Left Wiener–Hopf factorization.
#[derive(Clone, Debug)]
pub struct WhFactorization {
    pub m_plus: RationalMatrix,
    pub kappa: Vec<i64>,
    pub m_minus: RationalMatrix,
    pub backend: Backend,
    /// Largest modulus of a zero or pole of `det M₋`; `M₋⁻¹` decays at this rate.
    pub minus_decay: f64,
    /// Reciprocal of the smallest modulus of a zero or pole of `det M₊`.
    pub plus_decay: f64,
}

impl WhFactorization {
    /// `diag(z^κ_1, …, z^κ_m)`.
    pub fn middle(&self) -> LaurentMatrix {
        let m = self.kappa.len();
        LaurentMatrix::identity(m).shift_rows(&self.kappa)
    }

    pub fn reconstruct_at(&self, z: Complex64) -> CMatrix {
        let mid = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.kappa.len(),
            self.kappa.iter().map(|&k| z.powi(k as i32)),
        ));
        self.m_plus.eval(z) * mid * self.m_minus.eval(z)
    }

    pub fn index_sum(&self) -> i64 {
        self.kappa.iter().sum()
    }
}

/// Factorization of a scalar rational symbol from its roots.
///
/// A root `r` outside the disk contributes `(1 - z/r)` to `M₊`; a root inside contributes
/// `z (1 - r z⁻¹)`, whose monomial goes to `M₀` and the rest to `M₋`. Constants are
/// absorbed into `M₋`, so `M₊(0) = 1`.
pub fn whf_scalar(f: &ScalarRational) -> Result<WhFactorization> {
    let mut circle = f.zeros().expanded(Location::OnCircle);
    circle.extend(f.poles().expanded(Location::OnCircle));
    if !circle.is_empty() {
        return Err(Error::CircleSingularity { points: circle });
    }
    if f.num().is_zero() {
        return Err(Error::Degenerate("zero symbol".into()));
    }
    let one = LaurentPoly::one();
    let mut plus_num = one.clone();
    let mut plus_den = one.clone();
    let mut minus_num = one.clone();
    let mut minus_den = one.clone();
    let mut constant = f.num().coeff(f.num().hi()) / f.den().coeff(f.den().hi());
    for r in f.zeros().expanded(Location::Outside) {
        plus_num = &plus_num * &LaurentPoly::one_minus(r.inv(), 1);
        constant *= -r;
    }
    for r in f.zeros().expanded(Location::Inside) {
        minus_num = &minus_num * &LaurentPoly::one_minus(r, -1);
    }
    for q in f.poles().expanded(Location::Outside) {
        plus_den = &plus_den * &LaurentPoly::one_minus(q.inv(), 1);
        constant /= -q;
    }
    for q in f.poles().expanded(Location::Inside) {
        minus_den = &minus_den * &LaurentPoly::one_minus(q, -1);
    }
    let kappa = f.winding_number()?;
    let minus_decay = f
        .zeros()
        .max_modulus(Location::Inside)
        .max(f.poles().max_modulus(Location::Inside));
    let plus_decay = 1.0
        / f.zeros()
            .min_modulus(Location::Outside)
            .min(f.poles().min_modulus(Location::Outside));
    Ok(WhFactorization {
        m_plus: RationalMatrix::new(LaurentMatrix::from_poly(&plus_num), plus_den)?,
        kappa: vec![kappa],
        m_minus: RationalMatrix::new(LaurentMatrix::from_poly(&minus_num.scale(constant)), minus_den)?,
        backend: Backend::ScalarExact,
        minus_decay,
        plus_decay,
    })
}

/// Relative size below which a leading coefficient is treated as cancelled.
const NOISE_REL: f64 = 1e-11;
/// Relative singular-value threshold for the (row-equilibrated) leading coefficient matrix.
const RANK_REL: f64 = 1e-9;

/// Polynomial matrix in `z` held as dense coefficients with per-row noise floors.
struct PolyRows {
    m: usize,
    coeffs: Vec<CMatrix>,
    noise: Vec<f64>,
}

impl PolyRows {
    fn from_laurent(p: &LaurentMatrix) -> Self {
        assert!(p.lo() >= 0);
        let m = p.rows();
        let coeffs: Vec<CMatrix> = (0..=p.hi()).map(|k| p.coeff_or_zero(k)).collect();
        let noise = (0..m)
            .map(|i| coeffs.iter().map(|c| c.row(i).norm()).fold(0.0, f64::max))
            .collect();
        Self { m, coeffs, noise }
    }

    fn to_laurent(&self) -> LaurentMatrix {
        LaurentMatrix::new(self.m, self.m, 0, self.coeffs.clone())
    }

    fn row_degree(&mut self, i: usize) -> usize {
        let floor = NOISE_REL * self.noise[i];
        for k in (0..self.coeffs.len()).rev() {
            if self.coeffs[k].row(i).norm() > floor {
                return k;
            }
            self.coeffs[k].row_mut(i).fill(c64(0.0));
        }
        0
    }

    fn row(&self, i: usize, k: usize) -> nalgebra::RowDVector<Complex64> {
        self.coeffs[k].row(i).into_owned()
    }

    fn ensure_len(&mut self, len: usize) {
        while self.coeffs.len() < len {
            self.coeffs.push(CMatrix::zeros(self.m, self.m));
        }
    }
}

/// Factorization of a square matrix Laurent polynomial.
pub fn whf_matrix(symbol: &LaurentMatrix) -> Result<WhFactorization> {
    let (m, cols) = symbol.shape();
    if m != cols {
        return Err(Error::Dimension(format!("symbol is {m}x{cols}")));
    }
    if m == 1 {
        return whf_scalar(&ScalarRational::from_poly(symbol.entry(0, 0)));
    }
    let det = symbol.det()?;
    if det.is_zero() {
        return Err(Error::Degenerate("determinant vanishes identically".into()));
    }
    let det_roots = det.roots();
    let circle = det_roots.expanded(Location::OnCircle);
    if !circle.is_empty() {
        return Err(Error::CircleSingularity { points: circle });
    }
    let lo = symbol.lo();
    let mut rows = PolyRows::from_laurent(&symbol.shift(-lo));
    let mut left = LaurentMatrix::identity(m);

    // Peel zeros outside the disk off to the left.
    let mut outside = det_roots.expanded(Location::Outside);
    outside.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    for &r in &outside {
        let p = rows.to_laurent();
        // Left singular vectors, smallest singular value first.
        let u = linalg::svd(&p.eval(r))?.u;
        let t = CMatrix::from_fn(m, m, |i, j| u[(j, m - 1 - i)].conj());
        let tp = p.left_mul(&t);
        let mut next = PolyRows::from_laurent(&tp);
        // Divide row 0 by (z - r) from the bottom up, which is stable for |r| > 1.
        let top = next.coeffs.len();
        let mut quotient: Vec<nalgebra::RowDVector<Complex64>> = Vec::with_capacity(top);
        let mut prev = nalgebra::RowDVector::<Complex64>::zeros(m);
        for k in 0..top.saturating_sub(1) {
            let a_k = next.row(0, k);
            let b_k = if k == 0 { -a_k / r } else { (&prev - a_k) / r };
            quotient.push(b_k.clone());
            prev = b_k;
        }
        let remainder = (next.row(0, top - 1) - &prev).norm();
        if remainder > 1e-6 * next.noise[0].max(f64::MIN_POSITIVE) {
            return Err(Error::Factorization(format!(
                "zero {r} of det M could not be divided out (remainder {remainder:e})"
            )));
        }
        for k in 0..top {
            let val = if k < quotient.len() {
                quotient[k].clone()
            } else {
                nalgebra::RowDVector::zeros(m)
            };
            next.coeffs[k].set_row(0, &val);
        }
        next.noise[0] = rows.noise.iter().cloned().fold(0.0, f64::max) / (r.norm() - 1.0).max(1e-3);
        // left <- left · T^* · diag(z - r, 1, …)
        let factor = LaurentMatrix::from_terms(
            m,
            m,
            [
                (1, {
                    let mut e = CMatrix::zeros(m, m);
                    e[(0, 0)] = c64(1.0);
                    e
                }),
                (0, {
                    let mut e = CMatrix::identity(m, m);
                    e[(0, 0)] = -r;
                    e
                }),
            ],
        );
        left = &left.right_mul(&t.adjoint()) * &factor;
        rows = next;
    }

    // Row-reduce what is left; its determinant has zeros inside the disk only.
    // Zeros of det P inside the disk, counting those at the origin.
    let expected = (det.lo() - m as i64 * lo) as usize + det_roots.count(Location::Inside);
    let mut degrees = vec![0usize; m];
    let max_iter = 4 * m * (rows.coeffs.len() + 1) + 8;
    let mut reduced = false;
    for _ in 0..max_iter {
        for (i, d) in degrees.iter_mut().enumerate() {
            *d = rows.row_degree(i);
        }
        let lead = CMatrix::from_fn(m, m, |i, j| rows.coeffs[degrees[i]][(i, j)]);
        let norms: Vec<f64> = (0..m).map(|i| lead.row(i).norm().max(f64::MIN_POSITIVE)).collect();
        let scaled = CMatrix::from_fn(m, m, |i, j| lead[(i, j)] / norms[i]);
        let svd = linalg::svd(&scaled)?;
        let imin = m - 1;
        if svd.min() > RANK_REL * svd.max() {
            reduced = true;
            break;
        }
        let u = &svd.u;
        let c: Vec<Complex64> = (0..m).map(|i| u[(i, imin)].conj() / norms[i]).collect();
        let support: Vec<usize> = (0..m).filter(|&i| u[(i, imin)].norm() > 1e-8).collect();
        let dmax = support.iter().map(|&i| degrees[i]).max().unwrap();
        let i0 = support
            .iter()
            .copied()
            .filter(|&i| degrees[i] == dmax)
            .max_by(|&a, &b| u[(a, imin)].norm().total_cmp(&u[(b, imin)].norm()))
            .unwrap();
        // row_i0 <- Σ_i (c_i / c_i0) z^(d_i0 - d_i) row_i
        let mut new_noise = rows.noise[i0];
        let old = rows.coeffs.clone();
        for &i in &support {
            if i == i0 {
                continue;
            }
            let w = c[i] / c[i0];
            let s = dmax - degrees[i];
            new_noise += w.norm() * rows.noise[i];
            rows.ensure_len(old.len() + s);
            for (k, ck) in old.iter().enumerate() {
                let add = ck.row(i) * w;
                let mut target = rows.coeffs[k + s].row(i0).into_owned();
                target += add;
                rows.coeffs[k + s].set_row(i0, &target);
            }
        }
        rows.coeffs[dmax].row_mut(i0).fill(c64(0.0));
        rows.noise[i0] = new_noise;
        // left <- left · T^{-1}: column j -= (c_j / c_i0) z^(d_i0 - d_j) column i0
        let col_i0 = left.select_columns(&[i0]);
        let mut updated = left.clone();
        for &j in &support {
            if j == i0 {
                continue;
            }
            let w = c[j] / c[i0];
            let s = (dmax - degrees[j]) as i64;
            let delta = col_i0.shift(s).scale(-w);
            let mut embed = LaurentMatrix::zeros(m, m);
            let mut sel = CMatrix::zeros(1, m);
            sel[(0, j)] = c64(1.0);
            embed = &embed + &(&delta * &LaurentMatrix::constant(sel));
            updated = &updated + &embed;
        }
        left = updated;
    }
    if !reduced {
        return Err(Error::Factorization("row reduction did not terminate".into()));
    }
    let total: usize = degrees.iter().sum();
    if total != expected {
        return Err(Error::Factorization(format!(
            "row degrees sum to {total} but det M has {expected} zeros inside the disk"
        )));
    }

    let minus_poly = rows.to_laurent().shift_rows(&degrees.iter().map(|&d| -(d as i64)).collect::<Vec<_>>());
    let mut perm: Vec<usize> = (0..m).collect();
    perm.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]));
    let kappa: Vec<i64> = perm.iter().map(|&i| degrees[i] as i64 + lo).collect();
    let mut m_minus = minus_poly.select_rows(&perm);
    let mut m_plus = left.select_columns(&perm);

    // Normalize each block of equal indices so that the matching diagonal block of M₊(0) is I.
    let at_zero = m_plus.coeff_or_zero(0);
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && kappa[end] == kappa[start] {
            end += 1;
        }
        let idx: Vec<usize> = (start..end).collect();
        let block = at_zero.select_rows(&idx).select_columns(&idx);
        let sv = linalg::singular_values(&block)?;
        if sv[sv.len() - 1] > 1e-8 * sv[0] {
            let inv = block.clone().try_inverse().expect("well-conditioned block");
            let mut right = CMatrix::identity(m, m);
            let mut leftc = CMatrix::identity(m, m);
            for (a, &ia) in idx.iter().enumerate() {
                for (b, &ib) in idx.iter().enumerate() {
                    right[(ia, ib)] = inv[(a, b)];
                    leftc[(ia, ib)] = block[(a, b)];
                }
            }
            m_plus = m_plus.right_mul(&right);
            m_minus = m_minus.left_mul(&leftc);
        }
        start = end;
    }

    let minus_decay = det_roots.max_modulus(Location::Inside);
    let plus_decay = 1.0 / det_roots.min_modulus(Location::Outside);
    Ok(WhFactorization {
        m_plus: RationalMatrix::from_laurent(m_plus.trimmed_relative(1e-15)),
        kappa,
        m_minus: RationalMatrix::from_laurent(m_minus.trimmed_relative(1e-15)),
        backend: Backend::PolynomialReduction,
        minus_decay,
        plus_decay,
    })
}

/// Outcome of the a-posteriori checks on a factorization.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    /// Largest Frobenius norm of `M - M₊ M₀ M₋` on the standard grid.
    pub residual: f64,
    /// Residual divided by `max(1, sup ‖M‖)`.
    pub relative_residual: f64,
    pub index_sum: i64,
    pub winding: i64,
    /// `det M₊` has no zeros or poles in the closed disk.
    pub plus_invertible: bool,
    /// `det M₋` has no zeros or poles outside the open disk, infinity included.
    pub minus_invertible: bool,
    pub certified: bool,
}

/// Tolerance on the relative reconstruction residual.
pub const FACTOR_TOL: f64 = 1e-8;

pub fn verify_factorization(symbol: &LaurentMatrix, fac: &WhFactorization) -> Result<Certificate> {
    let grid = UnitCircleGrid::standard();
    let vals = grid.eval(symbol)?;
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for k in 0..grid.len() {
        let z = grid.point(k);
        let mk = vals.at(k);
        scale = scale.max(mk.norm());
        residual = residual.max((mk - fac.reconstruct_at(z)).norm());
    }
    let winding = symbol.det()?.winding_number()?;
    let plus_invertible = side_ok(&fac.m_plus, Location::Outside)?;
    let minus_invertible = side_ok(&fac.m_minus, Location::Inside)?;
    let relative_residual = residual / scale;
    let index_sum = fac.index_sum();
    Ok(Certificate {
        residual,
        relative_residual,
        index_sum,
        winding,
        plus_invertible,
        minus_invertible,
        certified: relative_residual <= FACTOR_TOL && index_sum == winding && plus_invertible && minus_invertible,
    })
}

fn side_ok(f: &RationalMatrix, want: Location) -> Result<bool> {
    let det = f.det()?;
    let (num, den) = (det.num(), det.den());
    let (power_ok, analytic) = match want {
        // Analytic in the disk: no negative powers, and no zero or pole at the origin.
        Location::Outside => (num.lo() == den.lo(), f.num.lo() >= 0 && den.lo() >= 0),
        // Analytic outside: no positive powers, and finite nonzero at infinity.
        _ => (num.hi() == den.hi(), f.num.hi() <= 0 && den.hi() <= 0),
    };
    let roots_ok = det
        .zeros()
        .roots
        .iter()
        .chain(det.poles().roots.iter())
        .all(|r| r.location() == want);
    Ok(power_ok && analytic && roots_ok)
}

/// Whether the partial indices differ by at most one, and their sign pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Genericity {
    pub generic: bool,
    pub sign_class: SignClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignClass {
    Zero,
    AllNonnegative,
    AllNonpositive,
    Mixed,
}

pub fn genericity(kappa: &[i64]) -> Genericity {
    let max = kappa.iter().copied().max().unwrap_or(0);
    let min = kappa.iter().copied().min().unwrap_or(0);
    let sign_class = if max == 0 && min == 0 {
        SignClass::Zero
    } else if min >= 0 {
        SignClass::AllNonnegative
    } else if max <= 0 {
        SignClass::AllNonpositive
    } else {
        SignClass::Mixed
    };
    Genericity {
        generic: max - min <= 1,
        sign_class,
    }
}

/// Outer spectral factor `W(z) = Σ_{k≥0} W_k z^(-k)` with `W W^* = S`.
#[derive(Clone, Debug)]
pub struct SpectralFactor {
    pub w: LaurentMatrix,
    /// Sup-norm of `W W^* - S` on the standard grid.
    pub residual: f64,
    /// Number of Toeplitz block rows processed.
    pub blocks: usize,
}

/// Tolerance on the spectral factor residual.
pub const SPECTRAL_TOL: f64 = 1e-8;
const MAX_BLOCK_ROWS: usize = 1 << 16;

/// Spectral factor of a Hermitian Laurent polynomial, positive definite on the circle.
///
/// The block Toeplitz matrix of the coefficients of `S` is factored by a banded Cholesky
/// recursion until the last block row stops changing; that row holds the coefficients of
/// `W`, with `W(∞) = W_0` lower triangular with positive diagonal.
pub fn spectral_factor(s: &LaurentMatrix) -> Result<SpectralFactor> {
    let (m, cols) = s.shape();
    if m != cols {
        return Err(Error::Dimension("spectral density must be square".into()));
    }
    if s.is_zero() {
        return Err(Error::NotInvertible("zero spectral density".into()));
    }
    let herm = (&(s - &s.adjoint())).max_abs();
    if herm > 1e-10 * s.max_abs().max(1.0) {
        return Err(Error::Dimension(format!("density is not Hermitian (defect {herm:e})")));
    }
    let d = s.hi().max(-s.lo()).max(0) as usize;
    let coeff = |k: usize| s.coeff_or_zero(-(k as i64));
    let mut chol = BandedCholesky::new(m, d);
    let mut prev: Option<Vec<CMatrix>> = None;
    let mut stable = 0;
    let scale = s.max_abs();
    let mut last = Vec::new();
    while chol.next_index() < MAX_BLOCK_ROWS {
        let row = chol.push(coeff)?.to_vec();
        let complete = row.len() == d + 1;
        if complete {
            if let Some(p) = &prev {
                let change = row.iter().zip(p).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                if change <= 1e-15 * scale.max(1.0) {
                    stable += 1;
                } else {
                    stable = 0;
                }
            }
            prev = Some(row.clone());
        }
        last = row;
        if stable >= 3 {
            break;
        }
    }
    let blocks = chol.next_index();
    let coeffs: Vec<CMatrix> = last.into_iter().rev().collect();
    let w = LaurentMatrix::new(m, m, -(coeffs.len() as i64) + 1, coeffs);
    let residual = UnitCircleGrid::standard().sup_norm(&(&(&w * &w.adjoint()) - s))?;
    if residual > SPECTRAL_TOL * scale.max(1.0) {
        return Err(Error::Convergence(format!(
            "spectral factor residual {residual:e} after {blocks} block rows"
        )));
    }
    Ok(SpectralFactor { w, residual, blocks })
}
