//! Limiting and finite-sample Gaussian likelihoods of transfer functions.
//!
//! A candidate `K` (an `m×r` causal transfer function) is scored against a true
//! transfer function `Ξ` by
//!
//! ```text
//! ℓ(K) = log det(K̃(∞) K̃(∞)^*) + ∫ tr{(K K^*)⁻¹ Ξ Ξ^*} dμ
//! ```
//!
//! where `K̃` is the outer factor of `K K^*`. The integral is a mean over the standard
//! grid. [`finite_sample_likelihood`] is the exact Gaussian likelihood of a sample path,
//! and converges to `ℓ` in probability.

mod family;
mod reference;
mod sample;
mod scan;

pub use family::Family;
pub use reference::reference_likelihood;
pub use sample::{finite_sample_likelihood, innovations, simulate_paths, SimConfig, SIM_TAIL_TOL};
pub use scan::{scan, GridAxis, LikelihoodSurface, Minimum, ScanOptions, SurfacePoint};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laurent::{c64, CMatrix, LaurentMatrix, LaurentPoly, Location, TransferFunction, UnitCircleGrid};
use crate::whf::spectral_factor;

/// Candidates whose smallest singular value on the grid falls below this are on a ridge.
pub const RIDGE_TOL: f64 = 1e-6;

/// Truncation accuracy of the impulse responses behind autocovariances.
pub const SERIES_TOL: f64 = 1e-14;

/// Outcome of [`limiting_likelihood`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LikelihoodValue {
    /// `NaN` on a ridge.
    pub value: f64,
    pub ridge: bool,
    /// Smallest singular value of `K` over the grid.
    pub min_singular: f64,
}

/// The outer (Wold) factor `K̃` with `K̃ K̃^* = K K^*` on the circle and `det K̃` free of
/// zeros outside the disk.
///
/// Scalar candidates reflect each numerator zero outside the disk with a Blaschke factor
/// and drop pure delays; matrix candidates go through the spectral factor of `N N^*`.
pub fn outer_factor(k: &TransferFunction) -> Result<TransferFunction> {
    let (m, r) = k.shape();
    if m != r {
        return Err(Error::Dimension(format!("outer factor of a {m}x{r} transfer function")));
    }
    if k.num().is_zero() {
        return Err(Error::Boundary("zero transfer function".into()));
    }
    if m == 1 {
        scalar_outer(k)
    } else {
        let n = k.num();
        let w = spectral_factor(&(n * &n.adjoint())).map_err(|e| match e {
            Error::NotInvertible(msg) => Error::Boundary(msg),
            other => other,
        })?;
        TransferFunction::new(w.w, k.den().clone(), k.tail())
    }
}

fn scalar_outer(k: &TransferFunction) -> Result<TransferFunction> {
    let p = k.num().entry(0, 0);
    let lead = p.coeff(p.hi());
    let roots = p.roots();
    if let Some(z) = roots.expanded(Location::OnCircle).first() {
        return Err(Error::Boundary(format!("zero of K on the unit circle at {z}")));
    }
    // p = lead · z^hi · Π (1 - ρ z⁻¹); each ρ outside becomes |ρ| (1 - ρ̄⁻¹ z⁻¹).
    let mut num = LaurentPoly::constant(lead);
    for root in &roots.roots {
        let rho = root.value;
        let factor = if rho.norm() > 1.0 {
            LaurentPoly::one_minus(rho.conj().inv(), -1).scale(c64(rho.norm()))
        } else {
            LaurentPoly::one_minus(rho, -1)
        };
        for _ in 0..root.multiplicity {
            num = &num * &factor;
        }
    }
    TransferFunction::new(LaurentMatrix::from_poly(&num), k.den().clone(), k.tail())
}

/// `ℓ(K)` against the truth `Ξ`; ridge points are reported with a `NaN` value.
pub fn limiting_likelihood(k: &TransferFunction, xi: &TransferFunction) -> Result<LikelihoodValue> {
    if k.rows() != xi.rows() {
        return Err(Error::Dimension(format!(
            "candidate has {} rows, truth has {}",
            k.rows(),
            xi.rows()
        )));
    }
    let grid = UnitCircleGrid::standard();
    let kv = k.eval_grid(&grid)?;
    let xv = xi.eval_grid(&grid)?;
    let mut min_singular = f64::INFINITY;
    let mut integral = 0.0;
    for p in 0..grid.len() {
        let kp = kv.at(p);
        let spectral = &kp * kp.adjoint();
        // σ_min(K)² = λ_min(K K^*); squaring costs nothing near the ridge threshold.
        let lambda = spectral.clone().symmetric_eigenvalues().min();
        min_singular = min_singular.min(lambda.max(0.0).sqrt());
        let truth = xv.at(p);
        // tr{(K K^*)⁻¹ Ξ Ξ^*} = ‖C⁻¹ Ξ‖_F² with K K^* = C C^*.
        if let Some(chol) = spectral.cholesky() {
            let solved = chol
                .l()
                .solve_lower_triangular(&truth)
                .unwrap_or_else(|| CMatrix::from_element(truth.nrows(), truth.ncols(), c64(f64::INFINITY)));
            integral += solved.norm_squared();
        } else {
            integral = f64::INFINITY;
        }
    }
    if min_singular < RIDGE_TOL || !integral.is_finite() {
        return Ok(LikelihoodValue {
            value: f64::NAN,
            ridge: true,
            min_singular,
        });
    }
    let lead = outer_factor(k)?.at_infinity();
    let log_det = (&lead * lead.adjoint()).determinant().re.ln();
    Ok(LikelihoodValue {
        value: log_det + integral / grid.len() as f64,
        ridge: false,
        min_singular,
    })
}

/// `γ_j = Σ_t h_{t+j} h_t^*` for `j = 0..=lags`, the lag-`j` autocovariance of `X_t = Σ h_s ζ_{t-s}`.
pub fn autocovariances(k: &TransferFunction, lags: usize) -> Result<Vec<CMatrix>> {
    let h = impulse_series(k)?;
    Ok(autocovariances_of(&h, lags))
}

pub(crate) fn impulse_series(k: &TransferFunction) -> Result<Vec<CMatrix>> {
    let (series, _) = k.series(SERIES_TOL)?;
    let (m, r) = k.shape();
    if series.is_zero() {
        return Ok(vec![CMatrix::zeros(m, r)]);
    }
    let len = (-series.lo()) as usize + 1;
    Ok((0..len).map(|s| series.coeff_or_zero(-(s as i64))).collect())
}

pub(crate) fn autocovariances_of(h: &[CMatrix], lags: usize) -> Vec<CMatrix> {
    let m = h[0].nrows();
    (0..=lags)
        .map(|j| {
            let mut g = CMatrix::zeros(m, m);
            for t in 0..h.len().saturating_sub(j) {
                g += &h[t + j] * h[t].adjoint();
            }
            g
        })
        .collect()
}

fn is_real(c: &CMatrix) -> bool {
    let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    c.iter().all(|v| v.im.abs() <= 1e-12 * scale.max(1.0))
}

fn real_part(c: &CMatrix) -> CMatrix {
    c.map(|v| Complex64::new(v.re, 0.0))
}
