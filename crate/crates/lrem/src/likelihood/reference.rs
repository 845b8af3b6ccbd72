//! Closed-form likelihoods of the builtin families, independent of the grid engine.
//!
//! Cagan integrals are variances of real ARMA filters, obtained exactly from the
//! linear equations linking autocovariances and impulse responses.

use nalgebra::{DMatrix, DVector};

use super::Family;
use crate::error::{Error, Result};

const SEAM_TOL: f64 = 1e-12;

/// `ℓ(θ)` for `family` with true parameters `truth`, from closed forms.
///
/// Cagan candidates on `|β| = 1` or `|βψ| = 1` (and truths on `|β₀| = 1`) are rejected.
pub fn reference_likelihood(family: Family, truth: &[f64], point: &[f64]) -> Result<f64> {
    let arity = family.parameters().len();
    if truth.len() != arity || point.len() != arity {
        return Err(Error::Dimension(format!("{} takes {arity} parameters", family.name())));
    }
    match family {
        Family::Cagan => cagan(truth[0], truth[1], point[0], point[1]),
        Family::CaganRegularized => cagan_regularized(truth[0], point[0]),
        Family::Nongeneric => Ok(nongeneric(truth[0], point[0])),
        Family::NongenericRegularized => Ok(nongeneric_regularized(truth[0], point[0])),
    }
}

fn on_seam(x: f64) -> bool {
    (x.abs() - 1.0).abs() <= SEAM_TOL
}

fn seam_check(beta0: f64, beta: f64) -> Result<()> {
    if on_seam(beta0) || on_seam(beta) {
        return Err(Error::Boundary(format!("|β| = 1 (β₀ = {beta0}, β = {beta})")));
    }
    Ok(())
}

/// Polynomials in the lag operator, coefficients by increasing lag.
type Lag = Vec<f64>;

fn lag_mul(a: &[f64], b: &[f64]) -> Lag {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `E X_t²` for `A(L) X_t = B(L) ε_t`, with `A(0) ≠ 0` and `A` stable.
fn arma_variance(b: &[f64], a: &[f64]) -> f64 {
    let lead = a[0];
    let a: Lag = a.iter().map(|x| x / lead).collect();
    let b: Lag = b.iter().map(|x| x / lead).collect();
    let (p, q) = (a.len() - 1, b.len() - 1);
    let mut h = vec![0.0; q + 1];
    for n in 0..=q {
        h[n] = b[n] - (1..=n.min(p)).map(|i| a[i] * h[n - i]).sum::<f64>();
    }
    // Σ_i a_i γ_|k-i| = Σ_{j ≥ k} b_j h_{j-k},  k = 0..=p.
    let mut lhs = DMatrix::<f64>::zeros(p + 1, p + 1);
    let mut rhs = DVector::<f64>::zeros(p + 1);
    for k in 0..=p {
        for (i, ai) in a.iter().enumerate() {
            lhs[(k, k.abs_diff(i))] += ai;
        }
        rhs[k] = (k..=q).map(|j| b[j] * h[j - k]).sum();
    }
    lhs.lu().solve(&rhs).expect("stable autoregressive part")[0]
}

fn cagan(beta0: f64, psi0: f64, beta: f64, psi: f64) -> Result<f64> {
    seam_check(beta0, beta)?;
    let (truth_num, truth_den): (Lag, Lag) = if beta0.abs() < 1.0 {
        (vec![1.0], vec![1.0])
    } else {
        (vec![psi0, -1.0 / beta0], vec![1.0, -1.0 / beta0])
    };
    if beta.abs() < 1.0 {
        return Ok(arma_variance(&truth_num, &truth_den));
    }
    if on_seam(beta * psi) {
        return Err(Error::Boundary(format!("|βψ| = 1 (β = {beta}, ψ = {psi})")));
    }
    // 1/K̃ = (1 - β⁻¹L) / (ψ - β⁻¹L), reflected to (1 - β⁻¹L) / (β⁻¹ - ψL) when |βψ| < 1.
    let (log_term, inv_den) = if (beta * psi).abs() > 1.0 {
        ((psi * psi).ln(), vec![psi, -1.0 / beta])
    } else {
        ((beta * beta).recip().ln(), vec![1.0 / beta, -psi])
    };
    let num = lag_mul(&truth_num, &[1.0, -1.0 / beta]);
    let den = lag_mul(&truth_den, &inv_den);
    Ok(log_term + arma_variance(&num, &den))
}

fn cagan_regularized(beta0: f64, beta: f64) -> Result<f64> {
    seam_check(beta0, beta)?;
    let truth_var = if beta0.abs() < 1.0 { 1.0 } else { beta0.powi(-2) };
    Ok(if beta.abs() < 1.0 {
        truth_var
    } else {
        beta.powi(-2).ln() + beta * beta * truth_var
    })
}

fn nongeneric(theta0: f64, theta: f64) -> f64 {
    match (theta0 == 0.0, theta == 0.0) {
        // Both diagonal: K = Ξ, so the trace term is the dimension.
        (true, true) => 2.0,
        (true, false) => theta.powi(-2) + 1.0 + theta * theta,
        (false, true) => theta0.powi(-2) + 1.0 + theta0 * theta0,
        (false, false) => {
            theta * theta * (1.0 + theta0.powi(-2)) - 2.0 * theta * theta0 + theta0 * theta0 * (1.0 + theta.powi(-2))
        }
    }
}

fn nongeneric_regularized(theta0: f64, theta: f64) -> f64 {
    let weights = |t: f64| (t / (1.0 + t * t), 1.0 / (1.0 + t * t));
    let (a, b) = weights(theta);
    let (a0, b0) = weights(theta0);
    (b + a * theta0).powi(2) + (b * a0 - a * b0).powi(2) + (theta - theta0).powi(2) + (theta * a0 + b0).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arma_variance_oracles() {
        assert!((arma_variance(&[1.0], &[1.0, -0.5]) - 4.0 / 3.0).abs() < 1e-15);
        assert!((arma_variance(&[2.0, -0.5], &[1.0]) - 4.25).abs() < 1e-15);
        // ARMA(1,1): (1 + 2φθ + θ²)/(1 - φ²).
        let (phi, th) = (0.6, 0.3);
        let expect = (1.0 + 2.0 * phi * th + th * th) / (1.0 - phi * phi);
        assert!((arma_variance(&[1.0, th], &[1.0, -phi]) - expect).abs() < 1e-14);
        // AR(2) with roots 1/0.5 and 1/-0.4.
        let (p1, p2): (f64, f64) = (0.1, 0.2);
        let expect = (1.0 - p2) / ((1.0 + p2) * ((1.0 - p2).powi(2) - p1 * p1));
        assert!((arma_variance(&[1.0], &[1.0, -p1, -p2]) - expect).abs() < 1e-14);
    }

    #[test]
    fn cagan_branches() {
        assert_eq!(reference_likelihood(Family::Cagan, &[0.5, 0.0], &[0.3, 9.0]).unwrap(), 1.0);
        // K = Ξ: log ψ² + 1.
        let v = reference_likelihood(Family::Cagan, &[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert!((v - (4.0f64.ln() + 1.0)).abs() < 1e-14);
        // Large |β| along ψ = -1 approaches log ψ² + 1/ψ² = 1.
        let v = reference_likelihood(Family::Cagan, &[0.5, 0.0], &[1e6, -1.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-5);
        assert!(reference_likelihood(Family::Cagan, &[2.0, 2.0], &[2.0, 0.5]).is_err());
        assert!(reference_likelihood(Family::Cagan, &[1.0, 2.0], &[2.0, 2.0]).is_err());
    }

    #[test]
    fn regularized_cagan_branches() {
        let v = reference_likelihood(Family::CaganRegularized, &[0.5], &[2.0]).unwrap();
        assert!((v - (0.25f64.ln() + 4.0)).abs() < 1e-15);
        let v = reference_likelihood(Family::CaganRegularized, &[2.0], &[0.1]).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!(reference_likelihood(Family::CaganRegularized, &[2.0], &[-1.0]).is_err());
    }

    #[test]
    fn nongeneric_branches() {
        assert_eq!(reference_likelihood(Family::Nongeneric, &[0.0], &[1.0]).unwrap(), 3.0);
        assert_eq!(reference_likelihood(Family::Nongeneric, &[1.0], &[1.0]).unwrap(), 2.0);
        assert_eq!(reference_likelihood(Family::Nongeneric, &[1.0], &[0.0]).unwrap(), 3.0);
        assert_eq!(reference_likelihood(Family::Nongeneric, &[0.0], &[0.0]).unwrap(), 2.0);
        // At the truth the regularized trace term is the dimension.
        for t in [-1.5, 0.0, 0.4] {
            let v = reference_likelihood(Family::NongenericRegularized, &[t], &[t]).unwrap();
            assert!((v - 2.0).abs() < 1e-14);
        }
    }
}
