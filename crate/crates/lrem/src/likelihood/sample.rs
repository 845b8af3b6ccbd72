//! Exact Gaussian likelihood of a sample path and simulation of paths.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{autocovariances_of, impulse_series, is_real, real_part};
use crate::banded::BandedCholesky;
use crate::error::{Error, Result};
use crate::laurent::{CMatrix, TransferFunction};

/// Largest impulse-response mass a simulation may discard.
pub const SIM_TAIL_TOL: f64 = 1e-8;

/// A Cholesky row that changes by less than this (relative) for three rows is reused.
const FROZEN_TOL: f64 = 1e-14;

/// `ℓ_T(K) = (log det Σ_T + x^* Σ_T⁻¹ x) / T`, with `Σ_T` the block Toeplitz covariance of
/// `T` consecutive observations under `K` and `x` a `T×m` sample (one row per period).
///
/// The band of `Σ_T` is factored row by row; once the factor's rows stop changing the last
/// row is reused, so long samples cost `O(T · band)`.
pub fn finite_sample_likelihood(k: &TransferFunction, x: &CMatrix) -> Result<f64> {
    let m = k.rows();
    if x.ncols() != m {
        return Err(Error::Dimension(format!("sample has {} columns, model has {m} rows", x.ncols())));
    }
    let t_len = x.nrows();
    if t_len == 0 {
        return Err(Error::Dimension("empty sample".into()));
    }
    let h = impulse_series(k)?;
    let band = h.len() - 1;
    let mut gamma = autocovariances_of(&h, band);
    if gamma.iter().all(is_real) && h.iter().all(is_real) {
        gamma = gamma.iter().map(real_part).collect();
    }
    let scale = gamma[0].norm().max(f64::MIN_POSITIVE);
    let mut chol = BandedCholesky::new(m, band);
    // Solved blocks y_i = L_ii⁻¹ (x_i - Σ_k L_{i,i-k} y_{i-k}), most recent last.
    let mut solved: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(t_len);
    let mut frozen: Option<Vec<CMatrix>> = None;
    let mut previous: Option<Vec<CMatrix>> = None;
    let mut stable = 0;
    let (mut log_det, mut quad) = (0.0, 0.0);
    for i in 0..t_len {
        let row = match &frozen {
            Some(row) => row.clone(),
            None => {
                let row = chol
                    .push(|k| gamma[k].clone())
                    .map_err(|e| Error::NotInvertible(format!("sample covariance is singular: {e}")))?
                    .to_vec();
                if row.len() == band + 1 {
                    if let Some(p) = &previous {
                        let change = row.iter().zip(p).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                        stable = if change <= FROZEN_TOL * scale.sqrt() { stable + 1 } else { 0 };
                    }
                    previous = Some(row.clone());
                    if stable >= 3 {
                        frozen = Some(row.clone());
                    }
                }
                row
            }
        };
        let mut rhs = x.row(i).transpose();
        for (lag, l) in row.iter().enumerate().skip(1) {
            rhs -= l * &solved[i - lag];
        }
        let y = row[0]
            .solve_lower_triangular(&rhs)
            .ok_or_else(|| Error::NotInvertible("singular diagonal block".into()))?;
        log_det += row[0].diagonal().iter().map(|d| 2.0 * d.norm().ln()).sum::<f64>();
        quad += y.norm_squared();
        solved.push(y);
    }
    Ok((log_det + quad) / t_len as f64)
}

/// Sample length, pre-sample draws, MA truncation, seed and replication count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub t: usize,
    pub burn_in: usize,
    /// Number of impulse responses kept; `None` picks the shortest with tail mass ≤ 1e-8.
    pub truncation: Option<usize>,
    pub seed: u64,
    pub replications: usize,
}

impl SimConfig {
    pub fn new(t: usize, seed: u64) -> Self {
        Self {
            t,
            burn_in: 100,
            truncation: None,
            seed,
            replications: 1,
        }
    }
}

/// `len × dim` standard normal draws from the ChaCha stream `(seed, replicate)`, row by row.
pub fn innovations(seed: u64, replicate: u64, len: usize, dim: usize) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    let draws: Vec<f64> = (0..len * dim).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(len, dim, &draws)
}

/// `X_t = Σ_{s ≤ S} Ξ_s ζ_{t-s}` for `t = 1..T`, one path per replication.
///
/// Replication `j` draws from stream `j` of the seed, so paths do not depend on scheduling.
pub fn simulate_paths(xi: &TransferFunction, cfg: &SimConfig) -> Result<Vec<DMatrix<f64>>> {
    let coeffs = match cfg.truncation {
        None => xi.series(SIM_TAIL_TOL)?.0,
        Some(s) => {
            let h = xi.impulse_responses(s + 1);
            let tail = xi.series(SIM_TAIL_TOL * 1e-3)?.0;
            let dropped: f64 = (s + 1..=(-tail.lo()).max(0) as usize)
                .map(|k| tail.coeff_or_zero(-(k as i64)).norm())
                .sum();
            if dropped > SIM_TAIL_TOL {
                return Err(Error::Convergence(format!("truncation {s} discards mass {dropped:e}")));
            }
            return simulate_with(&h, cfg);
        }
    };
    let len = if coeffs.is_zero() { 1 } else { (-coeffs.lo()) as usize + 1 };
    let h: Vec<CMatrix> = (0..len).map(|s| coeffs.coeff_or_zero(-(s as i64))).collect();
    simulate_with(&h, cfg)
}

fn simulate_with(h: &[CMatrix], cfg: &SimConfig) -> Result<Vec<DMatrix<f64>>> {
    if !h.iter().all(is_real) {
        return Err(Error::Model("simulation needs real impulse responses".into()));
    }
    let (m, r) = h[0].shape();
    let taps: Vec<DMatrix<f64>> = h.iter().map(|c| c.map(|v: Complex64| v.re)).collect();
    let lead = taps.len() - 1 + cfg.burn_in;
    Ok((0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let z = innovations(cfg.seed, rep, lead + cfg.t, r);
            let mut path = DMatrix::<f64>::zeros(cfg.t, m);
            for t in 0..cfg.t {
                let now = lead + t;
                let mut row = path.row_mut(t);
                for (s, tap) in taps.iter().enumerate() {
                    row += (tap * z.row(now - s).transpose()).transpose();
                }
            }
            path
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::{c64, LaurentMatrix, LaurentPoly};
    use crate::likelihood::{autocovariances, Family};

    fn ar1(alpha: f64) -> TransferFunction {
        TransferFunction::new(LaurentMatrix::identity(1), LaurentPoly::one_minus(c64(alpha), -1), 0.0).unwrap()
    }

    fn column(v: &[f64]) -> CMatrix {
        CMatrix::from_iterator(v.len(), 1, v.iter().map(|&x| c64(x)))
    }

    #[test]
    fn white_noise_likelihood() {
        let one = TransferFunction::constant(CMatrix::identity(1, 1));
        assert_eq!(finite_sample_likelihood(&one, &column(&[0.0; 4])).unwrap(), 0.0);
        assert!((finite_sample_likelihood(&one, &column(&[1.0; 4])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ar1_two_observations_by_hand() {
        // Σ = [[4/3, 2/3], [2/3, 4/3]], det = 4/3, x^* Σ⁻¹ x = 3/4 for x = (1, 1/2).
        let v = finite_sample_likelihood(&ar1(0.5), &column(&[1.0, 0.5])).unwrap();
        let expect = 0.5 * (4.0f64 / 3.0).ln() + 0.375;
        assert!((v - expect).abs() < 1e-13, "{v} vs {expect}");
    }

    #[test]
    fn agrees_with_dense_cholesky_past_the_frozen_row() {
        let k = ar1(0.8);
        let t = 300;
        let x = innovations(3, 0, t, 1).map(c64);
        let g = autocovariances(&k, t).unwrap();
        let sigma = CMatrix::from_fn(t, t, |a, b| g[a.abs_diff(b)][(0, 0)]);
        let l = sigma.cholesky().unwrap().l();
        let y = l.solve_lower_triangular(&x).unwrap();
        let log_det: f64 = l.diagonal().iter().map(|d| 2.0 * d.re.ln()).sum();
        let dense = (log_det + y.norm_squared()) / t as f64;
        let banded = finite_sample_likelihood(&k, &x).unwrap();
        assert!((dense - banded).abs() < 1e-12, "{dense} vs {banded}");
    }

    #[test]
    fn singular_covariance_is_an_error() {
        let zero = TransferFunction::zeros(1, 1);
        assert!(finite_sample_likelihood(&zero, &column(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn white_path_is_the_innovation_draw() {
        let one = TransferFunction::constant(CMatrix::identity(2, 2));
        let cfg = SimConfig {
            t: 5,
            burn_in: 0,
            truncation: None,
            seed: 42,
            replications: 2,
        };
        let paths = simulate_paths(&one, &cfg).unwrap();
        assert_eq!(paths[0], innovations(42, 0, 5, 2));
        assert_eq!(paths[1], innovations(42, 1, 5, 2));
        assert_ne!(paths[0], paths[1]);
        assert_eq!(paths, simulate_paths(&one, &cfg).unwrap());
    }

    fn variance_within_three_se(path: &DMatrix<f64>, gamma0: f64, rho: f64) {
        let n = path.nrows() as f64;
        let mean = path.mean();
        let var = path.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        // Var of the sample variance of a Gaussian AR(1): 2 γ0² (1 + ρ²) / ((1 - ρ²) n).
        let se = (2.0 * gamma0 * gamma0 * (1.0 + rho * rho) / ((1.0 - rho * rho) * n)).sqrt();
        assert!((var - gamma0).abs() < 3.0 * se, "variance {var}, expected {gamma0} ± {se}");
    }

    #[test]
    fn ar1_sample_variance() {
        let paths = simulate_paths(&ar1(0.5), &SimConfig::new(100_000, 7)).unwrap();
        variance_within_three_se(&paths[0], 4.0 / 3.0, 0.5);
    }

    #[test]
    fn regularized_cagan_is_white_with_variance_a_quarter() {
        let xi = Family::CaganRegularized.transfer(&[2.0]).unwrap();
        let paths = simulate_paths(&xi, &SimConfig::new(100_000, 11)).unwrap();
        variance_within_three_se(&paths[0], 0.25, 0.0);
    }

    #[test]
    fn explicit_truncation_is_checked() {
        let mut cfg = SimConfig::new(10, 1);
        cfg.truncation = Some(5);
        assert!(simulate_paths(&ar1(0.5), &cfg).is_err());
        cfg.truncation = Some(40);
        assert!(simulate_paths(&ar1(0.5), &cfg).is_ok());
    }
}
