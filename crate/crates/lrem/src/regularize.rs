//! Selecting one solution out of an indeterminate model.
//!
//! The minimum-norm solution is `𝑴^* (𝑴 𝑴^*)⁻¹ 𝜑 Γ`. When `M` has no negative powers,
//! `𝑴 𝑴^*` is the Toeplitz operator of `S = M M^*`; otherwise, with `P = z^q M`, it is
//! that Toeplitz operator minus a rank-`q·m` correction, handled by the Woodbury identity.
//! A general penalty `‖L φ‖²` is then minimized over the kernel directions.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use lrem_linalg as linalg;

use crate::error::{Error, Result};
use crate::hardy::ToeplitzInverse;
use crate::laurent::{c64, CMatrix, GridValues, LaurentMatrix, LaurentPoly, TransferFunction, UnitCircleGrid};
use crate::model::{Instance, ModelSpec, Params};
use crate::solver::{residuals, solve, Classification};

/// Smallest admissible Gram eigenvalue for a unique penalized solution.
pub const GRAM_TOL: f64 = 1e-10;
/// Arc endpoints within this distance of a grid angle are snapped onto it.
pub const ARC_SNAP: f64 = 1e-12;

/// The penalty operator `L`. Coordinates are 0-based row indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegularizerSpec {
    Identity,
    Coordinates { indices: Vec<usize> },
    /// `φ ↦ V φ_j`, the one-step-ahead expectation of coordinate `j`.
    ExpectationShift { coordinate: usize },
    /// Second differences of each pair of coordinates, the second one scaled by `weight`.
    SecondDifference { pairs: Vec<(usize, usize)>, weight: f64 },
    /// Restriction to half-open frequency arcs `[lo, hi)` in radians.
    BandMask { arcs: Vec<(f64, f64)> },
    Composite { parts: Vec<RegularizerSpec> },
}

impl RegularizerSpec {
    pub fn validate(&self, m: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Regularizer(msg));
        match self {
            Self::Identity => Ok(()),
            Self::Coordinates { indices } => match indices.iter().find(|&&i| i >= m) {
                Some(i) => bad(format!("coordinate {i} out of range for {m} variables")),
                None if indices.is_empty() => bad("no coordinates selected".into()),
                None => Ok(()),
            },
            Self::ExpectationShift { coordinate } if *coordinate >= m => {
                bad(format!("coordinate {coordinate} out of range for {m} variables"))
            }
            Self::ExpectationShift { .. } => Ok(()),
            Self::SecondDifference { pairs, weight } => {
                if pairs.is_empty() {
                    return bad("no coordinate pairs".into());
                }
                if let Some((a, b)) = pairs.iter().find(|(a, b)| *a >= m || *b >= m) {
                    return bad(format!("pair ({a}, {b}) out of range for {m} variables"));
                }
                if !weight.is_finite() {
                    return bad("weight must be finite".into());
                }
                Ok(())
            }
            Self::BandMask { arcs } => {
                let mut spans: Vec<(f64, f64)> = Vec::new();
                for &(lo, hi) in arcs {
                    if !(lo.is_finite() && hi.is_finite() && hi > lo && hi - lo <= TAU + ARC_SNAP) {
                        return bad(format!("invalid arc [{lo}, {hi})"));
                    }
                    let start = lo.rem_euclid(TAU);
                    let end = start + (hi - lo);
                    spans.push((start, end));
                    if end > TAU {
                        spans.push((start - TAU, end - TAU));
                    }
                }
                if arcs.is_empty() {
                    return bad("band mask has no arcs".into());
                }
                spans.sort_by(|a, b| a.0.total_cmp(&b.0));
                if spans.windows(2).any(|w| w[1].0 < w[0].1 - ARC_SNAP) {
                    return bad("band mask arcs overlap".into());
                }
                Ok(())
            }
            Self::Composite { parts } => {
                if parts.is_empty() {
                    return bad("composite regularizer has no parts".into());
                }
                parts.iter().try_for_each(|p| p.validate(m))
            }
        }
    }
}

/// `L f`, represented exactly where possible and on the standard grid for band masks.
#[derive(Clone, Debug)]
pub enum Penalized {
    Series(TransferFunction),
    Grid(GridValues),
    Parts(Vec<Penalized>),
}

impl Penalized {
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        match (self, other) {
            (Self::Series(a), Self::Series(b)) => a.inner(b),
            (Self::Grid(a), Self::Grid(b)) => Ok(a.inner(b)),
            (Self::Parts(a), Self::Parts(b)) if a.len() == b.len() => {
                a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
            }
            _ => Err(Error::Regularizer("penalized elements of different shape".into())),
        }
    }

    pub fn norm_sq(&self) -> Result<f64> {
        Ok(self.inner(self)?.re)
    }
}

fn in_arc(angle: f64, lo: f64, hi: f64) -> bool {
    let mut d = (angle - lo).rem_euclid(TAU);
    if d > TAU - ARC_SNAP {
        d = 0.0;
    }
    d < hi - lo - ARC_SNAP
}

pub fn apply_regularizer(l: &RegularizerSpec, f: &TransferFunction) -> Result<Penalized> {
    l.validate(f.rows())?;
    Ok(match l {
        RegularizerSpec::Identity => Penalized::Series(f.clone()),
        RegularizerSpec::Coordinates { indices } => Penalized::Series(f.select_rows(indices)),
        RegularizerSpec::ExpectationShift { coordinate } => {
            let z = LaurentMatrix::monomial(CMatrix::identity(1, 1), 1);
            Penalized::Series(f.select_rows(&[*coordinate]).apply_symbol(&z))
        }
        RegularizerSpec::SecondDifference { pairs, weight } => {
            let stencil = LaurentPoly::from_real(-1, &[1.0, -2.0, 1.0]);
            let scale = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0), c64(*weight)]));
            let d = LaurentMatrix::constant(scale).scale_poly(&stencil);
            let mut out: Option<TransferFunction> = None;
            for &(a, b) in pairs {
                let block = f.select_rows(&[a, b]).apply_symbol(&d);
                out = Some(match out {
                    None => block,
                    Some(acc) => acc.vstack(&block),
                });
            }
            Penalized::Series(out.expect("validated nonempty"))
        }
        RegularizerSpec::BandMask { arcs } => {
            let grid = UnitCircleGrid::standard();
            let vals = f.eval_grid(&grid)?;
            let (r, c) = vals.shape();
            Penalized::Grid(vals.map_points(r, c, |k, v| {
                let angle = grid.angle(k);
                if arcs.iter().any(|&(lo, hi)| in_arc(angle, lo, hi)) {
                    v
                } else {
                    CMatrix::zeros(r, c)
                }
            }))
        }
        RegularizerSpec::Composite { parts } => {
            Penalized::Parts(parts.iter().map(|p| apply_regularizer(p, f)).collect::<Result<_>>()?)
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MoorePenrose,
    GeneralL,
}

#[derive(Clone, Debug)]
pub struct RegularizedSolution {
    pub transfer: TransferFunction,
    pub method: Method,
    /// `|⟨L φ, L χ_k⟩|` for every kernel element.
    pub optimality: Vec<f64>,
    /// Column residuals of the model equation.
    pub residuals: Vec<f64>,
    /// `ker L ∩ ker 𝑴 = {0}`, read off the Gram matrix of the penalized kernel.
    pub unique: bool,
    pub min_gram_eigenvalue: Option<f64>,
    /// Weights `c` with `φ = ρ - Σ c_k χ_k`, `ρ` the minimum-norm solution.
    pub kernel_weights: Vec<Complex64>,
    pub classification: Classification,
}

/// `(𝑴 𝑴^*)⁻¹` applied to `rhs`, followed by `𝑴^*`.
pub fn moore_penrose(symbol: &LaurentMatrix, rhs: &TransferFunction) -> Result<TransferFunction> {
    let q = (-symbol.lo()).max(0);
    let p = symbol.shift(q);
    let s = &p * &p.adjoint();
    let tinv = ToeplitzInverse::new(&s)?;
    let x0 = tinv.apply(rhs)?;
    let psi = if q == 0 {
        x0
    } else {
        let m = symbol.rows();
        // Columns u_(k,c) = P₋(P z^-k e_c) of the low-rank correction.
        let mut u = p.project_minus();
        for k in 1..q {
            u = u.hstack(&p.shift(-k).project_minus());
        }
        let y = tinv.apply(&TransferFunction::from_series(u, 0.0)?)?;
        let p_star = p.adjoint();
        // U^* X stacks the first q lags of P₋(P^* X).
        let adjoint_lags = |x: &TransferFunction| -> CMatrix {
            let h = x.apply_symbol(&p_star).impulse_responses(q as usize);
            let mut out = CMatrix::zeros(q as usize * m, x.cols());
            for (k, hk) in h.iter().enumerate() {
                out.view_mut((k * m, 0), (m, x.cols())).copy_from(hk);
            }
            out
        };
        let n = q as usize * m;
        let capacitance = CMatrix::identity(n, n) - adjoint_lags(&y);
        let c = capacitance
            .lu()
            .solve(&adjoint_lags(&x0))
            .ok_or_else(|| Error::NotInvertible("M M^* is singular; some partial index is negative".into()))?;
        x0.add(&y.right_mul(&c))
    };
    Ok(psi.apply_symbol(&symbol.adjoint()))
}

/// The minimum-norm solution, certified against the model equation and the kernel.
pub fn tikhonov_solve(inst: &Instance) -> Result<RegularizedSolution> {
    let set = solve(inst)?;
    let transfer = moore_penrose(&inst.symbol, &inst.rhs())?;
    let optimality = set
        .kernel
        .iter()
        .map(|chi| Ok(transfer.inner(chi)?.norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegularizedSolution {
        residuals: residuals(inst, &transfer)?,
        transfer,
        method: Method::MoorePenrose,
        optimality,
        unique: true,
        min_gram_eigenvalue: None,
        kernel_weights: vec![c64(0.0); set.kernel.len()],
        classification: set.classification,
    })
}

/// Minimizer of `‖L φ‖²` over all solutions, computed from the minimum-norm solution by
/// a least-squares correction along the kernel.
pub fn regularized_solve(inst: &Instance, l: &RegularizerSpec) -> Result<RegularizedSolution> {
    let set = solve(inst)?;
    let rho = moore_penrose(&inst.symbol, &inst.rhs())?;
    let l_rho = apply_regularizer(l, &rho)?;
    let l_chi: Vec<Penalized> = set.kernel.iter().map(|c| apply_regularizer(l, c)).collect::<Result<_>>()?;
    let n = l_chi.len();
    let mut gram = CMatrix::zeros(n, n);
    let mut b = CMatrix::zeros(n, 1);
    for k in 0..n {
        for j in k..n {
            let v = l_chi[j].inner(&l_chi[k])?;
            gram[(k, j)] = v;
            gram[(j, k)] = v.conj();
        }
        b[(k, 0)] = l_rho.inner(&l_chi[k])?;
    }
    let (weights, min_eig) = if n == 0 {
        (Vec::new(), None)
    } else {
        let eig = gram.clone().symmetric_eigenvalues().min();
        let svd = linalg::svd(&gram)?;
        let c = svd.solve(&b, GRAM_TOL * svd.max().max(1.0));
        (c.iter().copied().collect::<Vec<_>>(), Some(eig))
    };
    let transfer = set
        .kernel
        .iter()
        .zip(&weights)
        .fold(rho, |acc, (chi, &w)| acc.sub(&chi.scale(w)));
    let l_phi = apply_regularizer(l, &transfer)?;
    let optimality = l_chi
        .iter()
        .map(|lc| Ok(l_phi.inner(lc)?.norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegularizedSolution {
        residuals: residuals(inst, &transfer)?,
        transfer,
        method: Method::GeneralL,
        optimality,
        unique: min_eig.is_none_or(|e| e >= GRAM_TOL),
        min_gram_eigenvalue: min_eig,
        kernel_weights: weights,
        classification: set.classification,
    })
}

/// Steps `2^-k`, `k = 3, …, 12`.
pub fn default_steps() -> Vec<f64> {
    (3..=12).map(|k| 0.5f64.powi(k)).collect()
}

/// One step of a sensitivity probe along one parameter.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub parameter: String,
    pub h: f64,
    /// `sup_z ‖φ(θ₀ + h) - φ(θ₀)‖`.
    pub sup_gap: Option<f64>,
    /// `‖φ(θ₀ + h) - φ(θ₀)‖²` in the Hilbert norm.
    pub norm_gap_sq: Option<f64>,
    /// Sup-norm of the central difference quotient `(φ(θ₀+h) - φ(θ₀-h)) / 2h`.
    pub first_difference: Option<f64>,
    /// Sup-norm of `(φ(θ₀+h) - 2φ(θ₀) + φ(θ₀-h)) / h²`.
    pub second_difference: Option<f64>,
    /// Sup-norm change of the first difference quotient since the previous step.
    pub first_difference_change: Option<f64>,
    /// `log(gap(h_prev) / gap(h)) / log(h_prev / h)`.
    pub observed_order: Option<f64>,
    /// Why the row is incomplete, e.g. a classification change.
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SensitivityReport {
    pub regularized: Vec<ProbeRow>,
    pub unregularized: Vec<ProbeRow>,
}

/// Finite-difference profile of `θ ↦ φ_L(θ)` and, for contrast, of the particular solution.
pub fn sensitivity_probe(
    spec: &ModelSpec,
    base: &Params,
    l: &RegularizerSpec,
    steps: &[f64],
) -> Result<SensitivityReport> {
    let regularized = |p: &Params| -> Result<TransferFunction> {
        Ok(regularized_solve(&spec.instantiate(p)?, l)?.transfer)
    };
    let particular = |p: &Params| -> Result<TransferFunction> { Ok(solve(&spec.instantiate(p)?)?.particular) };
    Ok(SensitivityReport {
        regularized: probe(base, steps, &regularized)?,
        unregularized: probe(base, steps, &particular)?,
    })
}

fn probe(base: &Params, steps: &[f64], f: &dyn Fn(&Params) -> Result<TransferFunction>) -> Result<Vec<ProbeRow>> {
    let grid = UnitCircleGrid::standard();
    let center = f(base)?;
    let mut rows = Vec::new();
    for name in base.keys() {
        let mut prev: Option<(f64, f64, TransferFunction)> = None;
        for &h in steps {
            let at = |d: f64| {
                let mut p = base.clone();
                *p.get_mut(name).expect("own key") += d;
                f(&p)
            };
            let mut row = ProbeRow {
                parameter: name.clone(),
                h,
                sup_gap: None,
                norm_gap_sq: None,
                first_difference: None,
                second_difference: None,
                first_difference_change: None,
                observed_order: None,
                note: None,
            };
            match (at(h), at(-h)) {
                (Ok(plus), Ok(minus)) => {
                    let gap = plus.sub(&center);
                    let sup = plus.sup_distance(&center, &grid)?;
                    let quotient = plus.sub(&minus).scale(c64(0.5 / h));
                    let zero = TransferFunction::zeros(center.rows(), center.cols());
                    let second = plus.add(&minus).sub(&center.scale(c64(2.0))).scale(c64(1.0 / (h * h)));
                    row.sup_gap = Some(sup);
                    row.norm_gap_sq = Some(gap.norm_sq()?);
                    row.first_difference = Some(quotient.sup_distance(&zero, &grid)?);
                    row.second_difference = Some(second.sup_distance(&zero, &grid)?);
                    if let Some((ph, psup, pq)) = &prev {
                        row.first_difference_change = Some(quotient.sup_distance(pq, &grid)?);
                        if *psup > 0.0 && sup > 0.0 {
                            row.observed_order = Some((psup / sup).ln() / (ph / h).ln());
                        }
                    }
                    prev = Some((h, sup, quotient));
                }
                (Err(e), _) | (_, Err(e)) => {
                    row.note = Some(e.to_string());
                    prev = None;
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::toeplitz_oracle;
    use crate::model::builtin;
    use crate::solver::impulse_responses;

    fn re(x: f64) -> Complex64 {
        c64(x)
    }

    fn nongeneric(theta: f64) -> Instance {
        builtin("nongeneric").unwrap().at(&[("theta", theta)]).unwrap()
    }

    /// `[[z⁻², a z⁻¹], [-θ z⁻¹, b]]` with `a = θ/(1+θ²)`, `b = 1/(1+θ²)`.
    fn closed_form(theta: f64) -> Vec<CMatrix> {
        let (a, b) = (theta / (1.0 + theta * theta), 1.0 / (1.0 + theta * theta));
        vec![
            CMatrix::from_row_slice(2, 2, &[re(0.0), re(0.0), re(0.0), re(b)]),
            CMatrix::from_row_slice(2, 2, &[re(0.0), re(a), re(-theta), re(0.0)]),
            CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(0.0)]),
            CMatrix::zeros(2, 2),
        ]
    }

    #[test]
    fn regularizer_examples() {
        let f = TransferFunction::from_series(LaurentMatrix::from_poly(&LaurentPoly::from_real(-1, &[1.0])), 0.0).unwrap();
        let out = apply_regularizer(
            &RegularizerSpec::SecondDifference {
                pairs: vec![(0, 0)],
                weight: 1.0,
            },
            &f,
        )
        .unwrap();
        let Penalized::Series(d) = out else { panic!() };
        let h = d.impulse_responses(4);
        for (k, want) in [1.0, -2.0, 1.0, 0.0].iter().enumerate() {
            assert!((h[k][(0, 0)] - re(*want)).norm() < 1e-15);
            assert!((h[k][(1, 0)] - re(*want)).norm() < 1e-15);
        }
        let constant = TransferFunction::constant(CMatrix::identity(1, 1));
        let Penalized::Series(v) = apply_regularizer(&RegularizerSpec::ExpectationShift { coordinate: 0 }, &constant).unwrap()
        else {
            panic!()
        };
        assert!(v.norm_sq().unwrap() == 0.0);
        assert!(apply_regularizer(&RegularizerSpec::Coordinates { indices: vec![3] }, &constant).is_err());
        assert!(RegularizerSpec::BandMask { arcs: vec![(0.0, 1.0), (0.5, 2.0)] }.validate(1).is_err());
        assert!(RegularizerSpec::Composite { parts: vec![] }.validate(1).is_err());
        // A mask covering the whole circle reproduces the Hilbert norm.
        let xi = TransferFunction::new(LaurentMatrix::identity(1), LaurentPoly::one_minus(re(0.5), -1), 0.0).unwrap();
        let full = apply_regularizer(&RegularizerSpec::BandMask { arcs: vec![(-3.5, TAU - 3.5)] }, &xi).unwrap();
        assert!((full.norm_sq().unwrap() - 4.0 / 3.0).abs() < 1e-12);
        let half = apply_regularizer(&RegularizerSpec::BandMask { arcs: vec![(0.0, std::f64::consts::PI)] }, &xi).unwrap();
        assert!((half.norm_sq().unwrap() - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn minimum_norm_matches_closed_form() {
        for theta in [-2.0, -0.7, 0.0, 0.3, 1.0, 2.0] {
            let inst = nongeneric(theta);
            let sol = tikhonov_solve(&inst).unwrap();
            let h = impulse_responses(&sol.transfer, 3);
            for (k, want) in closed_form(theta).iter().enumerate() {
                assert!((&h[k] - want).norm() < 1e-10, "θ={theta} lag {k}: {}", h[k]);
            }
            assert!(sol.optimality.iter().all(|&g| g < 1e-8));
            assert!(sol.residuals.iter().all(|&r| r < 1e-8));
        }
    }

    #[test]
    fn minimum_norm_for_unique_and_cagan() {
        let ar1 = builtin("ar1").unwrap().at(&[]).unwrap();
        let sol = tikhonov_solve(&ar1).unwrap();
        let part = solve(&ar1).unwrap().particular;
        assert!(sol.transfer.sub(&part).norm_sq().unwrap() < 1e-24);
        // Cagan at β = 2: minimum variance picks ψ = 1/β².
        let cagan = builtin("cagan").unwrap().at(&[("beta", 2.0)]).unwrap();
        let sol = tikhonov_solve(&cagan).unwrap();
        assert!((sol.transfer.at_infinity()[(0, 0)] - re(0.25)).norm() < 1e-12);
        let coord = regularized_solve(&cagan, &RegularizerSpec::Coordinates { indices: vec![0] }).unwrap();
        assert!((coord.transfer.at_infinity()[(0, 0)] - re(0.25)).norm() < 1e-12);
    }

    #[test]
    fn cagan_minimum_variance_by_scanning_psi() {
        // Independent oracle: minimize ‖(ψ - ½ z⁻¹)/(1 - ½ z⁻¹)‖² over ψ on a fine grid.
        let norm = |psi: f64| {
            let xi = TransferFunction::new(
                LaurentMatrix::from_poly(&LaurentPoly::from_real(-1, &[-0.5, psi])),
                LaurentPoly::one_minus(re(0.5), -1),
                0.0,
            )
            .unwrap();
            xi.norm_sq().unwrap()
        };
        let best = (0..=1000)
            .map(|k| -1.0 + 2.0 * k as f64 / 1000.0)
            .min_by(|a, b| norm(*a).total_cmp(&norm(*b)))
            .unwrap();
        assert!((best - 0.25).abs() <= 1e-3);
    }

    #[test]
    fn general_penalties_on_nongeneric_model() {
        let inst = nongeneric(1.0);
        let id = regularized_solve(&inst, &RegularizerSpec::Identity).unwrap();
        let mp = tikhonov_solve(&inst).unwrap();
        assert!(id.transfer.sub(&mp.transfer).norm_sq().unwrap() < 1e-20);
        let second = regularized_solve(&inst, &RegularizerSpec::Coordinates { indices: vec![1] }).unwrap();
        assert!(!second.unique);
        let first = regularized_solve(&inst, &RegularizerSpec::Coordinates { indices: vec![0] }).unwrap();
        assert!(first.unique);
        assert!(first.optimality.iter().all(|&g| g < 1e-8));
        assert!(first.residuals.iter().all(|&r| r < 1e-8));
        let band = RegularizerSpec::Composite {
            parts: vec![
                RegularizerSpec::BandMask {
                    arcs: vec![(0.2, 0.9), (-0.9, -0.2)],
                },
                RegularizerSpec::SecondDifference {
                    pairs: vec![(0, 1)],
                    weight: 0.5,
                },
                RegularizerSpec::ExpectationShift { coordinate: 1 },
            ],
        };
        let sol = regularized_solve(&inst, &band).unwrap();
        assert!(sol.unique);
        assert!(sol.optimality.iter().all(|&g| g < 1e-8), "{:?}", sol.optimality);
    }

    #[test]
    fn unique_models_ignore_the_penalty() {
        let ar1 = builtin("ar1").unwrap().at(&[("alpha", -0.6)]).unwrap();
        let part = solve(&ar1).unwrap().particular;
        for l in [
            RegularizerSpec::Identity,
            RegularizerSpec::ExpectationShift { coordinate: 0 },
            RegularizerSpec::BandMask { arcs: vec![(0.0, 1.0)] },
        ] {
            let sol = regularized_solve(&ar1, &l).unwrap();
            assert!(sol.transfer.sub(&part).norm_sq().unwrap() < 1e-20);
        }
    }

    #[test]
    fn minimum_norm_beats_kernel_perturbations() {
        let inst = nongeneric(0.4);
        let set = solve(&inst).unwrap();
        let sol = tikhonov_solve(&inst).unwrap();
        let base = sol.transfer.norm_sq().unwrap();
        for trial in 0..100 {
            let w: Vec<Complex64> = (0..set.dim())
                .map(|k| Complex64::new(((trial * 7 + k * 3) % 11) as f64 / 5.0 - 1.0, ((trial + k) % 5) as f64 / 4.0 - 0.5))
                .collect();
            let moved = crate::solver::assemble_solution(&sol.transfer, &set.kernel, &w).unwrap();
            assert!(base <= moved.norm_sq().unwrap() + 1e-12);
        }
    }

    #[test]
    fn dense_pseudo_inverse_agrees() {
        for theta in [0.0, 0.5, -1.5] {
            let inst = nongeneric(theta);
            let n = 60;
            let slice = toeplitz_oracle(&inst.symbol, n).unwrap();
            let dense = slice.min_norm_solve(&inst.rhs().num().clone()).unwrap();
            let exact = impulse_responses(&tikhonov_solve(&inst).unwrap().transfer, n / 2);
            for (k, c) in exact.iter().enumerate() {
                let d = dense.series().coeff_or_zero(-(k as i64));
                assert!((&d - c).norm() < 1e-6, "θ={theta} lag {k}");
            }
        }
        // A symbol with negative powers exercises the low-rank correction.
        let sym = LaurentMatrix::from_poly(&LaurentPoly::from_real(-1, &[0.3, 1.0, -2.0]));
        let inst = Instance::white(sym);
        let n = 80;
        let dense = toeplitz_oracle(&inst.symbol, n).unwrap().min_norm_solve(inst.rhs().num()).unwrap();
        let exact = impulse_responses(&tikhonov_solve(&inst).unwrap().transfer, n / 2);
        for (k, c) in exact.iter().enumerate() {
            assert!((&dense.series().coeff_or_zero(-(k as i64)) - c).norm() < 1e-6, "lag {k}");
        }
    }

    #[test]
    fn probe_contrasts_continuity() {
        let spec = builtin("nongeneric").unwrap();
        let base: Params = [("theta".to_string(), 0.0)].into();
        let steps = [0.125, 0.0625, 0.03125];
        let report = sensitivity_probe(&spec, &base, &RegularizerSpec::Identity, &steps).unwrap();
        for row in &report.regularized {
            assert!(row.sup_gap.unwrap() <= 2.0 * row.h);
        }
        for row in report.regularized.iter().skip(1) {
            assert!(row.observed_order.unwrap() >= 0.8);
        }
        for row in &report.unregularized {
            let h = row.h;
            assert!((row.norm_gap_sq.unwrap() - (h.powi(-2) + h * h + 1.0)).abs() < 1e-8 * h.powi(-2));
        }
    }
}
