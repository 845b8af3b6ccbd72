//! Existence and uniqueness of stationary solutions, the particular solution and the
//! kernel of the model operator.
//!
//! Solutions are transfer functions `Ξ` (`m×r`) with `P₋(M Ξ) = 𝜑 Γ`. With the
//! factorization `M = M₊ diag(z^κ) M₋` the particular solution is
//! `M₋⁻¹ diag(z^-κ) P₋(M₊⁻¹ 𝜑 Γ)`, and the kernel is spanned by `M₋⁻¹ z^-s E_ij` for
//! `0 ≤ s < κ_i`.

use num_complex::Complex64;
use lrem_linalg as linalg;

use crate::error::{Error, Result};
use crate::hardy::project_causal;
use crate::laurent::{c64, CMatrix, LaurentMatrix, Location, TransferFunction};
use crate::model::Instance;
use crate::whf::{verify_factorization, whf_matrix, Certificate, WhFactorization};

/// Rank threshold for the coprimality test at zeros on the circle.
pub const COPRIME_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum Classification {
    UniqueSolution,
    /// Solutions form an affine space of this (complex) dimension.
    Indeterminate { dim: usize },
    NoSolutionGeneric,
    /// `det M` vanishes at `points`; `coprime` records `rank [M(w) 𝜑(w)] = m` at every one.
    UnitCircleZero { points: Vec<Complex64>, coprime: bool },
}

impl Classification {
    /// Stable tag used in reports.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::UniqueSolution => "unique",
            Self::Indeterminate { .. } => "indeterminate",
            Self::NoSolutionGeneric => "no-solution-generic",
            Self::UnitCircleZero { .. } => "unit-circle-zero",
        }
    }

    pub fn is_solvable(&self) -> bool {
        matches!(self, Self::UniqueSolution | Self::Indeterminate { .. })
    }
}

/// A classification together with the factorization it was read from.
#[derive(Clone, Debug)]
pub struct Classified {
    pub classification: Classification,
    pub kappa: Option<Vec<i64>>,
    pub winding: Option<i64>,
    pub factorization: Option<WhFactorization>,
    pub certificate: Option<Certificate>,
}

pub fn classify(inst: &Instance) -> Result<Classified> {
    let det = inst.symbol.det()?;
    if det.is_zero() {
        return Err(Error::Degenerate("determinant vanishes identically".into()));
    }
    let circle = det.roots().expanded(Location::OnCircle);
    if !circle.is_empty() {
        let rhs = inst.rhs();
        let m = inst.m();
        let mut coprime = true;
        for &w in &circle {
            let (a, b) = (inst.symbol.eval(w), rhs.eval(w));
            let stacked = CMatrix::from_fn(m, m + b.ncols(), |i, j| if j < m { a[(i, j)] } else { b[(i, j - m)] });
            let sv = linalg::singular_values(&stacked)?;
            let floor = COPRIME_TOL * sv[0].max(f64::MIN_POSITIVE);
            coprime &= sv.iter().filter(|&&s| s > floor).count() == m;
        }
        return Ok(Classified {
            classification: Classification::UnitCircleZero { points: circle, coprime },
            kappa: None,
            winding: None,
            factorization: None,
            certificate: None,
        });
    }
    let fac = whf_matrix(&inst.symbol)?;
    let cert = verify_factorization(&inst.symbol, &fac)?;
    if !cert.certified {
        return Err(Error::Factorization(format!(
            "factorization not certified (relative residual {:e}, index sum {}, winding {})",
            cert.relative_residual, cert.index_sum, cert.winding
        )));
    }
    let kappa = fac.kappa.clone();
    let classification = if kappa.iter().any(|&k| k < 0) {
        Classification::NoSolutionGeneric
    } else if kappa.iter().all(|&k| k == 0) {
        Classification::UniqueSolution
    } else {
        Classification::Indeterminate {
            dim: inst.r() * kappa.iter().sum::<i64>() as usize,
        }
    };
    Ok(Classified {
        classification,
        winding: Some(cert.winding),
        kappa: Some(kappa),
        factorization: Some(fac),
        certificate: Some(cert),
    })
}

/// Particular solution, kernel basis and the basis' Gram matrix.
#[derive(Clone, Debug)]
pub struct SolutionSet {
    pub particular: TransferFunction,
    pub kernel: Vec<TransferFunction>,
    /// `gram[(k, l)] = ⟨χ_l, χ_k⟩`.
    pub gram: CMatrix,
    pub classification: Classification,
    pub factorization: WhFactorization,
}

impl SolutionSet {
    pub fn dim(&self) -> usize {
        self.kernel.len()
    }

    pub fn kappa(&self) -> &[i64] {
        &self.factorization.kappa
    }
}

/// Classifies and, when solvable, computes the full solution set.
pub fn solve(inst: &Instance) -> Result<SolutionSet> {
    let c = classify(inst)?;
    match c.classification {
        Classification::UnitCircleZero { points, .. } => Err(Error::CircleSingularity { points }),
        Classification::NoSolutionGeneric => Err(Error::NoSolution {
            kappa: c.kappa.unwrap_or_default(),
        }),
        classification => {
            let fac = c.factorization.expect("solvable classifications carry a factorization");
            let particular = solve_particular(inst, &fac)?;
            let kernel = kernel_basis(inst, &fac)?;
            let gram = gram_matrix(&kernel)?;
            Ok(SolutionSet {
                particular,
                kernel,
                gram,
                classification,
                factorization: fac,
            })
        }
    }
}

fn require_nonnegative(fac: &WhFactorization) -> Result<()> {
    if fac.kappa.iter().any(|&k| k < 0) {
        return Err(Error::NoSolution {
            kappa: fac.kappa.clone(),
        });
    }
    Ok(())
}

/// `M₋⁻¹ · diag(z^-κ) · P₋(M₊⁻¹ 𝜑 Γ)`.
pub fn solve_particular(inst: &Instance, fac: &WhFactorization) -> Result<TransferFunction> {
    require_nonnegative(fac)?;
    let projected = project_causal(&fac.m_plus.inverse()?, &inst.rhs())?;
    projected.delay_rows(&fac.kappa).left_mul_rational(&fac.m_minus.inverse()?)
}

/// The elements `M₋⁻¹ z^-s E_ij`, ordered by row `i`, then driver column `j`, then lag `s`.
pub fn kernel_basis(inst: &Instance, fac: &WhFactorization) -> Result<Vec<TransferFunction>> {
    require_nonnegative(fac)?;
    let (m, r) = (inst.m(), inst.r());
    let minus_inv = fac.m_minus.inverse()?;
    let mut basis = Vec::new();
    for (i, &k) in fac.kappa.iter().enumerate() {
        for j in 0..r {
            for s in 0..k {
                let mut e = CMatrix::zeros(m, r);
                e[(i, j)] = c64(1.0);
                let unit = TransferFunction::from_series(LaurentMatrix::monomial(e, -s), 0.0)?;
                basis.push(unit.left_mul_rational(&minus_inv)?);
            }
        }
    }
    Ok(basis)
}

/// Gram matrix `G[(k, l)] = ⟨χ_l, χ_k⟩`.
pub fn gram_matrix(basis: &[TransferFunction]) -> Result<CMatrix> {
    let n = basis.len();
    let mut g = CMatrix::zeros(n, n);
    for k in 0..n {
        for l in k..n {
            let v = basis[l].inner(&basis[k])?;
            g[(k, l)] = v;
            g[(l, k)] = v.conj();
        }
    }
    Ok(g)
}

/// `Ξ₀ + Σ_k w_k χ_k`.
pub fn assemble_solution(
    particular: &TransferFunction,
    basis: &[TransferFunction],
    weights: &[Complex64],
) -> Result<TransferFunction> {
    if basis.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} kernel elements",
            weights.len(),
            basis.len()
        )));
    }
    Ok(basis
        .iter()
        .zip(weights)
        .fold(particular.clone(), |acc, (chi, &w)| acc.add(&chi.scale(w))))
}

/// Coefficients `Ξ_0, …, Ξ_horizon` of the expansion in powers of `z⁻¹`.
pub fn impulse_responses(xi: &TransferFunction, horizon: usize) -> Vec<CMatrix> {
    xi.impulse_responses(horizon + 1)
}

/// Norms of the columns of `P₋(M Ξ) - 𝜑 Γ`.
pub fn residuals(inst: &Instance, xi: &TransferFunction) -> Result<Vec<f64>> {
    let diff = xi.apply_symbol(&inst.symbol).sub(&inst.rhs());
    column_norms(&diff)
}

/// Norms of the columns of `P₋(M χ)`.
pub fn kernel_residual(inst: &Instance, chi: &TransferFunction) -> Result<f64> {
    Ok(column_norms(&chi.apply_symbol(&inst.symbol))?
        .into_iter()
        .fold(0.0, f64::max))
}

fn column_norms(t: &TransferFunction) -> Result<Vec<f64>> {
    (0..t.cols())
        .map(|j| Ok(t.select_columns(&[j]).norm_sq()?.max(0.0).sqrt()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::LaurentPoly;
    use crate::model::builtin;

    fn re(x: f64) -> Complex64 {
        c64(x)
    }

    fn scalar_model(lo: i64, c: &[f64]) -> Instance {
        Instance::white(LaurentMatrix::from_poly(&LaurentPoly::from_real(lo, c)))
    }

    fn close(a: &TransferFunction, b: &TransferFunction, tol: f64) -> bool {
        a.sub(b).norm_sq().unwrap().sqrt() < tol
    }

    fn geometric(r: f64) -> TransferFunction {
        TransferFunction::new(LaurentMatrix::identity(1), LaurentPoly::one_minus(re(r), -1), 0.0).unwrap()
    }

    #[test]
    fn classification_table() {
        let ar1 = builtin("ar1").unwrap().at(&[("alpha", 0.5)]).unwrap();
        assert_eq!(classify(&ar1).unwrap().classification, Classification::UniqueSolution);
        let cagan = builtin("cagan").unwrap().at(&[("beta", 2.0)]).unwrap();
        assert_eq!(classify(&cagan).unwrap().classification, Classification::Indeterminate { dim: 1 });
        // γ(1 - βz)(1 - αz)z⁻¹ with both roots outside: index -1.
        let (g, b, a) = (1.5, 0.5, -0.4);
        let p = &(&LaurentPoly::one_minus(re(b), 1) * &LaurentPoly::one_minus(re(a), 1)).shift(-1) * &LaurentPoly::constant(re(g));
        let mixed = Instance::white(LaurentMatrix::from_poly(&p));
        assert_eq!(classify(&mixed).unwrap().classification, Classification::NoSolutionGeneric);
        // z⁻¹(az² + bz + c) with both roots inside: one free parameter.
        let inside = scalar_model(-1, &[0.1, -0.5, 1.0]);
        assert_eq!(classify(&inside).unwrap().classification, Classification::Indeterminate { dim: 1 });
        // Unit root shared with the forcing.
        let mut unit = scalar_model(-1, &[-1.0, 1.0]);
        unit.forcing = LaurentMatrix::from_poly(&LaurentPoly::from_real(-1, &[-1.0, 1.0]));
        match classify(&unit).unwrap().classification {
            Classification::UnitCircleZero { points, coprime } => {
                assert!(!coprime);
                assert!((points[0] - re(1.0)).norm() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        let coprime = scalar_model(-1, &[-1.0, 1.0]);
        assert!(matches!(
            classify(&coprime).unwrap().classification,
            Classification::UnitCircleZero { coprime: true, .. }
        ));
    }

    #[test]
    fn particular_solutions() {
        let ar1 = builtin("ar1").unwrap().at(&[("alpha", 0.5)]).unwrap();
        let s = solve(&ar1).unwrap();
        assert!(close(&s.particular, &geometric(0.5), 1e-13));
        assert!(s.kernel.is_empty());
        let cagan = builtin("cagan").unwrap().at(&[("beta", 0.5)]).unwrap();
        let s = solve(&cagan).unwrap();
        assert!(close(&s.particular, &TransferFunction::constant(CMatrix::identity(1, 1)), 1e-13));
        let ng = builtin("nongeneric").unwrap();
        let s = solve(&ng.at(&[("theta", 1.0)]).unwrap()).unwrap();
        let h = impulse_responses(&s.particular, 3);
        let expect = [[0.0, 0.0, 0.0, 0.0], [0.0, 1.0, -1.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0; 4]];
        for (k, e) in expect.iter().enumerate() {
            let want = CMatrix::from_row_slice(2, 2, &e.map(re));
            assert!((&h[k] - want).norm() < 1e-13, "lag {k}: {}", h[k]);
        }
        let s0 = solve(&ng.at(&[("theta", 0.0)]).unwrap()).unwrap();
        let h0 = impulse_responses(&s0.particular, 3);
        assert!((&h0[0] - CMatrix::from_row_slice(2, 2, &[re(0.0), re(0.0), re(0.0), re(1.0)])).norm() < 1e-13);
        assert!((&h0[2] - CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(0.0)])).norm() < 1e-13);
        assert!(h0[1].norm() < 1e-13);
    }

    #[test]
    fn kernel_bases() {
        let cagan = builtin("cagan").unwrap().at(&[("beta", 2.0)]).unwrap();
        let s = solve(&cagan).unwrap();
        assert_eq!(s.dim(), 1);
        let chi = &s.kernel[0];
        let h = chi.impulse_responses(8);
        let ratio = h[0][(0, 0)];
        for (k, c) in h.iter().enumerate() {
            assert!((c[(0, 0)] - ratio * 0.5f64.powi(k as i32)).norm() < 1e-14);
        }
        let ng = builtin("nongeneric").unwrap().at(&[("theta", 0.7)]).unwrap();
        let s = solve(&ng).unwrap();
        assert_eq!(s.dim(), 4);
        assert!(s.gram.symmetric_eigenvalues().min() >= 1e-10);
        for chi in &s.kernel {
            assert!(kernel_residual(&ng, chi).unwrap() < 1e-12);
        }
        let ar1 = builtin("ar1").unwrap().at(&[]).unwrap();
        assert!(solve(&ar1).unwrap().kernel.is_empty());
    }

    #[test]
    fn cagan_family_through_weights() {
        let cagan = builtin("cagan").unwrap().at(&[("beta", 2.0)]).unwrap();
        let s = solve(&cagan).unwrap();
        // Lag-zero response of Ξ₀ is zero, so the weight is fixed by ψ / χ(∞).
        let chi0 = s.kernel[0].at_infinity()[(0, 0)];
        for psi in [2.0, 0.25] {
            let xi = assemble_solution(&s.particular, &s.kernel, &[re(psi) / chi0]).unwrap();
            let want = TransferFunction::new(
                LaurentMatrix::from_poly(&LaurentPoly::from_real(-1, &[-0.5, psi])),
                LaurentPoly::one_minus(re(0.5), -1),
                0.0,
            )
            .unwrap();
            assert!(close(&xi, &want, 1e-13));
        }
        let reg = assemble_solution(&s.particular, &s.kernel, &[re(0.25) / chi0]).unwrap();
        let h = impulse_responses(&reg, 2);
        for (c, want) in h.iter().zip([0.25, -0.375, -0.1875]) {
            assert!((c[(0, 0)] - re(want)).norm() < 1e-14);
        }
        assert!(assemble_solution(&s.particular, &s.kernel, &[]).is_err());
    }

    #[test]
    fn residuals_vanish_for_random_weights() {
        let ng = builtin("nongeneric").unwrap();
        for theta in [0.0, 0.5, -2.0] {
            let inst = ng.at(&[("theta", theta)]).unwrap();
            let s = solve(&inst).unwrap();
            assert_eq!(s.dim(), 2 * s.kappa().iter().sum::<i64>() as usize);
            let w: Vec<Complex64> = (0..s.dim()).map(|k| Complex64::new(0.3 * k as f64 - 0.5, 0.1 * k as f64)).collect();
            let xi = assemble_solution(&s.particular, &s.kernel, &w).unwrap();
            assert!(residuals(&inst, &xi).unwrap().iter().all(|&r| r < 1e-8));
        }
    }

    #[test]
    fn classification_invariant_under_left_constant() {
        let a = CMatrix::from_row_slice(2, 2, &[re(2.0), re(1.0), re(-0.5), re(3.0)]);
        for theta in [0.0, 1.0, -0.3] {
            let inst = builtin("nongeneric").unwrap().at(&[("theta", theta)]).unwrap();
            let mut moved = inst.clone();
            moved.symbol = inst.symbol.left_mul(&a);
            let (c1, c2) = (classify(&inst).unwrap(), classify(&moved).unwrap());
            assert_eq!(c1.classification, c2.classification);
            assert_eq!(c1.winding, c2.winding);
        }
    }

    #[test]
    fn refuses_unsolvable_models() {
        let p = LaurentPoly::from_real(-1, &[1.0, -2.5, 1.0]);
        let inst = Instance::white(LaurentMatrix::from_poly(&p));
        // z⁻¹ - 2.5 + z has roots 2 and 1/2: index 0, unique.
        assert!(solve(&inst).is_ok());
        let neg = Instance::white(LaurentMatrix::from_poly(&LaurentPoly::from_real(-1, &[1.0, -0.2])));
        assert!(matches!(solve(&neg), Err(Error::NoSolution { .. })));
        let unit = scalar_model(-1, &[-1.0, 1.0]);
        assert!(matches!(solve(&unit), Err(Error::CircleSingularity { .. })));
    }
}
