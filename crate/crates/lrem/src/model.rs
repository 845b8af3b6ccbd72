//! Model templates `Σ_s M_s(θ) E_t X_{t+s} = 𝜑 ε_t` with coefficients affine in named parameters.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::laurent::{c64, CMatrix, LaurentMatrix, RationalMatrix, TransferFunction, UnitCircleGrid};
use crate::regularize::RegularizerSpec;

/// Parameter values by name.
pub type Params = BTreeMap<String, f64>;

/// Tolerance on `sup ‖Υ Γ - I‖` for rational drivers.
pub const LEFT_INVERSE_TOL: f64 = 1e-8;

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 4] = ["ar1", "cagan", "mixed", "nongeneric"];

/// Coefficient of `z^power`: `base + Σ_k θ_k linear[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub power: i64,
    pub base: CMatrix,
    pub linear: BTreeMap<String, CMatrix>,
}

/// How the structural shocks are generated.
#[derive(Clone, Debug, PartialEq)]
pub enum Driver {
    /// Standardized white noise of the model's shock dimension.
    White,
    /// Shocks with spectral factor `Γ` (`n×r`, causal and stable) and left inverse `Υ`.
    Rational {
        gamma: RationalMatrix,
        upsilon: Option<RationalMatrix>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub name: Option<String>,
    /// Number of endogenous variables.
    pub m: usize,
    /// Number of structural shocks.
    pub n: usize,
    pub terms: Vec<Term>,
    /// `m×n` loading of the shocks; `None` means `[I_n; 0]`.
    pub forcing: Option<LaurentMatrix>,
    pub driver: Driver,
    pub parameters: Params,
    pub regularizer: Option<RegularizerSpec>,
}

/// A model with all parameters fixed.
#[derive(Clone, Debug)]
pub struct Instance {
    pub symbol: LaurentMatrix,
    pub forcing: LaurentMatrix,
    /// `n×r` spectral factor of the shocks.
    pub gamma: TransferFunction,
    pub params: Params,
}

impl Instance {
    /// Number of driving white-noise components.
    pub fn r(&self) -> usize {
        self.gamma.cols()
    }

    pub fn m(&self) -> usize {
        self.symbol.rows()
    }

    /// Right-hand side `𝜑 Γ` of the operator equation.
    pub fn rhs(&self) -> TransferFunction {
        TransferFunction::from_series(self.forcing.clone(), 0.0)
            .expect("forcing validated as causal")
            .mul(&self.gamma)
    }

    /// Instance with the given symbol, default forcing and white noise.
    pub fn white(symbol: LaurentMatrix) -> Self {
        let m = symbol.rows();
        Self {
            forcing: LaurentMatrix::identity(m),
            gamma: TransferFunction::constant(CMatrix::identity(m, m)),
            symbol,
            params: Params::new(),
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Model(msg));
        if self.m == 0 || self.n == 0 {
            return bad("dimensions must be positive".into());
        }
        if self.terms.is_empty() {
            return bad("model has no coefficients".into());
        }
        for t in &self.terms {
            if t.base.shape() != (self.m, self.m) {
                return bad(format!("coefficient of z^{} is not {}x{}", t.power, self.m, self.m));
            }
            for (name, c) in &t.linear {
                if !self.parameters.contains_key(name) {
                    return bad(format!("unknown parameter '{name}' in coefficient of z^{}", t.power));
                }
                if c.shape() != (self.m, self.m) {
                    return bad(format!("'{name}' slope of z^{} is not {}x{}", t.power, self.m, self.m));
                }
            }
        }
        match &self.forcing {
            Some(f) => {
                if f.shape() != (self.m, self.n) {
                    return bad(format!("forcing must be {}x{}", self.m, self.n));
                }
                if !f.is_zero() && f.hi() > 0 {
                    return bad("forcing must not contain positive powers".into());
                }
            }
            None if self.n > self.m => {
                return bad("default forcing needs n <= m".into());
            }
            None => {}
        }
        if let Some(reg) = &self.regularizer {
            reg.validate(self.m)?;
        }
        self.gamma().map(|_| ())
    }

    fn gamma(&self) -> Result<TransferFunction> {
        match &self.driver {
            Driver::White => Ok(TransferFunction::constant(CMatrix::identity(self.n, self.n))),
            Driver::Rational { gamma, upsilon } => {
                if gamma.shape().0 != self.n {
                    return Err(Error::Model(format!("gamma must have {} rows", self.n)));
                }
                let tf = TransferFunction::new(gamma.num.clone(), gamma.den.clone(), 0.0)
                    .map_err(|e| Error::Model(format!("gamma is not causal and stable: {e}")))?;
                let r = gamma.shape().1;
                let left = match upsilon {
                    Some(u) => u.clone(),
                    None if r == self.n => gamma.inverse()?,
                    None => return Err(Error::Model("a non-square gamma needs an explicit upsilon".into())),
                };
                if left.shape() != (r, self.n) {
                    return Err(Error::Model(format!("upsilon must be {r}x{}", self.n)));
                }
                let grid = UnitCircleGrid::standard();
                let defect = (0..grid.len())
                    .map(|k| {
                        let z = grid.point(k);
                        (left.eval(z) * gamma.eval(z) - CMatrix::identity(r, r)).norm()
                    })
                    .fold(0.0, f64::max);
                if !(defect <= LEFT_INVERSE_TOL) {
                    return Err(Error::Model(format!("upsilon is not a left inverse of gamma (defect {defect:e})")));
                }
                Ok(tf)
            }
        }
    }

    /// Defaults overridden by `overrides`; unknown names are rejected.
    pub fn resolve(&self, overrides: &[(String, f64)]) -> Result<Params> {
        let mut p = self.parameters.clone();
        for (name, value) in overrides {
            match p.get_mut(name) {
                Some(v) => *v = *value,
                None => return Err(Error::Model(format!("unknown parameter '{name}'"))),
            }
        }
        Ok(p)
    }

    /// The symbol `M(z; θ)`.
    pub fn symbol(&self, params: &Params) -> Result<LaurentMatrix> {
        let terms = self.terms.iter().map(|t| {
            let mut c = t.base.clone();
            for (name, slope) in &t.linear {
                c += slope * c64(params[name]);
            }
            (t.power, c)
        });
        let symbol = LaurentMatrix::from_terms(self.m, self.m, terms);
        if symbol.is_zero() {
            return Err(Error::Degenerate("symbol vanishes at these parameters".into()));
        }
        Ok(symbol)
    }

    pub fn instantiate(&self, params: &Params) -> Result<Instance> {
        for name in params.keys() {
            if !self.parameters.contains_key(name) {
                return Err(Error::Model(format!("unknown parameter '{name}'")));
            }
        }
        let mut full = self.parameters.clone();
        full.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
        let forcing = match &self.forcing {
            Some(f) => f.clone(),
            None => {
                let mut c = CMatrix::zeros(self.m, self.n);
                c.view_mut((0, 0), (self.n, self.n)).fill_with_identity();
                LaurentMatrix::constant(c)
            }
        };
        Ok(Instance {
            symbol: self.symbol(&full)?,
            forcing,
            gamma: self.gamma()?,
            params: full,
        })
    }

    /// Instance at the defaults with the listed overrides.
    pub fn at(&self, overrides: &[(&str, f64)]) -> Result<Instance> {
        let owned: Vec<(String, f64)> = overrides.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        self.instantiate(&self.resolve(&owned)?)
    }
}

fn scalar(x: f64) -> CMatrix {
    CMatrix::from_element(1, 1, c64(x))
}

fn real(rows: usize, cols: usize, v: &[f64]) -> CMatrix {
    CMatrix::from_row_slice(rows, cols, &v.iter().map(|&x| c64(x)).collect::<Vec<_>>())
}

fn scalar_model(name: &str, terms: Vec<Term>, params: &[(&str, f64)]) -> ModelSpec {
    ModelSpec {
        name: Some(name.into()),
        m: 1,
        n: 1,
        terms,
        forcing: None,
        driver: Driver::White,
        parameters: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        regularizer: None,
    }
}

fn constant_term(power: i64, base: f64) -> Term {
    Term {
        power,
        base: scalar(base),
        linear: BTreeMap::new(),
    }
}

fn linear_term(power: i64, name: &str, slope: f64) -> Term {
    Term {
        power,
        base: scalar(0.0),
        linear: [(name.to_string(), scalar(slope))].into(),
    }
}

/// The worked examples: `ar1` (`1 - α z⁻¹`), `cagan` (`1 - β z`), `mixed`
/// (`a z + b + c z⁻¹`) and `nongeneric` (`[[z², 0], [θ z, 1]]`).
pub fn builtin(name: &str) -> Result<ModelSpec> {
    let spec = match name {
        "ar1" => scalar_model(
            "ar1",
            vec![constant_term(0, 1.0), linear_term(-1, "alpha", -1.0)],
            &[("alpha", 0.5)],
        ),
        "cagan" => scalar_model(
            "cagan",
            vec![constant_term(0, 1.0), linear_term(1, "beta", -1.0)],
            &[("beta", 2.0)],
        ),
        "mixed" => scalar_model(
            "mixed",
            vec![
                linear_term(1, "a", 1.0),
                linear_term(0, "b", 1.0),
                linear_term(-1, "c", 1.0),
            ],
            &[("a", -0.5), ("b", 1.25), ("c", -0.5)],
        ),
        "nongeneric" => ModelSpec {
            name: Some("nongeneric".into()),
            m: 2,
            n: 2,
            terms: vec![
                Term {
                    power: 2,
                    base: real(2, 2, &[1.0, 0.0, 0.0, 0.0]),
                    linear: BTreeMap::new(),
                },
                Term {
                    power: 1,
                    base: CMatrix::zeros(2, 2),
                    linear: [("theta".to_string(), real(2, 2, &[0.0, 0.0, 1.0, 0.0]))].into(),
                },
                Term {
                    power: 0,
                    base: real(2, 2, &[0.0, 0.0, 0.0, 1.0]),
                    linear: BTreeMap::new(),
                },
            ],
            forcing: None,
            driver: Driver::White,
            parameters: [("theta".to_string(), 1.0)].into(),
            regularizer: None,
        },
        other => return Err(Error::Model(format!("unknown builtin '{other}'"))),
    };
    spec.validate()?;
    Ok(spec)
}
