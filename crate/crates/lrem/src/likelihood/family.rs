//! Parameterized candidate transfer functions built from the builtin models.

use crate::error::{Error, Result};
use crate::laurent::TransferFunction;
use crate::model::builtin;
use crate::regularize::tikhonov_solve;
use crate::solver::{assemble_solution, solve, Classification};

/// A one- or two-parameter family of solutions whose likelihood surface can be scanned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `1 - β z`, with the free kernel weight fixed by `Ξ(∞) = ψ` when `|β| > 1`.
    Cagan,
    /// `1 - β z`, minimum-norm solution.
    CaganRegularized,
    /// `[[z², 0], [θ z, 1]]`, the particular solution.
    Nongeneric,
    /// `[[z², 0], [θ z, 1]]`, minimum-norm solution.
    NongenericRegularized,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Cagan,
        Family::CaganRegularized,
        Family::Nongeneric,
        Family::NongenericRegularized,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Cagan => "cagan",
            Self::CaganRegularized => "cagan-regularized",
            Self::Nongeneric => "nongeneric",
            Self::NongenericRegularized => "nongeneric-regularized",
        }
    }

    /// Looks up a family by model name, e.g. `("cagan", true)`, or by its full name.
    pub fn from_model(name: &str, regularized: bool) -> Result<Self> {
        let base = match name {
            "cagan" | "cagan-regularized" => Self::Cagan,
            "nongeneric" | "nongeneric-regularized" => Self::Nongeneric,
            other => return Err(Error::Model(format!("no likelihood family for model '{other}'"))),
        };
        Ok(if regularized || name.ends_with("-regularized") {
            base.regularized()
        } else {
            base
        })
    }

    fn regularized(self) -> Self {
        match self {
            Self::Cagan | Self::CaganRegularized => Self::CaganRegularized,
            Self::Nongeneric | Self::NongenericRegularized => Self::NongenericRegularized,
        }
    }

    /// Parameter names in coordinate order.
    pub fn parameters(&self) -> &'static [&'static str] {
        match self {
            Self::Cagan => &["beta", "psi"],
            Self::CaganRegularized => &["beta"],
            Self::Nongeneric | Self::NongenericRegularized => &["theta"],
        }
    }

    /// Coordinate of a parameter, accepting the Greek letters as aliases.
    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        let canonical = match name {
            "β" => "beta",
            "ψ" => "psi",
            "θ" => "theta",
            other => other,
        };
        self.parameters().iter().position(|&p| p == canonical)
    }

    fn model(&self) -> &'static str {
        match self {
            Self::Cagan | Self::CaganRegularized => "cagan",
            Self::Nongeneric | Self::NongenericRegularized => "nongeneric",
        }
    }

    fn check(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.parameters().len() {
            return Err(Error::Dimension(format!(
                "{} takes {} parameters, got {}",
                self.name(),
                self.parameters().len(),
                point.len()
            )));
        }
        Ok(())
    }

    /// The candidate transfer function at `point` and the classification of its model.
    pub fn instantiate(&self, point: &[f64]) -> Result<(TransferFunction, Classification)> {
        self.check(point)?;
        let name = self.parameters()[0];
        let inst = builtin(self.model())?.at(&[(name, point[0])])?;
        match self {
            Self::Cagan => {
                let set = solve(&inst)?;
                if set.kernel.is_empty() {
                    return Ok((set.particular, set.classification));
                }
                // One kernel element; pick its weight so that Ξ(∞) = ψ.
                let base = set.particular.at_infinity()[(0, 0)];
                let slope = set.kernel[0].at_infinity()[(0, 0)];
                let w = (crate::laurent::c64(point[1]) - base) / slope;
                let xi = assemble_solution(&set.particular, &set.kernel, &[w])?;
                Ok((xi, set.classification))
            }
            Self::Nongeneric => {
                let set = solve(&inst)?;
                Ok((set.particular, set.classification))
            }
            Self::CaganRegularized | Self::NongenericRegularized => {
                let sol = tikhonov_solve(&inst)?;
                Ok((sol.transfer, sol.classification))
            }
        }
    }

    pub fn transfer(&self, point: &[f64]) -> Result<TransferFunction> {
        Ok(self.instantiate(point)?.0)
    }
}
