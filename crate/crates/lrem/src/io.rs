//! JSON model files.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows. A coefficient
//! `{"power": s, "base": A, "linear": {"θ": B}}` contributes `(A + θ B) z^s` to the symbol.
//! Unknown keys are rejected everywhere.
//!
//! ```
//! let spec = lrem::io::parse_model(r#"{
//!     "m": 1, "n": 1,
//!     "driver": {"type": "white", "r": 1},
//!     "coefficients": [
//!         {"power": 0, "base": [[[1, 0]]]},
//!         {"power": -1, "base": [[[0, 0]]], "linear": {"alpha": [[[-1, 0]]]}}
//!     ],
//!     "parameters": {"alpha": 0.5}
//! }"#).unwrap();
//! assert_eq!(spec.terms, lrem::model::builtin("ar1").unwrap().terms);
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{CMatrix, LaurentMatrix, LaurentPoly, RationalMatrix};
use crate::model::{builtin, Driver, ModelSpec, Term, BUILTINS};
use crate::regularize::RegularizerSpec;

/// A complex entry `[re, im]`.
pub type Entry = [f64; 2];
/// A matrix as a list of rows.
pub type MatrixRows = Vec<Vec<Entry>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub m: usize,
    pub n: usize,
    pub driver: DriverFile,
    pub coefficients: Vec<CoefficientFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<Vec<PowerMatrix>>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<RegularizerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DriverFile {
    White {
        r: usize,
    },
    Rational {
        r: usize,
        gamma: RationalFile,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upsilon: Option<RationalFile>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    pub power: i64,
    pub base: MatrixRows,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub linear: BTreeMap<String, MatrixRows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerMatrix {
    pub power: i64,
    pub matrix: MatrixRows,
}

/// `num(z) / den(z)` with `den = Σ_k den[k] z^(lo + k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalFile {
    pub num: Vec<PowerMatrix>,
    pub den: PolyFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyFile {
    pub lo: i64,
    pub coeffs: Vec<Entry>,
}

fn entry(e: &Entry, what: &str) -> Result<Complex64> {
    if !(e[0].is_finite() && e[1].is_finite()) {
        return Err(Error::Parse(format!("{what}: non-finite entry")));
    }
    Ok(Complex64::new(e[0], e[1]))
}

fn decode_matrix(rows: &MatrixRows, shape: (usize, usize), what: &str) -> Result<CMatrix> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        let found: Vec<usize> = rows.iter().map(Vec::len).collect();
        return Err(Error::Parse(format!(
            "{what}: expected {}x{}, found {} rows of lengths {found:?}",
            shape.0,
            shape.1,
            rows.len()
        )));
    }
    let mut out = CMatrix::zeros(shape.0, shape.1);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            out[(i, j)] = entry(e, what)?;
        }
    }
    Ok(out)
}

fn encode_matrix(a: &CMatrix) -> MatrixRows {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

/// Shape of the first row-list, for blocks whose size is not fixed by `m` and `n`.
fn shape_of(rows: &MatrixRows) -> (usize, usize) {
    (rows.len(), rows.first().map_or(0, Vec::len))
}

fn decode_powers(terms: &[PowerMatrix], shape: (usize, usize), what: &str) -> Result<LaurentMatrix> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        if !seen.insert(t.power) {
            return Err(Error::Parse(format!("{what}: power {} listed twice", t.power)));
        }
        out.push((t.power, decode_matrix(&t.matrix, shape, &format!("{what} at z^{}", t.power))?));
    }
    Ok(LaurentMatrix::from_terms(shape.0, shape.1, out))
}

fn encode_powers(p: &LaurentMatrix) -> Vec<PowerMatrix> {
    if p.is_zero() {
        return Vec::new();
    }
    (p.lo()..=p.hi())
        .filter_map(|k| {
            let c = p.coeff_or_zero(k);
            (!c.iter().all(|x| *x == Complex64::new(0.0, 0.0))).then(|| PowerMatrix {
                power: k,
                matrix: encode_matrix(&c),
            })
        })
        .collect()
}

fn decode_rational(f: &RationalFile, what: &str) -> Result<RationalMatrix> {
    let shape = f.num.first().map(|t| shape_of(&t.matrix)).unwrap_or((0, 0));
    if shape.0 == 0 || shape.1 == 0 {
        return Err(Error::Parse(format!("{what}: numerator needs at least one nonempty coefficient")));
    }
    let num = decode_powers(&f.num, shape, what)?;
    let coeffs = f
        .den
        .coeffs
        .iter()
        .map(|e| entry(e, what))
        .collect::<Result<Vec<_>>>()?;
    RationalMatrix::new(num, LaurentPoly::new(f.den.lo, coeffs))
}

fn encode_rational(r: &RationalMatrix) -> RationalFile {
    let num = if r.num.is_zero() {
        vec![PowerMatrix {
            power: 0,
            matrix: encode_matrix(&CMatrix::zeros(r.shape().0, r.shape().1)),
        }]
    } else {
        encode_powers(&r.num)
    };
    RationalFile {
        num,
        den: PolyFile {
            lo: r.den.lo(),
            coeffs: r.den.coeffs().iter().map(|c| [c.re, c.im]).collect(),
        },
    }
}

impl ModelFile {
    pub fn from_spec(spec: &ModelSpec) -> Self {
        let driver = match &spec.driver {
            Driver::White => DriverFile::White { r: spec.n },
            Driver::Rational { gamma, upsilon } => DriverFile::Rational {
                r: gamma.shape().1,
                gamma: encode_rational(gamma),
                upsilon: upsilon.as_ref().map(encode_rational),
            },
        };
        Self {
            m: spec.m,
            n: spec.n,
            driver,
            coefficients: spec
                .terms
                .iter()
                .map(|t| CoefficientFile {
                    power: t.power,
                    base: encode_matrix(&t.base),
                    linear: t.linear.iter().map(|(k, v)| (k.clone(), encode_matrix(v))).collect(),
                })
                .collect(),
            forcing: spec.forcing.as_ref().map(encode_powers),
            parameters: spec.parameters.clone(),
            regularizer: spec.regularizer.clone(),
            builtin: spec.name.clone().filter(|n| BUILTINS.contains(&n.as_str())),
        }
    }

    /// Checks shapes and the model invariants, and that a named builtin matches its encoding.
    pub fn into_spec(self) -> Result<ModelSpec> {
        let (m, n) = (self.m, self.n);
        let driver = match &self.driver {
            DriverFile::White { r } => {
                if *r != n {
                    return Err(Error::Parse(format!("white driver has r = {r} but n = {n}")));
                }
                Driver::White
            }
            DriverFile::Rational { r, gamma, upsilon } => {
                let gamma = decode_rational(gamma, "gamma")?;
                if gamma.shape() != (n, *r) {
                    return Err(Error::Parse(format!("gamma must be {n}x{r}, found {:?}", gamma.shape())));
                }
                let upsilon = upsilon.as_ref().map(|u| decode_rational(u, "upsilon")).transpose()?;
                Driver::Rational { gamma, upsilon }
            }
        };
        let mut seen = std::collections::BTreeSet::new();
        let mut terms = Vec::with_capacity(self.coefficients.len());
        for c in &self.coefficients {
            if !seen.insert(c.power) {
                return Err(Error::Parse(format!("coefficient of z^{} listed twice", c.power)));
            }
            let what = format!("coefficient of z^{}", c.power);
            let linear = c
                .linear
                .iter()
                .map(|(k, v)| Ok((k.clone(), decode_matrix(v, (m, m), &format!("{what}, slope '{k}'"))?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            terms.push(Term {
                power: c.power,
                base: decode_matrix(&c.base, (m, m), &what)?,
                linear,
            });
        }
        if let Some((name, _)) = self.parameters.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Parse(format!("parameter '{name}' is not finite")));
        }
        let spec = ModelSpec {
            name: self.builtin.clone(),
            m,
            n,
            terms,
            forcing: self.forcing.as_ref().map(|f| decode_powers(f, (m, n), "forcing")).transpose()?,
            driver,
            parameters: self.parameters,
            regularizer: self.regularizer,
        };
        spec.validate()?;
        if let Some(name) = &spec.name {
            let reference = builtin(name)?;
            let same_model = ModelSpec {
                parameters: reference.parameters.clone(),
                regularizer: reference.regularizer.clone(),
                ..spec.clone()
            };
            if same_model != reference || spec.parameters.keys().ne(reference.parameters.keys()) {
                return Err(Error::Model(format!("file does not encode the builtin '{name}'")));
            }
        }
        Ok(spec)
    }
}

pub fn parse_model(json: &str) -> Result<ModelSpec> {
    let file: ModelFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_spec()
}

pub fn load_model(path: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

pub fn model_to_json(spec: &ModelSpec) -> String {
    serde_json::to_string_pretty(&ModelFile::from_spec(spec)).expect("model files serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::c64;

    fn reload(spec: &ModelSpec) -> ModelSpec {
        parse_model(&model_to_json(spec)).unwrap()
    }

    fn bits(spec: &ModelSpec) -> Vec<u64> {
        let mut out = Vec::new();
        let mut push = |a: &CMatrix| out.extend(a.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]));
        for t in &spec.terms {
            push(&t.base);
            t.linear.values().for_each(&mut push);
        }
        if let Some(f) = &spec.forcing {
            f.coeffs().iter().for_each(&mut push);
        }
        out
    }

    #[test]
    fn builtins_round_trip() {
        for name in BUILTINS {
            let spec = builtin(name).unwrap();
            let back = reload(&spec);
            assert_eq!(back, spec);
            assert_eq!(bits(&back), bits(&spec));
        }
    }

    #[test]
    fn awkward_values_round_trip_bit_for_bit() {
        let mut spec = builtin("nongeneric").unwrap();
        spec.name = None;
        spec.terms[0].base[(0, 1)] = Complex64::new(0.1 + 0.2, -1e-300);
        spec.terms[1].linear.get_mut("theta").unwrap()[(1, 1)] = Complex64::new(std::f64::consts::PI, 5e-324);
        spec.forcing = Some(LaurentMatrix::from_terms(
            2,
            2,
            [(0, CMatrix::identity(2, 2)), (-3, CMatrix::from_element(2, 2, c64(1.0 / 3.0)))],
        ));
        spec.parameters.insert("theta".into(), -0.7000000000000001);
        let once = reload(&spec);
        assert_eq!(bits(&once), bits(&spec));
        assert_eq!(once, spec);
        assert_eq!(model_to_json(&once), model_to_json(&spec));
    }

    #[test]
    fn rational_driver_round_trips() {
        let mut spec = builtin("ar1").unwrap();
        spec.name = None;
        spec.driver = Driver::Rational {
            gamma: RationalMatrix::new(LaurentMatrix::identity(1), LaurentPoly::one_minus(c64(0.25), -1)).unwrap(),
            upsilon: None,
        };
        assert_eq!(reload(&spec), spec);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let good = model_to_json(&builtin("cagan").unwrap());
        assert!(parse_model(&good).is_ok());
        let unknown = good.replacen("\"m\"", "\"extra\": 1, \"m\"", 1);
        assert!(matches!(parse_model(&unknown), Err(Error::Parse(_))));
        let compact = serde_json::to_string(&ModelFile::from_spec(&builtin("cagan").unwrap())).unwrap();
        let ragged = compact.replacen("[[[1.0,0.0]]]", "[[[1.0,0.0],[0.0,0.0]]]", 1);
        assert!(matches!(parse_model(&ragged), Err(Error::Parse(_))));
        let tampered = compact.replacen("[[[1.0,0.0]]]", "[[[2.0,0.0]]]", 1);
        assert!(matches!(parse_model(&tampered), Err(Error::Model(_))));
        let bad_driver = compact.replace("\"r\":1", "\"r\":2");
        assert!(parse_model(&bad_driver).is_err());
        let driver_extra = compact.replace("\"r\":1", "\"r\":1,\"gamma\":null");
        assert!(parse_model(&driver_extra).is_err());
    }
}
