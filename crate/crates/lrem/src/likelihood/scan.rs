//! Likelihood surfaces over parameter grids and numerical location of their minima.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::sample::{finite_sample_likelihood, simulate_paths, SimConfig};
use super::{limiting_likelihood, Family, RIDGE_TOL};
use crate::error::{Error, Result};
use crate::laurent::{TransferFunction, GRID_N};

/// One grid axis, `steps` equispaced values from `lo` to `hi` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / last)
            .collect()
    }

    fn spacing(&self) -> f64 {
        if self.steps > 1 {
            (self.hi - self.lo) / (self.steps - 1) as f64
        } else {
            0.0
        }
    }
}

impl std::str::FromStr for GridAxis {
    type Err = Error;

    /// Parses `name=lo:hi:steps`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("grid axis '{s}' is not name=lo:hi:steps"));
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [lo, hi, steps] = parts[..] else {
            return Err(bad());
        };
        let num = |v: &str| v.trim().replace('−', "-").parse::<f64>().map_err(|_| bad());
        let axis = Self {
            name: name.trim().to_string(),
            lo: num(lo)?,
            hi: num(hi)?,
            steps: steps.trim().parse().map_err(|_| bad())?,
        };
        if axis.name.is_empty() || axis.steps == 0 || !axis.lo.is_finite() || !axis.hi.is_finite() || axis.hi < axis.lo
        {
            return Err(bad());
        }
        Ok(axis)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanOptions {
    /// Locate and polish strict local minima of the grid.
    pub minimize: bool,
    /// Also evaluate `ℓ_T` on one simulated path of the truth.
    pub finite_sample: Option<SimConfig>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            minimize: true,
            finite_sample: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub coords: Vec<f64>,
    /// `None` where the point is flagged.
    pub value: Option<f64>,
    pub finite_sample: Option<f64>,
    /// Classification tag of the candidate's model, when it could be classified.
    pub classification: Option<String>,
    /// Reason codes: `ridge`, `boundary`, `unsolvable`, `error`.
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Grid point the polish started from.
    pub start: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LikelihoodSurface {
    pub family: String,
    pub parameters: Vec<String>,
    pub truth: Vec<f64>,
    pub axes: Vec<GridAxis>,
    /// Row-major over the axes, the last axis varying fastest.
    pub points: Vec<SurfacePoint>,
    pub minima: Vec<Minimum>,
    pub finite_sample: Option<SimConfig>,
    pub quadrature_points: usize,
    pub ridge_tol: f64,
    pub version: String,
}

impl LikelihoodSurface {
    /// The point with the smallest finite value.
    pub fn grid_minimum(&self) -> Option<&SurfacePoint> {
        self.points
            .iter()
            .filter(|p| p.value.is_some())
            .min_by(|a, b| a.value.unwrap().total_cmp(&b.value.unwrap()))
    }
}

struct Evaluator<'a> {
    family: Family,
    truth: &'a TransferFunction,
}

impl Evaluator<'_> {
    /// `ℓ` at `x`, with `+∞` for anything that cannot be evaluated.
    fn value(&self, x: &[f64]) -> f64 {
        self.family
            .transfer(x)
            .and_then(|k| limiting_likelihood(&k, self.truth))
            .map(|v| if v.ridge { f64::INFINITY } else { v.value })
            .unwrap_or(f64::INFINITY)
    }

    fn point(&self, coords: Vec<f64>, sample: Option<&nalgebra::DMatrix<Complex64>>) -> SurfacePoint {
        let mut out = SurfacePoint {
            coords,
            value: None,
            finite_sample: None,
            classification: None,
            flags: Vec::new(),
            message: None,
        };
        let (k, class) = match self.family.instantiate(&out.coords) {
            Ok(v) => v,
            Err(e) => {
                out.flags.push(
                    match e {
                        Error::CircleSingularity { .. } => "boundary",
                        Error::NoSolution { .. } => "unsolvable",
                        _ => "error",
                    }
                    .into(),
                );
                out.message = Some(e.to_string());
                return out;
            }
        };
        out.classification = Some(class.tag().into());
        match limiting_likelihood(&k, self.truth) {
            Ok(v) if v.ridge => out.flags.push("ridge".into()),
            Ok(v) => out.value = Some(v.value),
            Err(e) => {
                out.flags.push(if matches!(e, Error::Boundary(_)) { "boundary" } else { "error" }.into());
                out.message = Some(e.to_string());
            }
        }
        if let (Some(x), Some(_)) = (sample, out.value) {
            match finite_sample_likelihood(&k, x) {
                Ok(v) => out.finite_sample = Some(v),
                Err(e) => {
                    out.flags.push("finite-sample".into());
                    out.message = Some(e.to_string());
                }
            }
        }
        out
    }
}

/// Evaluates `ℓ` of `family` against the truth at every grid point; optionally locates
/// and polishes the grid's strict local minima.
pub fn scan(family: Family, axes: &[GridAxis], truth: &[f64], options: &ScanOptions) -> Result<LikelihoodSurface> {
    let params = family.parameters();
    if axes.len() != params.len() {
        return Err(Error::Dimension(format!(
            "{} has parameters {params:?}, got {} axes",
            family.name(),
            axes.len()
        )));
    }
    // Reorder the axes into parameter order.
    let mut ordered: Vec<Option<GridAxis>> = vec![None; params.len()];
    for a in axes {
        let i = family
            .parameter_index(&a.name)
            .ok_or_else(|| Error::Parse(format!("{} has no parameter '{}'", family.name(), a.name)))?;
        if ordered[i].replace(a.clone()).is_some() {
            return Err(Error::Parse(format!("axis '{}' given twice", a.name)));
        }
    }
    let axes: Vec<GridAxis> = ordered.into_iter().map(|a| a.expect("one axis per parameter")).collect();
    let xi = family.transfer(truth)?;
    let sample = match &options.finite_sample {
        Some(cfg) => {
            let cfg = SimConfig { replications: 1, ..*cfg };
            Some(simulate_paths(&xi, &cfg)?.remove(0).map(|v| Complex64::new(v, 0.0)))
        }
        None => None,
    };
    let eval = Evaluator { family, truth: &xi };
    let values: Vec<Vec<f64>> = axes.iter().map(GridAxis::values).collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.steps).collect();
    let total: usize = shape.iter().product();
    let points: Vec<SurfacePoint> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let idx = unflatten(flat, &shape);
            let coords = idx.iter().zip(&values).map(|(&i, v)| v[i]).collect();
            eval.point(coords, sample.as_ref())
        })
        .collect();
    let minima = if options.minimize {
        let spacing: Vec<f64> = axes.iter().map(GridAxis::spacing).collect();
        let starts = grid_local_minima(&points, &shape);
        let mut found: Vec<Minimum> = starts
            .into_par_iter()
            .map(|flat| {
                let start = points[flat].coords.clone();
                let f = |x: &[f64]| eval.value(x);
                let point = polish(&f, &start, &spacing);
                let (value, at_start) = (f(&point), f(&start));
                // An isolated minimum (a jump in ℓ) is kept at its grid point.
                if value <= at_start {
                    Minimum { value, point, start }
                } else {
                    Minimum {
                        value: at_start,
                        point: start.clone(),
                        start,
                    }
                }
            })
            .filter(|m| m.value.is_finite())
            .collect();
        found.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut distinct: Vec<Minimum> = Vec::new();
        for m in found {
            if distinct.iter().all(|d| distance(&d.point, &m.point) > 1e-6) {
                distinct.push(m);
            }
        }
        distinct
    } else {
        Vec::new()
    };
    Ok(LikelihoodSurface {
        family: family.name().into(),
        parameters: params.iter().map(|s| s.to_string()).collect(),
        truth: truth.to_vec(),
        axes,
        points,
        minima,
        finite_sample: options.finite_sample.map(|c| SimConfig { replications: 1, ..c }),
        quadrature_points: GRID_N,
        ridge_tol: RIDGE_TOL,
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    idx
}

fn flatten(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Interior grid points strictly below all `3^d - 1` neighbours; flagged points count as `+∞`.
fn grid_local_minima(points: &[SurfacePoint], shape: &[usize]) -> Vec<usize> {
    let value = |flat: usize| points[flat].value.unwrap_or(f64::INFINITY);
    let d = shape.len();
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|code| unflatten(code, &vec![3; d]).iter().map(|&o| o as i64 - 1).collect::<Vec<i64>>())
        .filter(|o| o.iter().any(|&v| v != 0))
        .collect();
    (0..points.len())
        .filter(|&flat| {
            let v = value(flat);
            if !v.is_finite() {
                return false;
            }
            let idx = unflatten(flat, shape);
            if idx.iter().zip(shape).any(|(&i, &n)| i == 0 || i + 1 == n) {
                return false;
            }
            offsets.iter().all(|o| {
                let nb: Vec<usize> = idx.iter().zip(o).map(|(&i, &d)| (i as i64 + d) as usize).collect();
                v < value(flatten(&nb, shape))
            })
        })
        .collect()
}

const GOLDEN_TOL: f64 = 1e-9;
const NEWTON_STEPS: usize = 30;

/// Coordinate-wise golden-section search within one grid cell, then Newton steps on
/// central finite differences.
fn polish(f: &impl Fn(&[f64]) -> f64, start: &[f64], spacing: &[f64]) -> Vec<f64> {
    let mut x = start.to_vec();
    for _ in 0..3 {
        for i in 0..x.len() {
            if spacing[i] == 0.0 {
                continue;
            }
            let mut line = x.clone();
            let mut g = |t: f64| {
                line[i] = t;
                f(&line)
            };
            x[i] = golden_section(&mut g, x[i] - spacing[i], x[i] + spacing[i]);
        }
    }
    newton(f, x)
}

fn golden_section(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL * (1.0 + a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

fn newton(f: &impl Fn(&[f64]) -> f64, mut x: Vec<f64>) -> Vec<f64> {
    let d = x.len();
    let mut fx = f(&x);
    for _ in 0..NEWTON_STEPS {
        let step: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
        let at = |shifts: &[(usize, f64)]| {
            let mut y = x.clone();
            for &(i, s) in shifts {
                y[i] += s;
            }
            f(&y)
        };
        let mut grad = DVector::<f64>::zeros(d);
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            let (hi, lo) = (at(&[(i, step[i])]), at(&[(i, -step[i])]));
            grad[i] = (hi - lo) / (2.0 * step[i]);
            hess[(i, i)] = (hi - 2.0 * fx + lo) / (step[i] * step[i]);
            for j in 0..i {
                let cross = at(&[(i, step[i]), (j, step[j])]) - at(&[(i, step[i]), (j, -step[j])])
                    - at(&[(i, -step[i]), (j, step[j])])
                    + at(&[(i, -step[i]), (j, -step[j])]);
                hess[(i, j)] = cross / (4.0 * step[i] * step[j]);
                hess[(j, i)] = hess[(i, j)];
            }
        }
        if !grad.iter().chain(hess.iter()).all(|v| v.is_finite()) {
            break;
        }
        let Some(chol) = hess.clone().cholesky() else {
            break;
        };
        let mut p = -chol.solve(&grad);
        let mut improved = false;
        for _ in 0..20 {
            let trial: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
            let ft = f(&trial);
            if ft <= fx {
                x = trial;
                fx = ft;
                improved = true;
                break;
            }
            p *= 0.5;
        }
        if !improved || p.norm() < 1e-12 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    x
}
