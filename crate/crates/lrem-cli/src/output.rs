//! Report rendering, CSV tables and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use lrem::laurent::CMatrix;
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::Failure;

/// Imaginary parts below this (relative to the table's largest entry) are dropped.
const REAL_TOL: f64 = 1e-12;

/// Every tolerance that shapes a run, embedded in JSON reports.
pub fn tolerances(factor_tol: f64) -> Value {
    json!({
        "drop": lrem::laurent::DROP_TOL,
        "circle": lrem::laurent::CIRCLE_TOL,
        "cluster": lrem::laurent::CLUSTER_TOL,
        "grid_points": lrem::laurent::GRID_N,
        "factor": factor_tol,
        "spectral": lrem::whf::SPECTRAL_TOL,
        "coprime": lrem::solver::COPRIME_TOL,
        "left_inverse": lrem::model::LEFT_INVERSE_TOL,
        "gram": lrem::regularize::GRAM_TOL,
        "arc_snap": lrem::regularize::ARC_SNAP,
        "ridge": lrem::likelihood::RIDGE_TOL,
        "series": lrem::likelihood::SERIES_TOL,
        "simulation_tail": lrem::likelihood::SIM_TAIL_TOL,
    })
}

/// Shortest round-trip form, switching to an exponent for very large or small magnitudes.
pub fn number(x: f64) -> String {
    format!("{x:?}")
}

/// A CSV table held in memory until it is written.
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

fn is_real(coeffs: &[CMatrix]) -> bool {
    let scale = coeffs
        .iter()
        .flat_map(|c| c.iter())
        .map(|x| x.norm())
        .fold(1.0, f64::max);
    coeffs.iter().flat_map(|c| c.iter()).all(|x| x.im.abs() <= REAL_TOL * scale)
}

/// Impulse responses `Ξ_0..Ξ_S`: column `s`, then the entries of `Ξ_s` in row-major order.
///
/// Complex tables get separate `_re` and `_im` columns.
pub fn impulse_table(name: &str, coeffs: &[CMatrix]) -> Table {
    let (m, r) = coeffs.first().map_or((0, 0), |c| c.shape());
    let real = is_real(coeffs);
    let mut header = vec!["s".to_string()];
    for i in 1..=m {
        for j in 1..=r {
            if real {
                header.push(format!("xi_{i}_{j}"));
            } else {
                header.push(format!("xi_{i}_{j}_re"));
                header.push(format!("xi_{i}_{j}_im"));
            }
        }
    }
    let rows = coeffs
        .iter()
        .enumerate()
        .map(|(s, c)| {
            let mut row = vec![s.to_string()];
            for i in 0..m {
                for j in 0..r {
                    row.push(number(c[(i, j)].re));
                    if !real {
                        row.push(number(c[(i, j)].im));
                    }
                }
            }
            row
        })
        .collect();
    Table {
        name: name.into(),
        header,
        rows,
    }
}

/// A simulated path: `t = 1..T`, then `X1..Xm`.
pub fn path_table(name: &str, path: &DMatrix<f64>) -> Table {
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.ncols()).map(|i| format!("X{i}")));
    let rows = (0..path.nrows())
        .map(|t| {
            let mut row = vec![(t + 1).to_string()];
            row.extend(path.row(t).iter().map(|&x| number(x)));
            row
        })
        .collect();
    Table {
        name: name.into(),
        header,
        rows,
    }
}

/// Row-major coefficient arrays for JSON reports.
pub fn coefficients_json(coeffs: &[CMatrix]) -> Value {
    let real = is_real(coeffs);
    Value::Array(
        coeffs
            .iter()
            .map(|c| {
                let (m, r) = c.shape();
                Value::Array(
                    (0..m)
                        .flat_map(|i| (0..r).map(move |j| (i, j)))
                        .map(|(i, j)| if real { json!(c[(i, j)].re) } else { json!([c[(i, j)].re, c[(i, j)].im]) })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Where results go: files under `--out`, or standard output.
pub struct Sink {
    pub out: Option<PathBuf>,
    pub json: bool,
}

impl Sink {
    fn file(&self, name: &str) -> Result<Option<PathBuf>, Failure> {
        match &self.out {
            None => Ok(None),
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
                Ok(Some(dir.join(name)))
            }
        }
    }

    /// Emits a command's results.
    ///
    /// With `--out`, the report and every table become files and a short summary is
    /// printed. Without it, stdout carries the JSON report under `--json`, the primary
    /// table when there is one, and the text summary otherwise.
    pub fn emit(&self, command: &str, report: &Value, summary: &str, tables: &[Table]) -> Result<(), Failure> {
        let mut stdout = std::io::stdout().lock();
        let mut print = |text: &[u8]| {
            stdout
                .write_all(text)
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::io(format!("stdout: {e}")))
        };
        let pretty = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
        if let Some(path) = self.file(&format!("{command}.json"))? {
            write_atomic(&path, pretty.as_bytes())?;
            for t in tables {
                write_atomic(&self.file(&t.name)?.expect("out directory"), &t.to_bytes())?;
            }
            return if self.json { print(pretty.as_bytes()) } else { print(summary.as_bytes()) };
        }
        if self.json {
            print(pretty.as_bytes())
        } else if let Some(primary) = tables.first() {
            print(&primary.to_bytes())
        } else {
            print(summary.as_bytes())
        }
    }
}
