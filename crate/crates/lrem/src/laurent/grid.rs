//! Uniform grids on the unit circle and FFT evaluation of series.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::matrix::{CMatrix, LaurentMatrix};
use super::poly::LaurentPoly;
use crate::error::{Error, Result};

/// `n` equispaced points `exp(2πik/n)` with a cached inverse FFT plan.
#[derive(Clone)]
pub struct UnitCircleGrid {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitCircleGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitCircleGrid").field("n", &self.n).finish()
    }
}

/// Values of a matrix series at every grid point, stored point-major.
#[derive(Clone, Debug)]
pub struct GridValues {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl UnitCircleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        let fft = FftPlanner::new().plan_fft_inverse(n);
        Ok(Self { n, fft })
    }

    /// The 4096-point grid used for norms and quadrature.
    pub fn standard() -> Self {
        Self::new(super::GRID_N).expect("power of two")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn point(&self, k: usize) -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / self.n as f64)
    }

    /// Angle of point `k` in `[-π, π)`.
    pub fn angle(&self, k: usize) -> f64 {
        let a = std::f64::consts::TAU * k as f64 / self.n as f64;
        if a >= std::f64::consts::PI {
            a - std::f64::consts::TAU
        } else {
            a
        }
    }

    fn check_width(&self, lo: i64, hi: i64) -> Result<()> {
        let width = (hi - lo + 1).max(0) as usize;
        if width > self.n {
            return Err(Error::GridTooSmall { width, n: self.n });
        }
        Ok(())
    }

    fn eval_sequence(&self, lo: i64, coeffs: impl Iterator<Item = Complex64>) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        let n = self.n as i64;
        for (k, c) in coeffs.enumerate() {
            let idx = (lo + k as i64).rem_euclid(n) as usize;
            buf[idx] += c;
        }
        self.fft.process(&mut buf);
        buf
    }

    pub fn eval_poly(&self, p: &LaurentPoly) -> Result<Vec<Complex64>> {
        if p.is_zero() {
            return Ok(vec![Complex64::new(0.0, 0.0); self.n]);
        }
        self.check_width(p.lo(), p.hi())?;
        Ok(self.eval_sequence(p.lo(), p.coeffs().iter().copied()))
    }

    pub fn eval(&self, m: &LaurentMatrix) -> Result<GridValues> {
        let (rows, cols) = m.shape();
        let mut data = vec![Complex64::new(0.0, 0.0); self.n * rows * cols];
        if !m.is_zero() {
            self.check_width(m.lo(), m.hi())?;
            for i in 0..rows {
                for j in 0..cols {
                    let vals = self.eval_sequence(m.lo(), m.coeffs().iter().map(|c| c[(i, j)]));
                    for (k, v) in vals.into_iter().enumerate() {
                        data[(k * rows + i) * cols + j] = v;
                    }
                }
            }
        }
        Ok(GridValues { rows, cols, data })
    }

    /// Largest Frobenius norm of `m` over the grid.
    pub fn sup_norm(&self, m: &LaurentMatrix) -> Result<f64> {
        Ok(self.eval(m)?.sup_norm())
    }
}

impl GridValues {
    pub fn from_fn(n: usize, rows: usize, cols: usize, f: impl Fn(usize) -> CMatrix) -> Self {
        let mut data = Vec::with_capacity(n * rows * cols);
        for k in 0..n {
            let v = f(k);
            for i in 0..rows {
                for j in 0..cols {
                    data.push(v[(i, j)]);
                }
            }
        }
        Self { rows, cols, data }
    }

    pub fn len(&self) -> usize {
        if self.rows * self.cols == 0 {
            0
        } else {
            self.data.len() / (self.rows * self.cols)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> Complex64 {
        self.data[(k * self.rows + i) * self.cols + j]
    }

    pub fn at(&self, k: usize) -> CMatrix {
        let start = k * self.rows * self.cols;
        CMatrix::from_row_slice(self.rows, self.cols, &self.data[start..start + self.rows * self.cols])
    }

    pub fn map_points(&self, rows: usize, cols: usize, f: impl Fn(usize, CMatrix) -> CMatrix) -> Self {
        Self::from_fn(self.len(), rows, cols, |k| f(k, self.at(k)))
    }

    pub fn sup_norm(&self) -> f64 {
        let block = self.rows * self.cols;
        self.data
            .chunks(block.max(1))
            .map(|c| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Quadrature of `tr(A(z) B(z)^*)` against the normalized arc-length measure.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.shape(), other.shape());
        let n = self.len().max(1) as f64;
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            / n
    }
}
