use std::fmt::Write as _;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `x_j = −L + j·(2L/N)`, `j = 0..N`, periodic with period `2L`.
///
/// `N` is a power of two no smaller than 256; `x_{N/2} = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    n_points: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 1 << 8;

    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("grid half-width must be positive, got {half_width}")));
        }
        if !n_points.is_power_of_two() || n_points < Self::MIN_POINTS {
            return Err(Error::Domain(format!(
                "grid size must be a power of two ≥ {}, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { half_width, n_points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + self.spacing() * j as f64
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.x(j))
    }

    /// Angular frequency of DFT bin `k` (standard FFT ordering).
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.n_points as isize;
        let k = k as isize;
        let signed = if k < n / 2 { k } else { k - n };
        PI * signed as f64 / self.half_width
    }

    /// Highest resolved angular frequency, `π / spacing`.
    pub fn frequency_cutoff(&self) -> f64 {
        PI / self.spacing()
    }

    /// Index range of grid points with `|x| ≤ r`.
    pub fn central_indices(&self, r: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_points).filter(move |&j| self.x(j).abs() <= r)
    }

    pub fn header(&self) -> String {
        format!(
            "# grid half_width={} n_points={} spacing={}",
            self.half_width,
            self.n_points,
            self.spacing()
        )
    }
}

/// Samples of a real function on a [`Grid`]. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Domain(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid sample {j} at x = {}", grid.x(j))));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n_points()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid integral over one period.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    pub fn csv(&self) -> String {
        let mut out = self.grid.header();
        out.push_str("\nx,value\n");
        for (x, v) in self.grid.points().zip(&self.values) {
            let _ = writeln!(out, "{x},{v}");
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": {
                "half_width": self.grid.half_width,
                "n_points": self.grid.n_points,
                "spacing": self.grid.spacing(),
            },
            "x": self.grid.points().collect::<Vec<_>>(),
            "value": self.values,
        })
    }
}

/// DFT coefficients `Σ_j f_j e^{−2πijk/N}` of a grid function, FFT ordered.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Multiplies bin `k` by `m(u_k)`. The Nyquist bin gets the real part of
    /// `m` so that real inputs stay real.
    pub fn apply_multiplier<M: Fn(f64) -> Complex64>(&mut self, m: M) {
        let nyquist = self.grid.n_points / 2;
        for (k, c) in self.coefficients.iter_mut().enumerate() {
            let factor = m(self.grid.frequency(k));
            *c *= if k == nyquist { Complex64::new(factor.re, 0.0) } else { factor };
        }
    }
}

pub(crate) fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

pub fn forward(f: &GridFunction) -> Spectrum {
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(buf.len(), false).process(&mut buf);
    Spectrum { grid: f.grid, coefficients: buf }
}

/// Inverse DFT; returns the real part and the largest imaginary residue.
pub fn inverse(s: &Spectrum) -> Result<(GridFunction, f64)> {
    let mut buf = s.coefficients.clone();
    plan(buf.len(), true).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    let residue = buf.iter().fold(0.0f64, |m, c| m.max((c.im * scale).abs()));
    let values = buf.iter().map(|c| c.re * scale).collect();
    Ok((GridFunction::new(s.grid, values)?, residue))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(10.0, 256).is_ok());
        assert!(Grid::new(10.0, 128).is_err());
        assert!(Grid::new(10.0, 300).is_err());
        assert!(Grid::new(0.0, 256).is_err());
        let g = Grid::new(10.0, 256).unwrap();
        assert_eq!(g.x(128), 0.0);
        assert_eq!(g.x(0), -10.0);
        assert!(g.spacing() > 0.0);
        assert_eq!(g.frequency(1), -g.frequency(255));
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = Grid::new(1.0, 256).unwrap();
        let mut v = vec![0.0; 256];
        v[3] = f64::NAN;
        assert!(matches!(GridFunction::new(g, v), Err(Error::NonFinite(_))));
        assert!(GridFunction::new(g, vec![0.0; 255]).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = Grid::new(1.0, 256).unwrap();
        let f = GridFunction::zeros(g);
        let csv = f.csv();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("# grid half_width=1"));
        assert_eq!(lines.next().unwrap(), "x,value");
        assert_eq!(csv.lines().count(), 258);
    }

    proptest! {
        #[test]
        fn fourier_round_trip(values in proptest::collection::vec(-1e3f64..1e3, 256)) {
            let g = Grid::new(3.0, 256).unwrap();
            let f = GridFunction::new(g, values).unwrap();
            let (back, residue) = inverse(&forward(&f)).unwrap();
            let scale = f.max_abs().max(1.0);
            prop_assert!(residue < 1e-10 * scale);
            for (a, b) in f.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() < 1e-10 * scale);
            }
        }
    }
}
