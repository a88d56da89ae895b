//! Scalar wave optics on a 1-D transverse grid.
//!
//! Fields are sampled at cell centres and treated as piecewise constant over
//! each cell. Both propagators integrate the kernel exactly over every cell,
//! so they stay free of sampling ghosts at short distances.

mod aperture;
mod fresnel_integral;
mod modes;
mod propagate;

pub use aperture::{apply_aperture, Aperture, SlitSide, SlitWindow};
pub(crate) use aperture::apply_window;
pub use fresnel_integral::fresnel;
pub use modes::{hermite_gauss, split_lobes};
pub use propagate::{
    double_slit_closed_form, fraunhofer_distance, fraunhofer_pattern, fresnel_propagate,
    fresnel_propagate_with_gradient,
    gaussian_beam_width,
};

use num_complex::Complex64;

use crate::error::{ensure_positive, input, Result};

/// Uniform sample positions `x0 + i·dx`, `i < n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        ensure_positive("grid spacing", dx)?;
        if !x0.is_finite() {
            return input("grid origin must be finite");
        }
        if n == 0 {
            return input("grid must have at least one sample");
        }
        Ok(Self { x0, dx, n })
    }

    /// `n` samples from `min` to `max` inclusive.
    pub fn linspace(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(max > min) {
            return input(format!("invalid scan range {min}..{max} with {n} samples"));
        }
        Self::new(min, (max - min) / (n - 1) as f64, n)
    }

    /// `n` cells of width `span / n` centred on `center`; for even `n` no
    /// sample sits on the centre.
    pub fn centered(center: f64, span: f64, n: usize) -> Result<Self> {
        ensure_positive("grid span", span)?;
        if n == 0 {
            return input("grid must have at least one sample");
        }
        let dx = span / n as f64;
        Self::new(center - 0.5 * (n as f64 - 1.0) * dx, dx, n)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn last(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Left edge of the first cell.
    pub fn lower_edge(&self) -> f64 {
        self.x0 - 0.5 * self.dx
    }

    /// Right edge of the last cell.
    pub fn upper_edge(&self) -> f64 {
        self.last() + 0.5 * self.dx
    }

    pub fn approx_eq(&self, other: &Grid) -> bool {
        let tol = 1e-9 * self.dx;
        self.n == other.n && (self.x0 - other.x0).abs() <= tol && (self.dx - other.dx).abs() <= 1e-12 * self.dx
    }
}

/// Complex amplitude sampled on a transverse grid at longitudinal plane `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub samples: Vec<Complex64>,
    pub grid: Grid,
    pub wavelength: f64,
    pub z: f64,
}

impl ScalarField {
    pub fn new(samples: Vec<Complex64>, grid: Grid, wavelength: f64, z: f64) -> Result<Self> {
        ensure_positive("wavelength", wavelength)?;
        if samples.len() != grid.n {
            return input(format!("{} samples for a grid of {}", samples.len(), grid.n));
        }
        if !z.is_finite() {
            return input("plane coordinate must be finite");
        }
        Ok(Self { samples, grid, wavelength, z })
    }

    pub fn zeros(grid: Grid, wavelength: f64, z: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); grid.n], grid, wavelength, z)
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: Grid, wavelength: f64, z: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid.positions().into_iter().map(f).collect(), grid, wavelength, z)
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    /// `Σ|u|²·dx`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// `⟨self|other⟩ = Σ conj(self)·other·dx`; grids must match.
    pub fn overlap(&self, other: &ScalarField) -> Result<Complex64> {
        self.ensure_same_grid(other)?;
        let sum: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.grid.dx)
    }

    /// Overlap restricted to samples with `keep(x)`.
    pub fn partial_overlap(&self, other: &ScalarField, keep: impl Fn(f64) -> bool) -> Result<Complex64> {
        self.ensure_same_grid(other)?;
        let mut sum = Complex64::new(0.0, 0.0);
        for (i, (a, b)) in self.samples.iter().zip(&other.samples).enumerate() {
            if keep(self.grid.x(i)) {
                sum += a.conj() * b;
            }
        }
        Ok(sum * self.grid.dx)
    }

    pub fn scaled(&self, c: Complex64) -> ScalarField {
        ScalarField {
            samples: self.samples.iter().map(|s| s * c).collect(),
            ..self.clone()
        }
    }

    /// Pointwise `self + other` on a shared grid.
    pub fn plus(&self, other: &ScalarField) -> Result<ScalarField> {
        self.ensure_same_grid(other)?;
        Ok(ScalarField {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    /// Copy scaled to unit power; `None` when the field is identically zero.
    pub fn normalized(&self) -> Option<ScalarField> {
        let p = self.power();
        (p > 0.0).then(|| self.scaled(Complex64::new(1.0 / p.sqrt(), 0.0)))
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|s| s.re == 0.0 && s.im == 0.0)
    }

    /// Linear interpolation of the complex amplitude at `x`; zero outside the grid.
    pub fn value_at(&self, x: f64) -> Complex64 {
        let t = (x - self.grid.x0) / self.grid.dx;
        if !(t >= 0.0) || t > (self.grid.n - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = (t.floor() as usize).min(self.grid.n.saturating_sub(2));
        if self.grid.n == 1 {
            return self.samples[0];
        }
        let frac = t - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn ensure_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.approx_eq(&other.grid) {
            Ok(())
        } else {
            input("fields live on different grids")
        }
    }
}

/// Detector readout: rates at transverse positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub positions: Vec<f64>,
    pub rates: Vec<f64>,
    pub label: String,
}

impl Pattern {
    pub fn new(positions: Vec<f64>, rates: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if positions.len() != rates.len() {
            return input(format!(
                "pattern has {} positions but {} rates",
                positions.len(),
                rates.len()
            ));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return input("pattern rates must be finite and nonnegative");
        }
        Ok(Self {
            positions,
            rates,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}
