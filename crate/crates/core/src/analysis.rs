//! Pattern metrics: visibility, fringe fits and pattern arithmetic.

use std::f64::consts::PI;

use crate::error::{ensure_positive, input, Error, Result};
use crate::waveoptics::Pattern;

/// Closed transverse interval `[lo, hi]` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return input(format!("invalid window [{lo}, {hi}]"));
        }
        Ok(Self { lo, hi })
    }

    /// `|x| ≤ λL/(2a)`, the central lobe of the single-slit envelope.
    pub fn central_envelope(wavelength: f64, distance: f64, width: f64) -> Result<Self> {
        let half = 0.5 * wavelength * distance / width;
        Self::new(-half, half)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// `(max − min)/(max + min)` of the rates inside the window.
pub fn visibility(p: &Pattern, window: Window) -> Result<f64> {
    let (mut lo, mut hi, mut any) = (f64::INFINITY, f64::NEG_INFINITY, false);
    for (x, r) in p.positions.iter().zip(&p.rates) {
        if window.contains(*x) {
            lo = lo.min(*r);
            hi = hi.max(*r);
            any = true;
        }
    }
    if !any {
        return input(format!("no samples of '{}' inside [{:e}, {:e}]", p.label, window.lo, window.hi));
    }
    Ok(if hi + lo == 0.0 { 0.0 } else { (hi - lo) / (hi + lo) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FringeKind {
    Fringe,
    AntiFringe,
    None,
}

/// Result of fitting `A·(1 + V·cos(2πx/T + φ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub visibility: f64,
    pub period: f64,
    /// In `(−π, π]`, with `x = 0` on the symmetry axis.
    pub phase: f64,
    /// RMS residual relative to the fitted mean level `A`.
    pub residual: f64,
}

impl FringeFit {
    pub fn kind(&self) -> FringeKind {
        if self.visibility < 0.05 {
            FringeKind::None
        } else if self.phase.abs() < 0.5 * PI {
            FringeKind::Fringe
        } else {
            FringeKind::AntiFringe
        }
    }
}

const GOLDEN_ITERATIONS: usize = 200;

/// Least-squares fringe fit over `window`.
///
/// For a trial period the model is linear in `(A, AV·cosφ, −AV·sinφ)`; the
/// period is refined by golden-section search on `[0.9T₀, 1.1T₀]`.
pub fn fit_fringe(p: &Pattern, expected_period: f64, window: Window) -> Result<FringeFit> {
    ensure_positive("expected period", expected_period)?;
    let pts: Vec<(f64, f64)> = p
        .positions
        .iter()
        .zip(&p.rates)
        .filter(|(x, _)| window.contains(**x))
        .map(|(x, r)| (*x, *r))
        .collect();
    if pts.len() < 4 {
        return input(format!("fringe fit needs at least 4 samples in the window, got {}", pts.len()));
    }

    let fail = |message: &str, iterations: usize, last_period: f64| Error::Fit {
        message: message.into(),
        iterations,
        last_period,
    };

    let (mut a, mut b) = (0.9 * expected_period, 1.1 * expected_period);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = linear_fit(&pts, c).map(|f| f.1).unwrap_or(f64::INFINITY);
    let mut fd = linear_fit(&pts, d).map(|f| f.1).unwrap_or(f64::INFINITY);
    let mut iterations = 0;
    while (b - a) > 1e-13 * expected_period {
        if iterations == GOLDEN_ITERATIONS {
            return Err(fail("period search did not converge", iterations, 0.5 * (a + b)));
        }
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = linear_fit(&pts, c).map(|f| f.1).unwrap_or(f64::INFINITY);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = linear_fit(&pts, d).map(|f| f.1).unwrap_or(f64::INFINITY);
        }
    }
    let period = 0.5 * (a + b);
    let (coef, ssr) = linear_fit(&pts, period).ok_or_else(|| fail("singular normal equations", iterations, period))?;
    let [c0, c1, c2] = coef;
    if !(c0 > 0.0) || !ssr.is_finite() {
        return Err(fail("fitted mean level is not positive", iterations, period));
    }
    let visibility = (c1.hypot(c2) / c0).min(1.0);
    let mut phase = (-c2).atan2(c1);
    if phase <= -PI {
        phase += 2.0 * PI;
    }
    Ok(FringeFit {
        visibility,
        period,
        phase,
        residual: (ssr / pts.len() as f64).sqrt() / c0,
    })
}

/// Solves `rates ≈ c0 + c1·cos(qx) + c2·sin(qx)`; returns coefficients and the
/// residual sum of squares.
fn linear_fit(pts: &[(f64, f64)], period: f64) -> Option<([f64; 3], f64)> {
    let q = 2.0 * PI / period;
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(x, y) in pts {
        let row = [1.0, (q * x).cos(), (q * x).sin()];
        for i in 0..3 {
            atb[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve3(ata, atb)?;
    let ssr = pts
        .iter()
        .map(|&(x, y)| {
            let m = coef[0] + coef[1] * (q * x).cos() + coef[2] * (q * x).sin();
            (y - m).powi(2)
        })
        .sum();
    Some((coef, ssr))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

impl Pattern {
    fn same_positions(&self, other: &Pattern) -> Result<()> {
        let tol = 1e-12 * self.positions.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-30);
        let same = self.len() == other.len()
            && self.positions.iter().zip(&other.positions).all(|(a, b)| (a - b).abs() <= tol);
        if same {
            Ok(())
        } else {
            input(format!("patterns '{}' and '{}' are on different grids", self.label, other.label))
        }
    }

    fn with_rates(&self, rates: Vec<f64>, label: String) -> Pattern {
        Pattern {
            positions: self.positions.clone(),
            rates,
            label,
        }
    }

    /// Elementwise sum; the result may hold negative rates.
    pub fn add(&self, other: &Pattern) -> Result<Pattern> {
        self.same_positions(other)?;
        let rates = self.rates.iter().zip(&other.rates).map(|(a, b)| a + b).collect();
        Ok(self.with_rates(rates, format!("{}+{}", self.label, other.label)))
    }

    pub fn scale(&self, c: f64) -> Pattern {
        self.with_rates(self.rates.iter().map(|r| r * c).collect(), self.label.clone())
    }

    /// Elementwise ratio; samples where `other` vanishes become 0.
    pub fn divide(&self, other: &Pattern) -> Result<Pattern> {
        self.same_positions(other)?;
        let rates = self
            .rates
            .iter()
            .zip(&other.rates)
            .map(|(a, b)| if *b == 0.0 { 0.0 } else { a / b })
            .collect();
        Ok(self.with_rates(rates, format!("{}/{}", self.label, other.label)))
    }

    /// Copy scaled to unit total rate. The flag is `false` for an all-zero
    /// pattern, which is returned unchanged.
    pub fn normalize(&self) -> (Pattern, bool) {
        let total: f64 = self.rates.iter().sum();
        if total == 0.0 {
            (self.clone(), false)
        } else {
            (self.scale(1.0 / total), true)
        }
    }

    /// `max|a − b| / max|b|`.
    pub fn l_inf_relative_distance(&self, reference: &Pattern) -> Result<f64> {
        self.same_positions(reference)?;
        let scale = reference.rates.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let diff = self
            .rates
            .iter()
            .zip(&reference.rates)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(if scale == 0.0 {
            if diff == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            diff / scale
        })
    }

    /// Boxcar mean over a sliding window of `width` meters, truncated at the
    /// pattern edges. Positions are assumed uniformly spaced.
    pub fn running_mean(&self, width: f64) -> Result<Pattern> {
        ensure_positive("averaging width", width)?;
        if self.len() < 2 {
            return Ok(self.clone());
        }
        let dx = (self.positions[self.len() - 1] - self.positions[0]) / (self.len() - 1) as f64;
        let half = ((0.5 * width / dx).round() as usize).max(1);
        let mut prefix = vec![0.0; self.len() + 1];
        for (i, r) in self.rates.iter().enumerate() {
            prefix[i + 1] = prefix[i] + r;
        }
        let rates = (0..self.len())
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half + 1).min(self.len());
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            })
            .collect();
        Ok(self.with_rates(rates, format!("mean({})", self.label)))
    }
}

/// Fringe fit of `p` divided by its one-period running mean, for patterns
/// whose incoherent envelope is not known separately.
pub fn fit_fringe_flattened(p: &Pattern, expected_period: f64, window: Window) -> Result<FringeFit> {
    let envelope = p.running_mean(expected_period)?;
    fit_fringe(&p.divide(&envelope)?, expected_period, window)
}
