use num_complex::Complex64;

use super::ScalarField;
use crate::error::{ensure_finite, ensure_positive, input, Result};

/// Which slit of a double slit; `Upper` is the one at larger `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlitSide {
    Upper,
    Lower,
}

impl SlitSide {
    pub fn name(self) -> &'static str {
        match self {
            SlitSide::Upper => "upper",
            SlitSide::Lower => "lower",
        }
    }
}

/// One transmitting interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitWindow {
    pub side: Option<SlitSide>,
    pub lo: f64,
    pub hi: f64,
}

impl SlitWindow {
    /// Fraction of the cell `[x − dx/2, x + dx/2]` inside the window.
    pub fn cell_coverage(&self, x: f64, dx: f64) -> f64 {
        let (a, b) = (x - 0.5 * dx, x + 0.5 * dx);
        if self.lo <= a && b <= self.hi {
            return 1.0;
        }
        ((b.min(self.hi) - a.max(self.lo)) / dx).clamp(0.0, 1.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aperture {
    Single {
        width: f64,
        center: f64,
    },
    /// `separation` is centre-to-centre.
    Double {
        width: f64,
        separation: f64,
        center: f64,
        upper_open: bool,
        lower_open: bool,
    },
}

impl Aperture {
    pub fn single(width: f64, center: f64) -> Result<Self> {
        let ap = Aperture::Single { width, center };
        ap.validate()?;
        Ok(ap)
    }

    pub fn double(width: f64, separation: f64, center: f64) -> Result<Self> {
        let ap = Aperture::Double {
            width,
            separation,
            center,
            upper_open: true,
            lower_open: true,
        };
        ap.validate()?;
        Ok(ap)
    }

    /// Same aperture with one slit blocked.
    pub fn with_closed(self, side: SlitSide) -> Self {
        match self {
            Aperture::Double {
                width,
                separation,
                center,
                upper_open,
                lower_open,
            } => Aperture::Double {
                width,
                separation,
                center,
                upper_open: upper_open && side != SlitSide::Upper,
                lower_open: lower_open && side != SlitSide::Lower,
            },
            single => single,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Aperture::Single { width, center } => {
                ensure_positive("slit width", width)?;
                ensure_finite("slit centre", center)
            }
            Aperture::Double {
                width,
                separation,
                center,
                ..
            } => {
                ensure_positive("slit width", width)?;
                ensure_finite("slit centre", center)?;
                ensure_positive("slit separation", separation)?;
                if separation <= width {
                    return input(format!(
                        "slit separation {separation:e} m must exceed slit width {width:e} m"
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn width(&self) -> f64 {
        match *self {
            Aperture::Single { width, .. } | Aperture::Double { width, .. } => width,
        }
    }

    pub fn center(&self) -> f64 {
        match *self {
            Aperture::Single { center, .. } | Aperture::Double { center, .. } => center,
        }
    }

    /// Every slit, open or not.
    pub fn all_windows(&self) -> Vec<SlitWindow> {
        match *self {
            Aperture::Single { width, center } => vec![SlitWindow {
                side: None,
                lo: center - 0.5 * width,
                hi: center + 0.5 * width,
            }],
            Aperture::Double {
                width,
                separation,
                center,
                ..
            } => {
                let up = center + 0.5 * separation;
                let down = center - 0.5 * separation;
                vec![
                    SlitWindow {
                        side: Some(SlitSide::Upper),
                        lo: up - 0.5 * width,
                        hi: up + 0.5 * width,
                    },
                    SlitWindow {
                        side: Some(SlitSide::Lower),
                        lo: down - 0.5 * width,
                        hi: down + 0.5 * width,
                    },
                ]
            }
        }
    }

    pub fn open_windows(&self) -> Vec<SlitWindow> {
        let (up, down) = match *self {
            Aperture::Double {
                upper_open,
                lower_open,
                ..
            } => (upper_open, lower_open),
            Aperture::Single { .. } => (true, true),
        };
        self.all_windows()
            .into_iter()
            .filter(|w| match w.side {
                Some(SlitSide::Upper) => up,
                Some(SlitSide::Lower) => down,
                None => true,
            })
            .collect()
    }

    /// Full transverse extent `(lo, hi)` of the slit mask, closed slits included.
    pub fn extent(&self) -> (f64, f64) {
        let w = self.all_windows();
        let lo = w.iter().map(|s| s.lo).fold(f64::INFINITY, f64::min);
        let hi = w.iter().map(|s| s.hi).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn span(&self) -> f64 {
        let (lo, hi) = self.extent();
        hi - lo
    }

    /// Cell transmission: the covered fraction of each cell by open slits.
    pub fn transmission(&self, x: f64, dx: f64) -> f64 {
        self.open_windows()
            .iter()
            .map(|w| w.cell_coverage(x, dx))
            .sum::<f64>()
            .min(1.0)
    }
}

/// Multiplies the field by the aperture's transmission.
pub fn apply_aperture(f: &ScalarField, ap: &Aperture) -> Result<ScalarField> {
    ap.validate()?;
    let (lo, hi) = ap.extent();
    if lo < f.grid.lower_edge() || hi > f.grid.upper_edge() {
        return input(format!(
            "aperture [{lo:e}, {hi:e}] m lies outside the grid [{:e}, {:e}] m",
            f.grid.lower_edge(),
            f.grid.upper_edge()
        ));
    }
    Ok(mask(f, |x, dx| ap.transmission(x, dx)))
}

/// Restricts the field to a single window.
pub(crate) fn apply_window(f: &ScalarField, w: &SlitWindow) -> ScalarField {
    mask(f, |x, dx| w.cell_coverage(x, dx))
}

fn mask(f: &ScalarField, t: impl Fn(f64, f64) -> f64) -> ScalarField {
    let samples = f
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let tr = t(f.grid.x(i), f.grid.dx);
            if tr == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                s * tr
            }
        })
        .collect();
    ScalarField {
        samples,
        ..f.clone()
    }
}
