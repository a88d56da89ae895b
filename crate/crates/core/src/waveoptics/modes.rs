use num_complex::Complex64;

use super::{Grid, ScalarField};
use crate::error::{ensure_positive, input, Result};

/// Hermite–Gauss mode at its waist, normalized to unit power on `grid`.
///
/// Order 0 is `exp(−x²/w²)`; order 1 is `(2x/w)·exp(−x²/w²)` with its node at
/// `x = 0` and intensity maxima at `±w/√2`.
pub fn hermite_gauss(order: u32, waist: f64, grid: Grid, wavelength: f64) -> Result<ScalarField> {
    ensure_positive("waist", waist)?;
    let profile: fn(f64) -> f64 = match order {
        0 => |s| (-s * s).exp(),
        1 => |s| 2.0 * s * (-s * s).exp(),
        _ => return input(format!("unsupported Hermite-Gauss order {order}; expected 0 or 1")),
    };
    let f = ScalarField::from_fn(grid, wavelength, 0.0, |x| Complex64::new(profile(x / waist), 0.0))?;
    f.normalized()
        .ok_or_else(|| crate::Error::Input("mode vanishes on the grid".into()))
}

/// Splits a field at `node` into its upper (`x > node`) and lower parts,
/// each renormalized to unit power.
pub fn split_lobes(f: &ScalarField, node: f64) -> Result<(ScalarField, ScalarField)> {
    let part = |upper: bool| {
        let samples = f
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let x = f.grid.x(i);
                if (x > node) == upper && x != node {
                    *s
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        ScalarField {
            samples,
            ..f.clone()
        }
        .normalized()
        .ok_or_else(|| crate::Error::Input("lobe carries no power".into()))
    };
    Ok((part(true)?, part(false)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::centered(0.0, 2e-3, 2000).unwrap()
    }

    fn argmax(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap()
    }

    #[test]
    fn fundamental_peaks_on_axis() {
        let f = hermite_gauss(0, 200e-6, grid(), 700e-9).unwrap();
        assert!((f.power() - 1.0).abs() < 1e-12);
        let i = argmax(&f.intensity());
        assert!(f.grid.x(i).abs() <= f.grid.dx);
    }

    #[test]
    fn first_order_has_node_and_two_maxima() {
        let w = 200e-6;
        let g = Grid::linspace(-1e-3, 1e-3, 2001).unwrap();
        let f = hermite_gauss(1, w, g, 700e-9).unwrap();
        assert_eq!(f.samples[1000].norm(), 0.0);
        let inten = f.intensity();
        let upper = argmax(&inten[1000..]) + 1000;
        let lower = argmax(&inten[..1000]);
        let peak = w / 2f64.sqrt();
        assert!((g.x(upper) - peak).abs() <= g.dx);
        assert!((g.x(lower) + peak).abs() <= g.dx);
        for i in 0..g.n {
            assert!((f.samples[i] + f.samples[g.n - 1 - i]).norm() < 1e-12);
        }
        // Single zero crossing at the origin.
        assert!(f.samples[..1000].iter().all(|s| s.re < 0.0));
        assert!(f.samples[1001..].iter().all(|s| s.re > 0.0));
    }

    #[test]
    fn unsupported_order() {
        assert!(hermite_gauss(2, 1e-4, grid(), 700e-9).is_err());
        assert!(hermite_gauss(0, 0.0, grid(), 700e-9).is_err());
    }

    #[test]
    fn lobes_partition_the_mode() {
        let f = hermite_gauss(1, 200e-6, grid(), 700e-9).unwrap();
        let (up, down) = split_lobes(&f, 0.0).unwrap();
        assert!(up.overlap(&down).unwrap().norm() == 0.0);
        let sum = up.plus(&down).unwrap().normalized().unwrap();
        assert!(sum.max_abs_diff(&f) < 1e-12);
    }
}
