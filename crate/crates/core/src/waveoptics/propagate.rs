use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use super::fresnel_integral::fresnel;
use super::{Grid, ScalarField};
use crate::error::{ensure_positive, Result};

/// Maximal runs of consecutive nonzero samples, as `(start, end)` index pairs.
fn nonzero_runs(samples: &[Complex64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, s) in samples.iter().enumerate() {
        let nz = s.re != 0.0 || s.im != 0.0;
        match (nz, start) {
            (true, None) => start = Some(i),
            (false, Some(b)) => {
                runs.push((b, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(b) = start {
        runs.push((b, samples.len()));
    }
    runs
}

/// Free-space Fresnel propagation by `distance` onto `out`.
///
/// Evaluates `u(x′) = (iλL)^{-1/2} ∫ u(x)·exp(ik(x′−x)²/2L) dx` with the input
/// held constant over each cell, so every cell integral is a difference of
/// complex Fresnel integrals. Cost is O(N·M) over the nonzero input cells.
pub fn fresnel_propagate(f: &ScalarField, distance: f64, out: &Grid) -> Result<ScalarField> {
    Ok(fresnel_kernel(f, distance, out, false)?.0)
}

/// [`fresnel_propagate`] together with the exact transverse derivative
/// `∂u/∂x′` of the propagated field at every output sample.
pub fn fresnel_propagate_with_gradient(
    f: &ScalarField,
    distance: f64,
    out: &Grid,
) -> Result<(ScalarField, Vec<Complex64>)> {
    fresnel_kernel(f, distance, out, true)
}

fn fresnel_kernel(f: &ScalarField, distance: f64, out: &Grid, gradient: bool) -> Result<(ScalarField, Vec<Complex64>)> {
    ensure_positive("propagation distance", distance)?;
    let scale = (2.0 / (f.wavelength * distance)).sqrt();
    let prefactor = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, -FRAC_PI_4);
    let runs = nonzero_runs(&f.samples);
    let edge0 = f.grid.lower_edge();
    let dx = f.grid.dx;
    let kernel = |t: f64| Complex64::from_polar(1.0, 0.5 * PI * t * t);

    let mut samples = Vec::with_capacity(out.n);
    let mut grads = Vec::with_capacity(if gradient { out.n } else { 0 });
    for j in 0..out.n {
        let xp = out.x(j);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut dacc = Complex64::new(0.0, 0.0);
        for &(b, e) in &runs {
            let t = (edge0 + b as f64 * dx - xp) * scale;
            let mut prev = fresnel(t);
            let mut gprev = if gradient { kernel(t) } else { prev };
            for i in b..e {
                let t = (edge0 + (i + 1) as f64 * dx - xp) * scale;
                let next = fresnel(t);
                acc += f.samples[i] * (next - prev);
                prev = next;
                if gradient {
                    let g = kernel(t);
                    dacc += f.samples[i] * (g - gprev);
                    gprev = g;
                }
            }
        }
        samples.push(acc * prefactor);
        if gradient {
            // dF(t)/dx′ = −scale·exp(iπt²/2)
            grads.push(-dacc * prefactor * scale);
        }
    }
    Ok((ScalarField::new(samples, *out, f.wavelength, f.z + distance)?, grads))
}

/// Far-field (Fraunhofer) pattern at `distance`, including the propagation
/// prefactor and the observation-plane quadratic phase so that it can be
/// compared to [`fresnel_propagate`] directly.
pub fn fraunhofer_pattern(f: &ScalarField, distance: f64, out: &Grid) -> Result<ScalarField> {
    ensure_positive("propagation distance", distance)?;
    let k = f.wavenumber();
    let dx = f.grid.dx;
    let prefactor = Complex64::from_polar(1.0 / (f.wavelength * distance).sqrt(), -FRAC_PI_4);
    let runs = nonzero_runs(&f.samples);

    let samples = (0..out.n)
        .map(|j| {
            let xp = out.x(j);
            let q = k * xp / distance;
            let cell = dx * sinc(0.5 * q * dx);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(b, e) in &runs {
                // Phase recurrence along the run: exp(−iqx) advances by exp(−iq·dx).
                let step = Complex64::from_polar(1.0, -q * dx);
                let mut phase = Complex64::from_polar(1.0, -q * f.grid.x(b));
                for i in b..e {
                    acc += f.samples[i] * phase;
                    phase *= step;
                }
            }
            acc * cell * prefactor * Complex64::from_polar(1.0, 0.5 * k * xp * xp / distance)
        })
        .collect();
    ScalarField::new(samples, *out, f.wavelength, f.z + distance)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Normalized closed-form double-slit intensity
/// `sinc²(πax′/λL)·cos²(πdx′/λL)`, peak 1 at `x′ = 0`.
pub fn double_slit_closed_form(width: f64, separation: f64, wavelength: f64, distance: f64, x: f64) -> f64 {
    let envelope = sinc(PI * width * x / (wavelength * distance));
    let fringe = (PI * separation * x / (wavelength * distance)).cos();
    (envelope * fringe).powi(2)
}

/// Distance beyond which the far-field approximation holds for an aperture
/// of total extent `span`: `2·span²/λ`.
pub fn fraunhofer_distance(span: f64, wavelength: f64) -> f64 {
    2.0 * span * span / wavelength
}

/// `w(L) = w√(1 + (λL/πw²)²)`.
pub fn gaussian_beam_width(waist: f64, wavelength: f64, distance: f64) -> f64 {
    let r = wavelength * distance / (PI * waist * waist);
    waist * (1.0 + r * r).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveoptics::{apply_aperture, hermite_gauss, Aperture};

    const LAMBDA: f64 = 700e-9;

    fn second_moment_width(f: &ScalarField) -> f64 {
        let inten = f.intensity();
        let total: f64 = inten.iter().sum();
        let mean: f64 = inten.iter().enumerate().map(|(i, p)| p * f.grid.x(i)).sum::<f64>() / total;
        let var: f64 = inten
            .iter()
            .enumerate()
            .map(|(i, p)| p * (f.grid.x(i) - mean).powi(2))
            .sum::<f64>()
            / total;
        2.0 * var.sqrt()
    }

    #[test]
    fn short_distance_returns_the_input() {
        let g = Grid::centered(0.0, 1e-3, 800).unwrap();
        let f = hermite_gauss(0, 100e-6, g, LAMBDA).unwrap();
        let out = fresnel_propagate(&f, 1e-12, &g).unwrap();
        assert!(out.max_abs_diff(&f) < 1e-4 * f.samples[400].norm());
    }

    #[test]
    fn gaussian_width_follows_beam_formula() {
        let w = 200e-6;
        let g = Grid::centered(0.0, 2e-3, 1024).unwrap();
        let f = hermite_gauss(0, w, g, LAMBDA).unwrap();
        for &l in &[0.05, 0.2, 0.5] {
            let want = gaussian_beam_width(w, LAMBDA, l);
            let out_grid = Grid::centered(0.0, 8.0 * want, 1024).unwrap();
            let out = fresnel_propagate(&f, l, &out_grid).unwrap();
            let got = second_moment_width(&out);
            assert!((got / want - 1.0).abs() < 5e-3, "L={l}: {got} vs {want}");
            assert!((out.power() - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn single_slit_zeros() {
        let a = 80e-6;
        let l = 1.0;
        let g = Grid::centered(0.0, 1e-3, 1000).unwrap();
        let f = ScalarField::from_fn(g, LAMBDA, 0.0, |_| Complex64::new(1.0, 0.0)).unwrap();
        let f = apply_aperture(&f, &Aperture::single(a, 0.0).unwrap()).unwrap();
        let zero = LAMBDA * l / a;
        let probe = Grid::new(-zero, zero, 3).unwrap();
        let out = fraunhofer_pattern(&f, l, &probe).unwrap();
        let peak = out.samples[1].norm_sqr();
        assert!(out.samples[0].norm_sqr() / peak < 1e-12);
        assert!(out.samples[2].norm_sqr() / peak < 1e-12);
    }

    #[test]
    fn double_slit_first_fringe_zero() {
        let (a, d, l) = (80e-6, 200e-6, 1.0);
        let zero = LAMBDA * l / (2.0 * d);
        assert!((zero - 1.75e-3).abs() < 1e-15);
        assert!(double_slit_closed_form(a, d, LAMBDA, l, zero) < 1e-30);
        assert!(double_slit_closed_form(a, d, LAMBDA, l, LAMBDA * l / a) < 1e-30);
        assert_eq!(double_slit_closed_form(a, d, LAMBDA, l, 0.0), 1.0);
        for i in 1..100 {
            assert!(double_slit_closed_form(a, d, LAMBDA, l, i as f64 * 1e-5) <= 1.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Grid::centered(0.0, 1e-3, 400).unwrap();
        let f = hermite_gauss(1, 100e-6, g, LAMBDA).unwrap();
        let f = apply_aperture(&f, &Aperture::double(80e-6, 250e-6, 0.0).unwrap()).unwrap();
        let out = Grid::linspace(-2e-3, 2e-3, 41).unwrap();
        let (u, du) = fresnel_propagate_with_gradient(&f, 0.05, &out).unwrap();
        let h = 1e-9;
        for j in 0..out.n {
            let probe = Grid::new(out.x(j) - h, h, 3).unwrap();
            let p = fresnel_propagate(&f, 0.05, &probe).unwrap();
            let fd = (p.samples[2] - p.samples[0]) / (2.0 * h);
            assert!((fd - du[j]).norm() <= 1e-5 * du[j].norm().max(1.0), "{fd} vs {}", du[j]);
            assert!((p.samples[1] - u.samples[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn fresnel_and_fraunhofer_agree_in_the_far_field() {
        let (a, d) = (80e-6, 250e-6);
        let g = Grid::centered(0.0, 8.0 * (a + d), 2048).unwrap();
        let f = ScalarField::from_fn(g, LAMBDA, 0.0, |_| Complex64::new(1.0, 0.0)).unwrap();
        let f = apply_aperture(&f, &Aperture::double(a, d, 0.0).unwrap()).unwrap();
        let zf = fraunhofer_distance(a + d, LAMBDA);
        for l in [zf, 2.0 * zf, 1.0] {
            let half = 3.0 * LAMBDA * l / a;
            let out = Grid::linspace(-half, half, 601).unwrap();
            let near = fresnel_propagate(&f, l, &out).unwrap().intensity();
            let far = fraunhofer_pattern(&f, l, &out).unwrap().intensity();
            let num: f64 = near.iter().zip(&far).map(|(a, b)| (a - b).powi(2)).sum();
            let den: f64 = far.iter().map(|b| b * b).sum();
            assert!((num / den).sqrt() < 1e-2, "L={l}");
        }
    }

    #[test]
    fn parity_and_linearity() {
        let g = Grid::centered(0.0, 1e-3, 300).unwrap();
        let odd = hermite_gauss(1, 120e-6, g, LAMBDA).unwrap();
        let even = hermite_gauss(0, 90e-6, g, LAMBDA).unwrap();
        let out = Grid::centered(0.0, 6e-3, 301).unwrap();
        for prop in [fresnel_propagate, fraunhofer_pattern] {
            let o = prop(&odd, 0.3, &out).unwrap();
            let e = prop(&even, 0.3, &out).unwrap();
            let scale = o.samples.iter().chain(&e.samples).fold(0.0f64, |m, s| m.max(s.norm()));
            for j in 0..out.n {
                let k = out.n - 1 - j;
                assert!((o.samples[j] + o.samples[k]).norm() < 1e-10 * scale);
                assert!((e.samples[j] - e.samples[k]).norm() < 1e-10 * scale);
            }
            let (alpha, beta) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
            let mix = odd.scaled(alpha).plus(&even.scaled(beta)).unwrap();
            let lhs = prop(&mix, 0.3, &out).unwrap();
            let rhs = o.scaled(alpha).plus(&e.scaled(beta)).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-10 * scale);
        }
    }

    #[test]
    fn distance_must_be_positive() {
        let g = Grid::centered(0.0, 1e-3, 16).unwrap();
        let f = hermite_gauss(0, 1e-4, g, LAMBDA).unwrap();
        assert!(fresnel_propagate(&f, 0.0, &g).is_err());
        assert!(fraunhofer_pattern(&f, -1.0, &g).is_err());
    }
}
