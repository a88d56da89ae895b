use std::f64::consts::{FRAC_PI_4, PI};

use eraser_core::analysis::{fit_fringe, Window};
use eraser_core::pilotwave::*;
use eraser_core::polarization::{quarter_wave_plate, JonesVector};
use eraser_core::waveoptics::*;

const LAMBDA: f64 = 700e-9;
const A: f64 = 80e-6;
const D: f64 = 250e-6;
const L: f64 = 1.0;

fn source_grid() -> Grid {
    Grid::centered(0.0, 8.0 * (A + D), 2048).unwrap()
}

fn slits() -> PlaneElement {
    PlaneElement {
        z: 0.0,
        action: PlaneAction::Aperture(Aperture::double(A, D, 0.0).unwrap()),
    }
}

fn quick(window: f64) -> StackConfig {
    let mut cfg = StackConfig::new((-window, window));
    cfg.n_steps = 64;
    cfg.plane_points = 512;
    cfg
}

fn double_slit_wave(pol: JonesVector, plates: bool, cfg: &StackConfig) -> GuidedWave {
    let f = hermite_gauss(0, 5e-3, source_grid(), LAMBDA).unwrap();
    let mut el = vec![slits()];
    if plates {
        for (side, angle) in [(SlitSide::Upper, FRAC_PI_4), (SlitSide::Lower, -FRAC_PI_4)] {
            el.push(PlaneElement {
                z: 0.0,
                action: PlaneAction::SlitPlate {
                    side,
                    plate: quarter_wave_plate(angle).unwrap(),
                },
            });
        }
    }
    build_wave_stack(VectorField::polarized(&f, pol), &el, L, cfg).unwrap()
}

fn rms_width(f: &VectorField) -> f64 {
    let rho = f.density();
    let g = f.grid();
    let total: f64 = rho.iter().sum();
    let var: f64 = rho.iter().enumerate().map(|(i, r)| r * g.x(i).powi(2)).sum::<f64>() / total;
    2.0 * var.sqrt()
}

#[test]
fn free_gaussian_stack_widens_like_a_beam() {
    let w0 = 100e-6;
    let f = hermite_gauss(0, w0, Grid::centered(0.0, 1.2e-3, 256).unwrap(), LAMBDA).unwrap();
    let mut cfg = quick(6e-3);
    cfg.n_steps = 16;
    let wave = build_wave_stack(VectorField::polarized(&f, JonesVector::horizontal()), &[], 0.5, &cfg).unwrap();
    for z in wave.z_planes().into_iter().skip(1).step_by(3) {
        let w = gaussian_beam_width(w0, LAMBDA, z);
        let g = Grid::centered(0.0, 12.0 * w, 1024).unwrap();
        let got = rms_width(&wave.field_at(z, &g).unwrap());
        assert!((got / w - 1.0).abs() < 5e-3, "z = {z}: {got} vs {w}");
    }
}

#[test]
fn final_plane_matches_direct_propagation() {
    let wave = double_slit_wave(JonesVector::horizontal(), false, &quick(20e-3));
    let f = hermite_gauss(0, 5e-3, source_grid(), LAMBDA).unwrap();
    let f = apply_aperture(&f, &Aperture::double(A, D, 0.0).unwrap()).unwrap();
    let g = Grid::linspace(-20e-3, 20e-3, 801).unwrap();
    let direct = fresnel_propagate(&f, L, &g).unwrap().intensity();
    let p0 = f.power();
    let stack = wave.final_density(&g).unwrap();
    let max = direct.iter().cloned().fold(0.0, f64::max);
    for (a, b) in stack.iter().zip(&direct) {
        assert!((a * p0 - b).abs() <= 1e-9 * max);
    }
}

fn fringe_component(rho: &[f64], g: &Grid) -> f64 {
    let q = 2.0 * PI * D / (LAMBDA * L);
    let (mut c, mut s, mut total) = (0.0, 0.0, 0.0);
    for (i, r) in rho.iter().enumerate() {
        c += r * (q * g.x(i)).cos();
        s += r * (q * g.x(i)).sin();
        total += r;
    }
    c.hypot(s) / total
}

#[test]
fn closing_one_slit_removes_the_fringe_component() {
    let f = hermite_gauss(0, 5e-3, source_grid(), LAMBDA).unwrap();
    let g = Grid::linspace(-80e-3, 80e-3, 4001).unwrap();
    let mut comps = Vec::new();
    for ap in [
        Aperture::double(A, D, 0.0).unwrap(),
        Aperture::double(A, D, 0.0).unwrap().with_closed(SlitSide::Lower),
    ] {
        let el = [PlaneElement {
            z: 0.0,
            action: PlaneAction::Aperture(ap),
        }];
        let wave = build_wave_stack(VectorField::polarized(&f, JonesVector::horizontal()), &el, L, &quick(80e-3)).unwrap();
        comps.push(fringe_component(&wave.final_density(&g).unwrap(), &g));
    }
    assert!(comps[0] > 0.3, "both open: {}", comps[0]);
    assert!(comps[1] < 1e-3, "one open: {}", comps[1]);
}

#[test]
fn guidance_velocity_cases() {
    // Uniform phase: no flow at the source plane.
    let g = Grid::centered(0.0, 5e-3, 1024).unwrap();
    let flat = ScalarField::from_fn(g, LAMBDA, 0.0, |x| num_complex::Complex64::new((-(x / 4e-4).powi(2)).exp(), 0.0)).unwrap();
    let wave = build_wave_stack(VectorField::polarized(&flat, JonesVector::horizontal()), &[], 0.2, &quick(3e-3)).unwrap();
    for i in 0..100 {
        let x = -5e-4 + i as f64 * 1e-5;
        assert_eq!(wave.guidance_velocity(0.0, x).unwrap().slope, 0.0);
    }
    // A spreading Gaussian flows outward.
    for z in [0.05, 0.2] {
        for i in 0..100 {
            let x = -1e-3 + (i as f64 + 0.5) * 2e-5;
            let v = wave.guidance_velocity(z, x).unwrap();
            assert_eq!(v.slope.signum(), x.signum(), "z = {z}, x = {x}");
            assert!(!v.regularized);
        }
    }
    // Symmetric double slit: nothing crosses the axis.
    let wave = double_slit_wave(JonesVector::horizontal(), false, &quick(20e-3));
    for z in [1e-3, 0.1, 0.5, 1.0] {
        assert!(wave.guidance_velocity(z, 0.0).unwrap().slope.abs() < 1e-12);
    }
    assert!(wave.guidance_velocity(1.5, 0.0).is_err());
}

#[test]
fn element_planes_are_validated() {
    let f = hermite_gauss(0, 5e-3, source_grid(), LAMBDA).unwrap();
    let pol = VectorField::polarized(&f, JonesVector::horizontal());
    let ap = PlaneAction::Aperture(Aperture::double(A, D, 0.0).unwrap());
    let at = |z| PlaneElement { z, action: ap.clone() };
    assert!(build_wave_stack(pol.clone(), &[at(1.0)], L, &quick(1e-2)).is_err());
    assert!(build_wave_stack(pol.clone(), &[at(-0.1)], L, &quick(1e-2)).is_err());
    assert!(build_wave_stack(pol.clone(), &[at(0.2), at(0.1)], L, &quick(1e-2)).is_err());
    let mut cfg = quick(1e-2);
    cfg.n_steps = 8;
    assert!(build_wave_stack(pol, &[at(0.0)], L, &cfg).is_err());
}

#[test]
fn identical_seeds_give_identical_trajectories() {
    let ens = Ensemble::single(double_slit_wave(JonesVector::horizontal(), false, &quick(20e-3)), None);
    let cfg = RunConfig { n: 500, seed: 9, record: 10 };
    let a = run_ensemble(&ens, &cfg).unwrap();
    let b = run_ensemble(&ens, &cfg).unwrap();
    assert_eq!(a.trajectories, b.trajectories);
    let c = run_ensemble(&ens, &RunConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.trajectories, c.trajectories);
    let planes = ens.waves[0].z_planes();
    let zs: Vec<f64> = a.trajectories[0].path.iter().map(|p| p.0).collect();
    assert_eq!(zs, planes);
}

#[test]
fn double_slit_ensemble_is_equivariant_and_ordered() {
    let ens = Ensemble::single(double_slit_wave(JonesVector::horizontal(), false, &StackConfig::new((-80e-3, 80e-3))), None);
    let run = run_ensemble(&ens, &RunConfig { n: 20_000, seed: 1, record: 0 }).unwrap();
    assert_eq!(run.crossings, 0);
    let eq = equivariance(&ens, &run, Bins::new(-80e-3, 80e-3, 200).unwrap()).unwrap();
    assert!(eq.l1 < 1.5 * eq.noise_floor, "{eq:?}");
    assert!(run.trajectories.iter().all(|t| t.slit_taken != SlitTaken::Open));
}

#[test]
fn rk4_follows_the_analytic_gaussian_trajectory() {
    let w0 = 100e-6;
    let f = hermite_gauss(0, w0, Grid::centered(0.0, 1e-3, 1024).unwrap(), LAMBDA).unwrap();
    let mut cfg = quick(4e-3);
    cfg.integrator = Integrator::Rk4;
    let wave = build_wave_stack(VectorField::polarized(&f, JonesVector::horizontal()), &[], 0.5, &cfg).unwrap();
    let run = run_trajectories(wave, 200, 4).unwrap();
    let ratio = gaussian_beam_width(w0, LAMBDA, 0.5) / w0;
    for t in run.trajectories.iter().filter(|t| t.x0.abs() > 5e-5) {
        let got = t.final_x.unwrap() / t.x0;
        assert!((got / ratio - 1.0).abs() < 1e-2, "{} -> {got} vs {ratio}", t.x0);
    }
    assert_eq!(run.crossings, 0);
}

#[test]
fn lobes_persist_through_propagation_to_the_slits() {
    let f = hermite_gauss(1, 200e-6, Grid::centered(0.0, 2.4e-3, 512).unwrap(), LAMBDA).unwrap();
    let el = [PlaneElement {
        z: 0.02,
        action: PlaneAction::Aperture(Aperture::double(A, D, 0.0).unwrap()),
    }];
    let mut cfg = quick(20e-3);
    cfg.element_points = 1024;
    let wave = build_wave_stack(VectorField::polarized(&f, JonesVector::horizontal()), &el, 0.5, &cfg).unwrap();
    let run = run_ensemble(&Ensemble::single(wave, Some(0.0)), &RunConfig { n: 10_000, seed: 2, record: 0 }).unwrap();
    let passed: Vec<_> = run.trajectories.iter().filter(|t| t.slit_taken != SlitTaken::Blocked).collect();
    assert!(passed.len() > 1000);
    let same = passed
        .iter()
        .filter(|t| {
            matches!(
                (t.birth_lobe, t.slit_taken),
                (Some(SlitSide::Upper), SlitTaken::Upper) | (Some(SlitSide::Lower), SlitTaken::Lower)
            )
        })
        .count();
    assert!(same as f64 / passed.len() as f64 > 0.99);
    for t in &run.trajectories {
        assert_eq!(t.final_x.is_none(), t.slit_taken == SlitTaken::Blocked);
        if t.final_x.is_none() {
            assert_eq!(t.stopped_at, Some(0.02));
        }
    }
}

#[test]
fn menzel_lobe_conditioning_partitions_the_ensemble() {
    let g = source_grid();
    let f = hermite_gauss(1, 200e-6, g, LAMBDA).unwrap();
    let wave = build_wave_stack(VectorField::polarized(&f, JonesVector::horizontal()), &[slits()], L, &quick(20e-3)).unwrap();
    let ens = Ensemble::menzel(wave);
    let run = run_ensemble(&ens, &RunConfig { n: 5000, seed: 3, record: 0 }).unwrap();
    let up = coincidence_filter(&run.trajectories, IdlerRule::Lobe(SlitSide::Upper)).unwrap();
    let down = coincidence_filter(&run.trajectories, IdlerRule::Lobe(SlitSide::Lower)).unwrap();
    assert!(up.iter().all(|t| t.birth_lobe == Some(SlitSide::Upper)));
    let born_up = run.trajectories.iter().filter(|t| t.birth_lobe == Some(SlitSide::Upper)).count();
    assert_eq!(up.len(), born_up);
    let bins = Bins::new(-20e-3, 20e-3, 200).unwrap();
    let all = arrival_histogram(&run.trajectories, bins);
    let sum = arrival_histogram(up.iter().copied(), bins).add(&arrival_histogram(down.iter().copied(), bins)).unwrap();
    assert_eq!(sum.rates, all.rates);
    assert!(coincidence_filter(&run.trajectories, IdlerRule::Polarizer).is_err());
}

#[test]
fn zero_length_stack_detects_at_the_slits() {
    let f = hermite_gauss(1, 200e-6, source_grid(), LAMBDA).unwrap();
    let cfg = quick(0.5e-3);
    let wave = build_wave_stack(VectorField::polarized(&f, JonesVector::horizontal()), &[slits()], 0.0, &cfg).unwrap();
    assert_eq!(wave.z_planes(), vec![0.0]);
    let ens = Ensemble::menzel(wave);
    let run = run_ensemble(&ens, &RunConfig { n: 10_000, seed: 9, record: 10 }).unwrap();
    for t in &run.trajectories {
        assert_eq!(t.final_x, Some(t.x0));
        let born = t.birth_lobe.map(|s| s.name());
        assert_eq!(born, Some(t.slit_taken.name()));
    }
    let eq = equivariance(&ens, &run, Bins::new(-0.25e-3, 0.25e-3, 100).unwrap()).unwrap();
    assert!(eq.l1 < 1.5 * eq.noise_floor, "{eq:?}");
}

#[test]
fn walborn_conditioning_selects_a_fringe() {
    let cfg = quick(20e-3);
    let ens = Ensemble::walborn(|pol| Ok(double_slit_wave(pol, true, &cfg)), Some(FRAC_PI_4)).unwrap();
    let run = run_ensemble(&ens, &RunConfig { n: 20_000, seed: 5, record: 0 }).unwrap();
    let passed = coincidence_filter(&run.trajectories, IdlerRule::Polarizer).unwrap();
    let frac = passed.len() as f64 / run.trajectories.len() as f64;
    assert!((frac - 0.5).abs() < 0.02, "{frac}");
    let bins = Bins::new(-20e-3, 20e-3, 200).unwrap();
    let window = Window::central_envelope(LAMBDA, L, A).unwrap();
    let envelope = ensemble_density(&ens, &[0], bins, true).unwrap();
    let fit = |p: &Pattern| fit_fringe(&p.divide(&envelope).unwrap(), LAMBDA * L / D, window).unwrap();
    let cond = fit(&arrival_histogram(passed.iter().copied(), bins));
    assert!(cond.visibility > 0.9, "{cond:?}");
    let all = fit(&arrival_histogram(&run.trajectories, bins));
    assert!(all.visibility < 0.1, "{all:?}");
}
