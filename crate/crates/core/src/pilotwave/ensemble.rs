use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampling::CellSampler;
use super::stack::{GuidedWave, Integrator, PlaneAction, Segment};
use crate::error::{input, Result};
use crate::polarization::{project_idler, JonesVector, TwoPhotonPol};
use crate::waveoptics::{Aperture, Grid, Pattern, SlitSide};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlitTaken {
    Upper,
    Lower,
    /// No double slit on the way.
    Open,
    Blocked,
}

impl SlitTaken {
    pub fn name(self) -> &'static str {
        match self {
            SlitTaken::Upper => "upper",
            SlitTaken::Lower => "lower",
            SlitTaken::Open => "open",
            SlitTaken::Blocked => "blocked",
        }
    }

    fn from_side(side: Option<SlitSide>) -> Self {
        match side {
            Some(SlitSide::Upper) => SlitTaken::Upper,
            Some(SlitSide::Lower) => SlitTaken::Lower,
            None => SlitTaken::Open,
        }
    }
}

/// What the partner photon reports for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdlerOutcome {
    /// Anti-correlated polarization branch: 0 is signal `H` with idler `V`,
    /// 1 is signal `V` with idler `H`.
    pub pol_branch: Option<usize>,
    /// Whether the idler passed its polarizer.
    pub passed: Option<bool>,
    pub lobe: Option<SlitSide>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub index: usize,
    pub x0: f64,
    /// Index of the guiding wave that carried this particle.
    pub wave: usize,
    /// `(z, x)` on every step plane; only filled for recorded trajectories.
    pub path: Vec<(f64, f64)>,
    pub final_x: Option<f64>,
    pub birth_lobe: Option<SlitSide>,
    pub slit_taken: SlitTaken,
    /// Plane where the particle was blocked or absorbed.
    pub stopped_at: Option<f64>,
    pub idler: IdlerOutcome,
}

/// How pairs are drawn and which guiding wave the signal follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairModel {
    /// One guiding wave; no partner.
    Single { lobe_axis: Option<f64> },
    /// Anti-correlated polarization pair. Without an analyzer the signal
    /// follows the wave of its own branch; with one, the idler passes with
    /// Malus probability and the outcome selects the conditioned wave.
    Walborn { analyzer: Option<f64> },
    /// Both photons are born in the same lobe of the pump.
    Menzel { lobe_axis: f64 },
}

pub struct Ensemble {
    pub waves: Vec<GuidedWave>,
    pub model: PairModel,
}

impl Ensemble {
    pub fn single(wave: GuidedWave, lobe_axis: Option<f64>) -> Self {
        Self {
            waves: vec![wave],
            model: PairModel::Single { lobe_axis },
        }
    }

    pub fn menzel(wave: GuidedWave) -> Self {
        Self {
            waves: vec![wave],
            model: PairModel::Menzel { lobe_axis: 0.0 },
        }
    }

    /// Builds the signal waves for the anti-correlated pair with `build`,
    /// which receives the signal polarization entering the apparatus.
    pub fn walborn(mut build: impl FnMut(JonesVector) -> Result<GuidedWave>, analyzer: Option<f64>) -> Result<Self> {
        let waves = match analyzer {
            None => vec![build(JonesVector::horizontal())?, build(JonesVector::vertical())?],
            Some(theta) => {
                let pair = TwoPhotonPol::bell_pair();
                let mut out = Vec::with_capacity(2);
                for angle in [theta, theta + std::f64::consts::FRAC_PI_2] {
                    let ket = project_idler(&pair, angle)?.signal_ket;
                    let pol = ket
                        .normalized()
                        .ok_or_else(|| crate::Error::Input("analyzer outcome has zero probability".into()))?;
                    out.push(build(pol)?);
                }
                out
            }
        };
        Ok(Self {
            waves,
            model: PairModel::Walborn { analyzer },
        })
    }

    /// Marginal probability that a pair follows each wave.
    pub fn wave_weights(&self) -> Vec<f64> {
        match self.model {
            PairModel::Single { .. } | PairModel::Menzel { .. } => vec![1.0],
            PairModel::Walborn { .. } => vec![0.5, 0.5],
        }
    }

    fn lobe_axis(&self) -> Option<f64> {
        match self.model {
            PairModel::Single { lobe_axis } => lobe_axis,
            PairModel::Menzel { lobe_axis } => Some(lobe_axis),
            PairModel::Walborn { .. } => None,
        }
    }

    fn draw_pair(&self, rng: &mut ChaCha8Rng) -> (usize, IdlerOutcome) {
        match self.model {
            PairModel::Single { .. } | PairModel::Menzel { .. } => (0, IdlerOutcome::default()),
            PairModel::Walborn { analyzer } => {
                let branch = usize::from(rng.gen::<f64>() >= 0.5);
                let idler_pol = if branch == 0 {
                    JonesVector::vertical()
                } else {
                    JonesVector::horizontal()
                };
                match analyzer {
                    None => (
                        branch,
                        IdlerOutcome {
                            pol_branch: Some(branch),
                            ..Default::default()
                        },
                    ),
                    Some(theta) => {
                        let p = JonesVector::linear(theta).inner(&idler_pol).norm_sqr();
                        let passed = rng.gen::<f64>() < p;
                        (
                            if passed { 0 } else { 1 },
                            IdlerOutcome {
                                pol_branch: Some(branch),
                                passed: Some(passed),
                                lobe: None,
                            },
                        )
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub seed: u64,
    /// Number of trajectories (lowest indices) whose full paths are kept.
    pub record: usize,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub trajectories: Vec<Trajectory>,
    /// Adjacent order violations among trajectories of the same wave,
    /// summed over every step plane.
    pub crossings: usize,
    /// RK4 stages that used a node-regularized velocity.
    pub regularized_stages: usize,
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn slit_of(actions: &[PlaneAction], x: f64) -> Option<SlitTaken> {
    actions.iter().rev().find_map(|a| match a {
        PlaneAction::Aperture(ap @ Aperture::Double { .. }) => Some(
            ap.open_windows()
                .iter()
                .find(|w| w.contains(x))
                .map_or(SlitTaken::Blocked, |w| SlitTaken::from_side(w.side)),
        ),
        _ => None,
    })
}

/// Probability of the particle at `x` passing the elements of one plane,
/// given the local polarization of the arriving wave.
fn survival(actions: &[PlaneAction], local: JonesVector, x: f64) -> f64 {
    let before = local.norm_sqr();
    if before <= 0.0 {
        return 0.0;
    }
    let mut j = local;
    let mut center = None;
    for a in actions {
        match a {
            PlaneAction::Aperture(ap) => {
                if !ap.open_windows().iter().any(|w| w.contains(x)) {
                    return 0.0;
                }
                if let Aperture::Double { center: c, .. } = ap {
                    center = Some(*c);
                }
            }
            PlaneAction::SlitPlate { side, plate } => {
                let upper = x > center.unwrap_or(0.0);
                if (*side == SlitSide::Upper) == upper {
                    j = plate.apply(&j);
                }
            }
            PlaneAction::Jones(m) => j = m.apply(&j),
        }
    }
    (j.norm_sqr() / before).clamp(0.0, 1.0)
}

struct Walker {
    traj: Trajectory,
    x: f64,
    rng_pos: u128,
    alive: bool,
}

fn count_crossings(walkers: &[Walker]) -> usize {
    let mut last = f64::NEG_INFINITY;
    let mut n = 0;
    for w in walkers.iter().filter(|w| w.alive) {
        if w.x < last {
            n += 1;
        }
        last = w.x;
    }
    n
}

fn transport_segment(seg: &Segment, walkers: &mut [Walker], record: usize, crossings: &mut usize) {
    let start = &seg.planes[0];
    let labels: Vec<f64> = walkers.iter().map(|w| start.cumulative(w.x)).collect();
    for p in &seg.planes[1..] {
        for (w, u) in walkers.iter_mut().zip(&labels).filter(|(w, _)| w.alive) {
            w.x = p.quantile(*u);
            if w.traj.index < record {
                w.traj.path.push((p.z, w.x));
            }
        }
        *crossings += count_crossings(walkers);
    }
}

fn rk4_segment(seg: &Segment, walkers: &mut [Walker], record: usize, crossings: &mut usize, flagged: &mut usize) {
    let steps = (seg.planes.len() - 1) / 2;
    for k in 0..steps {
        let (p0, pm, p1) = (&seg.planes[2 * k], &seg.planes[2 * k + 1], &seg.planes[2 * k + 2]);
        let h = p1.z - p0.z;
        for w in walkers.iter_mut().filter(|w| w.alive) {
            let (k1, f1) = p0.velocity_at(w.x);
            let (k2, f2) = pm.velocity_at(w.x + 0.5 * h * k1);
            let (k3, f3) = pm.velocity_at(w.x + 0.5 * h * k2);
            let (k4, f4) = p1.velocity_at(w.x + h * k3);
            *flagged += [f1, f2, f3, f4].iter().filter(|f| **f).count();
            w.x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if w.traj.index < record {
                w.traj.path.push((p1.z, w.x));
            }
        }
        *crossings += count_crossings(walkers);
    }
}

fn integrate_segment(
    seg: &Segment,
    integrator: Integrator,
    walkers: &mut [Walker],
    record: usize,
    seed: u64,
    crossings: &mut usize,
    flagged: &mut usize,
) {
    match integrator {
        Integrator::Transport => transport_segment(seg, walkers, record, crossings),
        Integrator::Rk4 => rk4_segment(seg, walkers, record, crossings, flagged),
    }
    if let Some(arrival) = &seg.arrival {
        for w in walkers.iter_mut().filter(|w| w.alive) {
            let p = survival(&seg.elements, arrival.jones_at(w.x), w.x);
            let passes = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                let mut rng = rng_for(seed, w.traj.index);
                rng.set_word_pos(w.rng_pos);
                let u: f64 = rng.gen();
                w.rng_pos = rng.get_word_pos();
                u < p
            };
            if let Some(s) = slit_of(&seg.elements, w.x) {
                w.traj.slit_taken = if passes { s } else { SlitTaken::Blocked };
            }
            if !passes {
                w.alive = false;
                w.traj.stopped_at = Some(seg.zb);
            }
        }
    }
}

/// Samples `cfg.n` pairs and integrates every signal particle through its
/// guiding wave with fourth-order Runge–Kutta, one step per plane pair.
///
/// Each pair owns a random stream derived from `(seed, index)`, so results
/// do not depend on how pairs are grouped.
pub fn run_ensemble(ens: &Ensemble, cfg: &RunConfig) -> Result<Run> {
    if cfg.n == 0 {
        return input("at least one trajectory is required");
    }
    if ens.waves.is_empty() {
        return input("ensemble has no guiding wave");
    }
    let samplers = ens
        .waves
        .iter()
        .map(|w| CellSampler::new(w.initial()))
        .collect::<Result<Vec<_>>>()?;
    let axis = ens.lobe_axis();

    let mut groups: Vec<Vec<Walker>> = (0..ens.waves.len()).map(|_| Vec::new()).collect();
    for index in 0..cfg.n {
        let mut rng = rng_for(cfg.seed, index);
        let (wave, mut idler) = ens.draw_pair(&mut rng);
        let x0 = samplers[wave].sample(&mut rng);
        let birth_lobe = axis.map(|a| if x0 > a { SlitSide::Upper } else { SlitSide::Lower });
        if matches!(ens.model, PairModel::Menzel { .. }) {
            idler.lobe = birth_lobe;
        }
        let g = &ens.waves[wave];
        let slit_taken = slit_of(&g.initial_elements, x0).unwrap_or(SlitTaken::Open);
        let mut path = Vec::new();
        if index < cfg.record {
            path.push((g.z_start(), x0));
        }
        groups[wave].push(Walker {
            traj: Trajectory {
                index,
                x0,
                wave,
                path,
                final_x: None,
                birth_lobe,
                slit_taken,
                stopped_at: None,
                idler,
            },
            x: x0,
            rng_pos: rng.get_word_pos(),
            alive: true,
        });
    }

    let (mut crossings, mut flagged) = (0, 0);
    let mut out = Vec::with_capacity(cfg.n);
    for (wave, mut walkers) in groups.into_iter().enumerate() {
        walkers.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.traj.index.cmp(&b.traj.index)));
        for seg in &ens.waves[wave].segments {
            let integrator = ens.waves[wave].integrator();
            integrate_segment(seg, integrator, &mut walkers, cfg.record, cfg.seed, &mut crossings, &mut flagged);
        }
        for mut w in walkers {
            if w.alive {
                w.traj.final_x = Some(w.x);
            }
            out.push(w.traj);
        }
    }
    out.sort_by_key(|t| t.index);
    Ok(Run {
        trajectories: out,
        crossings,
        regularized_stages: flagged,
    })
}

/// Single guiding wave, no partner photon.
pub fn run_trajectories(wave: GuidedWave, n: usize, seed: u64) -> Result<Run> {
    run_ensemble(&Ensemble::single(wave, None), &RunConfig { n, seed, record: 0 })
}

/// Which idler detections count as coincidences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdlerRule {
    /// Every pair.
    Bucket,
    /// Pairs whose idler passed its polarizer.
    Polarizer,
    /// Pairs whose idler was found in the given lobe.
    Lobe(SlitSide),
}

/// Selects the coincidence sub-ensemble. Pairs are never altered after the
/// fact: the rule only reads outcomes fixed when the pair was drawn.
pub fn coincidence_filter(trajs: &[Trajectory], rule: IdlerRule) -> Result<Vec<&Trajectory>> {
    match rule {
        IdlerRule::Bucket => Ok(trajs.iter().collect()),
        IdlerRule::Polarizer => {
            if trajs.iter().any(|t| t.idler.passed.is_none()) {
                return input("pairs carry no idler polarizer outcome");
            }
            Ok(trajs.iter().filter(|t| t.idler.passed == Some(true)).collect())
        }
        IdlerRule::Lobe(side) => {
            if trajs.iter().any(|t| t.idler.lobe.is_none()) {
                return input("pairs carry no idler lobe outcome");
            }
            Ok(trajs.iter().filter(|t| t.idler.lobe == Some(side)).collect())
        }
    }
}

/// Uniform bins over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bins {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Bins {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) || n == 0 {
            return input(format!("invalid binning {lo}..{hi} with {n} bins"));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.lo + (i as f64 + 0.5) * self.width()).collect()
    }

    fn index(&self, x: f64) -> Option<usize> {
        if x < self.lo || x > self.hi {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.n - 1))
    }
}

/// Arrival counts per bin on the final plane.
pub fn arrival_histogram<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>, bins: Bins) -> Pattern {
    let mut counts = vec![0.0; bins.n];
    for t in trajs {
        if let Some(i) = t.final_x.and_then(|x| bins.index(x)) {
            counts[i] += 1.0;
        }
    }
    Pattern {
        positions: bins.centers(),
        rates: counts,
        label: "arrivals".into(),
    }
}

const SUBSAMPLES: usize = 16;

/// Final-plane probability per bin for the selected waves, mixed with their
/// pair weights. With `which_slit` the slit waves are added incoherently.
pub fn ensemble_density(ens: &Ensemble, waves: &[usize], bins: Bins, which_slit: bool) -> Result<Pattern> {
    let m = bins.n * SUBSAMPLES;
    let step = (bins.hi - bins.lo) / m as f64;
    let grid = Grid::new(bins.lo + 0.5 * step, step, m)?;
    let weights = ens.wave_weights();
    let mut rates = vec![0.0; bins.n];
    for &w in waves {
        let wave = ens
            .waves
            .get(w)
            .ok_or_else(|| crate::Error::Input(format!("no guiding wave {w}")))?;
        let rho = if which_slit {
            wave.which_slit_density(&grid)?
        } else {
            wave.final_density(&grid)?
        };
        for (j, r) in rho.iter().enumerate() {
            rates[j / SUBSAMPLES] += weights[w] * r * step;
        }
    }
    Pattern::new(bins.centers(), rates, if which_slit { "which-slit density" } else { "density" })
}

/// Histogram-versus-intensity comparison on the final plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equivariance {
    /// `Σ|h_b − p_b|` for the histogram and intensity, each normalized over the bins.
    pub l1: f64,
    /// Expected L1 from finite sampling alone: `√(2/(πn))·Σ√p_b`.
    pub noise_floor: f64,
    pub arrivals: usize,
}

pub fn equivariance(ens: &Ensemble, run: &Run, bins: Bins) -> Result<Equivariance> {
    let hist = arrival_histogram(&run.trajectories, bins);
    let all: Vec<usize> = (0..ens.waves.len()).collect();
    let density = ensemble_density(ens, &all, bins, false)?;
    let arrivals = hist.rates.iter().sum::<f64>();
    let (h, ok_h) = hist.normalize();
    let (p, ok_p) = density.normalize();
    if !ok_h || !ok_p {
        return input("no arrivals or no intensity inside the bins");
    }
    let l1 = h.rates.iter().zip(&p.rates).map(|(a, b)| (a - b).abs()).sum();
    let noise_floor = (2.0 / (std::f64::consts::PI * arrivals)).sqrt() * p.rates.iter().map(|r| r.sqrt()).sum::<f64>();
    Ok(Equivariance {
        l1,
        noise_floor,
        arrivals: arrivals as usize,
    })
}
