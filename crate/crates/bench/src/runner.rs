//! Executes compiled runs on the two engines.

use eraser_core::biphoton::{
    coincidence_pattern, near_field_correlation, singles_pattern, source_menzel, source_product, source_walborn,
    which_slit_envelope, Arm, BiphotonState, Element, IdlerDetector, Propagator,
};
use eraser_core::pilotwave::{
    arrival_histogram, build_wave_stack, coincidence_filter, ensemble_density, equivariance, run_ensemble, Bins,
    Ensemble, Equivariance, GuidedWave, IdlerRule, PlaneAction, PlaneElement, Run, RunConfig, SlitTaken, StackConfig,
    VectorField,
};
use eraser_core::polarization::JonesVector;
use eraser_core::waveoptics::{hermite_gauss, Pattern, SlitSide};
use eraser_core::{Error, Result};

use crate::dsl::{Engine, Method, Mode, SourceKind};
use crate::plan::{Op, Plan, RunPlan};

/// Bins across the scan used for the equivariance check, independent of the
/// histogram binning of the run.
pub const EQUIVARIANCE_BINS: usize = 200;

/// Pilot-wave statistics that come with every pilot-wave run.
#[derive(Debug, Clone)]
pub struct PilotOutput {
    pub run: Run,
    pub equivariance: Equivariance,
    /// Pairs kept by the coincidence rule.
    pub accepted: usize,
    /// Fraction of transmitted particles whose slit matches their birth lobe.
    pub lobe_agreement: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub plan: RunPlan,
    pub pattern: Option<Pattern>,
    /// Same rates without cross-slit terms, when a double slit is present.
    pub envelope: Option<Pattern>,
    /// `[signal][idler]` half-plane probabilities, 0 = upper.
    pub table: Option<[[f64; 2]; 2]>,
    pub pilot: Option<PilotOutput>,
}

pub fn execute_all(plan: &Plan) -> Result<Vec<RunOutput>> {
    plan.runs.iter().map(|r| execute(plan, r)).collect()
}

pub fn execute(plan: &Plan, run: &RunPlan) -> Result<RunOutput> {
    match run.engine {
        Engine::Orthodox => orthodox(plan, run),
        Engine::Pilotwave => pilotwave(plan, run),
    }
}

/// The two-photon state at the signal detector plane.
pub fn orthodox_state(plan: &Plan) -> Result<BiphotonState> {
    let (grid, lambda, src) = (plan.source_grid, plan.wavelength, plan.source);
    let mut st = match src.kind {
        SourceKind::Walborn => source_walborn(grid, lambda, src.waist)?,
        SourceKind::Menzel => source_menzel(grid, lambda, src.waist)?,
        SourceKind::Custom => {
            let m = hermite_gauss(src.mode, src.waist, grid, lambda)?;
            let h = JonesVector::horizontal();
            source_product(m.clone(), m, h, h)
        }
    };
    for p in &plan.elements {
        let el = match &p.op {
            Op::Aperture(ap) => Element::Aperture(*ap),
            Op::SlitPlate { side, plate } => Element::SlitPlate {
                side: *side,
                plate: *plate,
            },
            Op::Polarizer { matrix, .. } => Element::Jones(*matrix),
            Op::Propagate { distance } => Element::Propagate {
                distance: *distance,
                out: grid,
                propagator: Propagator::Fresnel,
            },
        };
        st = st.apply(p.arm, &el)?;
    }
    let free = plan.detector_z - plan.signal_plane;
    if free > 0.0 {
        st = st.apply(
            Arm::Signal,
            &Element::Propagate {
                distance: free,
                out: plan.scan,
                propagator: match plan.method {
                    Method::Fresnel => Propagator::Fresnel,
                    Method::Fraunhofer => Propagator::Fraunhofer,
                },
            },
        )?;
    }
    Ok(st)
}

fn orthodox(plan: &Plan, run: &RunPlan) -> Result<RunOutput> {
    let st = orthodox_state(plan)?;
    let mut out = RunOutput {
        plan: run.clone(),
        pattern: None,
        envelope: None,
        table: None,
        pilot: None,
    };
    match run.mode {
        Mode::Correlation => out.table = Some(near_field_correlation(&st)?),
        Mode::Coincidence | Mode::Singles => {
            let det = if run.mode == Mode::Singles {
                IdlerDetector::Bucket
            } else {
                plan.idler
            };
            out.pattern = Some(if run.mode == Mode::Singles {
                singles_pattern(&st, &plan.scan)?
            } else {
                coincidence_pattern(&st, &plan.scan, &det)?
            });
            if plan.double_slit.is_some() {
                out.envelope = Some(which_slit_envelope(&st, &plan.scan, &det)?);
            }
        }
    }
    Ok(out)
}

fn signal_elements(plan: &Plan) -> Vec<PlaneElement> {
    plan.elements
        .iter()
        .filter(|p| p.arm == Arm::Signal)
        .filter_map(|p| {
            let action = match &p.op {
                Op::Aperture(ap) => PlaneAction::Aperture(*ap),
                Op::SlitPlate { side, plate } => PlaneAction::SlitPlate {
                    side: *side,
                    plate: *plate,
                },
                Op::Polarizer { matrix, .. } => PlaneAction::Jones(*matrix),
                Op::Propagate { .. } => return None,
            };
            Some(PlaneElement { z: p.z, action })
        })
        .collect()
}

pub fn pilot_ensemble(plan: &Plan, run: &RunPlan) -> Result<Ensemble> {
    let setup = run
        .pilot
        .ok_or_else(|| Error::Usage("not a pilot-wave run".into()))?;
    let src = plan.source;
    let mode = hermite_gauss(src.mode, src.waist, plan.source_grid, plan.wavelength)?;
    let elements = signal_elements(plan);
    let mut cfg = StackConfig::new((plan.scan.x(0), plan.scan.last()));
    cfg.n_steps = setup.n_steps;
    cfg.integrator = setup.integrator;
    let build =
        |pol: JonesVector| -> Result<GuidedWave> { build_wave_stack(VectorField::polarized(&mode, pol), &elements, plan.detector_z, &cfg) };
    Ok(match src.kind {
        SourceKind::Walborn => Ensemble::walborn(build, setup.analyzer)?,
        SourceKind::Menzel => Ensemble::menzel(build(JonesVector::horizontal())?),
        SourceKind::Custom => Ensemble::single(build(JonesVector::horizontal())?, (src.mode == 1).then_some(0.0)),
    })
}

fn side_index(side: SlitSide) -> usize {
    match side {
        SlitSide::Upper => 0,
        SlitSide::Lower => 1,
    }
}

fn pilotwave(plan: &Plan, run: &RunPlan) -> Result<RunOutput> {
    let setup = run.pilot.ok_or_else(|| Error::Usage("not a pilot-wave run".into()))?;
    let ens = pilot_ensemble(plan, run)?;
    let result = run_ensemble(
        &ens,
        &RunConfig {
            n: run.n,
            seed: run.seed,
            record: run.record,
        },
    )?;
    let (lo, hi) = (plan.scan.x(0), plan.scan.last());
    let eq = equivariance(&ens, &result, Bins::new(lo, hi, EQUIVARIANCE_BINS)?)?;
    let bins = Bins::new(lo, hi, run.bins)?;

    let transmitted: Vec<_> = result
        .trajectories
        .iter()
        .filter(|t| matches!(t.slit_taken, SlitTaken::Upper | SlitTaken::Lower) && t.birth_lobe.is_some())
        .collect();
    let lobe_agreement = (!transmitted.is_empty()).then(|| {
        let same = transmitted
            .iter()
            .filter(|t| t.birth_lobe.map(SlitSide::name) == Some(t.slit_taken.name()))
            .count();
        same as f64 / transmitted.len() as f64
    });

    let mut out = RunOutput {
        plan: run.clone(),
        pattern: None,
        envelope: None,
        table: None,
        pilot: None,
    };
    let accepted = match run.mode {
        Mode::Correlation => {
            let mut table = [[0.0; 2]; 2];
            let mut total = 0.0;
            for t in &result.trajectories {
                if let (Some(x), Some(lobe)) = (t.final_x, t.idler.lobe) {
                    if x != 0.0 {
                        let s = if x > 0.0 { 0 } else { 1 };
                        table[s][side_index(lobe)] += 1.0;
                        total += 1.0;
                    }
                }
            }
            if total == 0.0 {
                return Err(Error::Input("no particle reached the detector plane".into()));
            }
            for cell in table.iter_mut().flatten() {
                *cell /= total;
            }
            out.table = Some(table);
            total as usize
        }
        Mode::Coincidence | Mode::Singles => {
            let kept = coincidence_filter(&result.trajectories, setup.rule)?;
            let scale = 1.0 / (run.n as f64 * bins.width());
            out.pattern = Some(arrival_histogram(kept.iter().copied(), bins).scale(scale));
            if plan.double_slit.is_some() {
                let waves: Vec<usize> = if setup.rule == IdlerRule::Polarizer {
                    vec![0]
                } else {
                    (0..ens.waves.len()).collect()
                };
                out.envelope = ensemble_density(&ens, &waves, bins, true)
                    .ok()
                    .map(|p| p.scale(1.0 / bins.width()));
            }
            kept.len()
        }
    };
    out.pilot = Some(PilotOutput {
        run: result,
        equivariance: eq,
        accepted,
        lobe_agreement,
    });
    Ok(out)
}
