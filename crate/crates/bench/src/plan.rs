//! Turns a [`BenchSpec`] into concrete engine calls.

use thiserror::Error;

use eraser_core::biphoton::{Arm, IdlerDetector};
use eraser_core::pilotwave::{IdlerRule, Integrator};
use eraser_core::polarization::{linear_polarizer, quarter_wave_plate, JonesMatrix};
use eraser_core::waveoptics::{fraunhofer_distance, Aperture, Grid, SlitSide};

use crate::dsl::{BenchSpec, ElementDecl, Engine, IdlerDecl, IntegratorName, Method, Mode, SourceKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct CompileError(pub String);

fn fail<T>(msg: impl Into<String>) -> Result<T, CompileError> {
    Err(CompileError(msg.into()))
}

pub const GRID_POINTS: usize = 2048;
pub const DEFAULT_WAVELENGTH: f64 = 700e-9;
pub const WALBORN_WAIST: f64 = 5e-3;
pub const MENZEL_WAIST: f64 = 200e-6;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PAIRS: usize = 100_000;
pub const DEFAULT_BINS: usize = 200;
pub const DEFAULT_STEPS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub kind: SourceKind,
    /// Hermite-Gauss order of the signal mode.
    pub mode: u32,
    pub waist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Aperture(Aperture),
    SlitPlate { side: SlitSide, plate: JonesMatrix },
    Polarizer { angle: f64, matrix: JonesMatrix },
    Propagate { distance: f64 },
}

/// An element with its arm and the plane it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Placed {
    pub arm: Arm,
    pub z: f64,
    pub op: Op,
}

/// What a pilot-wave run conditions on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotSetup {
    pub rule: IdlerRule,
    /// Idler analyzer angle for the polarization-entangled pair.
    pub analyzer: Option<f64>,
    pub integrator: Integrator,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub index: usize,
    pub engine: Engine,
    pub mode: Mode,
    pub seed: u64,
    pub n: usize,
    pub record: usize,
    pub bins: usize,
    pub pilot: Option<PilotSetup>,
    /// Engine calls in plane order.
    pub stages: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub source: Source,
    pub wavelength: f64,
    pub source_grid: Grid,
    pub scan: Grid,
    pub elements: Vec<Placed>,
    /// Plane of the last signal-arm element.
    pub signal_plane: f64,
    pub detector_z: f64,
    pub method: Method,
    pub idler: IdlerDetector,
    /// First double slit in the signal arm: width and separation.
    pub double_slit: Option<(f64, f64)>,
    pub runs: Vec<RunPlan>,
    pub warnings: Vec<String>,
}

impl Plan {
    /// Replaces every run's seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        for r in &mut self.runs {
            r.seed = seed;
        }
        self
    }
}

fn check<T>(r: eraser_core::Result<T>) -> Result<T, CompileError> {
    r.map_err(|e| CompileError(e.to_string()))
}

pub fn compile(spec: &BenchSpec) -> Result<Plan, CompileError> {
    let s = &spec.source;
    let (default_waist, mode) = match s.kind {
        SourceKind::Walborn => (WALBORN_WAIST, 0),
        SourceKind::Menzel => (MENZEL_WAIST, 1),
        SourceKind::Custom => (MENZEL_WAIST, s.mode.unwrap_or(0)),
    };
    if mode > 1 {
        return fail(format!("source mode {mode} is not supported; expected 0 or 1"));
    }
    let source = Source {
        kind: s.kind,
        mode,
        waist: s.waist.map_or(default_waist, |q| q.si()),
    };
    let wavelength = s.wavelength.map_or(DEFAULT_WAVELENGTH, |q| q.si());

    let mut elements = Vec::with_capacity(spec.elements.len());
    let mut z = [0.0, 0.0];
    let mut span: Option<f64> = None;
    let mut reach: f64 = 0.0;
    let mut narrowest = f64::INFINITY;
    let mut double_slit = None;
    let mut idler_polarizers = 0;
    for e in &spec.elements {
        let (arm, op) = match *e {
            ElementDecl::DoubleSlit {
                width,
                separation,
                center,
                closed,
            } => {
                let mut ap = check(Aperture::double(width.si(), separation.si(), center.map_or(0.0, |c| c.si())))?;
                if let Some(side) = closed {
                    ap = ap.with_closed(side);
                }
                double_slit.get_or_insert((width.si(), separation.si()));
                (Arm::Signal, Op::Aperture(ap))
            }
            ElementDecl::SingleSlit { width, center } => {
                (Arm::Signal, Op::Aperture(check(Aperture::single(width.si(), center.map_or(0.0, |c| c.si())))?))
            }
            ElementDecl::Qwp { slit, angle } => (
                Arm::Signal,
                Op::SlitPlate {
                    side: slit,
                    plate: check(quarter_wave_plate(angle.si()))?,
                },
            ),
            ElementDecl::Polarizer { arm, angle } => {
                if arm == Arm::Idler {
                    idler_polarizers += 1;
                }
                let angle = angle.si();
                (arm, Op::Polarizer {
                    angle,
                    matrix: check(linear_polarizer(angle))?,
                })
            }
            ElementDecl::Propagate { arm, distance } => (arm, Op::Propagate { distance: distance.si() }),
        };
        if let Op::Aperture(ap) = &op {
            span.get_or_insert(ap.span());
            let (lo, hi) = ap.extent();
            reach = reach.max(lo.abs()).max(hi.abs());
            narrowest = narrowest.min(ap.width());
        }
        let slot = if arm == Arm::Signal { 0 } else { 1 };
        elements.push(Placed { arm, z: z[slot], op: op.clone() });
        if let Op::Propagate { distance } = op {
            z[slot] += distance;
        }
    }
    let signal_plane = z[0];

    // The source stays centred on the axis; off-axis apertures widen the grid.
    let source_span = (8.0 * span.unwrap_or(source.waist)).max(4.0 * reach);
    let source_grid = check(Grid::centered(0.0, source_span, GRID_POINTS))?;
    let d = &spec.signal;
    let scan = check(Grid::linspace(d.scan.0.si(), d.scan.1.si(), d.steps))?;
    let detector_z = d.at.si();
    let method = d.method.unwrap_or(Method::Fresnel);
    let mut warnings = Vec::new();
    let free = detector_z - signal_plane;
    if narrowest / source_grid.dx < 8.0 {
        warnings.push(format!(
            "a {narrowest:e} m slit spans only {:.1} source grid cells",
            narrowest / source_grid.dx
        ));
    }
    if method == Method::Fraunhofer {
        let aperture = span.unwrap_or(source_span);
        let far = fraunhofer_distance(aperture, wavelength);
        if free < far {
            warnings.push(format!(
                "fraunhofer propagation over {free} m is shorter than the far-field distance {far:.3e} m"
            ));
        }
    }

    let idler_decl = spec.idler.clone().unwrap_or(IdlerDecl::Bucket);
    let idler = match idler_decl {
        IdlerDecl::Bucket => IdlerDetector::Bucket,
        IdlerDecl::Point { x, angle: None } => IdlerDetector::Point { x: x.si() },
        IdlerDecl::Point { x, angle: Some(a) } => IdlerDetector::PointPolarized { x: x.si(), angle: a.si() },
        IdlerDecl::Polarized { angle } => IdlerDetector::Polarized { angle: angle.si() },
        IdlerDecl::Lobe { side } => IdlerDetector::Lobe { side },
    };

    let mut runs = Vec::with_capacity(spec.runs.len());
    for (index, r) in spec.runs.iter().enumerate() {
        if r.mode != Mode::Correlation && free <= 0.0 {
            return fail(format!(
                "run {}: {} patterns need the signal detector beyond the last element plane",
                index + 1,
                r.mode.name()
            ));
        }
        if r.mode == Mode::Correlation && r.bins.is_some() {
            return fail(format!("run {}: correlation runs take no bins", index + 1));
        }
        let mut stages = vec!["source"];
        stages.extend(
            spec.elements
                .iter()
                .filter(|e| r.engine == Engine::Orthodox || !is_idler(e))
                .map(ElementDecl::name),
        );
        let pilot = match r.engine {
            Engine::Orthodox => {
                if r.n.is_some() || r.record.is_some() || r.bins.is_some() || r.integrator.is_some() || r.steps.is_some() {
                    return fail(format!(
                        "run {}: n, record, bins, integrator and steps apply to pilotwave runs only",
                        index + 1
                    ));
                }
                match r.mode {
                    Mode::Correlation if free > 0.0 => stages.push("propagate"),
                    Mode::Correlation => {}
                    _ => stages.push("propagate"),
                }
                stages.push(match r.mode {
                    Mode::Coincidence => "coincidence",
                    Mode::Singles => "singles",
                    Mode::Correlation => "near_field_correlation",
                });
                None
            }
            Engine::Pilotwave => {
                let setup = pilot_setup(index, r.mode, source.kind, &idler_decl, idler_polarizers, &elements)?;
                stages.push("guidance");
                stages.push("trajectories");
                stages.push(r.mode.name());
                Some(PilotSetup {
                    integrator: match r.integrator.unwrap_or(IntegratorName::Transport) {
                        IntegratorName::Transport => Integrator::Transport,
                        IntegratorName::Rk4 => Integrator::Rk4,
                    },
                    n_steps: r.steps.unwrap_or(DEFAULT_STEPS),
                    ..setup
                })
            }
        };
        runs.push(RunPlan {
            index,
            engine: r.engine,
            mode: r.mode,
            seed: r.seed.unwrap_or(DEFAULT_SEED),
            n: r.n.unwrap_or(DEFAULT_PAIRS),
            record: r.record.unwrap_or(0),
            bins: r.bins.unwrap_or(DEFAULT_BINS),
            pilot,
            stages,
        });
    }

    Ok(Plan {
        source,
        wavelength,
        source_grid,
        scan,
        elements,
        signal_plane,
        detector_z,
        method,
        idler,
        double_slit,
        runs,
        warnings,
    })
}

fn is_idler(e: &ElementDecl) -> bool {
    matches!(
        e,
        ElementDecl::Polarizer { arm: Arm::Idler, .. } | ElementDecl::Propagate { arm: Arm::Idler, .. }
    )
}

fn pilot_setup(
    index: usize,
    mode: Mode,
    kind: SourceKind,
    idler: &IdlerDecl,
    idler_polarizers: usize,
    elements: &[Placed],
) -> Result<PilotSetup, CompileError> {
    let run = index + 1;
    let element_analyzer = elements.iter().find_map(|p| match (p.arm, &p.op) {
        (Arm::Idler, Op::Polarizer { angle, .. }) => Some(*angle),
        _ => None,
    });
    if idler_polarizers > 1 {
        return fail(format!("run {run}: pilotwave supports at most one idler polarizer"));
    }
    let (rule, analyzer) = match (mode, idler) {
        (_, IdlerDecl::Point { .. }) => return fail("pilotwave supports bucket/lobe/polarized idler rules"),
        (Mode::Correlation, _) => {
            if kind != SourceKind::Menzel {
                return fail(format!("run {run}: pilotwave correlation needs a menzel source"));
            }
            (IdlerRule::Bucket, None)
        }
        (Mode::Singles, _) | (Mode::Coincidence, IdlerDecl::Bucket) => {
            let rule = if element_analyzer.is_some() && mode == Mode::Coincidence {
                IdlerRule::Polarizer
            } else {
                IdlerRule::Bucket
            };
            (rule, element_analyzer)
        }
        (Mode::Coincidence, IdlerDecl::Polarized { angle }) => {
            if element_analyzer.is_some() {
                return fail(format!(
                    "run {run}: pilotwave takes either an idler polarizer or a polarized idler detector, not both"
                ));
            }
            (IdlerRule::Polarizer, Some(angle.si()))
        }
        (Mode::Coincidence, IdlerDecl::Lobe { side }) => {
            if kind != SourceKind::Menzel {
                return fail(format!("run {run}: the lobe idler rule needs a menzel source"));
            }
            (IdlerRule::Lobe(*side), None)
        }
    };
    if analyzer.is_some() && kind != SourceKind::Walborn {
        return fail(format!("run {run}: idler polarization rules need a walborn source"));
    }
    Ok(PilotSetup {
        rule,
        analyzer,
        integrator: Integrator::Transport,
        n_steps: DEFAULT_STEPS,
    })
}
