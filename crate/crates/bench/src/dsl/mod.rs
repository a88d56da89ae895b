//! The `.bench` scene language.
//!
//! One declaration per line, `#` starts a comment:
//!
//! ```text
//! source walborn waist=5mm
//! element double_slit width=80um separation=250um
//! element qwp slit=upper angle=45deg
//! detector signal scan=-5mm..5mm steps=401 at=1m
//! detector idler polarized angle=45deg
//! run orthodox coincidence seed=42
//! ```
//!
//! Dimensioned values always carry a unit. A [`BenchSpec`] holds exactly
//! what the file says; defaults are filled in by [`crate::plan::compile`].

mod parse;

use std::fmt;

use eraser_core::biphoton::Arm;
use eraser_core::waveoptics::SlitSide;

pub use parse::{parse, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Nm,
    Um,
    Mm,
    M,
    Deg,
    Rad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Angle,
}

impl Unit {
    pub const ALL: [Unit; 6] = [Unit::Nm, Unit::Um, Unit::Mm, Unit::M, Unit::Deg, Unit::Rad];

    pub fn suffix(self) -> &'static str {
        match self {
            Unit::Nm => "nm",
            Unit::Um => "um",
            Unit::Mm => "mm",
            Unit::M => "m",
            Unit::Deg => "deg",
            Unit::Rad => "rad",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Deg | Unit::Rad => Dimension::Angle,
            _ => Dimension::Length,
        }
    }

    /// Meters or radians per unit.
    pub fn factor(self) -> f64 {
        match self {
            Unit::Nm => 1e-9,
            Unit::Um => 1e-6,
            Unit::Mm => 1e-3,
            Unit::M => 1.0,
            Unit::Deg => std::f64::consts::PI / 180.0,
            Unit::Rad => 1.0,
        }
    }
}

/// A number as written, with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }

    /// Value in meters or radians.
    pub fn si(&self) -> f64 {
        self.value * self.unit.factor()
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.value, self.unit.suffix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// Polarization-entangled pair in the fundamental mode.
    Walborn,
    /// Lobe-correlated pair from a first-order pump.
    Menzel,
    /// Uncorrelated pair, both photons horizontal in one Hermite-Gauss mode.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceDecl {
    pub kind: SourceKind,
    pub mode: Option<u32>,
    pub waist: Option<Quantity>,
    pub wavelength: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementDecl {
    DoubleSlit {
        width: Quantity,
        separation: Quantity,
        center: Option<Quantity>,
        closed: Option<SlitSide>,
    },
    SingleSlit {
        width: Quantity,
        center: Option<Quantity>,
    },
    /// Quarter-wave plate over one slit of the preceding double slit.
    Qwp { slit: SlitSide, angle: Quantity },
    Polarizer { arm: Arm, angle: Quantity },
    Propagate { arm: Arm, distance: Quantity },
}

impl ElementDecl {
    pub fn name(&self) -> &'static str {
        match self {
            ElementDecl::DoubleSlit { .. } => "double_slit",
            ElementDecl::SingleSlit { .. } => "single_slit",
            ElementDecl::Qwp { .. } => "qwp",
            ElementDecl::Polarizer { .. } => "polarizer",
            ElementDecl::Propagate { .. } => "propagate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Fresnel,
    Fraunhofer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalDetectorDecl {
    pub scan: (Quantity, Quantity),
    pub steps: usize,
    /// Detector plane, measured from the source.
    pub at: Quantity,
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdlerDecl {
    Bucket,
    Point { x: Quantity, angle: Option<Quantity> },
    Polarized { angle: Quantity },
    Lobe { side: SlitSide },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Orthodox,
    Pilotwave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Coincidence,
    Singles,
    /// Joint half-plane table of the two photons.
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorName {
    Transport,
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunDecl {
    pub engine: Engine,
    pub mode: Mode,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub record: Option<usize>,
    pub bins: Option<usize>,
    pub integrator: Option<IntegratorName>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub source: SourceDecl,
    pub elements: Vec<ElementDecl>,
    pub signal: SignalDetectorDecl,
    pub idler: Option<IdlerDecl>,
    pub runs: Vec<RunDecl>,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Walborn => "walborn",
            SourceKind::Menzel => "menzel",
            SourceKind::Custom => "custom",
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fresnel => "fresnel",
            Method::Fraunhofer => "fraunhofer",
        }
    }
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Orthodox => "orthodox",
            Engine::Pilotwave => "pilotwave",
        }
    }
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Coincidence => "coincidence",
            Mode::Singles => "singles",
            Mode::Correlation => "correlation",
        }
    }
}

impl IntegratorName {
    pub fn name(self) -> &'static str {
        match self {
            IntegratorName::Transport => "transport",
            IntegratorName::Rk4 => "rk4",
        }
    }
}

fn opt<T: fmt::Display>(f: &mut fmt::Formatter<'_>, key: &str, v: &Option<T>) -> fmt::Result {
    match v {
        Some(v) => write!(f, " {key}={v}"),
        None => Ok(()),
    }
}

impl fmt::Display for BenchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.source;
        write!(f, "source {}", s.kind.name())?;
        opt(f, "mode", &s.mode)?;
        opt(f, "waist", &s.waist)?;
        opt(f, "wavelength", &s.wavelength)?;
        writeln!(f)?;

        for e in &self.elements {
            write!(f, "element {}", e.name())?;
            match e {
                ElementDecl::DoubleSlit {
                    width,
                    separation,
                    center,
                    closed,
                } => {
                    write!(f, " width={width} separation={separation}")?;
                    opt(f, "center", center)?;
                    opt(f, "closed", &closed.map(SlitSide::name))?;
                }
                ElementDecl::SingleSlit { width, center } => {
                    write!(f, " width={width}")?;
                    opt(f, "center", center)?;
                }
                ElementDecl::Qwp { slit, angle } => write!(f, " slit={} angle={angle}", slit.name())?,
                ElementDecl::Polarizer { arm, angle } => write!(f, " arm={} angle={angle}", arm.name())?,
                ElementDecl::Propagate { arm, distance } => write!(f, " arm={} distance={distance}", arm.name())?,
            }
            writeln!(f)?;
        }

        let d = &self.signal;
        write!(f, "detector signal scan={}..{} steps={} at={}", d.scan.0, d.scan.1, d.steps, d.at)?;
        opt(f, "method", &d.method.map(Method::name))?;
        writeln!(f)?;
        match &self.idler {
            None => {}
            Some(IdlerDecl::Bucket) => writeln!(f, "detector idler bucket")?,
            Some(IdlerDecl::Point { x, angle }) => {
                write!(f, "detector idler point x={x}")?;
                opt(f, "angle", angle)?;
                writeln!(f)?;
            }
            Some(IdlerDecl::Polarized { angle }) => writeln!(f, "detector idler polarized angle={angle}")?,
            Some(IdlerDecl::Lobe { side }) => writeln!(f, "detector idler lobe side={}", side.name())?,
        }

        for r in &self.runs {
            write!(f, "run {} {}", r.engine.name(), r.mode.name())?;
            opt(f, "n", &r.n)?;
            opt(f, "seed", &r.seed)?;
            opt(f, "record", &r.record)?;
            opt(f, "bins", &r.bins)?;
            opt(f, "integrator", &r.integrator.map(IntegratorName::name))?;
            opt(f, "steps", &r.steps)?;
            writeln!(f)?;
        }
        Ok(())
    }
}
