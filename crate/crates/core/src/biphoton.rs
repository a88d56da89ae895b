//! Orthodox two-photon engine.
//!
//! A state is a list of product terms `amp · |s⟩|i⟩ ⊗ |s_pol⟩|i_pol⟩`.
//! Elements act locally on one arm. Coincidence rates follow from the idler
//! Gram matrix: the idler measurement decides which signal cross terms
//! survive.

use num_complex::Complex64;

use crate::error::{input, Error, Result};
use crate::polarization::{JonesMatrix, JonesVector};
use crate::waveoptics::{
    apply_aperture, fraunhofer_pattern, fresnel_propagate, hermite_gauss, split_lobes, Aperture, Grid,
    Pattern, ScalarField, SlitSide,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Signal,
    Idler,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Signal => "signal",
            Arm::Idler => "idler",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonTerm {
    pub amp: Complex64,
    pub s_field: ScalarField,
    pub i_field: ScalarField,
    pub s_pol: JonesVector,
    pub i_pol: JonesVector,
    /// Slit the signal part passed, once a double slit has split the term.
    pub slit: Option<SlitSide>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonState {
    pub terms: Vec<BiphotonTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagator {
    Fresnel,
    Fraunhofer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Aperture(Aperture),
    /// Plate covering one slit of the preceding double slit.
    SlitPlate { side: SlitSide, plate: JonesMatrix },
    /// Polarization element covering the whole arm.
    Jones(JonesMatrix),
    Propagate {
        distance: f64,
        out: Grid,
        propagator: Propagator,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdlerDetector {
    Bucket,
    Point { x: f64 },
    Polarized { angle: f64 },
    PointPolarized { x: f64, angle: f64 },
    /// Bucket over one half-plane of the idler, split at `x = 0`.
    Lobe { side: SlitSide },
}

const FRAC_1_SQRT_2: Complex64 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);

/// Anti-correlated polarization pair, both photons in the fundamental mode.
pub fn source_walborn(grid: Grid, wavelength: f64, waist: f64) -> Result<BiphotonState> {
    let mode = hermite_gauss(0, waist, grid, wavelength)?;
    let (h, v) = (JonesVector::horizontal(), JonesVector::vertical());
    let term = |s_pol, i_pol| BiphotonTerm {
        amp: FRAC_1_SQRT_2,
        s_field: mode.clone(),
        i_field: mode.clone(),
        s_pol,
        i_pol,
        slit: None,
    };
    Ok(BiphotonState {
        terms: vec![term(h, v), term(v, h)],
    })
}

/// Lobe-correlated pair from a first-order pump: the signal sits in the upper
/// lobe exactly when the idler does. Both photons are `H`.
pub fn source_menzel(grid: Grid, wavelength: f64, waist: f64) -> Result<BiphotonState> {
    let (up, down) = split_lobes(&hermite_gauss(1, waist, grid, wavelength)?, 0.0)?;
    let h = JonesVector::horizontal();
    let term = |f: &ScalarField| BiphotonTerm {
        amp: FRAC_1_SQRT_2,
        s_field: f.clone(),
        i_field: f.clone(),
        s_pol: h,
        i_pol: h,
        slit: None,
    };
    Ok(BiphotonState {
        terms: vec![term(&up), term(&down)],
    })
}

/// Uncorrelated control: a single product term.
pub fn source_product(s_field: ScalarField, i_field: ScalarField, s_pol: JonesVector, i_pol: JonesVector) -> BiphotonState {
    BiphotonState {
        terms: vec![BiphotonTerm {
            amp: Complex64::new(1.0, 0.0),
            s_field,
            i_field,
            s_pol,
            i_pol,
            slit: None,
        }],
    }
}

impl BiphotonState {
    /// Applies `element` to one arm of every term, then merges duplicates.
    pub fn apply(&self, arm: Arm, element: &Element) -> Result<BiphotonState> {
        let mut out = Vec::with_capacity(self.terms.len() * 2);
        for t in &self.terms {
            match (element, arm) {
                (Element::Aperture(ap @ Aperture::Double { .. }), Arm::Signal) => {
                    for w in ap.open_windows() {
                        let f = crate::waveoptics::apply_window(&t.s_field, &w);
                        if !f.is_zero() {
                            out.push(BiphotonTerm {
                                s_field: f,
                                slit: w.side,
                                ..t.clone()
                            });
                        }
                    }
                    // Validates geometry against the grid.
                    apply_aperture(&t.s_field, ap)?;
                }
                (Element::Aperture(ap), _) => {
                    let mut nt = t.clone();
                    let f = field_mut(&mut nt, arm);
                    *f = apply_aperture(f, ap)?;
                    if !f.is_zero() {
                        out.push(nt);
                    }
                }
                (Element::SlitPlate { .. }, Arm::Idler) => {
                    return Err(Error::Usage("slit plates belong to the signal arm".into()));
                }
                (Element::SlitPlate { side, plate }, Arm::Signal) => {
                    let slit = t.slit.ok_or_else(|| {
                        Error::Usage("a slit plate needs a preceding double slit in the signal arm".into())
                    })?;
                    let mut nt = t.clone();
                    if slit == *side {
                        nt.s_pol = plate.apply(&t.s_pol);
                    }
                    out.push(nt);
                }
                (Element::Jones(m), _) => {
                    let mut nt = t.clone();
                    match arm {
                        Arm::Signal => nt.s_pol = m.apply(&t.s_pol),
                        Arm::Idler => nt.i_pol = m.apply(&t.i_pol),
                    }
                    if nt.s_pol.norm_sqr() > 0.0 && nt.i_pol.norm_sqr() > 0.0 {
                        out.push(nt);
                    }
                }
                (
                    Element::Propagate {
                        distance,
                        out: grid,
                        propagator,
                    },
                    _,
                ) => {
                    let mut nt = t.clone();
                    let f = field_mut(&mut nt, arm);
                    *f = match propagator {
                        Propagator::Fresnel => fresnel_propagate(f, *distance, grid)?,
                        Propagator::Fraunhofer => fraunhofer_pattern(f, *distance, grid)?,
                    };
                    out.push(nt);
                }
            }
        }
        Ok(BiphotonState { terms: merge(out) })
    }

    /// `⟨Ψ|Ψ⟩` over both arms.
    pub fn norm(&self) -> Result<f64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (a, ta) in self.terms.iter().enumerate() {
            for tb in &self.terms[a..] {
                let g = tb.amp.conj()
                    * ta.amp
                    * tb.s_field.overlap(&ta.s_field)?
                    * tb.s_pol.inner(&ta.s_pol)
                    * tb.i_field.overlap(&ta.i_field)?
                    * tb.i_pol.inner(&ta.i_pol);
                total += if std::ptr::eq(ta, tb) { g } else { g + g.conj() };
            }
        }
        Ok(total.re)
    }

    pub fn signal_plane(&self) -> Option<f64> {
        self.terms.first().map(|t| t.s_field.z)
    }
}

fn field_mut(t: &mut BiphotonTerm, arm: Arm) -> &mut ScalarField {
    match arm {
        Arm::Signal => &mut t.s_field,
        Arm::Idler => &mut t.i_field,
    }
}

fn fields_match(a: &ScalarField, b: &ScalarField) -> bool {
    if !a.grid.approx_eq(&b.grid) {
        return false;
    }
    let scale = a.samples.iter().fold(0.0f64, |m, s| m.max(s.norm()));
    a.max_abs_diff(b) <= 1e-12 * scale.max(f64::MIN_POSITIVE)
}

fn pols_match(a: &JonesVector, b: &JonesVector) -> bool {
    (a.h - b.h).norm() <= 1e-12 && (a.v - b.v).norm() <= 1e-12
}

/// Coalesces terms whose fields, polarizations and slit tags coincide.
fn merge(terms: Vec<BiphotonTerm>) -> Vec<BiphotonTerm> {
    let mut out: Vec<BiphotonTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        let same = out.iter_mut().find(|o| {
            o.slit == t.slit
                && pols_match(&o.s_pol, &t.s_pol)
                && pols_match(&o.i_pol, &t.i_pol)
                && fields_match(&o.s_field, &t.s_field)
                && fields_match(&o.i_field, &t.i_field)
        });
        match same {
            Some(o) => o.amp += t.amp,
            None => out.push(t),
        }
    }
    out.retain(|t| t.amp.norm() > 0.0);
    out
}

/// Idler-side Gram matrix `G[t'][t]` for the chosen detector.
fn idler_gram(st: &BiphotonState, det: &IdlerDetector) -> Result<Vec<Vec<Complex64>>> {
    let n = st.terms.len();
    let point = |x: f64| -> Result<Vec<Complex64>> {
        let g = st.terms[0].i_field.grid;
        if x < g.x0 || x > g.last() {
            return input(format!("idler point {x:e} m lies outside the idler grid"));
        }
        Ok(st.terms.iter().map(|t| t.i_field.value_at(x)).collect())
    };
    let analyzer = |angle: f64| JonesVector::linear(angle);

    let spatial: Vec<Vec<Complex64>> = match *det {
        IdlerDetector::Bucket | IdlerDetector::Polarized { .. } => {
            let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            for a in 0..n {
                for b in a..n {
                    let o = st.terms[a].i_field.overlap(&st.terms[b].i_field)?;
                    g[a][b] = o;
                    g[b][a] = o.conj();
                }
            }
            g
        }
        IdlerDetector::Lobe { side } => {
            let keep = |x: f64| if side == SlitSide::Upper { x > 0.0 } else { x < 0.0 };
            let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            for a in 0..n {
                for b in a..n {
                    let o = st.terms[a].i_field.partial_overlap(&st.terms[b].i_field, keep)?;
                    g[a][b] = o;
                    g[b][a] = o.conj();
                }
            }
            g
        }
        IdlerDetector::Point { x } | IdlerDetector::PointPolarized { x, .. } => {
            let v = point(x)?;
            (0..n).map(|a| (0..n).map(|b| v[a].conj() * v[b]).collect()).collect()
        }
    };
    let pol = |a: usize, b: usize| -> Complex64 {
        let (pa, pb) = (&st.terms[a].i_pol, &st.terms[b].i_pol);
        match *det {
            IdlerDetector::Bucket | IdlerDetector::Point { .. } | IdlerDetector::Lobe { .. } => pa.inner(pb),
            IdlerDetector::Polarized { angle } | IdlerDetector::PointPolarized { angle, .. } => {
                let th = analyzer(angle);
                pa.inner(&th) * th.inner(pb)
            }
        }
    };
    Ok((0..n)
        .map(|a| (0..n).map(|b| spatial[a][b] * pol(a, b)).collect())
        .collect())
}

fn rate_pattern(
    st: &BiphotonState,
    scan: &Grid,
    det: &IdlerDetector,
    keep_pair: impl Fn(&BiphotonTerm, &BiphotonTerm) -> bool,
    label: String,
) -> Result<Pattern> {
    if st.terms.is_empty() {
        return Pattern::new(scan.positions(), vec![0.0; scan.n], label);
    }
    for t in &st.terms {
        if !t.s_field.grid.approx_eq(scan) {
            return Err(Error::Usage(
                "signal fields have not been propagated onto the scan grid".into(),
            ));
        }
    }
    let g = idler_gram(st, det)?;
    let n = st.terms.len();
    // M[t'][t] = amp_t·conj(amp_t')·⟨s_pol_t'|s_pol_t⟩·G[t'][t]
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let (ta, tb) = (&st.terms[a], &st.terms[b]);
            if !keep_pair(ta, tb) {
                continue;
            }
            let m = tb.amp * ta.amp.conj() * ta.s_pol.inner(&tb.s_pol) * g[a][b];
            if m.norm() > 0.0 {
                pairs.push((a, b, m));
            }
        }
    }
    let rates = (0..scan.n)
        .map(|j| {
            let r: f64 = pairs
                .iter()
                .map(|&(a, b, m)| (m * st.terms[b].s_field.samples[j] * st.terms[a].s_field.samples[j].conj()).re)
                .sum();
            r.max(0.0)
        })
        .collect();
    Pattern::new(scan.positions(), rates, label)
}

/// Signal rate at each scan position in coincidence with the idler detector.
pub fn coincidence_pattern(st: &BiphotonState, scan: &Grid, det: &IdlerDetector) -> Result<Pattern> {
    rate_pattern(st, scan, det, |_, _| true, "coincidence".into())
}

/// Signal rate with the idler traced out.
pub fn singles_pattern(st: &BiphotonState, scan: &Grid) -> Result<Pattern> {
    rate_pattern(st, scan, &IdlerDetector::Bucket, |_, _| true, "singles".into())
}

/// The same rate with every cross-slit term dropped: the pattern that
/// complete which-slit knowledge would give. Dividing a pattern by this
/// envelope leaves the pure two-slit modulation.
pub fn which_slit_envelope(st: &BiphotonState, scan: &Grid, det: &IdlerDetector) -> Result<Pattern> {
    if st.terms.iter().any(|t| t.slit.is_none()) {
        return Err(Error::Usage("which-slit envelope needs a double slit in the signal arm".into()));
    }
    rate_pattern(st, scan, det, |a, b| a.slit == b.slit, "envelope".into())
}

/// Joint probability over half-planes `{x > 0, x < 0}` of both arms, indexed
/// `[signal][idler]` with 0 = upper and 1 = lower; entries sum to 1.
pub fn near_field_correlation(st: &BiphotonState) -> Result<[[f64; 2]; 2]> {
    let half = |side: usize| move |x: f64| if side == 0 { x > 0.0 } else { x < 0.0 };
    let mut table = [[0.0; 2]; 2];
    for (s, row) in table.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for ta in &st.terms {
                for tb in &st.terms {
                    acc += tb.amp
                        * ta.amp.conj()
                        * ta.s_field.partial_overlap(&tb.s_field, half(s))?
                        * ta.s_pol.inner(&tb.s_pol)
                        * ta.i_field.partial_overlap(&tb.i_field, half(i))?
                        * ta.i_pol.inner(&tb.i_pol);
                }
            }
            *cell = acc.re.max(0.0);
        }
    }
    let total: f64 = table.iter().flatten().sum();
    if total <= 0.0 {
        return input("state carries no probability");
    }
    for cell in table.iter_mut().flatten() {
        *cell /= total;
    }
    Ok(table)
}
