use num_complex::Complex64;

use crate::error::{input, Error, Result};
use crate::polarization::{JonesMatrix, JonesVector};
use crate::waveoptics::{
    apply_aperture, fresnel_propagate, fresnel_propagate_with_gradient, Aperture, Grid, ScalarField, SlitSide,
};

/// Transverse vector field: `H` and `V` components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub h: ScalarField,
    pub v: ScalarField,
}

impl VectorField {
    pub fn new(h: ScalarField, v: ScalarField) -> Result<Self> {
        if !h.grid.approx_eq(&v.grid) || h.wavelength != v.wavelength {
            return input("vector field components must share grid and wavelength");
        }
        Ok(Self { h, v })
    }

    /// Scalar profile `f` carrying the uniform polarization `pol`.
    pub fn polarized(f: &ScalarField, pol: JonesVector) -> Self {
        Self {
            h: f.scaled(pol.h),
            v: f.scaled(pol.v),
        }
    }

    pub fn grid(&self) -> Grid {
        self.h.grid
    }

    pub fn wavelength(&self) -> f64 {
        self.h.wavelength
    }

    pub fn z(&self) -> f64 {
        self.h.z
    }

    /// `|ψ_H|² + |ψ_V|²` per sample.
    pub fn density(&self) -> Vec<f64> {
        self.h
            .samples
            .iter()
            .zip(&self.v.samples)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }

    pub fn power(&self) -> f64 {
        self.h.power() + self.v.power()
    }

    /// Interpolated local Jones vector at `x`.
    pub fn jones_at(&self, x: f64) -> JonesVector {
        JonesVector::new(self.h.value_at(x), self.v.value_at(x))
    }

    fn map(&self, mut f: impl FnMut(&ScalarField) -> Result<ScalarField>) -> Result<VectorField> {
        Ok(VectorField {
            h: f(&self.h)?,
            v: f(&self.v)?,
        })
    }

    /// Applies `m(x)` pointwise.
    fn apply_jones(&self, m: impl Fn(f64) -> Option<JonesMatrix>) -> VectorField {
        let mut out = self.clone();
        for i in 0..self.h.samples.len() {
            if let Some(m) = m(self.grid().x(i)) {
                let j = m.apply(&JonesVector::new(self.h.samples[i], self.v.samples[i]));
                out.h.samples[i] = j.h;
                out.v.samples[i] = j.v;
            }
        }
        out
    }

    /// Fresnel propagation of both components; a zero component stays zero
    /// without being integrated.
    fn propagate(&self, distance: f64, out: &Grid) -> Result<(VectorField, [Vec<Complex64>; 2])> {
        let one = |f: &ScalarField| -> Result<(ScalarField, Vec<Complex64>)> {
            if f.is_zero() {
                let z = ScalarField::zeros(*out, f.wavelength, f.z + distance)?;
                Ok((z, vec![Complex64::new(0.0, 0.0); out.n]))
            } else {
                fresnel_propagate_with_gradient(f, distance, out)
            }
        };
        let (h, dh) = one(&self.h)?;
        let (v, dv) = one(&self.v)?;
        Ok((VectorField { h, v }, [dh, dv]))
    }

    fn propagate_field(&self, distance: f64, out: &Grid) -> Result<VectorField> {
        self.map(|f| {
            if f.is_zero() {
                ScalarField::zeros(*out, f.wavelength, f.z + distance)
            } else {
                fresnel_propagate(f, distance, out)
            }
        })
    }

    /// Samples above `1e-12·max` density as `(lo, hi, narrowest run width)`.
    fn support(&self) -> Option<(f64, f64, f64)> {
        let rho = self.density();
        let max = rho.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            return None;
        }
        let g = self.grid();
        let on: Vec<bool> = rho.iter().map(|r| *r > 1e-12 * max).collect();
        let lo = on.iter().position(|b| *b)?;
        let hi = on.iter().rposition(|b| *b)?;
        let (mut narrowest, mut run) = (usize::MAX, 0usize);
        for &b in &on[lo..=hi] {
            if b {
                run += 1;
            } else if run > 0 {
                narrowest = narrowest.min(run);
                run = 0;
            }
        }
        if run > 0 {
            narrowest = narrowest.min(run);
        }
        Some((g.x(lo) - 0.5 * g.dx, g.x(hi) + 0.5 * g.dx, narrowest as f64 * g.dx))
    }
}

/// What an element does to the guiding wave at its plane.
#[derive(Debug, Clone, PartialEq)]
pub enum PlaneAction {
    Aperture(Aperture),
    /// Acts on one half-plane of the double slit at the same plane.
    SlitPlate { side: SlitSide, plate: JonesMatrix },
    Jones(JonesMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneElement {
    pub z: f64,
    pub action: PlaneAction,
}

/// How trajectories advance between planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Exact one-dimensional flow: a particle keeps its cumulative
    /// probability `C(x)` within a segment, so `x(z) = C_z⁻¹(C_start(x_start))`.
    Transport,
    /// Fourth-order Runge–Kutta on `dx/dz = v`, one step per plane pair.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackConfig {
    /// RK4 steps per free-propagation segment.
    pub n_steps: usize,
    /// Samples on each intermediate plane.
    pub plane_points: usize,
    /// Samples on planes that carry elements.
    pub element_points: usize,
    /// Transverse range the final plane must cover.
    pub window: (f64, f64),
    /// First plane offset after a segment start, relative to segment length.
    pub first_offset: f64,
    pub integrator: Integrator,
}

impl StackConfig {
    pub fn new(window: (f64, f64)) -> Self {
        Self {
            n_steps: 256,
            plane_points: 1024,
            element_points: 2048,
            window,
            first_offset: 1e-5,
            integrator: Integrator::Transport,
        }
    }
}

/// Guidance data on one plane.
#[derive(Debug, Clone)]
pub(crate) struct Plane {
    pub z: f64,
    pub grid: Grid,
    k: f64,
    threshold: f64,
    data: PlaneData,
    /// Normalized cumulative probability at the cell edges.
    cdf: Vec<f64>,
}

#[derive(Debug, Clone)]
enum PlaneData {
    /// Per-sample velocity, interpolated linearly.
    Table { velocity: Vec<f64>, regularized: Vec<bool> },
    /// Field and exact gradient per component; the velocity is taken from
    /// the cubic Hermite interpolant of the field.
    Hermite { psi: [Vec<Complex64>; 2], dpsi: [Vec<Complex64>; 2], nearest: Vec<usize> },
}

/// Index of the nearest sample that is not flagged, for every sample.
fn nearest_valid(flagged: &[bool]) -> Vec<usize> {
    let n = flagged.len();
    let mut nearest: Vec<usize> = (0..n).collect();
    if !flagged.iter().any(|b| *b) || flagged.iter().all(|b| *b) {
        return nearest;
    }
    let mut last = None;
    for i in 0..n {
        if !flagged[i] {
            last = Some(i);
        }
        nearest[i] = last.unwrap_or(usize::MAX);
    }
    let mut next = None;
    for i in (0..n).rev() {
        if !flagged[i] {
            next = Some(i);
        }
        if let Some(r) = next {
            if nearest[i] == usize::MAX || r - i < i - nearest[i] {
                nearest[i] = r;
            }
        }
    }
    nearest
}

impl Plane {
    fn from_field(field: &VectorField, grads: Option<[Vec<Complex64>; 2]>) -> Plane {
        let g = field.grid();
        let k = 2.0 * std::f64::consts::PI / field.wavelength();
        let rho = field.density();
        let max = rho.iter().cloned().fold(0.0, f64::max);
        let threshold = 1e-12 * max;
        let flagged: Vec<bool> = rho.iter().map(|r| *r <= threshold).collect();
        let nearest = nearest_valid(&flagged);
        let psi = [field.h.samples.clone(), field.v.samples.clone()];
        let data = match grads {
            Some(dpsi) => PlaneData::Hermite { psi, dpsi, nearest },
            None => {
                let deriv = |s: &[Complex64], i: usize| -> Complex64 {
                    let n = s.len();
                    if n < 2 {
                        Complex64::new(0.0, 0.0)
                    } else if i == 0 {
                        (s[1] - s[0]) / g.dx
                    } else if i == n - 1 {
                        (s[n - 1] - s[n - 2]) / g.dx
                    } else {
                        (s[i + 1] - s[i - 1]) / (2.0 * g.dx)
                    }
                };
                let raw: Vec<f64> = (0..g.n)
                    .map(|i| {
                        if flagged[i] {
                            return 0.0;
                        }
                        let j: f64 = psi.iter().map(|s| (s[i].conj() * deriv(s, i)).im).sum();
                        j / (k * rho[i])
                    })
                    .collect();
                let velocity = (0..g.n).map(|i| raw[nearest[i]]).collect();
                PlaneData::Table { velocity, regularized: flagged }
            }
        };
        let mut cdf = Vec::with_capacity(g.n + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for r in &rho {
            acc += r;
            cdf.push(acc);
        }
        if acc > 0.0 {
            for c in &mut cdf {
                *c /= acc;
            }
        }
        Plane {
            z: field.z(),
            grid: g,
            k,
            threshold,
            data,
            cdf,
        }
    }

    /// Cumulative probability up to `x`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let n = self.grid.n;
        let t = ((x - self.grid.lower_edge()) / self.grid.dx).clamp(0.0, n as f64);
        let i = (t.floor() as usize).min(n - 1);
        let f = t - i as f64;
        self.cdf[i] + (self.cdf[i + 1] - self.cdf[i]) * f
    }

    /// Position whose cumulative probability is `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.grid.n;
        let j = self.cdf.partition_point(|c| *c < u).clamp(1, n);
        let i = j - 1;
        let width = self.cdf[i + 1] - self.cdf[i];
        let f = if width > 0.0 { ((u - self.cdf[i]) / width).clamp(0.0, 1.0) } else { 0.0 };
        self.grid.lower_edge() + (i as f64 + f) * self.grid.dx
    }

    /// Velocity at `x` and whether node regularization was used. Positions
    /// outside the plane are clamped to its edge cells.
    pub fn velocity_at(&self, x: f64) -> (f64, bool) {
        let n = self.grid.n;
        let t = ((x - self.grid.x0) / self.grid.dx).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n.saturating_sub(2));
        match &self.data {
            PlaneData::Table { velocity, regularized } => {
                if n == 1 {
                    return (velocity[0], regularized[0]);
                }
                let f = t - i as f64;
                let v = velocity[i] * (1.0 - f) + velocity[i + 1] * f;
                (v, (f < 1.0 && regularized[i]) || (f > 0.0 && regularized[i + 1]))
            }
            PlaneData::Hermite { psi, dpsi, nearest } => {
                if n == 1 {
                    return (self.sample_velocity(psi, dpsi, 0), false);
                }
                let f = t - i as f64;
                let h = self.grid.dx;
                let (f2, f3) = (f * f, f * f * f);
                let (h00, h10, h01, h11) = (2.0 * f3 - 3.0 * f2 + 1.0, f3 - 2.0 * f2 + f, -2.0 * f3 + 3.0 * f2, f3 - f2);
                let (d00, d10, d01, d11) = (
                    (6.0 * f2 - 6.0 * f) / h,
                    3.0 * f2 - 4.0 * f + 1.0,
                    (-6.0 * f2 + 6.0 * f) / h,
                    3.0 * f2 - 2.0 * f,
                );
                let (mut j, mut rho) = (0.0, 0.0);
                for c in 0..2 {
                    let (p0, p1, m0, m1) = (psi[c][i], psi[c][i + 1], dpsi[c][i], dpsi[c][i + 1]);
                    let u = p0 * h00 + m0 * (h10 * h) + p1 * h01 + m1 * (h11 * h);
                    let du = p0 * d00 + m0 * d10 + p1 * d01 + m1 * d11;
                    j += (u.conj() * du).im;
                    rho += u.norm_sqr();
                }
                if rho > self.threshold {
                    (j / (self.k * rho), false)
                } else {
                    let near = nearest[if f < 0.5 { i } else { i + 1 }];
                    (self.sample_velocity(psi, dpsi, near), true)
                }
            }
        }
    }

    fn sample_velocity(&self, psi: &[Vec<Complex64>; 2], dpsi: &[Vec<Complex64>; 2], i: usize) -> f64 {
        let rho: f64 = psi.iter().map(|s| s[i].norm_sqr()).sum();
        if rho <= 0.0 {
            return 0.0;
        }
        let j: f64 = (0..2).map(|c| (psi[c][i].conj() * dpsi[c][i]).im).sum();
        j / (self.k * rho)
    }
}

/// Free propagation from `source` (the field just after the elements at
/// `za`) up to `zb`.
#[derive(Debug, Clone)]
pub(crate) struct Segment {
    pub za: f64,
    pub zb: f64,
    pub source: VectorField,
    /// Step planes, with midpoints in between when integrating with RK4.
    pub planes: Vec<Plane>,
    /// 2 when midpoints are stored, else 1.
    pub stride: usize,
    /// Field arriving at `zb` before the elements there, if any.
    pub arrival: Option<VectorField>,
    pub elements: Vec<PlaneAction>,
}

/// The guiding wave through the whole apparatus.
#[derive(Debug, Clone)]
pub struct GuidedWave {
    pub(crate) initial: VectorField,
    pub(crate) initial_elements: Vec<PlaneAction>,
    pub(crate) segments: Vec<Segment>,
    pub(crate) integrator: Integrator,
    pub z_final: f64,
}

/// Guidance slope with a flag set when a node regularization was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Velocity {
    pub slope: f64,
    pub regularized: bool,
}

fn plane_offsets(n: usize, first: f64, midpoints: bool) -> Vec<f64> {
    // Geometric spacing away from the segment start, resolving the fast
    // near-field evolution right behind an element.
    let mut t: Vec<f64> = (0..=n)
        .map(|k| if k == 0 { 0.0 } else { first.powf(1.0 - k as f64 / n as f64) })
        .collect();
    t[n] = 1.0;
    if !midpoints {
        return t;
    }
    let mut all = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        all.push(t[k]);
        all.push(0.5 * (t[k] + t[k + 1]));
    }
    all.push(1.0);
    all
}

fn double_slit_center(actions: &[PlaneAction]) -> Result<f64> {
    actions
        .iter()
        .rev()
        .find_map(|a| match a {
            PlaneAction::Aperture(ap @ Aperture::Double { .. }) => Some(ap.center()),
            _ => None,
        })
        .ok_or_else(|| Error::Usage("a slit plate needs a double slit at the same plane".into()))
}

pub(crate) fn apply_actions(field: &VectorField, actions: &[PlaneAction]) -> Result<VectorField> {
    let mut f = field.clone();
    for (k, a) in actions.iter().enumerate() {
        f = match a {
            PlaneAction::Aperture(ap) => f.map(|c| apply_aperture(c, ap))?,
            PlaneAction::Jones(m) => f.apply_jones(|_| Some(*m)),
            PlaneAction::SlitPlate { side, plate } => {
                let c = double_slit_center(&actions[..k])?;
                let side = *side;
                f.apply_jones(|x| {
                    let upper = x > c;
                    ((side == SlitSide::Upper) == upper).then_some(*plate)
                })
            }
        };
    }
    Ok(f)
}

/// Propagates `initial` through `elements` to `z_final`, recording the
/// guidance field on every plane.
///
/// Each segment between element planes is propagated directly from the field
/// just after its starting elements, so no sampling error accumulates from
/// plane to plane. Planes are sized to follow the spreading wave: the
/// transverse half-width grows linearly from the source support to the end
/// of the segment.
pub fn build_wave_stack(
    initial: VectorField,
    elements: &[PlaneElement],
    z_final: f64,
    cfg: &StackConfig,
) -> Result<GuidedWave> {
    if cfg.n_steps < 16 {
        return input(format!("at least 16 steps per segment are required, got {}", cfg.n_steps));
    }
    if !(z_final.is_finite() && z_final >= initial.z()) {
        return input(format!("final plane {z_final:e} m lies before the source plane"));
    }
    if !(cfg.window.1 > cfg.window.0) {
        return input("empty detection window");
    }
    let z0 = initial.z();
    for (i, e) in elements.iter().enumerate() {
        if !(e.z == z0 || (e.z > z0 && e.z < z_final)) {
            return input(format!("element plane {:e} m lies outside [{z0:e}, {z_final:e}) m", e.z));
        }
        if i > 0 && e.z < elements[i - 1].z {
            return input("elements must be ordered by plane");
        }
    }

    let group = |z: f64| -> Vec<PlaneAction> {
        elements.iter().filter(|e| e.z == z).map(|e| e.action.clone()).collect()
    };
    let initial_elements = group(z0);
    let mut field = apply_actions(&initial, &initial_elements)?;
    if field.power() <= 0.0 {
        return input("no light passes the elements at the source plane");
    }
    let first = field.clone();

    let mut stops: Vec<f64> = elements.iter().map(|e| e.z).filter(|z| *z > z0).collect();
    stops.dedup();
    if z_final > z0 {
        stops.push(z_final);
    }

    let wavelength = initial.wavelength();
    let mut segments = Vec::with_capacity(stops.len());
    let mut za = z0;
    for zb in stops {
        let is_final = zb == z_final;
        let actions = if is_final { Vec::new() } else { group(zb) };
        let (lo, hi, feature) = field
            .support()
            .ok_or_else(|| Error::Input("the guiding wave vanished".into()))?;
        let (ca, ha) = (0.5 * (lo + hi), 0.6 * (hi - lo));
        let (cb, hb) = if is_final {
            let (wl, wh) = cfg.window;
            (0.5 * (wl + wh), (0.55 * (wh - wl)).max(ha))
        } else {
            let mut h = ha + 4.0 * wavelength * (zb - za) / feature;
            for a in &actions {
                if let PlaneAction::Aperture(ap) = a {
                    let (alo, ahi) = ap.extent();
                    h = h.max(1.2 * (ahi - ca).abs()).max(1.2 * (alo - ca).abs());
                }
            }
            (ca, h)
        };
        let midpoints = cfg.integrator == Integrator::Rk4;
        let offsets = plane_offsets(cfg.n_steps, cfg.first_offset, midpoints);
        let mut planes = Vec::with_capacity(offsets.len());
        planes.push(Plane::from_field(&field, None));
        for &t in &offsets[1..] {
            let c = ca + (cb - ca) * t;
            let h = ha + (hb - ha) * t;
            let grid = Grid::centered(c, 2.0 * h, cfg.plane_points)?;
            let dz = (zb - za) * t;
            let (f, grads) = field.propagate(dz, &grid)?;
            let mut p = Plane::from_field(&f, Some(grads));
            p.z = za + dz;
            planes.push(p);
        }
        let arrival = if is_final {
            None
        } else {
            let grid = Grid::centered(cb, 2.0 * hb, cfg.element_points)?;
            Some(field.propagate_field(zb - za, &grid)?)
        };
        let next = match &arrival {
            Some(a) => Some(apply_actions(a, &actions)?),
            None => None,
        };
        segments.push(Segment {
            za,
            zb,
            source: field.clone(),
            planes,
            stride: if midpoints { 2 } else { 1 },
            arrival,
            elements: actions,
        });
        if let Some(n) = next {
            if n.power() <= 0.0 {
                return input(format!("no light passes the elements at {zb:e} m"));
            }
            field = n;
        }
        za = zb;
    }
    Ok(GuidedWave {
        initial: first,
        initial_elements,
        segments,
        integrator: cfg.integrator,
        z_final,
    })
}

impl GuidedWave {
    /// The field right after the source-plane elements; trajectories start here.
    pub fn initial(&self) -> &VectorField {
        &self.initial
    }

    pub fn wavelength(&self) -> f64 {
        self.initial.wavelength()
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn z_start(&self) -> f64 {
        self.initial.z()
    }

    /// RK4 step planes, ascending.
    pub fn z_planes(&self) -> Vec<f64> {
        let mut z = vec![self.z_start()];
        for s in &self.segments {
            z.extend(s.planes.iter().step_by(s.stride).skip(1).map(|p| p.z));
        }
        z
    }

    /// Exact field at plane `z` on `grid`, evaluated from the nearest
    /// preceding element plane. At an element plane this is the field
    /// arriving before the elements act, except at the source plane, where
    /// the source-plane elements have already acted.
    pub fn field_at(&self, z: f64, grid: &Grid) -> Result<VectorField> {
        if z == self.z_start() {
            return Ok(VectorField {
                h: resample(&self.initial.h, grid)?,
                v: resample(&self.initial.v, grid)?,
            });
        }
        let seg = self
            .segments
            .iter()
            .find(|s| z > s.za && z <= s.zb)
            .ok_or_else(|| Error::Input(format!("plane {z:e} m lies outside the stack")))?;
        seg.source.propagate_field(z - seg.za, grid)
    }

    /// Final-plane density per unit initial power.
    pub fn final_density(&self, grid: &Grid) -> Result<Vec<f64>> {
        let p0 = self.initial.power();
        Ok(self.field_at(self.z_final, grid)?.density().into_iter().map(|r| r / p0).collect())
    }

    /// Final-plane density with the two slit waves propagated separately and
    /// added incoherently, per unit initial power. Requires free propagation
    /// from the double slit to the final plane.
    pub fn which_slit_density(&self, grid: &Grid) -> Result<Vec<f64>> {
        let last = self.segments.last().ok_or_else(|| Error::Usage("empty stack".into()))?;
        let actions = if last.za == self.z_start() {
            &self.initial_elements
        } else {
            &self
                .segments
                .iter()
                .find(|s| s.zb == last.za)
                .ok_or_else(|| Error::Usage("inconsistent stack".into()))?
                .elements
        };
        let center = double_slit_center(actions)
            .map_err(|_| Error::Usage("which-slit density needs free propagation after a double slit".into()))?;
        let p0 = self.initial.power();
        let mut total = vec![0.0; grid.n];
        for upper in [true, false] {
            let part = last.source.apply_jones(|x| {
                ((x > center) != upper).then_some(JonesMatrix::diag(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)))
            });
            let rho = part.propagate_field(self.z_final - last.za, grid)?.density();
            for (t, r) in total.iter_mut().zip(rho) {
                *t += r / p0;
            }
        }
        Ok(total)
    }

    /// Guidance slope `dx/dz` at `(z, x)`, interpolated linearly between the
    /// stored planes in both directions.
    pub fn guidance_velocity(&self, z: f64, x: f64) -> Result<Velocity> {
        let seg = self
            .segments
            .iter()
            .find(|s| z >= s.za && z <= s.zb)
            .ok_or_else(|| Error::Input(format!("plane {z:e} m lies outside the stack")))?;
        let k = seg.planes.partition_point(|p| p.z <= z).clamp(1, seg.planes.len() - 1);
        let (a, b) = (&seg.planes[k - 1], &seg.planes[k]);
        let (va, fa) = a.velocity_at(x);
        let (vb, fb) = b.velocity_at(x);
        let w = if b.z > a.z { ((z - a.z) / (b.z - a.z)).clamp(0.0, 1.0) } else { 0.0 };
        Ok(Velocity {
            slope: va * (1.0 - w) + vb * w,
            regularized: fa || fb,
        })
    }
}

/// Cell-constant lookup, matching how the source plane is sampled.
fn resample(f: &ScalarField, grid: &Grid) -> Result<ScalarField> {
    ScalarField::from_fn(*grid, f.wavelength, f.z, |x| {
        let t = (x - f.grid.lower_edge()) / f.grid.dx;
        if t >= 0.0 && t < f.grid.n as f64 {
            f.samples[t as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
