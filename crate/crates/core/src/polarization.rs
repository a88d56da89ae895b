//! Jones calculus for one photon and for a polarization-entangled pair.
//!
//! Angles are radians. Wave plates use the convention that the fast axis
//! carries zero retardance and the slow axis `+π/2`, i.e. a plate with its
//! fast axis along `H` is `diag(1, i)`.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{ensure_finite, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Polarization state of a single photon in the `{H, V}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub h: Complex64,
    pub v: Complex64,
}

impl JonesVector {
    pub const fn new(h: Complex64, v: Complex64) -> Self {
        Self { h, v }
    }

    pub const fn horizontal() -> Self {
        Self::new(ONE, ZERO)
    }

    pub const fn vertical() -> Self {
        Self::new(ZERO, ONE)
    }

    /// Linear polarization at `angle` from `H`.
    pub fn linear(angle: f64) -> Self {
        Self::new(Complex64::new(angle.cos(), 0.0), Complex64::new(angle.sin(), 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.h * c, self.v * c)
    }

    /// Unit-norm copy, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm_sqr().sqrt();
        (n > 0.0).then(|| self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    /// True when `self` and `other` differ only by a global phase (within `tol`).
    pub fn eq_up_to_phase(&self, other: &JonesVector, tol: f64) -> bool {
        let overlap = self.inner(other).norm();
        let prod = (self.norm_sqr() * other.norm_sqr()).sqrt();
        (prod - overlap).abs() <= tol && (self.norm_sqr() - other.norm_sqr()).abs() <= tol
    }
}

/// A 2×2 complex matrix acting on Jones vectors, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub [[Complex64; 2]; 2]);

impl JonesMatrix {
    pub const fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Self([[a, ZERO], [ZERO, b]])
    }

    pub fn apply(&self, j: &JonesVector) -> JonesVector {
        let m = &self.0;
        JonesVector::new(m[0][0] * j.h + m[0][1] * j.v, m[1][0] * j.h + m[1][1] * j.v)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        Self(matmul(&self.0, &rhs.0))
    }
}

fn matmul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

/// Counter-clockwise rotation `[[cos, -sin], [sin, cos]]`.
pub fn rotation(theta: f64) -> Result<JonesMatrix> {
    ensure_finite("rotation angle", theta)?;
    let (s, c) = theta.sin_cos();
    Ok(JonesMatrix([
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]))
}

/// Quarter-wave plate with its fast axis at `fast_axis`: `R(θ)·diag(1, i)·R(−θ)`.
pub fn quarter_wave_plate(fast_axis: f64) -> Result<JonesMatrix> {
    let r = rotation(fast_axis)?;
    let r_inv = rotation(-fast_axis)?;
    Ok(r * JonesMatrix::diag(ONE, Complex64::i()) * r_inv)
}

/// Ideal linear polarizer: projector onto `(cos θ, sin θ)`.
pub fn linear_polarizer(angle: f64) -> Result<JonesMatrix> {
    ensure_finite("polarizer angle", angle)?;
    let (s, c) = angle.sin_cos();
    Ok(JonesMatrix([
        [Complex64::new(c * c, 0.0), Complex64::new(c * s, 0.0)],
        [Complex64::new(c * s, 0.0), Complex64::new(s * s, 0.0)],
    ]))
}

/// Two-photon polarization state; `c[a][b]` is the amplitude for signal
/// basis state `a` and idler basis state `b` (index 0 = H, 1 = V).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonPol {
    pub c: [[Complex64; 2]; 2],
}

impl TwoPhotonPol {
    pub fn new(c: [[Complex64; 2]; 2]) -> Self {
        Self { c }
    }

    /// `signal ⊗ idler`.
    pub fn product(signal: &JonesVector, idler: &JonesVector) -> Self {
        let s = [signal.h, signal.v];
        let i = [idler.h, idler.v];
        let mut c = [[ZERO; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                c[a][b] = s[a] * i[b];
            }
        }
        Self { c }
    }

    /// `(|HV⟩ + |VH⟩)/√2`, the anti-correlated pair.
    pub fn bell_pair() -> Self {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new([[ZERO, r], [r, ZERO]])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn add(&self, other: &TwoPhotonPol) -> Self {
        let mut c = self.c;
        for a in 0..2 {
            for b in 0..2 {
                c[a][b] += other.c[a][b];
            }
        }
        Self { c }
    }

    pub fn max_abs_diff(&self, other: &TwoPhotonPol) -> f64 {
        JonesMatrix(self.c).max_abs_diff(&JonesMatrix(other.c))
    }
}

/// `c ↦ M·c`: an element in the signal arm.
pub fn apply_signal(m: &JonesMatrix, s: &TwoPhotonPol) -> TwoPhotonPol {
    TwoPhotonPol::new(matmul(&m.0, &s.c))
}

/// `c ↦ c·Mᵀ`: an element in the idler arm.
pub fn apply_idler(m: &JonesMatrix, s: &TwoPhotonPol) -> TwoPhotonPol {
    TwoPhotonPol::new(matmul(&s.c, &m.transpose().0))
}

/// Result of analysing the idler with a linear polarizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdlerProjection {
    /// Conditional signal state, not renormalized.
    pub signal_ket: JonesVector,
    /// Probability of the idler passing the analyzer.
    pub weight: f64,
}

/// Projects the idler onto linear polarization at `analyzer` and returns the
/// unnormalized conditional signal state together with its probability.
pub fn project_idler(s: &TwoPhotonPol, analyzer: f64) -> Result<IdlerProjection> {
    ensure_finite("analyzer angle", analyzer)?;
    let a = JonesVector::linear(analyzer);
    let ket = JonesVector::new(
        s.c[0][0] * a.h.conj() + s.c[0][1] * a.v.conj(),
        s.c[1][0] * a.h.conj() + s.c[1][1] * a.v.conj(),
    );
    Ok(IdlerProjection {
        signal_ket: ket,
        weight: ket.norm_sqr(),
    })
}
