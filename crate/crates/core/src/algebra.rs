//! Complex 2×2 linear algebra, Hermitian splitting, density matrices, and
//! Bloch-vector projection.
//!
//! Values are plain `Copy` data; every exported operation is a pure function
//! of its inputs, so everything here is safe to share between threads.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;

pub type C64 = Complex64;

/// Entrywise tolerance for the Hermiticity check on density matrices.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Lower bound allowed on density-matrix eigenvalues at construction.
pub const EIGENVALUE_TOL: f64 = -1e-12;
/// Slack allowed on |a| for Bloch vectors fed to `DensityMatrix::from_bloch`.
pub const BLOCH_NORM_TOL: f64 = 1e-9;

/// Dense 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2C {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
}

impl Mat2C {
    pub fn new(m11: C64, m12: C64, m21: C64, m22: C64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    /// Build from real entries.
    pub fn from_real(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self::new(m11.into(), m12.into(), m21.into(), m22.into())
    }

    pub fn zero() -> Self {
        Self::from_real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self::from_real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn sigma_x() -> Self {
        Self::from_real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn sigma_y() -> Self {
        Self::new(
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        )
    }

    pub fn sigma_z() -> Self {
        Self::from_real(1.0, 0.0, 0.0, -1.0)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::new(
            self.m11.conj(),
            self.m21.conj(),
            self.m12.conj(),
            self.m22.conj(),
        )
    }

    pub fn trace(&self) -> C64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> C64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn is_finite(&self) -> bool {
        [self.m11, self.m12, self.m21, self.m22]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest entrywise absolute difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = *self - *other;
        [d.m11, d.m12, d.m21, d.m22]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        [self.m11, self.m12, self.m21, self.m22]
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Hermitian part average, `(M + M†)/2`.
    pub fn symmetrized(&self) -> Self {
        (*self + self.adjoint()).scale(0.5)
    }

    pub fn apply(&self, v: &StateVec2) -> StateVec2 {
        StateVec2::new(
            self.m11 * v.a + self.m12 * v.b,
            self.m21 * v.a + self.m22 * v.b,
        )
    }
}

impl Add for Mat2C {
    type Output = Mat2C;
    fn add(self, rhs: Mat2C) -> Mat2C {
        Mat2C::new(
            self.m11 + rhs.m11,
            self.m12 + rhs.m12,
            self.m21 + rhs.m21,
            self.m22 + rhs.m22,
        )
    }
}

impl Sub for Mat2C {
    type Output = Mat2C;
    fn sub(self, rhs: Mat2C) -> Mat2C {
        Mat2C::new(
            self.m11 - rhs.m11,
            self.m12 - rhs.m12,
            self.m21 - rhs.m21,
            self.m22 - rhs.m22,
        )
    }
}

impl Mul for Mat2C {
    type Output = Mat2C;
    fn mul(self, rhs: Mat2C) -> Mat2C {
        Mat2C::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

impl Neg for Mat2C {
    type Output = Mat2C;
    fn neg(self) -> Mat2C {
        self.scale(-1.0)
    }
}

/// Split `H` into its Hermitian and anti-Hermitian parts,
/// `H₊ = (H + H†)/2` and `H₋ = (H − H†)/2`, so that `H₊ + H₋ = H` exactly.
pub fn hermitian_split(h: &Mat2C) -> Result<(Mat2C, Mat2C), CoreError> {
    if !h.is_finite() {
        return Err(CoreError::InvalidInput(
            "hermitian_split: non-finite entries".into(),
        ));
    }
    let dag = h.adjoint();
    Ok(((*h + dag).scale(0.5), (*h - dag).scale(0.5)))
}

/// `AB − BA`.
pub fn commutator(a: &Mat2C, b: &Mat2C) -> Mat2C {
    *a * *b - *b * *a
}

/// `AB + BA`.
pub fn anticommutator(a: &Mat2C, b: &Mat2C) -> Mat2C {
    *a * *b + *b * *a
}

/// Two complex amplitudes; pure-state carrier, not necessarily normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVec2 {
    pub a: C64,
    pub b: C64,
}

impl StateVec2 {
    pub fn new(a: C64, b: C64) -> Self {
        Self { a, b }
    }

    pub fn from_real(a: f64, b: f64) -> Self {
        Self::new(a.into(), b.into())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self::new(self.a * s, self.b * s)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.a / n, self.b / n)
    }

    /// Dirac inner product ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> C64 {
        self.a.conj() * other.a + self.b.conj() * other.b
    }

    pub fn is_finite(&self) -> bool {
        self.a.re.is_finite()
            && self.a.im.is_finite()
            && self.b.re.is_finite()
            && self.b.im.is_finite()
    }

    /// Distance after normalizing both vectors and aligning the global phase.
    pub fn dist_up_to_phase(&self, other: &Self) -> f64 {
        let u = self.normalized();
        let v = other.normalized();
        let ov = u.inner(&v);
        let phase = if ov.norm() > 0.0 {
            ov / ov.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let d = StateVec2::new(u.a * phase - v.a, u.b * phase - v.b);
        d.norm()
    }
}

/// Real Bloch 3-vector; pure states sit on the unit sphere, mixed inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl BlochVector {
    pub fn new(ax: f64, ay: f64, az: f64) -> Self {
        Self { ax, ay, az }
    }

    pub fn norm(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let (dx, dy, dz) = (self.ax - other.ax, self.ay - other.ay, self.az - other.az);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Hermitian positive-semidefinite 2×2 matrix with positive trace, together
/// with an accumulated log-norm ledger `ℓ`: the physical unnormalized matrix
/// is `e^ℓ · ρ`. The ledger keeps decaying or amplified solutions
/// representable without under/overflowing the entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    rho: Mat2C,
    log_norm: f64,
}

impl DensityMatrix {
    /// Validate and wrap a matrix: Hermitian within `1e−12` entrywise,
    /// eigenvalues ≥ `−1e−12` relative to scale, positive trace.
    pub fn new(rho: Mat2C, log_norm: f64) -> Result<Self, CoreError> {
        if !rho.is_finite() || !log_norm.is_finite() {
            return Err(CoreError::InvalidInput(
                "density matrix: non-finite entries".into(),
            ));
        }
        let herm_defect = rho.max_abs_diff(&rho.adjoint());
        let scale = rho.frobenius_norm().max(1.0);
        if herm_defect > HERMITICITY_TOL * scale {
            return Err(CoreError::InvalidInput(format!(
                "density matrix: Hermiticity defect {herm_defect:.3e}"
            )));
        }
        let tr = rho.trace().re;
        if tr <= 0.0 {
            return Err(CoreError::DegenerateState(format!(
                "density matrix: trace {tr:.3e} is not positive"
            )));
        }
        // Eigenvalues of a Hermitian 2×2: (tr ± √(tr² − 4 det)) / 2.
        let det = rho.det().re;
        let disc = (tr * tr - 4.0 * det).max(0.0);
        let lambda_min = 0.5 * (tr - disc.sqrt());
        if lambda_min < EIGENVALUE_TOL * tr.max(1.0) {
            return Err(CoreError::InvalidInput(format!(
                "density matrix: negative eigenvalue {lambda_min:.3e}"
            )));
        }
        Ok(Self { rho, log_norm })
    }

    /// Maximally mixed state `I/2`.
    pub fn maximally_mixed() -> Self {
        Self {
            rho: Mat2C::identity().scale(0.5),
            log_norm: 0.0,
        }
    }

    /// Pure-state projector `|ψ⟩⟨ψ|`. Rejects the zero vector.
    pub fn from_state(psi: &StateVec2) -> Result<Self, CoreError> {
        if !psi.is_finite() {
            return Err(CoreError::InvalidInput(
                "from_state: non-finite amplitudes".into(),
            ));
        }
        if psi.norm_sqr() <= 0.0 {
            return Err(CoreError::InvalidInput(
                "from_state: zero state vector".into(),
            ));
        }
        let rho = Mat2C::new(
            psi.a * psi.a.conj(),
            psi.a * psi.b.conj(),
            psi.b * psi.a.conj(),
            psi.b * psi.b.conj(),
        );
        Self::new(rho, 0.0)
    }

    /// `½(I + a·σ)`. Rejects |a| > 1 + 1e−9.
    pub fn from_bloch(a: &BlochVector) -> Result<Self, CoreError> {
        let n = a.norm();
        if !n.is_finite() || n > 1.0 + BLOCH_NORM_TOL {
            return Err(CoreError::InvalidInput(format!(
                "from_bloch: |a| = {n} exceeds the unit ball"
            )));
        }
        let rho = Mat2C::new(
            C64::new(0.5 * (1.0 + a.az), 0.0),
            C64::new(0.5 * a.ax, -0.5 * a.ay),
            C64::new(0.5 * a.ax, 0.5 * a.ay),
            C64::new(0.5 * (1.0 - a.az), 0.0),
        );
        Self::new(rho, 0.0)
    }

    /// Wrap an integrator output, absorbing eigenvalue drift: a slightly
    /// negative eigenvalue (down to `−drift_tol` relative to the trace) is
    /// clipped to zero by a trace-preserving projection onto the positive
    /// cone. Anything below the budget is a real failure.
    pub(crate) fn from_hermitian_clipped(
        rho: Mat2C,
        log_norm: f64,
        drift_tol: f64,
    ) -> Result<Self, CoreError> {
        if !rho.is_finite() {
            return Err(CoreError::InvalidInput(
                "density matrix: non-finite entries".into(),
            ));
        }
        let sym = rho.symmetrized();
        let tr = sym.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(CoreError::DegenerateState(format!(
                "density matrix: trace {tr:.3e} is not positive"
            )));
        }
        let det = sym.det().re;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let lambda_min = 0.5 * (tr - disc);
        if lambda_min >= 0.0 {
            return Self::new(sym, log_norm);
        }
        if lambda_min < -drift_tol * tr.max(1.0) {
            return Err(CoreError::InvalidInput(format!(
                "density matrix: negative eigenvalue {lambda_min:.3e} beyond drift budget"
            )));
        }
        // tr(ρ) · P₁ with P₁ = (ρ − λ₂ I)/(λ₁ − λ₂): eigenvalues {tr, 0},
        // trace unchanged.
        let clipped = (sym - Mat2C::identity().scale(lambda_min)).scale(tr / disc);
        Self::new(clipped.symmetrized(), log_norm)
    }

    pub fn matrix(&self) -> &Mat2C {
        &self.rho
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// Same physical state with unit trace; the removed factor moves into ℓ.
    pub fn normalized(&self) -> Self {
        let tr = self.trace();
        Self {
            rho: self.rho.scale(1.0 / tr),
            log_norm: self.log_norm + tr.ln(),
        }
    }

    /// Bloch projection `a_i = tr(σ_i ρ) / tr(ρ)`; insensitive to overall
    /// positive rescaling of ρ.
    pub fn bloch(&self) -> BlochVector {
        let tr = self.trace();
        let ax = (self.rho.m12 + self.rho.m21).re / tr;
        let ay = -((self.rho.m12 - self.rho.m21).im / tr);
        let az = (self.rho.m11 - self.rho.m22).re / tr;
        BlochVector::new(ax, ay, az)
    }

    /// `tr(ρ̃²)` for the trace-normalized ρ̃; lies in [1/2, 1].
    pub fn purity(&self) -> f64 {
        let tr = self.trace();
        let r = self.rho.scale(1.0 / tr);
        (r * r).trace().re
    }
}
