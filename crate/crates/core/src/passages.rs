//! Declarative time-dependent Hamiltonian families, the rotation between lab
//! and Jordan frames, and exceptional-point location.
//!
//! Two frames appear throughout. The lab frame carries the gain/loss form
//! `i·γ(t)·σ_z + κ(t)·σ_x`; conjugating with the fixed unitary
//! `R = (1/√2)[[1, i], [i, 1]]` turns the diabatic member of that family into
//! the companion form `[[0, 1], [ω²(t), 0]]` with `ω²(t) = 2n + 1 − t²`.
//! Matching the two forms entrywise forces `γ + κ = 1` and `κ − γ = ω²`,
//! which is what [`lab_frame_params`] returns.

use serde::{Deserialize, Serialize};

use crate::algebra::{DensityMatrix, Mat2C, StateVec2, C64};
use crate::error::CoreError;

/// Scan step for bracketing discriminant roots.
const EP_SCAN_STEP: f64 = 1e-3;
/// Bisection tolerance for refined exceptional-point times.
const EP_BISECT_TOL: f64 = 1e-12;
/// A critical point of the discriminant counts as a tangent EP below this.
const EP_TANGENT_TOL: f64 = 1e-10;

/// Polynomial gain ramps available to the constant-coupling family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum GammaRamp {
    Linear { slope: f64, intercept: f64 },
    Quadratic { a: f64, b: f64, c: f64 },
}

impl GammaRamp {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            GammaRamp::Linear { slope, intercept } => slope * t + intercept,
            GammaRamp::Quadratic { a, b, c } => (a * t + b) * t + c,
        }
    }
}

/// The Hamiltonian families covered by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// Companion form `[[0, 1], [ω_n²(t), 0]]`, exactly solvable.
    RotatedDiabatic { n: f64 },
    /// The same passage in the gain/loss frame `i·γ_n(t)σ_z + κ_n(t)σ_x`.
    LabDiabatic { n: f64 },
    /// `i·t·σ_z + σ_x`.
    LinearAdiabatic,
    /// `i·(1 − t²)·σ_z + σ_x`.
    QuadraticAdiabatic,
    /// `i·γ(t)·σ_z + κ₀·σ_x` with time-independent coupling.
    ConstantKappa { kappa0: f64, gamma: GammaRamp },
}

/// A Hamiltonian family together with a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageSpec {
    pub family: Family,
    pub t_start: f64,
    pub t_end: f64,
}

impl PassageSpec {
    pub fn new(family: Family, t_start: f64, t_end: f64) -> Result<Self, CoreError> {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(CoreError::Configuration(format!(
                "passage window [{t_start}, {t_end}] must be finite with t_start < t_end"
            )));
        }
        match family {
            Family::RotatedDiabatic { n } | Family::LabDiabatic { n } => {
                if !(n.is_finite() && n >= 0.0) {
                    return Err(CoreError::Configuration(format!(
                        "diabatic passage index n = {n} must be ≥ 0"
                    )));
                }
            }
            Family::ConstantKappa { kappa0, .. } => {
                if !(kappa0.is_finite() && kappa0 != 0.0) {
                    return Err(CoreError::Configuration(
                        "constant-kappa passage needs κ₀ ≠ 0".into(),
                    ));
                }
            }
            Family::LinearAdiabatic | Family::QuadraticAdiabatic => {}
        }
        Ok(Self {
            family,
            t_start,
            t_end,
        })
    }

    /// Instantaneous Hamiltonian. Times outside the window are still
    /// evaluated; the window only bounds propagation and EP searches.
    pub fn hamiltonian_at(&self, t: f64) -> Mat2C {
        match self.family {
            Family::RotatedDiabatic { n } => Mat2C::from_real(0.0, 1.0, omega_sq(n, t), 0.0),
            Family::LabDiabatic { n } => {
                let (gamma, kappa) = lab_frame_params(n, t);
                gain_loss_form(gamma, kappa)
            }
            Family::LinearAdiabatic => gain_loss_form(t, 1.0),
            Family::QuadraticAdiabatic => gain_loss_form(1.0 - t * t, 1.0),
            Family::ConstantKappa { kappa0, gamma } => gain_loss_form(gamma.eval(t), kappa0),
        }
    }

    /// `κ²(t) − γ²(t)` for gain/loss forms and `ω²(t)` for the companion
    /// form; equal to a quarter of the eigenvalue discriminant in all cases.
    /// Positive values mean real eigenvalues (exact phase), negative an
    /// imaginary pair (broken phase), zero an exceptional point.
    pub fn phase_indicator(&self, t: f64) -> f64 {
        match self.family {
            Family::RotatedDiabatic { n } | Family::LabDiabatic { n } => omega_sq(n, t),
            Family::LinearAdiabatic => 1.0 - t * t,
            Family::QuadraticAdiabatic => {
                let g = 1.0 - t * t;
                1.0 - g * g
            }
            Family::ConstantKappa { kappa0, gamma } => {
                let g = gamma.eval(t);
                kappa0 * kappa0 - g * g
            }
        }
    }

    fn is_diabatic(&self) -> bool {
        matches!(
            self.family,
            Family::RotatedDiabatic { .. } | Family::LabDiabatic { .. }
        )
    }
}

/// `ω_n²(t) = 2n + 1 − t²`; real or imaginary frequency squared.
pub fn omega_sq(n: f64, t: f64) -> f64 {
    2.0 * n + 1.0 - t * t
}

/// Lab-frame gain and coupling for the diabatic passage:
/// `κ = (1 + ω²)/2`, `γ = (1 − ω²)/2`, hence `γ + κ = 1`, `κ − γ = ω²`.
pub fn lab_frame_params(n: f64, t: f64) -> (f64, f64) {
    let w2 = omega_sq(n, t);
    ((1.0 - w2) / 2.0, (1.0 + w2) / 2.0)
}

/// `i·γ·σ_z + κ·σ_x`.
fn gain_loss_form(gamma: f64, kappa: f64) -> Mat2C {
    Mat2C::new(
        C64::new(0.0, gamma),
        C64::new(kappa, 0.0),
        C64::new(kappa, 0.0),
        C64::new(0.0, -gamma),
    )
}

/// The frame rotation `R = (1/√2)[[1, i], [i, 1]]` (unitary).
pub fn rotation() -> Mat2C {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat2C::new(
        C64::new(s, 0.0),
        C64::new(0.0, s),
        C64::new(0.0, s),
        C64::new(s, 0.0),
    )
}

/// `R · H · R⁻¹` (with `R⁻¹ = R†`).
pub fn rotate_hamiltonian(h: &Mat2C) -> Mat2C {
    let r = rotation();
    r * *h * r.adjoint()
}

/// `R · ρ · R†`; unitary, so Hermiticity, positivity, and trace survive.
pub fn rotate_density(rho: &DensityMatrix) -> DensityMatrix {
    let r = rotation();
    let m = r * *rho.matrix() * r.adjoint();
    DensityMatrix::new(m.symmetrized(), rho.log_norm())
        .expect("unitary conjugation preserves density-matrix invariants")
}

/// `R† · ρ · R`, the inverse frame change (rotated → lab).
pub fn rotate_density_inverse(rho: &DensityMatrix) -> DensityMatrix {
    let r = rotation();
    let m = r.adjoint() * *rho.matrix() * r;
    DensityMatrix::new(m.symmetrized(), rho.log_norm())
        .expect("unitary conjugation preserves density-matrix invariants")
}

/// Spectral regime of an interval between exceptional points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Real eigenvalue pair (κ² − γ² > 0).
    Exact,
    /// Complex-conjugate eigenvalue pair, net gain/loss (κ² − γ² < 0).
    Broken,
}

/// One exceptional point: the time and the coalesced eigenvector there.
#[derive(Debug, Clone, Copy)]
pub struct ExceptionalPoint {
    pub t: f64,
    pub eigenvector: StateVec2,
}

/// An interval of the window with a definite spectral regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeInterval {
    pub t_lo: f64,
    pub t_hi: f64,
    pub regime: Regime,
}

/// Exceptional points inside a window plus regime labels on the intervals
/// between them.
#[derive(Debug, Clone)]
pub struct EpReport {
    pub points: Vec<ExceptionalPoint>,
    pub regimes: Vec<RegimeInterval>,
}

/// Locate every `t` in the window where the eigenvalue discriminant
/// vanishes. Diabatic families use the closed form `t = ±√(2n+1)`; the
/// gain/loss forms are scanned for sign changes of κ² − γ² and bisected,
/// with tangent roots picked up from critical points of the indicator.
pub fn ep_times(spec: &PassageSpec) -> EpReport {
    let mut times: Vec<f64> = Vec::new();
    if spec.is_diabatic() {
        let n = match spec.family {
            Family::RotatedDiabatic { n } | Family::LabDiabatic { n } => n,
            _ => unreachable!(),
        };
        let tc = (2.0 * n + 1.0).sqrt();
        for t in [-tc, tc] {
            if t >= spec.t_start && t <= spec.t_end {
                times.push(t);
            }
        }
    } else {
        times = scan_indicator_roots(spec);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let points = times
        .iter()
        .map(|&t| ExceptionalPoint {
            t,
            eigenvector: coalesced_eigenvector(&spec.hamiltonian_at(t)),
        })
        .collect::<Vec<_>>();

    // Label the open intervals between consecutive EPs (and window edges)
    // by the indicator's sign at the midpoint. Tangent EPs do not flip the
    // sign, so adjacent intervals may share a regime.
    let mut edges = vec![spec.t_start];
    edges.extend(times.iter().copied());
    edges.push(spec.t_end);
    let mut regimes = Vec::new();
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo < 1e-9 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let regime = if spec.phase_indicator(mid) >= 0.0 {
            Regime::Exact
        } else {
            Regime::Broken
        };
        regimes.push(RegimeInterval {
            t_lo: lo,
            t_hi: hi,
            regime,
        });
    }

    EpReport { points, regimes }
}

/// Sign-change bracketing on a uniform grid followed by bisection, plus a
/// second pass over critical points of the indicator for tangent roots.
fn scan_indicator_roots(spec: &PassageSpec) -> Vec<f64> {
    let f = |t: f64| spec.phase_indicator(t);
    let span = spec.t_end - spec.t_start;
    let steps = (span / EP_SCAN_STEP).ceil() as usize;
    let dt = span / steps as f64;

    let mut roots = Vec::new();
    let mut prev_t = spec.t_start;
    let mut prev_f = f(prev_t);
    if prev_f == 0.0 {
        roots.push(prev_t);
    }
    for k in 1..=steps {
        let t = spec.t_start + k as f64 * dt;
        let ft = f(t);
        if ft == 0.0 {
            roots.push(t);
        } else if prev_f * ft < 0.0 {
            roots.push(bisect(&f, prev_t, t));
        }
        prev_t = t;
        prev_f = ft;
    }

    // Tangencies: bracket sign changes of the derivative, then keep critical
    // points where the indicator itself vanishes.
    let h = 0.5 * EP_SCAN_STEP;
    let df = |t: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    let mut prev_t = spec.t_start;
    let mut prev_d = df(prev_t);
    for k in 1..=steps {
        let t = spec.t_start + k as f64 * dt;
        let d = df(t);
        if prev_d * d < 0.0 {
            let tc = bisect(&df, prev_t, t);
            if f(tc).abs() <= EP_TANGENT_TOL && !roots.iter().any(|&r| (r - tc).abs() < 1e-9) {
                roots.push(tc);
            }
        }
        prev_t = t;
        prev_d = d;
    }
    roots
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > EP_BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector of a defective 2×2 at its double eigenvalue λ = tr/2, read off
/// the non-vanishing row of `H − λI`. Normalized with the larger-magnitude
/// component's phase removed (first component preferred on ties).
fn coalesced_eigenvector(h: &Mat2C) -> StateVec2 {
    let lambda = h.trace() * 0.5;
    let m11 = h.m11 - lambda;
    let m22 = h.m22 - lambda;
    let row1 = m11.norm() + h.m12.norm();
    let row2 = h.m21.norm() + m22.norm();
    let v = if row1 >= row2 && row1 > 0.0 {
        StateVec2::new(h.m12, -m11)
    } else if row2 > 0.0 {
        StateVec2::new(m22, -h.m21)
    } else {
        // H is a scalar matrix; not defective, report the basis convention.
        return StateVec2::from_real(1.0, 0.0);
    };
    let v = v.normalized();
    let anchor = if v.a.norm() >= v.b.norm() { v.a } else { v.b };
    let v = v.scale_c(anchor.conj() / anchor.norm());
    // flush negative zeros for stable text output
    let clean = |c: C64| C64::new(c.re + 0.0, c.im + 0.0);
    StateVec2::new(clean(v.a), clean(v.b))
}
