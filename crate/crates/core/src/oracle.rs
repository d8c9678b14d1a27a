//! Closed-form solution of the diabatic passage via normalized Hermite
//! functions.
//!
//! `x_n(t) = (2ⁿ n! √π)^{−1/2} e^{−t²/2} H_n(t)` is the bounded solution of
//! `ẍ + (2n + 1 − t²)x = 0` with unit L² norm. The pair
//! `ψ(t) = (x_n(t), i·ẋ_n(t))` then solves `i·ψ̇ = H_n(t)·ψ` for the
//! companion-form Hamiltonian, which makes these functions an independent
//! oracle for the integrator. Evaluation uses the scaled orthonormal
//! recurrence (never raw polynomials times Gaussians), which stays stable
//! well past n = 50; derivatives come from the ladder identity
//! `ẋ_n = √(n/2)·x_{n−1} − √((n+1)/2)·x_{n+1}`.

use crate::algebra::{DensityMatrix, StateVec2, C64};
use crate::error::CoreError;

/// Value and derivative of the normalized Hermite function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteEval {
    pub n: u32,
    pub t: f64,
    pub value: f64,
    pub derivative: f64,
}

/// `(x_n(t), ẋ_n(t))` in one recurrence pass.
pub fn hermite_pair(n: u32, t: f64) -> (f64, f64) {
    let x0 = std::f64::consts::PI.powf(-0.25) * (-t * t / 2.0).exp();
    if n == 0 {
        let x1 = std::f64::consts::SQRT_2 * t * x0;
        return (x0, -(0.5f64).sqrt() * x1);
    }
    // Walk x_0 .. x_{n+1}, keeping the window needed for the derivative.
    let mut xkm1 = x0;
    let mut xk = std::f64::consts::SQRT_2 * t * x0;
    let mut below = 0.0; // x_{n−1} once k reaches n
    for k in 1..=n {
        if k == n {
            below = xkm1;
        }
        let next =
            t * (2.0 / (k as f64 + 1.0)).sqrt() * xk - (k as f64 / (k as f64 + 1.0)).sqrt() * xkm1;
        xkm1 = xk;
        xk = next;
    }
    // Now xkm1 = x_n, xk = x_{n+1}.
    let nf = n as f64;
    let dx = (nf / 2.0).sqrt() * below - ((nf + 1.0) / 2.0).sqrt() * xk;
    (xkm1, dx)
}

/// Normalized Hermite function `x_n(t)`.
pub fn x_n(n: u32, t: f64) -> f64 {
    hermite_pair(n, t).0
}

/// Derivative `ẋ_n(t)` from the ladder identity.
pub fn dx_n(n: u32, t: f64) -> f64 {
    hermite_pair(n, t).1
}

pub fn hermite_eval(n: u32, t: f64) -> HermiteEval {
    let (value, derivative) = hermite_pair(n, t);
    HermiteEval {
        n,
        t,
        value,
        derivative,
    }
}

/// The exact evolved state `(x_n(t), i·ẋ_n(t))` of the companion-form
/// passage; unnormalized, with the Gaussian envelope included.
pub fn exact_state(n: u32, t: f64) -> StateVec2 {
    let (x, dx) = hermite_pair(n, t);
    StateVec2::new(C64::new(x, 0.0), C64::new(0.0, dx))
}

/// Rank-1 density matrix of [`exact_state`]. Fails only when the envelope
/// has underflowed to zero (|t| far outside the oscillatory region); `x_n`
/// and `ẋ_n` never vanish together at finite representable scale.
pub fn exact_density(n: u32, t: f64) -> Result<DensityMatrix, CoreError> {
    DensityMatrix::from_state(&exact_state(n, t))
}

/// EP crossing time `t_c = √(2n + 1)` of the diabatic passage.
pub fn coalescence_time(n: f64) -> f64 {
    (2.0 * n + 1.0).sqrt()
}

/// Large-n estimate `t_b ≈ √(2n)` of the outermost amplitude maximum.
pub fn turning_time_estimate(n: f64) -> f64 {
    (2.0 * n).sqrt()
}

/// Outermost local maximum of `|x_n|`, located by scanning `x_n²`, refining
/// with golden-section search to 1e−10, and polishing on the sign change of
/// `ẋ_n` (value comparisons alone cannot localize an extremum past √ε).
pub fn turning_time_numeric(n: u32) -> f64 {
    let f = |t: f64| {
        let x = x_n(n, t);
        x * x
    };
    let upper = coalescence_time(n as f64) + 2.0;
    let h = 1e-3;
    let steps = (upper / h).ceil() as usize;
    let mut best_bracket: Option<(f64, f64)> = None;
    let mut fm1 = f(0.0);
    let mut f0 = f(h);
    for k in 1..steps {
        let t_next = (k as f64 + 1.0) * h;
        let f1 = f(t_next);
        if f0 >= fm1 && f0 >= f1 && f0 > 0.0 {
            best_bracket = Some(((k as f64 - 1.0) * h, t_next));
        }
        fm1 = f0;
        f0 = f1;
    }
    let Some((lo, hi)) = best_bracket else {
        // Monotone decay from t = 0: the boundary extremum (even n = 0 case).
        return 0.0;
    };
    let coarse = golden_section_max(&f, lo, hi, 1e-10);
    // derivative polish within the scan bracket
    let (mut a, mut b) = (coarse - h, coarse + h);
    let mut da = dx_n(n, a);
    if da * dx_n(n, b) > 0.0 {
        return coarse;
    }
    while b - a > 1e-12 {
        let mid = 0.5 * (a + b);
        let dm = dx_n(n, mid);
        if dm == 0.0 {
            return mid;
        }
        if da * dm < 0.0 {
            b = mid;
        } else {
            a = mid;
            da = dm;
        }
    }
    0.5 * (a + b)
}

fn golden_section_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// The normalized far-past state `(1 + t₀²)^{−1/2} [i, t₀]ᵀ` that gets
/// amplified onto the coalescing state at the window center.
pub fn asymptotic_initial_state(t0: f64) -> StateVec2 {
    let s = 1.0 / (1.0 + t0 * t0).sqrt();
    StateVec2::new(C64::new(0.0, s), C64::new(s * t0, 0.0))
}

/// Dirac inner product of `[cos θ, e^{−iφ} sin θ]ᵀ` with the far-past state:
/// `(1 + t₀²)^{−1/2} (i cos θ + t₀ e^{iφ} sin θ)`, nonzero for every (θ, φ)
/// at finite t₀.
pub fn overlap(theta: f64, phi: f64, t0: f64) -> C64 {
    let s = 1.0 / (1.0 + t0 * t0).sqrt();
    (C64::new(0.0, theta.cos()) + C64::from_polar(t0 * theta.sin(), phi)) * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::master_rhs;
    use crate::passages::{Family, PassageSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn pi_quarter() -> f64 {
        std::f64::consts::PI.powf(-0.25)
    }

    /// Second derivative from the ladder identity applied twice.
    fn d2x(n: u32, t: f64) -> f64 {
        let nf = n as f64;
        let lower = if n == 0 { 0.0 } else { dx_n(n - 1, t) };
        (nf / 2.0).sqrt() * lower - ((nf + 1.0) / 2.0).sqrt() * dx_n(n + 1, t)
    }

    #[test]
    fn ground_and_low_order_values() {
        assert_relative_eq!(x_n(0, 0.0), pi_quarter(), epsilon = 1e-15);
        assert_eq!(x_n(1, 0.0), 0.0);
        let eval = hermite_eval(3, 0.7);
        assert_eq!((eval.value, eval.derivative), hermite_pair(3, 0.7));
        assert_relative_eq!(
            x_n(2, 0.0),
            -pi_quarter() / std::f64::consts::SQRT_2,
            epsilon = 1e-15
        );
        assert_eq!(dx_n(0, 0.0), 0.0);
        assert_relative_eq!(
            dx_n(1, 0.0),
            std::f64::consts::SQRT_2 * pi_quarter(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn parity() {
        for n in 0..=10u32 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            for k in 0..=20 {
                let t = 0.25 * k as f64;
                assert_abs_diff_eq!(x_n(n, -t), sign * x_n(n, t), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ladder_identity_for_t_times_x() {
        // t·x_n = √(n/2)·x_{n−1} + √((n+1)/2)·x_{n+1}
        for n in 0..=10u32 {
            let nf = n as f64;
            for k in -20..=20 {
                let t = 0.25 * k as f64;
                let lower = if n == 0 { 0.0 } else { x_n(n - 1, t) };
                let rhs = (nf / 2.0).sqrt() * lower + ((nf + 1.0) / 2.0).sqrt() * x_n(n + 1, t);
                assert_abs_diff_eq!(t * x_n(n, t), rhs, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        let h = 1e-5;
        for n in 0..=10u32 {
            for k in -10..=10 {
                let t = 0.5 * k as f64;
                let fd = (x_n(n, t + h) - x_n(n, t - h)) / (2.0 * h);
                assert_abs_diff_eq!(dx_n(n, t), fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn oscillator_ode_residual() {
        for n in 0..=10u32 {
            for k in -20..=20 {
                let t = 0.25 * k as f64;
                let w2 = 2.0 * n as f64 + 1.0 - t * t;
                let res = d2x(n, t) + w2 * x_n(n, t);
                assert!(res.abs() <= 1e-9, "n={n}, t={t}: residual {res:.3e}");
            }
        }
    }

    #[test]
    fn unit_l2_norm_by_simpson_quadrature() {
        // composite Simpson over [−12, 12]
        let (a, b, m) = (-12.0, 12.0, 24_000usize);
        let h = (b - a) / m as f64;
        for n in [0u32, 1, 4, 10] {
            let f = |t: f64| x_n(n, t) * x_n(n, t);
            let mut s = f(a) + f(b);
            for k in 1..m {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(a + k as f64 * h);
            }
            let integral = s * h / 3.0;
            assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn exact_state_landmarks() {
        let s0 = exact_state(0, 0.0);
        assert_relative_eq!(s0.a.re, pi_quarter(), epsilon = 1e-15);
        assert_eq!(s0.b.norm(), 0.0);
        assert!(s0.dist_up_to_phase(&StateVec2::from_real(1.0, 0.0)) < 1e-15);

        // at t_c = +1 the evolved state is ∝ (1, −i), not the coalesced state
        let s1 = exact_state(0, 1.0);
        let expect = StateVec2::new(C64::new(1.0, 0.0), C64::new(0.0, -1.0));
        assert!(s1.dist_up_to_phase(&expect) < 1e-14);
        let scale = pi_quarter() * (-0.5f64).exp();
        assert_relative_eq!(s1.a.re, scale, epsilon = 1e-14);

        // both components vanish in the far tails
        let tail = exact_state(0, 8.0);
        assert!(tail.norm() < 1e-12);
    }

    #[test]
    fn exact_state_solves_the_schroedinger_equation() {
        let h = 1e-5;
        for n in [0u32, 1, 2, 5, 10] {
            let spec =
                PassageSpec::new(Family::RotatedDiabatic { n: n as f64 }, -5.0, 5.0).unwrap();
            for k in -9..=9 {
                let t = 0.5 * k as f64;
                let plus = exact_state(n, t + h);
                let minus = exact_state(n, t - h);
                let dpsi = StateVec2::new(
                    (plus.a - minus.a) / (2.0 * h),
                    (plus.b - minus.b) / (2.0 * h),
                );
                let hpsi = spec.hamiltonian_at(t).apply(&exact_state(n, t));
                let res = StateVec2::new(
                    C64::new(0.0, 1.0) * dpsi.a - hpsi.a,
                    C64::new(0.0, 1.0) * dpsi.b - hpsi.b,
                );
                assert!(
                    res.norm() <= 1e-8,
                    "n={n}, t={t}: residual {:.3e}",
                    res.norm()
                );
            }
        }
    }

    #[test]
    fn exact_density_structure() {
        let rho = exact_density(0, 0.0).unwrap();
        let b = rho.bloch();
        assert_eq!(b.ax, 0.0);
        assert_abs_diff_eq!(b.az, 1.0, epsilon = 1e-14);
        for n in [0u32, 1, 3] {
            for k in -8..=8 {
                let t = 0.5 * k as f64;
                let (x, dx) = hermite_pair(n, t);
                let rho = exact_density(n, t).unwrap();
                let m = rho.matrix();
                assert_abs_diff_eq!(m.m11.re, x * x, epsilon = 1e-14);
                assert_abs_diff_eq!(m.m22.re, dx * dx, epsilon = 1e-14);
                assert_abs_diff_eq!(m.m12.norm(), (x * dx).abs(), epsilon = 1e-14);
                assert!(rho.trace() > 0.0);
                assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn exact_density_satisfies_the_master_equation() {
        // finite-difference dρ/dt against −i(Hρ − ρH†), elementwise
        let h = 1e-5;
        for n in [0u32, 1, 2] {
            let spec =
                PassageSpec::new(Family::RotatedDiabatic { n: n as f64 }, -5.0, 5.0).unwrap();
            for k in -8..=8 {
                let t = 0.4 * k as f64;
                let plus = exact_density(n, t + h).unwrap();
                let minus = exact_density(n, t - h).unwrap();
                let fd = (*plus.matrix() - *minus.matrix()).scale(1.0 / (2.0 * h));
                let rhs = master_rhs(
                    &spec.hamiltonian_at(t),
                    exact_density(n, t).unwrap().matrix(),
                );
                assert!(
                    fd.max_abs_diff(&rhs) <= 1e-8,
                    "n={n}, t={t}: residual {:.3e}",
                    fd.max_abs_diff(&rhs)
                );
            }
        }
    }

    #[test]
    fn bloch_orbit_is_the_longitude_line() {
        for n in 0..=10u32 {
            for k in -20..=20 {
                let t = 0.25 * k as f64;
                let b = exact_density(n, t).unwrap().bloch();
                assert_eq!(b.ax, 0.0);
                assert_abs_diff_eq!(b.ay * b.ay + b.az * b.az, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn landmark_times() {
        assert_eq!(coalescence_time(0.0), 1.0);
        assert_eq!(turning_time_estimate(2.0), 2.0);
        // outermost extremum of |x_2|: root of t(10 − 4t²), i.e. √10 / 2
        let tb = turning_time_numeric(2);
        assert_abs_diff_eq!(tb, 10.0_f64.sqrt() / 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(tb, (2.5f64).sqrt(), epsilon = 1e-6);
        assert_eq!(turning_time_numeric(0), 0.0);
    }

    #[test]
    fn derivative_vanishes_at_numeric_turning_points() {
        for n in [0u32, 2, 5, 9] {
            let tb = turning_time_numeric(n);
            assert!(
                dx_n(n, tb).abs() <= 1e-8,
                "n={n}: ẋ({tb}) = {:.3e}",
                dx_n(n, tb)
            );
            // and the estimate √(2n) sits within the oscillatory region
            assert!(tb <= coalescence_time(n as f64));
        }
    }

    #[test]
    fn far_past_state_and_overlap() {
        let v = asymptotic_initial_state(0.0);
        assert_eq!(v.a, C64::new(0.0, 1.0));
        assert_eq!(v.b, C64::new(0.0, 0.0));

        for t0 in [-10.0f64, -2.0, 0.5, 3.0] {
            let s = (1.0 + t0 * t0).sqrt().recip();
            let o = overlap(0.0, 0.0, t0);
            assert_abs_diff_eq!(o.re, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(o.im, s, epsilon = 1e-15);
        }
        // |⟨φ|φ(t₀)⟩| → 1 for the equatorial state as t₀ → −∞
        let big = overlap(std::f64::consts::FRAC_PI_2, 0.0, -1e6);
        assert_abs_diff_eq!(big.norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn overlap_matches_inner_product_definition() {
        for (theta, phi, t0) in [(0.3f64, 1.1f64, -4.0), (1.2, -0.7, 2.5), (2.9, 0.0, -0.1)] {
            let state = StateVec2::new(
                C64::new(theta.cos(), 0.0),
                C64::from_polar(theta.sin(), -phi),
            );
            let expect = state.inner(&asymptotic_initial_state(t0));
            let got = overlap(theta, phi, t0);
            assert_abs_diff_eq!((got - expect).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn recurrence_stays_bounded_to_n_50() {
        for n in [20u32, 35, 50] {
            let t = (2.0 * n as f64).sqrt();
            let (x, dx) = hermite_pair(n, t);
            assert!(x.is_finite() && dx.is_finite());
            assert!(x.abs() < 1.0, "|x_{n}({t})| = {x}");
        }
    }
}
