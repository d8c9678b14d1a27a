//! Seeded ensembles, attractor-convergence metrics, and the fixed figure
//! datasets.
//!
//! An ensemble propagates many initial states (pure states uniform on the
//! Bloch sphere, mixed states uniform in the ball) through one passage and
//! reduces the trajectories to per-sample convergence metrics: the pairwise
//! Bloch diameter, the minimum purity, and — for diabatic passages with
//! integer index — the mean distance to the closed-form orbit.
//!
//! For windows that continue past the coalescing state (the time-symmetric
//! diabatic ones), the ensemble contracts onto the orbit mid-window and then
//! spreads again: the growing branch re-amplifies whatever contamination the
//! initial conditions carried. The report therefore exposes both the
//! end-of-window fixed-point estimate and an `attractor` block taken at the
//! sample of minimum diameter, which is where the prepared state lives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{BlochVector, DensityMatrix};
use crate::error::CoreError;
use crate::integrator::{propagate, IntegratorConfig, TrajectoryRecord};
use crate::oracle::exact_density;
use crate::passages::{rotate_density_inverse, Family, PassageSpec};

/// Tolerance for treating a passage index as an integer.
const INTEGER_N_TOL: f64 = 1e-9;

/// A seeded ensemble: one passage, counts of pure and mixed initial states,
/// and the integrator settings shared by every member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub passage: PassageSpec,
    pub n_pure: usize,
    pub n_mixed: usize,
    pub seed: u64,
    pub integrator: IntegratorConfig,
}

/// Convergence metrics at the minimum-diameter sample: the numerically
/// observed fixed point of the passage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttractorEstimate {
    pub t: f64,
    pub diameter: f64,
    pub min_purity: f64,
    pub mean_orbit_distance: Option<f64>,
    pub fixed_point: BlochVector,
}

/// Per-sample ensemble metrics on the common recording grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub times: Vec<f64>,
    /// Max pairwise Bloch distance across surviving members.
    pub diameter_series: Vec<f64>,
    /// Mean distance to the closed-form orbit; `None` off the diabatic
    /// integer-index families.
    pub orbit_distance_series: Option<Vec<f64>>,
    /// Minimum purity across surviving members.
    pub min_purity: Vec<f64>,
    /// Ensemble-mean Bloch vector at the end of the window.
    pub fixed_point: BlochVector,
    pub attractor: AttractorEstimate,
    /// Members whose propagation aborted; they are excluded from the metrics.
    pub failures: usize,
}

/// Deterministic initial states: `n_pure` directions uniform on the sphere
/// followed by `n_mixed` points uniform in the ball (radius u^{1/3}).
pub fn sample_initial_states(
    n_pure: usize,
    n_mixed: usize,
    seed: u64,
) -> Result<Vec<DensityMatrix>, CoreError> {
    if n_pure == 0 && n_mixed == 0 {
        return Err(CoreError::Configuration("empty ensemble".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit_direction = |rng: &mut ChaCha8Rng| {
        let z: f64 = 1.0 - 2.0 * rng.gen::<f64>();
        let phi: f64 = std::f64::consts::TAU * rng.gen::<f64>();
        let r = (1.0 - z * z).max(0.0).sqrt();
        BlochVector::new(r * phi.cos(), r * phi.sin(), z)
    };
    let mut out = Vec::with_capacity(n_pure + n_mixed);
    for _ in 0..n_pure {
        let a = unit_direction(&mut rng);
        out.push(DensityMatrix::from_bloch(&a)?);
    }
    for _ in 0..n_mixed {
        let dir = unit_direction(&mut rng);
        let radius = rng.gen::<f64>().cbrt();
        let a = BlochVector::new(radius * dir.ax, radius * dir.ay, radius * dir.az);
        out.push(DensityMatrix::from_bloch(&a)?);
    }
    Ok(out)
}

/// The integer index of a diabatic passage, when it has one.
fn diabatic_integer_index(spec: &PassageSpec) -> Option<u32> {
    let n = match spec.family {
        Family::RotatedDiabatic { n } | Family::LabDiabatic { n } => n,
        _ => return None,
    };
    let rounded = n.round();
    if (n - rounded).abs() <= INTEGER_N_TOL && rounded >= 0.0 {
        Some(rounded as u32)
    } else {
        None
    }
}

/// Closed-form orbit point in the trajectory's native frame.
fn oracle_bloch(spec: &PassageSpec, n: u32, t: f64) -> Result<BlochVector, CoreError> {
    let rho = exact_density(n, t)?;
    Ok(match spec.family {
        Family::RotatedDiabatic { .. } => rho.bloch(),
        Family::LabDiabatic { .. } => rotate_density_inverse(&rho).bloch(),
        _ => unreachable!("orbit defined only for diabatic families"),
    })
}

/// Euclidean distance of each recorded Bloch sample to the closed-form orbit
/// point at the same time, in the trajectory's native frame.
pub fn orbit_distance(traj: &TrajectoryRecord, spec: &PassageSpec) -> Result<Vec<f64>, CoreError> {
    let n = diabatic_integer_index(spec).ok_or_else(|| {
        CoreError::Unsupported("orbit distance needs a diabatic passage with integer index".into())
    })?;
    traj.samples
        .iter()
        .map(|s| Ok(s.bloch.distance(&oracle_bloch(spec, n, s.t)?)))
        .collect()
}

/// Propagate every member concurrently and reduce to a [`ConvergenceReport`].
/// Failed members are flagged and excluded; results are merged by member
/// index, so the output is independent of scheduling.
pub fn run_ensemble(
    spec: &EnsembleSpec,
) -> Result<(Vec<TrajectoryRecord>, ConvergenceReport), CoreError> {
    // Re-validate, since the spec may come straight from deserialization.
    let passage = PassageSpec::new(
        spec.passage.family,
        spec.passage.t_start,
        spec.passage.t_end,
    )?;
    let initial = sample_initial_states(spec.n_pure, spec.n_mixed, spec.seed)?;
    let trajectories: Vec<TrajectoryRecord> = initial
        .par_iter()
        .map(|rho0| propagate(&passage, rho0, &spec.integrator))
        .collect::<Result<Vec<_>, _>>()?;

    let report = reduce_ensemble(&passage, &trajectories)?;
    Ok((trajectories, report))
}

fn reduce_ensemble(
    passage: &PassageSpec,
    trajectories: &[TrajectoryRecord],
) -> Result<ConvergenceReport, CoreError> {
    let survivors: Vec<&TrajectoryRecord> = trajectories
        .iter()
        .filter(|t| t.failure.is_none())
        .collect();
    let failures = trajectories.len() - survivors.len();
    let first = survivors.first().ok_or_else(|| {
        trajectories
            .iter()
            .find_map(|t| t.failure.map(|f| CoreError::NumericalFailure { t: f.t }))
            .unwrap_or_else(|| CoreError::Configuration("empty ensemble".into()))
    })?;

    let times: Vec<f64> = first.times();
    let samples = times.len();
    let orbit_index = diabatic_integer_index(passage);

    let mut diameter_series = Vec::with_capacity(samples);
    let mut min_purity = Vec::with_capacity(samples);
    let mut orbit_series = orbit_index.map(|_| Vec::with_capacity(samples));

    for (k, &tk) in times.iter().enumerate() {
        let blochs: Vec<BlochVector> = survivors.iter().map(|t| t.samples[k].bloch).collect();
        let mut diam = 0.0f64;
        for i in 0..blochs.len() {
            for j in (i + 1)..blochs.len() {
                diam = diam.max(blochs[i].distance(&blochs[j]));
            }
        }
        diameter_series.push(diam);
        min_purity.push(
            survivors
                .iter()
                .map(|t| t.samples[k].purity)
                .fold(f64::INFINITY, f64::min),
        );
        if let (Some(series), Some(n)) = (orbit_series.as_mut(), orbit_index) {
            let target = oracle_bloch(passage, n, tk)?;
            let mean =
                blochs.iter().map(|b| b.distance(&target)).sum::<f64>() / blochs.len() as f64;
            series.push(mean);
        }
    }

    let mean_bloch_at = |k: usize| {
        let mut acc = [0.0f64; 3];
        for t in &survivors {
            let b = t.samples[k].bloch;
            acc[0] += b.ax;
            acc[1] += b.ay;
            acc[2] += b.az;
        }
        let m = survivors.len() as f64;
        BlochVector::new(acc[0] / m, acc[1] / m, acc[2] / m)
    };

    let last = samples - 1;
    let attractor_idx = diameter_series
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap_or(last);

    let attractor = AttractorEstimate {
        t: times[attractor_idx],
        diameter: diameter_series[attractor_idx],
        min_purity: min_purity[attractor_idx],
        mean_orbit_distance: orbit_series.as_ref().map(|s| s[attractor_idx]),
        fixed_point: mean_bloch_at(attractor_idx),
    };

    Ok(ConvergenceReport {
        fixed_point: mean_bloch_at(last),
        times,
        diameter_series,
        orbit_distance_series: orbit_series,
        min_purity,
        attractor,
        failures,
    })
}

/// The four fixed, versioned ensemble presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig1a,
    Fig1b,
    Fig2a,
    Fig2b,
}

impl std::str::FromStr for FigureId {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self, CoreError> {
        match s {
            "fig1a" => Ok(Self::Fig1a),
            "fig1b" => Ok(Self::Fig1b),
            "fig2a" => Ok(Self::Fig2a),
            "fig2b" => Ok(Self::Fig2b),
            other => Err(CoreError::Configuration(format!(
                "unknown figure id `{other}` (expected fig1a, fig1b, fig2a, fig2b)"
            ))),
        }
    }
}

impl std::fmt::Display for FigureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Fig1a => "fig1a",
            Self::Fig1b => "fig1b",
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
        };
        f.write_str(s)
    }
}

/// The pinned ensemble behind each figure id. Windows: the diabatic pair
/// runs on [−4, 4] (covering the EP crossings at ±1 and ±√3), the linear
/// ramp on [−6, 0], and the quadratic ramp on [−6, 6], so each adiabatic
/// window starts deep in the broken regime.
pub fn figure_spec(id: FigureId) -> EnsembleSpec {
    let integrator = IntegratorConfig {
        record_stride: 10,
        ..IntegratorConfig::default()
    };
    let passage =
        |family, t0, t1| PassageSpec::new(family, t0, t1).expect("figure presets are valid");
    match id {
        FigureId::Fig1a => EnsembleSpec {
            passage: passage(Family::RotatedDiabatic { n: 0.0 }, -4.0, 4.0),
            n_pure: 10,
            n_mixed: 10,
            seed: 101,
            integrator,
        },
        FigureId::Fig1b => EnsembleSpec {
            passage: passage(Family::RotatedDiabatic { n: 1.0 }, -4.0, 4.0),
            n_pure: 10,
            n_mixed: 10,
            seed: 102,
            integrator,
        },
        FigureId::Fig2a => EnsembleSpec {
            passage: passage(Family::LinearAdiabatic, -6.0, 0.0),
            n_pure: 5,
            n_mixed: 5,
            seed: 201,
            integrator,
        },
        FigureId::Fig2b => EnsembleSpec {
            passage: passage(Family::QuadraticAdiabatic, -6.0, 6.0),
            n_pure: 5,
            n_mixed: 5,
            seed: 202,
            integrator,
        },
    }
}

/// Run the pinned ensemble behind a figure id.
pub fn figure_dataset(
    id: FigureId,
) -> Result<(Vec<TrajectoryRecord>, ConvergenceReport), CoreError> {
    run_ensemble(&figure_spec(id))
}
