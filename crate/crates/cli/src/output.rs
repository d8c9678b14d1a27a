//! Stable file emission: fixed column order, 17 significant digits, and
//! explicit failure markers, so identical runs are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use ep2l::algebra::{BlochVector, DensityMatrix};
use ep2l::experiments::{AttractorEstimate, ConvergenceReport, EnsembleSpec};
use ep2l::integrator::TrajectoryRecord;
use ep2l::passages::{
    rotate_density, rotate_density_inverse, EpReport, Family, PassageSpec, Regime,
};

use crate::config::Frame;

pub const TRAJECTORY_HEADER: &str =
    "t,p11_re,p11_im,p12_re,p12_im,p21_re,p21_im,p22_re,p22_im,ax,ay,az,purity,log_norm";

pub const FORMAT_VERSION: u32 = 1;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// How to move a recorded sample from its native frame into the requested one.
#[derive(Clone, Copy, PartialEq)]
enum FrameMap {
    Keep,
    Rotate,
    RotateInverse,
}

fn frame_map(family: &Family, frame: Frame) -> FrameMap {
    let native_is_rotated = matches!(family, Family::RotatedDiabatic { .. });
    match (frame, native_is_rotated) {
        (Frame::Native, _) => FrameMap::Keep,
        (Frame::Rotated, true) | (Frame::Lab, false) => FrameMap::Keep,
        (Frame::Rotated, false) => FrameMap::Rotate,
        (Frame::Lab, true) => FrameMap::RotateInverse,
    }
}

fn map_density(rho: &DensityMatrix, map: FrameMap) -> DensityMatrix {
    match map {
        FrameMap::Keep => *rho,
        FrameMap::Rotate => rotate_density(rho),
        FrameMap::RotateInverse => rotate_density_inverse(rho),
    }
}

fn map_bloch(b: &BlochVector, map: FrameMap) -> BlochVector {
    match map {
        FrameMap::Keep => *b,
        _ => {
            let rho = DensityMatrix::from_bloch(b).expect("report Bloch vectors are in the ball");
            map_density(&rho, map).bloch()
        }
    }
}

pub fn write_trajectory_csv(
    path: &Path,
    spec: &PassageSpec,
    record: &TrajectoryRecord,
    frame: Frame,
) -> std::io::Result<()> {
    let map = frame_map(&spec.family, frame);
    let mut text = String::with_capacity(record.samples.len() * 256 + 64);
    text.push_str(TRAJECTORY_HEADER);
    text.push('\n');
    for s in &record.samples {
        let rho = map_density(&s.rho, map);
        let m = rho.matrix();
        let b = rho.bloch();
        let cols = [
            s.t,
            m.m11.re,
            m.m11.im,
            m.m12.re,
            m.m12.im,
            m.m21.re,
            m.m21.im,
            m.m22.re,
            m.m22.im,
            b.ax,
            b.ay,
            b.az,
            rho.purity(),
            s.log_norm,
        ];
        let row: Vec<String> = cols.iter().map(|&v| num(v)).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    if let Some(f) = record.failure {
        let _ = writeln!(text, "# numerical_failure t={}", num(f.t));
    }
    write_atomically(path, text.as_bytes())
}

pub fn write_oracle_csv(path: &Path, n: u32, grid: &[f64]) -> std::io::Result<()> {
    let mut text = String::with_capacity(grid.len() * 128 + 32);
    text.push_str("t,x,dx,ax,ay,az\n");
    for &t in grid {
        let (x, dx) = ep2l::oracle::hermite_pair(n, t);
        match ep2l::oracle::exact_density(n, t) {
            Ok(rho) => {
                let b = rho.bloch();
                let row: Vec<String> = [t, x, dx, b.ax, b.ay, b.az]
                    .iter()
                    .map(|&v| num(v))
                    .collect();
                text.push_str(&row.join(","));
                text.push('\n');
            }
            Err(_) => {
                let _ = writeln!(text, "# degenerate t={}", num(t));
            }
        }
    }
    write_atomically(path, text.as_bytes())
}

/// Report file: the spec echo plus the convergence metrics, keys in a fixed
/// order.
#[derive(Serialize)]
pub struct ReportFile<'a> {
    pub spec: SpecEcho<'a>,
    pub ep_times: Vec<f64>,
    pub diameter_series: &'a [f64],
    pub orbit_distance_series: Option<&'a [f64]>,
    pub min_purity: &'a [f64],
    pub fixed_point: BlochVector,
    pub failures: usize,
    pub format_version: u32,
    pub times: &'a [f64],
    pub attractor: AttractorEstimate,
}

#[derive(Serialize)]
pub struct SpecEcho<'a> {
    pub figure: Option<String>,
    pub frame: &'static str,
    pub ensemble: &'a EnsembleSpec,
}

pub fn build_report<'a>(
    figure: Option<String>,
    spec: &'a EnsembleSpec,
    report: &'a ConvergenceReport,
    ep: &EpReport,
    frame: Frame,
) -> ReportFile<'a> {
    let map = frame_map(&spec.passage.family, frame);
    let mut attractor = report.attractor;
    attractor.fixed_point = map_bloch(&attractor.fixed_point, map);
    ReportFile {
        spec: SpecEcho {
            figure,
            frame: frame.label(),
            ensemble: spec,
        },
        ep_times: ep.points.iter().map(|p| p.t).collect(),
        diameter_series: &report.diameter_series,
        orbit_distance_series: report.orbit_distance_series.as_deref(),
        min_purity: &report.min_purity,
        fixed_point: map_bloch(&report.fixed_point, map),
        failures: report.failures,
        format_version: FORMAT_VERSION,
        times: &report.times,
        attractor,
    }
}

pub fn write_report_json(path: &Path, report: &ReportFile<'_>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    write_atomically(path, text.as_bytes())
}

pub fn family_label(family: &Family) -> String {
    match family {
        Family::RotatedDiabatic { n } => format!("diabatic(n={n})"),
        Family::LabDiabatic { n } => format!("lab-diabatic(n={n})"),
        Family::LinearAdiabatic => "linear-adiabatic".into(),
        Family::QuadraticAdiabatic => "quadratic-adiabatic".into(),
        Family::ConstantKappa { kappa0, gamma } => {
            format!("constant-kappa(kappa0={kappa0}, gamma={gamma:?})")
        }
    }
}

pub fn format_ep_report(spec: &PassageSpec, report: &EpReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "passage: {}", family_label(&spec.family));
    let _ = writeln!(out, "window: [{}, {}]", spec.t_start, spec.t_end);
    let _ = writeln!(out, "exceptional points: {}", report.points.len());
    for p in &report.points {
        let v = p.eigenvector;
        let _ = writeln!(
            out,
            "  t_c = {}   coalesced eigenvector = [{:.6}{:+.6}i, {:.6}{:+.6}i]",
            num(p.t),
            v.a.re,
            v.a.im,
            v.b.re,
            v.b.im
        );
    }
    let _ = writeln!(out, "regimes:");
    for r in &report.regimes {
        let label = match r.regime {
            Regime::Exact => "exact (real eigenvalue pair)",
            Regime::Broken => "broken (gain/loss pair)",
        };
        let _ = writeln!(out, "  [{:+.6}, {:+.6}]  {label}", r.t_lo, r.t_hi);
    }
    out
}

/// Write through a temp file so partially written outputs never appear
/// under the final name.
fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
