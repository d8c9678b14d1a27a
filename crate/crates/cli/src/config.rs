//! Run configuration: a TOML file mirroring the command-line flags, with
//! flags taking precedence over file values. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use ep2l::integrator::{IntegratorConfig, Method};
use ep2l::passages::{Family, GammaRamp, PassageSpec};
use ep2l::CoreError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub passage: Option<PassageSection>,
    pub integrator: Option<IntegratorSection>,
    pub ensemble: Option<EnsembleSection>,
    pub initial: Option<InitialSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PassageSection {
    pub family: Option<FamilyName>,
    pub n: Option<f64>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub kappa0: Option<f64>,
    pub gamma: Option<GammaRamp>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IntegratorSection {
    pub method: Option<Method>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub renormalize_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EnsembleSection {
    pub pure: Option<usize>,
    pub mixed: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct InitialSection {
    pub amps: Option<[f64; 4]>,
    pub bloch: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutputSection {
    pub frame: Option<Frame>,
    pub dir: Option<PathBuf>,
}

/// The passage vocabulary of the `--passage` flag and config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum FamilyName {
    /// Companion-form diabatic passage (exactly solvable).
    Diabatic,
    /// The same passage in the gain/loss frame.
    LabDiabatic,
    /// Linear gain ramp, constant unit coupling.
    Linear,
    /// Quadratic gain ramp, constant unit coupling.
    Quadratic,
    /// Arbitrary polynomial gain ramp with fixed coupling κ₀.
    ConstantKappa,
}

/// Frame in which trajectories and fixed points are emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Frame {
    /// As recorded (the passage's own frame).
    Native,
    /// Gain/loss frame.
    Lab,
    /// Companion (Jordan) frame.
    Rotated,
}

impl Frame {
    pub fn label(&self) -> &'static str {
        match self {
            Frame::Native => "native",
            Frame::Lab => "lab",
            Frame::Rotated => "rotated",
        }
    }
}

pub fn load_file(path: &std::path::Path) -> Result<FileConfig, CoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::Configuration(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CoreError::Configuration(format!("{}: {e}", path.display())))
}

/// `linear:slope,intercept` or `quadratic:a,b,c` from the command line.
pub fn parse_gamma(text: &str) -> Result<GammaRamp, CoreError> {
    let bad = || {
        CoreError::Configuration(format!(
            "gamma ramp `{text}` (expected linear:slope,intercept or quadratic:a,b,c)"
        ))
    };
    let (shape, rest) = text.split_once(':').ok_or_else(bad)?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match (shape, nums.as_slice()) {
        ("linear", [slope, intercept]) => Ok(GammaRamp::Linear {
            slope: *slope,
            intercept: *intercept,
        }),
        ("quadratic", [a, b, c]) => Ok(GammaRamp::Quadratic {
            a: *a,
            b: *b,
            c: *c,
        }),
        _ => Err(bad()),
    }
}

/// Everything needed to build the passage, flags first, then file values.
#[derive(Debug, Default)]
pub struct PassageInputs {
    pub family: Option<FamilyName>,
    pub n: Option<f64>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub kappa0: Option<f64>,
    pub gamma: Option<GammaRamp>,
}

impl PassageInputs {
    pub fn overlay_file(mut self, file: Option<&PassageSection>) -> Self {
        if let Some(f) = file {
            self.family = self.family.or(f.family);
            self.n = self.n.or(f.n);
            self.t0 = self.t0.or(f.t0);
            self.t1 = self.t1.or(f.t1);
            self.kappa0 = self.kappa0.or(f.kappa0);
            self.gamma = self.gamma.or(f.gamma);
        }
        self
    }

    pub fn build(self) -> Result<PassageSpec, CoreError> {
        let family_name = self
            .family
            .ok_or_else(|| CoreError::Configuration("no passage family given".into()))?;
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| {
                CoreError::Configuration(format!("{what} is required for this passage"))
            })
        };
        let family = match family_name {
            FamilyName::Diabatic => Family::RotatedDiabatic {
                n: need(self.n, "--n")?,
            },
            FamilyName::LabDiabatic => Family::LabDiabatic {
                n: need(self.n, "--n")?,
            },
            FamilyName::Linear => Family::LinearAdiabatic,
            FamilyName::Quadratic => Family::QuadraticAdiabatic,
            FamilyName::ConstantKappa => Family::ConstantKappa {
                kappa0: need(self.kappa0, "--kappa0")?,
                gamma: self.gamma.ok_or_else(|| {
                    CoreError::Configuration("--gamma is required for constant-kappa".into())
                })?,
            },
        };
        PassageSpec::new(family, need(self.t0, "--t0")?, need(self.t1, "--t1")?)
    }
}

/// Integrator settings, flags first, then file values, then defaults.
#[derive(Debug, Default)]
pub struct IntegratorInputs {
    pub method: Option<Method>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
}

impl IntegratorInputs {
    pub fn overlay_file(mut self, file: Option<&IntegratorSection>) -> (Self, Option<f64>) {
        let mut threshold = None;
        if let Some(f) = file {
            self.method = self.method.or(f.method);
            self.dt = self.dt.or(f.dt);
            self.stride = self.stride.or(f.stride);
            threshold = f.renormalize_threshold;
        }
        (self, threshold)
    }

    pub fn build(self, threshold: Option<f64>) -> IntegratorConfig {
        let defaults = IntegratorConfig::default();
        IntegratorConfig {
            method: self.method.unwrap_or(defaults.method),
            dt: self.dt.unwrap_or(defaults.dt),
            record_stride: self.stride.unwrap_or(defaults.record_stride),
            renormalize_threshold: threshold.unwrap_or(defaults.renormalize_threshold),
        }
    }
}
