//! Experiment configuration: sectioned TOML in, a validated run plan out.
//!
//! The parser is deliberately strict. Unknown keys are rejected by name (a
//! typo must never silently fall back to a default), every knob is
//! range-checked against the configured domain before any computation
//! starts, and the effective configuration — after `--seed` / `--out`
//! overrides — is echoed into the run manifest, so a run can be reproduced
//! from its output directory alone.

use std::path::{Path, PathBuf};

use rpz_core::bases::{BasisFamily, Precision};
use rpz_core::domain::ConformalDomain;
use rpz_core::random::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default boundary-quadrature size for basis construction.
pub const DEFAULT_BUILD_M: usize = 1024;
/// Default contour size for the coefficient-recovery quadrature.
pub const DEFAULT_RECOVER_M: usize = 8192;
/// Default number of interior centers in the boundary-evidence experiment.
pub const DEFAULT_CENTERS: usize = 20;
/// Mantissa bits of the extended precision mode.
pub const EXTENDED_BITS: usize = 192;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// TOML / serde parse failure; the message names the offending key.
    #[error("{0}")]
    Parse(String),
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

/// The seven experiment entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Basis,
    Zeros,
    Deriv,
    Coeffs,
    Grothmann,
    Recover,
    Boundary,
}

impl Experiment {
    pub fn from_name(name: &str) -> Option<Experiment> {
        match name {
            "basis" => Some(Experiment::Basis),
            "zeros" => Some(Experiment::Zeros),
            "deriv" => Some(Experiment::Deriv),
            "coeffs" => Some(Experiment::Coeffs),
            "grothmann" => Some(Experiment::Grothmann),
            "recover" => Some(Experiment::Recover),
            "boundary" => Some(Experiment::Boundary),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Basis => "basis",
            Experiment::Zeros => "zeros",
            Experiment::Deriv => "deriv",
            Experiment::Coeffs => "coeffs",
            Experiment::Grothmann => "grothmann",
            Experiment::Recover => "recover",
            Experiment::Boundary => "boundary",
        }
    }

    fn needs_domain(&self) -> bool {
        !matches!(self, Experiment::Coeffs)
    }

    fn needs_family(&self) -> bool {
        !matches!(self, Experiment::Coeffs)
    }

    fn needs_distribution(&self) -> bool {
        !matches!(self, Experiment::Basis)
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Raw (serde) layer
// ---------------------------------------------------------------------------

/// The sectioned config file, exactly as written. Scalar keys come first so
/// the struct re-serializes to valid TOML for the manifest echo.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoeffSection>,
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<ProbeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSection {
    pub distribution: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n_list: Vec<usize>,
    #[serde(default = "one")]
    pub trials: u64,
    pub seed: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plots: Option<bool>,
}

// ---------------------------------------------------------------------------
// Validated layer
// ---------------------------------------------------------------------------

/// A fully validated run plan. Every field is resolved (defaults filled,
/// overrides applied) and consistent with the others; the raw echo carries
/// the same information back into the manifest.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub domain: Option<ConformalDomain>,
    pub family: Option<BasisFamily>,
    pub distribution: Option<Distribution>,
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    /// Exterior probe level `R` for log-norm grids and recovery contours.
    pub contour_r: f64,
    /// Interior level `ρ_K` for the compact set `K = {|Φ| ≤ ρ_K}`; also the
    /// interior regime of the basis-asymptotics experiment.
    pub rho_k: f64,
    /// Window constant `b` gating the logarithmic-window statistic.
    pub window_b: f64,
    /// Boundary-quadrature size: basis construction, or the recovery
    /// contour in the recover experiment (defaults 1024 / 8192).
    pub quadrature_m: usize,
    /// Orthonormalization mode for the recover experiment's tables.
    pub precision: Precision,
    /// Interior centers in the boundary-evidence experiment.
    pub centers: usize,
    pub output_dir: PathBuf,
    pub plots: bool,
    /// Effective raw config (post-override) for the manifest echo.
    pub raw: RawConfig,
}

/// Parses the sectioned text. Serde reports unknown or missing keys by name.
pub fn parse_config(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Reads, parses, applies overrides, and validates in one step, checking the
/// config's `experiment` against the invoked subcommand.
pub fn load(
    path: &Path,
    invoked: Experiment,
    seed_override: Option<u64>,
    out_override: Option<PathBuf>,
) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut raw = parse_config(&text)?;
    if let Some(seed) = seed_override {
        raw.run.seed = seed;
    }
    if let Some(dir) = &out_override {
        let section = raw.output.get_or_insert_with(OutputSection::default);
        section.dir = Some(dir.display().to_string());
    }
    let cfg = validate(raw)?;
    if cfg.experiment != invoked {
        return Err(invalid(
            "experiment",
            format!(
                "config declares `{}` but the `{}` subcommand was invoked",
                cfg.experiment, invoked
            ),
        ));
    }
    Ok(cfg)
}

fn build_domain(section: &DomainSection) -> Result<ConformalDomain, ConfigError> {
    let reject = |key: &'static str, kind: &str| -> Result<(), ConfigError> {
        Err(invalid(key, format!("not a parameter of the {kind} domain")))
    };
    match section.kind.as_str() {
        "disk" => {
            if section.a.is_some() {
                reject("domain.a", "disk")?;
            }
            if section.b.is_some() {
                reject("domain.b", "disk")?;
            }
            if section.c.is_some() {
                reject("domain.c", "disk")?;
            }
            if section.m.is_some() {
                reject("domain.m", "disk")?;
            }
            Ok(ConformalDomain::disk())
        }
        "ellipse" => {
            if section.c.is_some() {
                reject("domain.c", "ellipse")?;
            }
            if section.m.is_some() {
                reject("domain.m", "ellipse")?;
            }
            let a = section.a.ok_or_else(|| invalid("domain.a", "required for the ellipse"))?;
            let b = section.b.ok_or_else(|| invalid("domain.b", "required for the ellipse"))?;
            if !(a > b.abs()) {
                return Err(invalid("domain", format!("a > |b| required (got a = {a}, b = {b})")));
            }
            ConformalDomain::ellipse(a, b).map_err(|e| invalid("domain", e.to_string()))
        }
        "perturbed_circle" => {
            if section.a.is_some() {
                reject("domain.a", "perturbed_circle")?;
            }
            if section.b.is_some() {
                reject("domain.b", "perturbed_circle")?;
            }
            let c = section
                .c
                .ok_or_else(|| invalid("domain.c", "required for the perturbed_circle"))?;
            let m = section
                .m
                .ok_or_else(|| invalid("domain.m", "required for the perturbed_circle"))?;
            ConformalDomain::perturbed_circle(c, m).map_err(|e| invalid("domain", e.to_string()))
        }
        other => Err(invalid(
            "domain.kind",
            format!("unknown kind `{other}` (expected disk, ellipse, perturbed_circle)"),
        )),
    }
}

/// Checks every referenced knob and resolves defaults. Nothing is computed
/// before this returns.
pub fn validate(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let experiment = Experiment::from_name(&raw.experiment).ok_or_else(|| {
        invalid(
            "experiment",
            format!(
                "unknown experiment `{}` (expected basis, zeros, deriv, coeffs, grothmann, \
                 recover, boundary)",
                raw.experiment
            ),
        )
    })?;

    let domain = match (&raw.domain, experiment.needs_domain()) {
        (Some(section), _) => Some(build_domain(section)?),
        (None, true) => {
            return Err(invalid("domain", format!("required by the {experiment} experiment")));
        }
        (None, false) => None,
    };

    let family = match (&raw.family, experiment.needs_family()) {
        (Some(name), _) => Some(BasisFamily::from_name(name).ok_or_else(|| {
            invalid("family", format!("unknown family `{name}` (expected bergman, szego, faber)"))
        })?),
        (None, true) => {
            return Err(invalid("family", format!("required by the {experiment} experiment")));
        }
        (None, false) => None,
    };
    if experiment == Experiment::Basis && family != Some(BasisFamily::Bergman) {
        return Err(invalid(
            "family",
            "the basis experiment checks Bergman asymptotics; set family = \"bergman\"",
        ));
    }

    let distribution = match (&raw.coefficients, experiment.needs_distribution()) {
        (Some(section), _) => Some(
            Distribution::from_name(&section.distribution, section.alpha).map_err(|e| {
                invalid("coefficients.distribution", e.to_string())
            })?,
        ),
        (None, true) => {
            return Err(invalid(
                "coefficients",
                format!("required by the {experiment} experiment"),
            ));
        }
        (None, false) => None,
    };

    let n_list = raw.run.n_list.clone();
    if n_list.is_empty() {
        return Err(invalid("run.n_list", "must contain at least one degree"));
    }
    if !n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid("run.n_list", "degrees must be strictly increasing"));
    }
    if n_list[0] == 0 {
        return Err(invalid("run.n_list", "degrees must be ≥ 1"));
    }
    match experiment {
        Experiment::Coeffs => {
            if n_list[0] < 10 {
                return Err(invalid(
                    "run.n_list",
                    "coefficient statistics need degree ≥ 10",
                ));
            }
        }
        Experiment::Boundary => {
            if n_list[0] < 180 {
                return Err(invalid(
                    "run.n_list",
                    "boundary evidence needs degree ≥ 180 (three Taylor windows of 60 terms)",
                ));
            }
        }
        Experiment::Recover => {
            if *n_list.last().unwrap() > 150 {
                return Err(invalid(
                    "run.n_list",
                    "recover peels a monomial assembly, available for degrees ≤ 150",
                ));
            }
        }
        _ => {}
    }
    if raw.run.trials == 0 {
        return Err(invalid("run.trials", "must be ≥ 1"));
    }

    let probes = raw.probes.clone().unwrap_or_default();
    let contour_r = probes.contour_r.unwrap_or(2.0);
    if !(contour_r.is_finite() && contour_r > 1.0) {
        return Err(invalid("probes.contour_r", "must be a finite level > 1"));
    }
    let rho_k = probes.rho_k.unwrap_or(0.7);
    if let Some(d) = &domain {
        if !(rho_k > d.r_inner() && rho_k < 1.0) {
            return Err(invalid(
                "probes.rho_k",
                format!(
                    "must lie in (r_inner, 1) = ({}, 1) for {}",
                    d.r_inner(),
                    d.label()
                ),
            ));
        }
    } else if !(rho_k > 0.0 && rho_k < 1.0) {
        return Err(invalid("probes.rho_k", "must lie in (0, 1)"));
    }
    let window_b = probes.window_b.unwrap_or(5.0);
    if !(window_b.is_finite() && window_b > 0.0) {
        return Err(invalid("probes.window_b", "must be a positive finite constant"));
    }
    let quadrature_m = probes.quadrature_m.unwrap_or(match experiment {
        Experiment::Recover => DEFAULT_RECOVER_M,
        _ => DEFAULT_BUILD_M,
    });
    if !quadrature_m.is_power_of_two() || quadrature_m < 256 {
        return Err(invalid("probes.quadrature_m", "must be a power of two ≥ 256"));
    }
    let precision = match probes.precision.as_deref() {
        None | Some("double") => Precision::Double,
        Some("extended") => Precision::Extended(EXTENDED_BITS),
        Some(other) => {
            return Err(invalid(
                "probes.precision",
                format!("unknown mode `{other}` (expected \"double\" or \"extended\")"),
            ));
        }
    };
    let centers = probes.centers.unwrap_or(DEFAULT_CENTERS);
    if centers == 0 {
        return Err(invalid("probes.centers", "must be ≥ 1"));
    }

    let output = raw.output.clone().unwrap_or_default();
    let output_dir = PathBuf::from(
        output.dir.unwrap_or_else(|| format!("runs/{}", experiment.name())),
    );
    let plots = output.plots.unwrap_or(false);

    Ok(ExperimentConfig {
        experiment,
        domain,
        family,
        distribution,
        n_list,
        trials: raw.run.trials,
        seed: raw.run.seed,
        contour_r,
        rho_k,
        window_b,
        quadrature_m,
        precision,
        centers,
        output_dir,
        plots,
        raw,
    })
}
