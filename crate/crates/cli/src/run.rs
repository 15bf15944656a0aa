//! Experiment drivers.
//!
//! Each subcommand maps one verification suite onto the core library:
//! seeded Monte Carlo over (domain, family, distribution, degree, trial),
//! with trial-level parallelism and a deterministic (trial, n)-ordered
//! reduce, so output bytes never depend on scheduling. Every driver returns
//! its rows, a summary, and a list of named assertions; the exit code is 0
//! exactly when all assertions pass.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use rpz_core::bases::{
    build_basis_stable, build_faber, build_orthonormal_prec, check_bergman_asymptotics,
    level_curve_bounds, BasisFamily, BasisTable, DEFAULT_QUADRATURE_M,
};
use rpz_core::boundary::boundary_evidence;
use rpz_core::potential::{discrepancy, recover_all, DiscrepancyReport, ProbeConfig};
use rpz_core::random::{child_seed, coeff_statistics, sample, CoefficientSample, Distribution};
use rpz_core::roots::find_roots_target_retry;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{csv_body, fmt_f, fmt_opt, now_unix_ms, write_run, OutFile, RunManifest};

#[derive(Debug, Error)]
pub enum RunError {
    /// A propagated computation failure, annotated with (trial, n) context.
    #[error("{context}: {message}")]
    Numerical { context: String, message: String },
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
}

fn numerical(context: impl Into<String>, err: impl std::fmt::Display) -> RunError {
    RunError::Numerical { context: context.into(), message: err.to_string() }
}

/// One named pass/fail check; the run exits 0 iff every assertion passes.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: String) -> Assertion {
    Assertion { name: name.into(), pass, detail }
}

pub struct RunOutput {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub assertions: Vec<Assertion>,
}

impl RunOutput {
    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

struct DriverOutput {
    csv: OutFile,
    summary: serde_json::Value,
    assertions: Vec<Assertion>,
    plots: Vec<OutFile>,
}

/// Runs the configured experiment and writes all artifacts, the timestamped
/// manifest last.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let started = now_unix_ms();
    let driver = match cfg.experiment {
        Experiment::Zeros => trend_driver(cfg, TrendMode::Zeros),
        Experiment::Deriv => trend_driver(cfg, TrendMode::Deriv),
        Experiment::Grothmann => trend_driver(cfg, TrendMode::Grothmann),
        Experiment::Coeffs => coeffs_driver(cfg),
        Experiment::Basis => basis_driver(cfg),
        Experiment::Recover => recover_driver(cfg),
        Experiment::Boundary => boundary_driver(cfg),
    }?;

    let mut summary = driver.summary;
    summary["assertions"] = json!(driver.assertions);
    let mut files = vec![
        driver.csv,
        OutFile::new(
            "summary.json",
            serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
        ),
    ];
    if cfg.plots {
        files.extend(driver.plots);
    }

    let trial_seeds = match cfg.experiment {
        Experiment::Basis => Vec::new(),
        _ => (0..cfg.trials).map(|t| child_seed(cfg.seed, t)).collect(),
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name().to_string(),
        started_unix_ms: started,
        finished_unix_ms: 0,
        master_seed: cfg.seed,
        trial_seeds,
        config: cfg.raw.clone(),
        config_toml: toml::to_string(&cfg.raw).expect("config echoes"),
        checksums: BTreeMap::new(),
    };
    let written = write_run(&cfg.output_dir, &files, manifest)?;
    Ok(RunOutput { out_dir: cfg.output_dir.clone(), files: written, assertions: driver.assertions })
}

// ---------------------------------------------------------------------------
// Shared statistics helpers
// ---------------------------------------------------------------------------

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable statistic"));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Lower/upper quartile by (len−1)-index flooring — deterministic and free
/// of interpolation choices.
fn quartiles(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable statistic"));
    Some((v[(v.len() - 1) / 4], v[3 * (v.len() - 1) / 4]))
}

fn decreased(name: &str, first_n: usize, last_n: usize, first: Option<f64>, last: Option<f64>) -> Assertion {
    match (first, last) {
        (Some(a), Some(b)) => check(
            format!("median {name} decreases from n = {first_n} to n = {last_n}"),
            b < a,
            format!("{a:.6} -> {b:.6}"),
        ),
        _ => check(
            format!("median {name} decreases from n = {first_n} to n = {last_n}"),
            false,
            "statistic unavailable (no assigned atoms)".to_string(),
        ),
    }
}

fn boundary_plot(d: &rpz_core::domain::ConformalDomain) -> OutFile {
    let rows: Vec<Vec<String>> = d
        .boundary_polyline(512)
        .into_iter()
        .map(|z| vec![fmt_f(z.re), fmt_f(z.im)])
        .collect();
    OutFile::new("plot_boundary.csv", csv_body("re,im", &rows))
}

// ---------------------------------------------------------------------------
// zeros / deriv / grothmann
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq)]
enum TrendMode {
    Zeros,
    Deriv,
    Grothmann,
}

struct TrendRow {
    trial: u64,
    trial_seed: u64,
    n: usize,
    rep: DiscrepancyReport,
}

/// The equidistribution pipeline: draw one coefficient stream per trial,
/// truncate it at every requested degree (the almost-sure setting observes a
/// single series along n), find the zeros of the combination — or of its
/// derivative — and reduce the discrepancy statistics to per-degree medians.
/// The grothmann variant emits the three hypothesis statistics side by side:
/// the sup-norm root, the interior mass, and the level-curve log-norm
/// deviation.
fn trend_driver(cfg: &ExperimentConfig, mode: TrendMode) -> Result<DriverOutput, RunError> {
    let d = cfg.domain.as_ref().expect("validated");
    let family = cfg.family.expect("validated");
    let dist = cfg.distribution.expect("validated");
    let n_max = *cfg.n_list.last().unwrap();
    let table = build_basis_stable(d, family, n_max, cfg.quadrature_m)
        .map_err(|e| numerical("building the basis table", e))?;
    let probes = ProbeConfig { rho_k: cfg.rho_k, contour_r: cfg.contour_r, ..ProbeConfig::default() };

    let trials: Vec<u64> = (0..cfg.trials).collect();
    let per_trial: Vec<(Vec<TrendRow>, Vec<Complex64>)> = trials
        .par_iter()
        .map(|&t| {
            let ts = child_seed(cfg.seed, t);
            let s = sample(dist, n_max, ts)
                .map_err(|e| numerical(format!("trial {t}: sampling"), e))?;
            let mut rows = Vec::with_capacity(cfg.n_list.len());
            let mut scatter = Vec::new();
            for &n in &cfg.n_list {
                let ctx = format!("trial {t}, n = {n}");
                let combo = table
                    .combine(&s.values[..=n])
                    .map_err(|e| numerical(ctx.clone(), e))?;
                let zs = if mode == TrendMode::Deriv {
                    let target = combo.derivative_target();
                    find_roots_target_retry(&target, child_seed(ts, n as u64), 3)
                } else {
                    find_roots_target_retry(&combo, child_seed(ts, n as u64), 3)
                }
                .map_err(|e| numerical(ctx.clone(), e))?;
                let rep = discrepancy(&zs, d, &probes).map_err(|e| numerical(ctx.clone(), e))?;
                if n == n_max {
                    scatter = zs.roots;
                }
                rows.push(TrendRow { trial: t, trial_seed: ts, n, rep });
            }
            Ok((rows, scatter))
        })
        .collect::<Result<Vec<_>, RunError>>()?;

    let (header, to_row): (&str, fn(&TrendRow) -> Vec<String>) = match mode {
        TrendMode::Grothmann => (
            "trial,trial_seed,n,sup_norm_e_root,interior_mass,lognorm_dev",
            |r| {
                vec![
                    r.trial.to_string(),
                    r.trial_seed.to_string(),
                    r.n.to_string(),
                    fmt_f(r.rep.sup_norm_e_root),
                    fmt_f(r.rep.interior_mass),
                    fmt_f(r.rep.lognorm_dev),
                ]
            },
        ),
        _ => (
            "trial,trial_seed,n,ks_angle,assigned_mass,interior_mass,excluded_mass,lognorm_dev,sup_norm_e_root",
            |r| {
                vec![
                    r.trial.to_string(),
                    r.trial_seed.to_string(),
                    r.n.to_string(),
                    fmt_opt(r.rep.ks_angle),
                    fmt_f(r.rep.assigned_mass),
                    fmt_f(r.rep.interior_mass),
                    fmt_f(r.rep.excluded_mass),
                    fmt_f(r.rep.lognorm_dev),
                    fmt_f(r.rep.sup_norm_e_root),
                ]
            },
        ),
    };
    let rows: Vec<Vec<String>> = per_trial
        .iter()
        .flat_map(|(rows, _)| rows.iter().map(to_row))
        .collect();
    let csv_name = format!("{}.csv", cfg.experiment.name());
    let csv = OutFile::new(csv_name, csv_body(header, &rows));

    // Per-degree medians and the trend assertions.
    struct PerN {
        ks: Vec<f64>,
        interior: Vec<f64>,
        lognorm: Vec<f64>,
        supgap: Vec<f64>,
    }
    let mut per_n: BTreeMap<usize, PerN> = cfg
        .n_list
        .iter()
        .map(|&n| (n, PerN { ks: vec![], interior: vec![], lognorm: vec![], supgap: vec![] }))
        .collect();
    for (rows, _) in &per_trial {
        for r in rows {
            let slot = per_n.get_mut(&r.n).expect("known degree");
            if let Some(k) = r.rep.ks_angle {
                slot.ks.push(k);
            }
            slot.interior.push(r.rep.interior_mass);
            slot.lognorm.push(r.rep.lognorm_dev);
            slot.supgap.push((r.rep.sup_norm_e_root - 1.0).abs());
        }
    }

    let per_n_summary: Vec<serde_json::Value> = per_n
        .iter()
        .map(|(n, s)| {
            let (q1, q3) = quartiles(&s.ks).unwrap_or((f64::NAN, f64::NAN));
            json!({
                "n": n,
                "median_ks_angle": median(&s.ks),
                "q1_ks_angle": q1,
                "q3_ks_angle": q3,
                "median_interior_mass": median(&s.interior),
                "median_lognorm_dev": median(&s.lognorm),
                "median_supnorm_gap": median(&s.supgap),
            })
        })
        .collect();

    let mut assertions = Vec::new();
    if cfg.n_list.len() >= 2 {
        let lo = cfg.n_list[0];
        let hi = n_max;
        let first = &per_n[&lo];
        let last = &per_n[&hi];
        match mode {
            TrendMode::Grothmann => {
                assertions.push(decreased(
                    "|sup_norm_e_root - 1|",
                    lo,
                    hi,
                    median(&first.supgap),
                    median(&last.supgap),
                ));
            }
            _ => {
                assertions.push(decreased("ks_angle", lo, hi, median(&first.ks), median(&last.ks)));
            }
        }
        assertions.push(decreased(
            "interior_mass",
            lo,
            hi,
            median(&first.interior),
            median(&last.interior),
        ));
        assertions.push(decreased(
            "lognorm_dev",
            lo,
            hi,
            median(&first.lognorm),
            median(&last.lognorm),
        ));
    }

    let mut plots = Vec::new();
    if cfg.plots {
        let scatter_rows: Vec<Vec<String>> = per_trial
            .iter()
            .enumerate()
            .flat_map(|(t, (_, roots))| {
                roots
                    .iter()
                    .map(move |z| vec![t.to_string(), fmt_f(z.re), fmt_f(z.im)])
            })
            .collect();
        plots.push(OutFile::new("plot_zero_scatter.csv", csv_body("trial,re,im", &scatter_rows)));
        plots.push(boundary_plot(d));
        if mode != TrendMode::Grothmann {
            let ks_rows: Vec<Vec<String>> = per_n
                .iter()
                .map(|(n, s)| {
                    let (q1, q3) = quartiles(&s.ks).unwrap_or((f64::NAN, f64::NAN));
                    vec![
                        n.to_string(),
                        fmt_opt(median(&s.ks)),
                        fmt_f(q1),
                        fmt_f(q3),
                    ]
                })
                .collect();
            plots.push(OutFile::new("plot_ks_vs_n.csv", csv_body("n,median_ks,q1,q3", &ks_rows)));
        }
    }

    let summary = json!({
        "experiment": cfg.experiment.name(),
        "seed": cfg.seed,
        "trials": cfg.trials,
        "domain": d.label(),
        "family": family.to_string(),
        "distribution": dist.to_string(),
        "rho_k": cfg.rho_k,
        "contour_r": cfg.contour_r,
        "per_n": per_n_summary,
    });
    Ok(DriverOutput { csv, summary, assertions, plots })
}

// ---------------------------------------------------------------------------
// coeffs
// ---------------------------------------------------------------------------

/// Almost-sure coefficient statistics: the n-th root, running-max root, and
/// logarithmic-window sequences per trial, reported over the standard window
/// constants {1, 5, 10} to show insensitivity to the window choice. The
/// quartile bands asserted here are calibrated at degree 2000: Rademacher
/// sequences must be identically one, every other non-control distribution
/// must land its last-quartile statistics in [0.98, 1.05].
fn coeffs_driver(cfg: &ExperimentConfig) -> Result<DriverOutput, RunError> {
    const BAND: (f64, f64) = (0.98, 1.05);
    let dist = cfg.distribution.expect("validated");
    let n_max = *cfg.n_list.last().unwrap();
    let mut bs = vec![1.0, 5.0, 10.0];
    if !bs.contains(&cfg.window_b) {
        bs.push(cfg.window_b);
    }

    let trials: Vec<u64> = (0..cfg.trials).collect();
    let per_trial = trials
        .par_iter()
        .map(|&t| {
            let ts = child_seed(cfg.seed, t);
            let ctx = format!("trial {t}");
            let s = sample(dist, n_max, ts).map_err(|e| numerical(ctx.clone(), e))?;
            let stats = coeff_statistics(&s, &bs).map_err(|e| numerical(ctx.clone(), e))?;
            Ok((t, ts, stats))
        })
        .collect::<Result<Vec<_>, RunError>>()?;

    let mut header = String::from("trial,trial_seed,n,nth_root,running_max_root");
    for b in &bs {
        header.push_str(&format!(",window_root_b{b}"));
    }
    let mut rows = Vec::new();
    for (t, ts, stats) in &per_trial {
        for (i, &n) in stats.ns.iter().enumerate() {
            let mut row = vec![
                t.to_string(),
                ts.to_string(),
                n.to_string(),
                fmt_f(stats.nth_root[i]),
                fmt_f(stats.running_max_root[i]),
            ];
            for w in &stats.windows {
                row.push(fmt_f(w.roots[i]));
            }
            rows.push(row);
        }
    }
    let csv = OutFile::new("coeffs.csv", csv_body(&header, &rows));

    let mut assertions = Vec::new();
    match dist {
        Distribution::Rademacher => {
            let mut exact = true;
            for (_, _, stats) in &per_trial {
                exact &= stats.nth_root.iter().all(|&x| x == 1.0)
                    && stats.running_max_root.iter().all(|&x| x == 1.0)
                    && stats.windows.iter().all(|w| w.roots.iter().all(|&x| x == 1.0));
            }
            assertions.push(check(
                "rademacher statistic sequences identically 1",
                exact,
                format!("{} trials, degrees 1..={n_max}", cfg.trials),
            ));
        }
        Distribution::InvFactorial => {
            // Deterministic control: outside the hypotheses by design, so the
            // sequences are reported without a convergence assertion.
        }
        _ => {
            let mut worst_lo = f64::INFINITY;
            let mut worst_hi = f64::NEG_INFINITY;
            let mut limsup_lo = f64::INFINITY;
            let mut limsup_hi = f64::NEG_INFINITY;
            for (_, _, stats) in &per_trial {
                let (lo, hi) = stats.running_max_last_quartile;
                worst_lo = worst_lo.min(lo);
                worst_hi = worst_hi.max(hi);
                let (_, limsup) = stats.nth_root_last_quartile;
                limsup_lo = limsup_lo.min(limsup);
                limsup_hi = limsup_hi.max(limsup);
            }
            assertions.push(check(
                "running-max statistic last quartile within [0.98, 1.05]",
                worst_lo >= BAND.0 && worst_hi <= BAND.1,
                format!("range over trials [{worst_lo:.6}, {worst_hi:.6}]"),
            ));
            assertions.push(check(
                "nth-root limsup estimate within [0.98, 1.05]",
                limsup_lo >= BAND.0 && limsup_hi <= BAND.1,
                format!("range over trials [{limsup_lo:.6}, {limsup_hi:.6}]"),
            ));
        }
    }

    let per_trial_summary: Vec<serde_json::Value> = per_trial
        .iter()
        .map(|(t, ts, stats)| {
            json!({
                "trial": t,
                "trial_seed": ts,
                "nth_root_last_quartile": [stats.nth_root_last_quartile.0, stats.nth_root_last_quartile.1],
                "running_max_last_quartile": [stats.running_max_last_quartile.0, stats.running_max_last_quartile.1],
                "window_last_quartiles": stats.windows.iter().map(|w| json!({
                    "b": w.b,
                    "last_quartile": [w.last_quartile.0, w.last_quartile.1],
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let summary = json!({
        "experiment": "coeffs",
        "seed": cfg.seed,
        "trials": cfg.trials,
        "distribution": dist.to_string(),
        "control_profile": dist.is_control(),
        "n_max": n_max,
        "windows": bs,
        "per_trial": per_trial_summary,
    });
    Ok(DriverOutput { csv, summary, assertions, plots: Vec::new() })
}

// ---------------------------------------------------------------------------
// basis
// ---------------------------------------------------------------------------

/// Bergman asymptotics: deviation from the exterior strong form on the level
/// curve `L_R`, the interior Carleman regime at `ρ_K`, and the two-sided
/// level-curve band. Deviations must shrink with the degree exterior-side
/// and geometrically interior-side; the band spread must stay finite.
fn basis_driver(cfg: &ExperimentConfig) -> Result<DriverOutput, RunError> {
    let d = cfg.domain.as_ref().expect("validated");
    let n_lo = cfg.n_list[0];
    let n_hi = *cfg.n_list.last().unwrap();
    let table = build_basis_stable(d, BasisFamily::Bergman, n_hi, cfg.quadrature_m)
        .map_err(|e| numerical("building the basis table", e))?;
    let exterior = check_bergman_asymptotics(&table, cfg.contour_r, n_lo, n_hi)
        .map_err(|e| numerical(format!("asymptotics at rho = {}", cfg.contour_r), e))?;
    let interior = check_bergman_asymptotics(&table, cfg.rho_k, n_lo, n_hi)
        .map_err(|e| numerical(format!("asymptotics at rho = {}", cfg.rho_k), e))?;
    let band = level_curve_bounds(&table, cfg.contour_r, n_lo, n_hi)
        .map_err(|e| numerical(format!("level-curve band at rho = {}", cfg.contour_r), e))?;

    let ext: BTreeMap<usize, f64> = exterior.rows.iter().map(|r| (r.n, r.deviation)).collect();
    let int_: BTreeMap<usize, f64> = interior.rows.iter().map(|r| (r.n, r.deviation)).collect();
    let bnd: BTreeMap<usize, (f64, f64)> =
        band.rows.iter().map(|r| (r.n, (r.min_ratio, r.max_ratio))).collect();

    let mut rows = Vec::new();
    for n in n_lo..=n_hi {
        let (bmin, bmax) = bnd.get(&n).copied().unwrap_or((f64::NAN, f64::NAN));
        rows.push(vec![
            n.to_string(),
            fmt_opt(ext.get(&n).copied()),
            fmt_opt(int_.get(&n).copied()),
            fmt_f(bmin),
            fmt_f(bmax),
        ]);
    }
    let csv = OutFile::new(
        "basis.csv",
        csv_body("n,exterior_deviation,interior_deviation,band_min,band_max", &rows),
    );

    let mut assertions = Vec::new();
    let listed: Vec<(usize, Option<f64>)> =
        cfg.n_list.iter().map(|&n| (n, ext.get(&n).copied())).collect();
    // At the measurement floor the decay claim is saturated, not violated, so
    // each step must either strictly decrease or already sit at the floor.
    let monotone = listed.windows(2).all(|w| match (w[0].1, w[1].1) {
        (Some(a), Some(b)) => b < a || b <= exterior.floor,
        _ => false,
    });
    assertions.push(check(
        format!(
            "exterior deviations decrease (or sit at the floor) over n = {:?} at rho = {}",
            cfg.n_list, cfg.contour_r
        ),
        monotone,
        listed
            .iter()
            .map(|(n, v)| format!("dev({n}) = {}", v.map_or("NaN".into(), |x| format!("{x:.3e}"))))
            .collect::<Vec<_>>()
            .join(", ")
            + &format!(" (floor {:.0e})", exterior.floor),
    ));
    let rate_ok = interior.semilog_rate.is_some_and(|r| r < 0.95f64.ln());
    assertions.push(check(
        format!("interior deviations decay geometrically at rho = {}", cfg.rho_k),
        rate_ok,
        format!(
            "fitted log-slope {} (threshold log 0.95 = {:.5})",
            interior.semilog_rate.map_or("unavailable".into(), |r| format!("{r:.5}")),
            0.95f64.ln()
        ),
    ));
    assertions.push(check(
        "level-curve band spread is finite",
        band.band_spread.is_finite() && band.band_spread > 0.0,
        format!("spread = {:.6} ({})", band.band_spread, band.normalizer),
    ));

    let mut plots = Vec::new();
    if cfg.plots {
        let slope = exterior.loglog_slope;
        let dev_rows: Vec<Vec<String>> = exterior
            .rows
            .iter()
            .map(|r| vec![r.n.to_string(), fmt_f(r.deviation), fmt_opt(slope)])
            .collect();
        plots.push(OutFile::new(
            "plot_bergman_deviation.csv",
            csv_body("n,max_dev,fitted_slope", &dev_rows),
        ));
    }

    let summary = json!({
        "experiment": "basis",
        "domain": d.label(),
        "n_range": [n_lo, n_hi],
        "exterior": {
            "rho": cfg.contour_r,
            "regime": exterior.regime,
            "loglog_slope": exterior.loglog_slope,
            "semilog_rate": exterior.semilog_rate,
            "floor": exterior.floor,
            "floor_rows": exterior.floor_rows,
        },
        "interior": {
            "rho": cfg.rho_k,
            "regime": interior.regime,
            "loglog_slope": interior.loglog_slope,
            "semilog_rate": interior.semilog_rate,
            "floor": interior.floor,
            "floor_rows": interior.floor_rows,
        },
        "band": {
            "rho": cfg.contour_r,
            "normalizer": band.normalizer,
            "spread": band.band_spread,
        },
    });
    Ok(DriverOutput { csv, summary, assertions, plots })
}

// ---------------------------------------------------------------------------
// recover
// ---------------------------------------------------------------------------

/// Peeled coefficient recovery: assemble a seeded combination, recover the
/// full coefficient vector from the top down through the contour
/// representation, and compare against the drawn sample.
fn recover_driver(cfg: &ExperimentConfig) -> Result<DriverOutput, RunError> {
    const TOL: f64 = 1e-6;
    let d = cfg.domain.as_ref().expect("validated");
    let family = cfg.family.expect("validated");
    let dist = cfg.distribution.expect("validated");
    let n_max = *cfg.n_list.last().unwrap();
    let table: BasisTable = match family {
        BasisFamily::Faber => build_faber(d, n_max),
        _ => build_orthonormal_prec(d, family, n_max, cfg.precision, DEFAULT_QUADRATURE_M),
    }
    .map_err(|e| numerical("building the basis table", e))?;

    let trials: Vec<u64> = (0..cfg.trials).collect();
    let per_trial: Vec<Vec<(u64, u64, usize, f64)>> = trials
        .par_iter()
        .map(|&t| {
            let ts = child_seed(cfg.seed, t);
            let s = sample(dist, n_max, ts)
                .map_err(|e| numerical(format!("trial {t}: sampling"), e))?;
            let mut rows = Vec::new();
            for &n in &cfg.n_list {
                let ctx = format!("trial {t}, n = {n}");
                let sub = CoefficientSample {
                    seed: s.seed,
                    dist: s.dist,
                    values: s.values[..=n].to_vec(),
                };
                let p = rpz_core::random::assemble(&sub, &table)
                    .map_err(|e| numerical(ctx.clone(), e))?;
                let got = recover_all(&p, &table, cfg.contour_r, cfg.quadrature_m)
                    .map_err(|e| numerical(ctx.clone(), e))?;
                let mut max_err = 0.0f64;
                for (g, w) in got.iter().zip(&sub.values) {
                    max_err = max_err.max((g - w).norm() / (1.0 + w.norm()));
                }
                rows.push((t, ts, n, max_err));
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, RunError>>()?;

    let rows: Vec<Vec<String>> = per_trial
        .iter()
        .flatten()
        .map(|(t, ts, n, e)| vec![t.to_string(), ts.to_string(), n.to_string(), fmt_f(*e)])
        .collect();
    let csv = OutFile::new("recover.csv", csv_body("trial,trial_seed,n,max_rel_error", &rows));

    let worst = per_trial
        .iter()
        .flatten()
        .map(|&(_, _, _, e)| e)
        .fold(0.0f64, f64::max);
    let assertions = vec![check(
        format!("peeled recovery round-trips every coefficient to {TOL:.0e}"),
        worst <= TOL,
        format!("worst relative error {worst:.3e} over {} trials", cfg.trials),
    )];

    let summary = json!({
        "experiment": "recover",
        "seed": cfg.seed,
        "trials": cfg.trials,
        "domain": d.label(),
        "family": family.to_string(),
        "distribution": dist.to_string(),
        "contour_r": cfg.contour_r,
        "quadrature_m": cfg.quadrature_m,
        "worst_rel_error": worst,
    });
    Ok(DriverOutput { csv, summary, assertions, plots: Vec::new() })
}

// ---------------------------------------------------------------------------
// boundary
// ---------------------------------------------------------------------------

/// Natural-boundary evidence: one coefficient stream per trial, local Taylor
/// radii at seeded interior centers, and the fraction of radius/dist ratios
/// inside [0.8, 1.2]. Genuine ensembles must be consistent with a natural
/// boundary at the largest degree; the deterministic 1/k! control must fail
/// the band and look entire instead.
fn boundary_driver(cfg: &ExperimentConfig) -> Result<DriverOutput, RunError> {
    let d = cfg.domain.as_ref().expect("validated");
    let family = cfg.family.expect("validated");
    let dist = cfg.distribution.expect("validated");
    let n_max = *cfg.n_list.last().unwrap();
    let table = build_basis_stable(d, family, n_max, cfg.quadrature_m)
        .map_err(|e| numerical("building the basis table", e))?;

    let trials: Vec<u64> = (0..cfg.trials).collect();
    let per_trial = trials
        .par_iter()
        .map(|&t| {
            let ts = child_seed(cfg.seed, t);
            let mut evidences = Vec::with_capacity(cfg.n_list.len());
            for &n in &cfg.n_list {
                let ctx = format!("trial {t}, n = {n}");
                let ev = boundary_evidence(&table, dist, n, cfg.centers, ts)
                    .map_err(|e| numerical(ctx, e))?;
                evidences.push((n, ev));
            }
            Ok((t, ts, evidences))
        })
        .collect::<Result<Vec<_>, RunError>>()?;

    let mut rows = Vec::new();
    for (t, ts, evidences) in &per_trial {
        for (n, ev) in evidences {
            for (est, &ratio) in ev.estimates.iter().zip(&ev.ratios) {
                let in_band = ratio >= ev.band.0 && ratio <= ev.band.1;
                rows.push(vec![
                    t.to_string(),
                    ts.to_string(),
                    n.to_string(),
                    fmt_f(est.center.re),
                    fmt_f(est.center.im),
                    fmt_f(est.dist_to_l),
                    fmt_f(est.radius_est),
                    fmt_f(ratio),
                    (in_band as u8).to_string(),
                    (est.no_singularity as u8).to_string(),
                ]);
            }
        }
    }
    let csv = OutFile::new(
        "boundary.csv",
        csv_body(
            "trial,trial_seed,n,center_re,center_im,dist_to_l,radius_est,ratio,in_band,no_singularity",
            &rows,
        ),
    );

    let mut assertions = Vec::new();
    let at_top: Vec<(u64, &rpz_core::boundary::EvidenceSummary)> = per_trial
        .iter()
        .flat_map(|(t, _, evs)| {
            evs.iter().filter(|(n, _)| *n == n_max).map(move |(_, ev)| (*t, ev))
        })
        .collect();
    if dist.is_control() {
        let pass = at_top
            .iter()
            .all(|(_, ev)| ev.in_band_fraction < 0.2 && ev.entire_fraction >= 0.5);
        let detail = at_top
            .iter()
            .map(|(t, ev)| {
                format!(
                    "trial {t}: in-band {:.2}, entire {:.2}",
                    ev.in_band_fraction, ev.entire_fraction
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        assertions.push(check(
            format!("control behaved as entire at n = {n_max}"),
            pass,
            detail,
        ));
    } else {
        let pass = at_top.iter().all(|(_, ev)| ev.consistent_with_natural_boundary);
        let detail = at_top
            .iter()
            .map(|(t, ev)| {
                format!(
                    "trial {t}: in-band {:.2}, entire {:.2}",
                    ev.in_band_fraction, ev.entire_fraction
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        assertions.push(check(
            format!("radius/dist ratios consistent with a natural boundary at n = {n_max}"),
            pass,
            detail,
        ));
    }

    let per_run: Vec<serde_json::Value> = per_trial
        .iter()
        .flat_map(|(t, ts, evs)| {
            evs.iter().map(move |(n, ev)| {
                json!({
                    "trial": t,
                    "trial_seed": ts,
                    "n": n,
                    "in_band_fraction": ev.in_band_fraction,
                    "entire_fraction": ev.entire_fraction,
                    "consistent_with_natural_boundary": ev.consistent_with_natural_boundary,
                })
            })
        })
        .collect();
    let summary = json!({
        "experiment": "boundary",
        "seed": cfg.seed,
        "trials": cfg.trials,
        "domain": d.label(),
        "family": family.to_string(),
        "distribution": dist.to_string(),
        "control_profile": dist.is_control(),
        "centers": cfg.centers,
        "band": [0.8, 1.2],
        "per_run": per_run,
    });
    Ok(DriverOutput { csv, summary, assertions, plots: Vec::new() })
}
