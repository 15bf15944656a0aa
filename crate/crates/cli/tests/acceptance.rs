//! Acceptance gate: ten numbered criteria covering exactness anchors,
//! dual-route oracles, asymptotics, the seeded Monte Carlo trend suites, and
//! byte determinism. Each criterion is one test named `criterion_XX_*`, so
//! the harness prints one pass/fail line per criterion; details (measured
//! values and elapsed time) print with `--nocapture` and on failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rpz_core::bases::{
    build_basis_stable, build_faber, build_orthonormal_prec, check_bergman_asymptotics,
    faber_circle_slices, level_curve_bounds, BasisFamily, Precision, DEFAULT_QUADRATURE_M,
};
use rpz_core::boundary::{boundary_evidence, DEFAULT_CENTERS, DEFAULT_EVIDENCE_DEGREE};
use rpz_core::domain::ConformalDomain;
use rpz_core::potential::{markov_bernstein_ratio, recover_all, CALIBRATED_MARKOV_EXPONENT};
use rpz_core::random::{
    assemble, child_seed, coeff_statistics, sample, CoefficientSample, Distribution,
};

fn report(no: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[criterion {no:02}] {verdict} — {detail}");
    assert!(pass, "[criterion {no:02}] FAIL — {detail}");
}

fn rpz() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rpz"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

/// The criterion-5 cell config: 50 Gaussian trials at n ∈ {100, 400} with
/// the compact probe set at ρ_K = 0.7 and the level curve at R = 2.
fn trend_config(experiment: &str, family: &str, domain: &str) -> String {
    let domain_section = match domain {
        "disk" => "kind = \"disk\"".to_string(),
        "ellipse" => "kind = \"ellipse\"\na = 1.0\nb = 0.25".to_string(),
        other => panic!("unknown domain {other}"),
    };
    format!(
        "experiment = \"{experiment}\"\nfamily = \"{family}\"\n\n[domain]\n{domain_section}\n\n\
         [coefficients]\ndistribution = \"complex_gaussian\"\n\n\
         [run]\nn_list = [100, 400]\ntrials = 50\nseed = 1\n\n\
         [probes]\nrho_k = 0.7\ncontour_r = 2.0\n"
    )
}

/// Runs one trend cell through the binary and returns (all assertions
/// passed, one-line summary of the per-degree medians).
fn run_trend_cell(dir: &Path, experiment: &str, family: &str, domain: &str) -> (bool, String) {
    let cfg = write_config(
        dir,
        &format!("{experiment}_{family}_{domain}.toml"),
        &trend_config(experiment, family, domain),
    );
    let out_dir = dir.join(format!("out_{experiment}_{family}_{domain}"));
    let out = rpz()
        .arg(experiment)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    let ok = out.status.code() == Some(0);
    let summary: serde_json::Value = std::fs::read(out_dir.join("summary.json"))
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok())
        .unwrap_or_default();
    let medians = summary["per_n"]
        .as_array()
        .map(|rows| {
            rows.iter()
                .map(|r| {
                    format!(
                        "n={}: ks {:.4} interior {:.4} lognorm {:.4}",
                        r["n"],
                        r["median_ks_angle"].as_f64().unwrap_or(f64::NAN),
                        r["median_interior_mass"].as_f64().unwrap_or(f64::NAN),
                        r["median_lognorm_dev"].as_f64().unwrap_or(f64::NAN),
                    )
                })
                .collect::<Vec<_>>()
                .join("; ")
        })
        .unwrap_or_else(|| "summary unavailable".to_string());
    (ok, format!("{domain}/{family}: exit {:?} [{medians}]", out.status.code()))
}

#[test]
fn criterion_01_disk_exactness() {
    let t0 = Instant::now();
    let d = ConformalDomain::disk();
    const N: usize = 50;
    const TOL: f64 = 1e-10;
    let mut worst = 0.0f64;

    let bergman = build_basis_stable(&d, BasisFamily::Bergman, N, 1024).unwrap();
    let szego = build_basis_stable(&d, BasisFamily::Szego, N, 1024).unwrap();
    for n in 0..=N {
        let want_b = ((n as f64 + 1.0) / std::f64::consts::PI).sqrt();
        let want_s = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        for k in 0..=n {
            let cb = bergman.poly(n).unwrap().coeff(k);
            let cs = szego.poly(n).unwrap().coeff(k);
            let (eb, es) = if k == n {
                ((cb - want_b).norm(), (cs - want_s).norm())
            } else {
                (cb.norm(), cs.norm())
            };
            worst = worst.max(eb).max(es);
        }
    }
    let pass_ortho = worst <= TOL;

    let faber = build_faber(&d, N).unwrap();
    let mut faber_exact = true;
    for n in 0..=N {
        for k in 0..=n {
            let c = faber.poly(n).unwrap().coeff(k);
            let want = if k == n { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            faber_exact &= c == want;
        }
    }

    report(
        1,
        pass_ortho && faber_exact,
        format!(
            "disk: Bergman √((n+1)/π)·zⁿ and Szegő zⁿ/√(2π) to {TOL:.0e} \
             (worst {worst:.2e}), Faber zⁿ exact = {faber_exact}, n ≤ {N}, in {:.1?}",
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_02_faber_two_oracle_agreement() {
    let t0 = Instant::now();
    const N: usize = 40;
    let domains = [
        ("disk", ConformalDomain::disk()),
        ("ellipse(1,0.25)", ConformalDomain::ellipse(1.0, 0.25).unwrap()),
        ("perturbed_circle(0.15,2)", ConformalDomain::perturbed_circle(0.15, 2).unwrap()),
    ];
    // build_faber runs both dual routes (double vs extended recurrence, and
    // recurrence vs reversion polynomial part) at 1e-9 per coefficient and
    // fails the build on any mismatch.
    let mut checked = Vec::new();
    for (name, d) in &domains {
        let t = build_faber(d, N).unwrap();
        let to = t.meta().faber_oracle_checked_to;
        assert_eq!(to, Some(N), "{name}: oracle depth");
        checked.push(format!("{name} ✓"));
    }

    // Ellipse closed form: F_n(Ψ(u)) = uⁿ + bⁿu⁻ⁿ exactly, b = 0.25.
    let ell = ConformalDomain::ellipse(1.0, 0.25).unwrap();
    let slices = faber_circle_slices(&ell, N).unwrap();
    let mut worst = 0.0f64;
    for (n, g) in slices.iter().enumerate().skip(1) {
        for e in g.lo()..=g.hi() {
            let c = g.get(e).unwrap_or(Complex64::new(0.0, 0.0));
            let want = if e == n as i64 {
                Complex64::new(1.0, 0.0)
            } else if e == -(n as i64) {
                Complex64::new(0.25f64.powi(n as i32), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            worst = worst.max((c - want).norm());
        }
    }
    report(
        2,
        worst <= 1e-10,
        format!(
            "both oracle routes agree to 1e-9 per coefficient, n ≤ {N}, on {}; \
             ellipse closed form uⁿ + 0.25ⁿu⁻ⁿ matched to 1e-10 (worst {worst:.2e}), in {:.1?}",
            checked.join(", "),
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_03_gram_residuals() {
    let t0 = Instant::now();
    const TOL: f64 = 1e-8;
    let domains = [
        ("ellipse(1,0.25)", ConformalDomain::ellipse(1.0, 0.25).unwrap()),
        ("perturbed_circle(0.15,2)", ConformalDomain::perturbed_circle(0.15, 2).unwrap()),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (name, d) in &domains {
        for family in [BasisFamily::Bergman, BasisFamily::Szego] {
            let t30 =
                build_orthonormal_prec(d, family, 30, Precision::Double, DEFAULT_QUADRATURE_M)
                    .unwrap();
            let r30 = t30.meta().max_gram_residual.unwrap();
            let t60 =
                build_orthonormal_prec(d, family, 60, Precision::Extended(192), DEFAULT_QUADRATURE_M)
                    .unwrap();
            let r60 = t60.meta().max_gram_residual.unwrap();
            pass &= r30 <= TOL && r60 <= TOL;
            details.push(format!("{name}/{family}: N=30 {r30:.1e}, N=60 ext {r60:.1e}"));
        }
    }
    report(
        3,
        pass,
        format!(
            "re-quadratured Gram residuals ≤ {TOL:.0e} [{}] in {:.1?}",
            details.join("; "),
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_04_bergman_asymptotics_suite() {
    let t0 = Instant::now();
    let ell = ConformalDomain::ellipse(1.0, 0.25).unwrap();
    let t = build_basis_stable(&ell, BasisFamily::Bergman, 40, DEFAULT_QUADRATURE_M).unwrap();

    let exterior = check_bergman_asymptotics(&t, 2.0, 10, 40).unwrap();
    let devs: Vec<(usize, f64)> = [10usize, 20, 30, 40]
        .iter()
        .map(|&n| (n, exterior.rows.iter().find(|r| r.n == n).unwrap().deviation))
        .collect();
    // A step at the measurement floor saturates the decay claim.
    let monotone = devs
        .windows(2)
        .all(|w| w[1].1 < w[0].1 || w[1].1 <= exterior.floor);

    let interior = check_bergman_asymptotics(&t, 0.8, 10, 40).unwrap();
    let rate = interior.semilog_rate.expect("interior decay measurable above the floor");
    let geometric = rate < 0.95f64.ln();

    let band = level_curve_bounds(&t, 2.0, 10, 40).unwrap();
    let band_ok = band.band_spread.is_finite() && band.band_spread > 0.0;

    report(
        4,
        monotone && geometric && band_ok,
        format!(
            "ellipse(1,0.25): exterior deviations at ρ=2 {:?} (floor {:.0e}); \
             interior log-slope at ρ=0.8 = {rate:.3} < log 0.95 = {:.3}; \
             band spread {:.4} ({}), in {:.1?}",
            devs.iter().map(|(n, d)| format!("dev({n})={d:.1e}")).collect::<Vec<_>>(),
            exterior.floor,
            0.95f64.ln(),
            band.band_spread,
            band.normalizer,
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_05_equidistribution_trend() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for domain in ["disk", "ellipse"] {
        for family in ["bergman", "szego", "faber"] {
            let (ok, line) = run_trend_cell(dir.path(), "zeros", family, domain);
            pass &= ok;
            details.push(line);
        }
    }
    report(
        5,
        pass,
        format!(
            "50 Gaussian trials/cell, medians at n=400 below n=100 for ks, interior mass \
             (ρ_K = 0.7), lognorm (R = 2): {} — in {:.1?}",
            details.join(" | "),
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_06_derivative_trend_and_markov() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for domain in ["disk", "ellipse"] {
        for family in ["bergman", "szego", "faber"] {
            let (ok, line) = run_trend_cell(dir.path(), "deriv", family, domain);
            pass &= ok;
            details.push(line);
        }
    }

    // Markov–Bernstein: pooled log–log fit of ‖P′‖/‖P‖ against n over ten
    // seeded Gaussian streams stays below the calibrated exponent.
    let disk = ConformalDomain::disk();
    let table = build_basis_stable(&disk, BasisFamily::Bergman, 400, 1024).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for seed in 0..10u64 {
        let s = sample(Distribution::ComplexGaussian, 400, child_seed(0x4d61, seed)).unwrap();
        for n in [50usize, 100, 200, 400] {
            let sub = CoefficientSample {
                seed: s.seed,
                dist: s.dist,
                values: s.values[..=n].to_vec(),
            };
            let p = assemble(&sub, &table).unwrap();
            let ratio = markov_bernstein_ratio(&p, &disk).unwrap();
            xs.push((n as f64).ln());
            ys.push(ratio.ln());
        }
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let markov_ok = slope <= CALIBRATED_MARKOV_EXPONENT && slope > 0.5;

    report(
        6,
        pass && markov_ok,
        format!(
            "P′ trend suite: {} | Markov–Bernstein fitted exponent {slope:.3} ≤ \
             {CALIBRATED_MARKOV_EXPONENT} over n ∈ {{50,100,200,400}}, 10 seeds — in {:.1?}",
            details.join(" | "),
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_07_peeled_recovery() {
    let t0 = Instant::now();
    const TOL: f64 = 1e-6;
    let domains =
        [("disk", ConformalDomain::disk()), ("ellipse(1,0.25)", ConformalDomain::ellipse(1.0, 0.25).unwrap())];
    let mut worst = 0.0f64;
    for (name, d) in &domains {
        for (family, master) in [(BasisFamily::Bergman, 0x50aa_u64), (BasisFamily::Szego, 0x50bb)]
        {
            let table =
                build_orthonormal_prec(d, family, 25, Precision::Double, DEFAULT_QUADRATURE_M)
                    .unwrap();
            let s = sample(Distribution::ComplexGaussian, 25, child_seed(master, 0)).unwrap();
            let p = assemble(&s, &table).unwrap();
            let got = recover_all(&p, &table, 2.0, 8192).unwrap();
            assert_eq!(got.len(), 26, "{name}/{family}");
            for (g, w) in got.iter().zip(&s.values) {
                worst = worst.max((g - w).norm() / (1.0 + w.norm()));
            }
        }
    }
    report(
        7,
        worst <= TOL,
        format!(
            "full Gaussian coefficient vectors recovered to {TOL:.0e} at n = 25 on disk and \
             ellipse, Bergman and Szegő (worst {worst:.2e}), in {:.1?}",
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_08_coefficient_statistics() {
    let t0 = Instant::now();
    const N: usize = 2000;
    const BAND: (f64, f64) = (0.98, 1.05);
    let windows = [1.0, 5.0, 10.0];

    // Rademacher: |±1| = 1 makes every statistic identically one.
    let mut rademacher_exact = true;
    for seed in 0..3u64 {
        let s = sample(Distribution::Rademacher, N, child_seed(0xc0, seed)).unwrap();
        let st = coeff_statistics(&s, &windows).unwrap();
        rademacher_exact &= st.nth_root.iter().all(|&x| x == 1.0)
            && st.running_max_root.iter().all(|&x| x == 1.0)
            && st.windows.iter().all(|w| w.roots.iter().all(|&x| x == 1.0));
    }

    // Gaussian and pareto(1.0): the running-max statistic has settled into
    // the calibrated band by the last quartile of degrees.
    let mut in_band = true;
    let mut ranges = Vec::new();
    for (label, dist) in [
        ("gaussian", Distribution::ComplexGaussian),
        ("pareto(1.0)", Distribution::Pareto { alpha: 1.0 }),
    ] {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for seed in 0..10u64 {
            let s = sample(dist, N, child_seed(0xc1, seed)).unwrap();
            let st = coeff_statistics(&s, &windows).unwrap();
            let (a, b) = st.running_max_last_quartile;
            lo = lo.min(a);
            hi = hi.max(b);
        }
        in_band &= lo >= BAND.0 && hi <= BAND.1;
        ranges.push(format!("{label} [{lo:.4}, {hi:.4}]"));
    }

    report(
        8,
        rademacher_exact && in_band,
        format!(
            "rademacher sequences identically 1 = {rademacher_exact}; running-max last \
             quartiles within [0.98, 1.05] at n = {N}, 10 seeds: {} — in {:.1?}",
            ranges.join(", "),
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_09_natural_boundary_evidence() {
    let t0 = Instant::now();
    let disk = ConformalDomain::disk();
    let ell = ConformalDomain::ellipse(1.0, 0.25).unwrap();

    let tb = build_basis_stable(&disk, BasisFamily::Bergman, DEFAULT_EVIDENCE_DEGREE, 1024).unwrap();
    let gauss =
        boundary_evidence(&tb, Distribution::ComplexGaussian, DEFAULT_EVIDENCE_DEGREE, DEFAULT_CENTERS, 2)
            .unwrap();

    let tf = build_basis_stable(&ell, BasisFamily::Faber, DEFAULT_EVIDENCE_DEGREE, 1024).unwrap();
    let rade =
        boundary_evidence(&tf, Distribution::Rademacher, DEFAULT_EVIDENCE_DEGREE, DEFAULT_CENTERS, 2)
            .unwrap();

    let control =
        boundary_evidence(&tb, Distribution::InvFactorial, DEFAULT_EVIDENCE_DEGREE, DEFAULT_CENTERS, 2)
            .unwrap();

    let pass = gauss.in_band_fraction >= 0.8
        && rade.in_band_fraction >= 0.8
        && control.in_band_fraction < 0.2;
    report(
        9,
        pass,
        format!(
            "N = {DEFAULT_EVIDENCE_DEGREE}, {DEFAULT_CENTERS} centers: disk/Bergman/gaussian \
             in-band {:.2} ≥ 0.8, ellipse/Faber/rademacher in-band {:.2} ≥ 0.8, 1/k! control \
             in-band {:.2} < 0.2 (entire fraction {:.2}), in {:.1?}",
            gauss.in_band_fraction,
            rade.in_band_fraction,
            control.in_band_fraction,
            control.entire_fraction,
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_10_byte_determinism() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    // Criterion 5's disk/Bergman cell, run twice.
    let cfg = write_config(dir.path(), "cell.toml", &trend_config("zeros", "bergman", "disk"));
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run_a = rpz().arg("zeros").arg("--config").arg(&cfg).arg("--out").arg(&out_a).output().unwrap();
    let run_b = rpz()
        .arg("zeros")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_b)
        .env("RPZ_THREADS", "2")
        .output()
        .unwrap();
    let a_ok = run_a.status.code() == Some(0);
    let b_ok = run_b.status.code() == Some(0);

    let mut identical = true;
    let mut compared = Vec::new();
    for name in ["zeros.csv", "summary.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap_or_default();
        let b = std::fs::read(out_b.join(name)).unwrap_or_default();
        identical &= !a.is_empty() && a == b;
        compared.push(format!("{name} ({} bytes)", a.len()));
    }
    report(
        10,
        a_ok && b_ok && identical,
        format!(
            "criterion 5's disk/Bergman config rerun (second run under RPZ_THREADS=2): \
             byte-identical {} — in {:.1?}",
            compared.join(", "),
            t0.elapsed()
        ),
    );
}
