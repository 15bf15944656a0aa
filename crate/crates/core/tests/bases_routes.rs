//! Cross-route validation of the basis builders: the moment route, the
//! stable Faber route, and the extended-precision route must agree wherever
//! they overlap, and each must hit its documented accuracy gate.

use num_complex::Complex64;
use rpz_core::bases::{
    build_basis_stable, build_faber, build_orthonormal, build_orthonormal_prec,
    check_bergman_asymptotics, derivative_level_bounds, level_curve_bounds, nth_root_asymptotic,
    BasesError, BasisFamily, Precision,
};
use rpz_core::domain::ConformalDomain;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn moment_and_stable_routes_agree_midrange() {
    // Two fully independent constructions of the same orthonormal family
    // (monomial Gram + Cholesky vs Faber Gram + Cholesky); the normalization
    // (real positive leading coefficient) makes the polynomials unique, so
    // the coefficients must agree to the moment route's conditioning floor.
    let domains = [
        ConformalDomain::ellipse(1.0, 0.25).unwrap(),
        ConformalDomain::perturbed_circle(0.2, 3).unwrap(),
    ];
    for d in &domains {
        for family in [BasisFamily::Bergman, BasisFamily::Szego] {
            let a = build_orthonormal(d, family, 25).unwrap();
            let b = build_basis_stable(d, family, 25, 4096).unwrap();
            for n in 0..=25 {
                let pa = a.poly(n).unwrap();
                let pb = b.poly(n).unwrap();
                let scale = pa.max_coeff_abs().max(1.0);
                for k in 0..=n {
                    let diff = (pa.coeff(k) - pb.coeff(k)).norm();
                    assert!(
                        diff < 1e-7 * scale,
                        "{} {family} n={n} k={k}: {diff:.2e}",
                        d.label()
                    );
                }
            }
        }
    }
}

#[test]
fn double_precision_certifies_to_n30_on_catalog() {
    for d in [
        ConformalDomain::ellipse(1.0, 0.25).unwrap(),
        ConformalDomain::perturbed_circle(0.2, 3).unwrap(),
    ] {
        for family in [BasisFamily::Bergman, BasisFamily::Szego] {
            let t = build_orthonormal(&d, family, 30).unwrap();
            let res = t.meta().max_gram_residual.unwrap();
            assert!(res <= 1e-8, "{} {family}: residual {res:.2e}", d.label());
        }
    }
}

#[test]
fn double_precision_fails_honestly_at_n60_on_ellipse() {
    // The monomial Gram matrix conditioning makes degree 60 unreachable in
    // double precision on the ellipse; the builder must refuse with the
    // verified-residual error (advising extended precision), never return an
    // uncertified table.
    let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
    match build_orthonormal(&e, BasisFamily::Bergman, 60) {
        Err(err @ (BasesError::GramResidual { .. } | BasesError::CholeskyBreakdown { .. })) => {
            let msg = err.to_string();
            assert!(msg.contains("extended precision"), "message: {msg}");
        }
        Err(other) => panic!("unexpected error: {other}"),
        Ok(t) => panic!(
            "uncertified table returned (residual {:?})",
            t.meta().max_gram_residual
        ),
    }
}

#[test]
fn extended_mode_reaches_n60() {
    let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
    for family in [BasisFamily::Bergman, BasisFamily::Szego] {
        let t =
            build_orthonormal_prec(&e, family, 60, Precision::Extended(192), 4096).unwrap();
        let res = t.meta().max_gram_residual.unwrap();
        assert!(res <= 1e-8, "{family}: residual {res:.2e}");
        // The stored f64 polynomials are exact to rounding; spot-check the
        // leading coefficients are positive reals of plausible size.
        for n in (0..=60).step_by(12) {
            let lead = *t.poly(n).unwrap().leading().unwrap();
            assert!(lead.re > 0.0 && lead.im.abs() <= 1e-12 * lead.re, "n={n}");
        }
    }
}

#[test]
fn disk_tables_are_exact_to_n50() {
    let disk = ConformalDomain::disk();
    let pi = std::f64::consts::PI;

    let b = build_orthonormal(&disk, BasisFamily::Bergman, 50).unwrap();
    let s = build_orthonormal(&disk, BasisFamily::Szego, 50).unwrap();
    let f = build_faber(&disk, 50).unwrap();
    for n in 0..=50 {
        let want_b = ((n as f64 + 1.0) / pi).sqrt();
        let want_s = 1.0 / (2.0 * pi).sqrt();
        assert!((b.poly(n).unwrap().coeff(n) - c(want_b, 0.0)).norm() < 1e-10, "bergman {n}");
        assert!((s.poly(n).unwrap().coeff(n) - c(want_s, 0.0)).norm() < 1e-10, "szego {n}");
        assert!((f.poly(n).unwrap().coeff(n) - c(1.0, 0.0)).norm() < 1e-10, "faber {n}");
        for k in 0..n {
            assert!(b.poly(n).unwrap().coeff(k).norm() < 1e-10);
            assert!(s.poly(n).unwrap().coeff(k).norm() < 1e-10);
            assert!(f.poly(n).unwrap().coeff(k).norm() < 1e-10);
        }
    }
}

#[test]
fn faber_dual_route_check_to_40_on_catalog() {
    for d in [
        ConformalDomain::disk(),
        ConformalDomain::ellipse(1.0, 0.25).unwrap(),
        ConformalDomain::perturbed_circle(0.2, 3).unwrap(),
    ] {
        let t = build_faber(&d, 40).unwrap();
        assert_eq!(t.meta().faber_oracle_checked_to, Some(40), "{}", d.label());
    }
}

#[test]
fn stable_route_reaches_high_degree() {
    let p = ConformalDomain::perturbed_circle(0.2, 3).unwrap();
    let t = build_basis_stable(&p, BasisFamily::Bergman, 300, 4096).unwrap();
    assert!(t.meta().max_gram_residual.unwrap() <= 1e-8);
    assert!(t.has_stable_eval());
    // evaluation just outside the boundary stays finite and meaningful
    let w = Complex64::from_polar(1.05, 0.9);
    let z = p.psi_eval(w).unwrap();
    let v = t.eval_basis(300, z).unwrap();
    assert!(v.is_finite() && v.norm() > 1e3 && v.norm() < 1e10, "|B_300| = {:e}", v.norm());
    let rep = nth_root_asymptotic(&t, z, 50, 300).unwrap();
    assert!((rep.target - 1.05).abs() < 1e-12);
    assert!(rep.final_deviation < 0.05);

    let s = build_basis_stable(&p, BasisFamily::Szego, 200, 4096).unwrap();
    assert!(s.meta().max_gram_residual.unwrap() <= 1e-8);
}

#[test]
fn bergman_asymptotics_exterior_and_interior_regimes() {
    let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
    let t = build_basis_stable(&e, BasisFamily::Bergman, 40, 4096).unwrap();

    // Exterior, ρ = 2: on the ellipse the first-order form is exact up to a
    // geometrically small factor, so every deviation sits at the
    // measurement floor — which *is* the "decays at least as fast as n^{-1}"
    // statement, saturated.
    let rep = check_bergman_asymptotics(&t, 2.0, 10, 40).unwrap();
    assert_eq!(rep.regime, "exterior");
    for row in &rep.rows {
        assert!(row.finite && row.deviation < 1e-10, "n={}: {:e}", row.n, row.deviation);
    }
    match rep.loglog_slope {
        None => assert!(rep.floor_rows >= rep.rows.len() - 1),
        Some(slope) => assert!(slope <= -1.0, "slope {slope}"),
    }

    // Interior ring, ρ = 0.8: geometric decay at rate (b/ρ²)^n = 0.39^n.
    let rep = check_bergman_asymptotics(&t, 0.8, 4, 24).unwrap();
    assert_eq!(rep.regime, "interior");
    let rate = rep.semilog_rate.expect("well above floor in this range");
    assert!(rate < -0.5, "semilog rate {rate}");
    let first = rep.rows.first().unwrap().deviation;
    let last = rep.rows.last().unwrap().deviation;
    assert!(last < 1e-3 * first, "geometric decay: {first:e} -> {last:e}");

    // Perturbed circle, exterior: deviations fall with n.
    let p = ConformalDomain::perturbed_circle(0.2, 3).unwrap();
    let tp = build_basis_stable(&p, BasisFamily::Bergman, 40, 4096).unwrap();
    let rep = check_bergman_asymptotics(&tp, 2.0, 8, 40).unwrap();
    let first = rep.rows.first().unwrap().deviation;
    let last = rep.rows.last().unwrap().deviation;
    assert!(
        last < first || last < 1e-9,
        "exterior deviations should shrink: {first:e} -> {last:e}"
    );
}

#[test]
fn level_curve_bands_stay_bounded() {
    let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
    let t = build_basis_stable(&e, BasisFamily::Bergman, 60, 4096).unwrap();
    let rep = level_curve_bounds(&t, 1.5, 10, 60).unwrap();
    assert!(rep.normalizer.contains("sqrt"));
    for row in &rep.rows {
        assert!(row.min_ratio > 0.05 && row.max_ratio < 20.0, "n={}", row.n);
    }
    assert!(rep.band_spread < 5.0, "spread {}", rep.band_spread);

    let f = build_faber(&e, 60).unwrap();
    let rep = level_curve_bounds(&f, 1.5, 10, 60).unwrap();
    assert!(rep.band_spread < 2.0, "faber spread {}", rep.band_spread);

    let rep = derivative_level_bounds(&t, 1.5, 10, 60).unwrap();
    assert!(rep.band_spread < 8.0, "derivative spread {}", rep.band_spread);
    let rep = derivative_level_bounds(&f, 1.5, 10, 60).unwrap();
    assert!(rep.band_spread < 3.0, "faber derivative spread {}", rep.band_spread);
}

#[test]
fn nth_root_deviation_shrinks_with_degree() {
    let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
    let t = build_basis_stable(&e, BasisFamily::Bergman, 60, 4096).unwrap();
    let w = Complex64::from_polar(1.3, 0.7);
    let z = e.psi_eval(w).unwrap();
    let rep = nth_root_asymptotic(&t, z, 15, 60).unwrap();
    let dev15 = (rep.rows.first().unwrap().1 - rep.target).abs();
    let dev60 = (rep.rows.last().unwrap().1 - rep.target).abs();
    assert!(dev60 < dev15, "dev(60) = {dev60:e} !< dev(15) = {dev15:e}");
}
