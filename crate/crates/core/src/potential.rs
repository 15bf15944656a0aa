//! Green-function coordinates, zero-equidistribution statistics, and
//! contour-integral coefficient recovery.
//!
//! For the compact set `E = Ḡ` bounded by the analytic Jordan curve `L`, the
//! exterior Green function with pole at infinity is `g(z) = log|Φ(z)|` and
//! the equilibrium measure `μ_E` is the pushforward of uniform measure on
//! the unit circle under `Ψ`. Weak convergence of zero counting measures to
//! `μ_E` therefore reduces, through `Φ`, to a one-dimensional statement: the
//! angles `arg Φ(z_i)` of the zeros become uniform on the circle.
//! [`discrepancy`] packages that reduction into numbers — a circular
//! Kolmogorov–Smirnov distance on the assigned angles, the zero mass stuck
//! inside a fixed compact level set `|Φ| ≤ ρ_K`, the deviation of
//! `(1/n)·log|P_n|` from the Green function on an exterior level curve
//! (where the two must agree in the degree limit), and an `n`-th-root
//! sup-norm estimate `‖P_n‖_E^{1/n}` on `L` itself.
//!
//! [`recover_coefficient`] inverts the basis expansion through the residue
//! identity `a_n = (1/2πi)·∮_{L_R} P(z) / (z·B_n(z)) dz`: once every zero of
//! `B_n` lies strictly inside `L_R`, the integrand is `a_n/z + O(1/z²)` near
//! infinity, so the contour picks out exactly the top coefficient; lower
//! coefficients follow by peeling `P ← P − â_n B_n` and recursing.
//! [`markov_bernstein_ratio`] measures `‖P′‖_E / ‖P‖_E`, whose growth in the
//! degree the classical Markov–Bernstein inequality caps at `c(E)·n²`.

use crate::bases::{BasesError, BasisTable};
use crate::domain::{polygon_winding, ConformalDomain, DomainError};
use crate::roots::{find_roots, RootsError, ZeroSet};
use crate::series::Poly;
use num_complex::Complex64;
use thiserror::Error;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Level `ρ_K` of the compact interior set `K = {|Φ| ≤ ρ_K}` used for the
/// interior-mass statistic.
pub const DEFAULT_RHO_K: f64 = 0.7;
/// Exterior level `R` for the log-norm probe grid and the recovery contour.
pub const DEFAULT_CONTOUR_R: f64 = 2.0;
/// Points on the `L_R` probe grid.
pub const DEFAULT_CONTOUR_POINTS: usize = 64;
/// Starting size of the boundary sup-norm grid (doubled until stable).
pub const DEFAULT_BOUNDARY_POINTS: usize = 1024;
/// Default trapezoid size for [`recover_coefficient`].
pub const DEFAULT_RECOVERY_M: usize = 8192;

/// Calibration thresholds fixed by pilot runs — non-normative. Single-shot
/// statistical checks compare against these; the robust acceptance criteria
/// are the parameter-free seeded trends (medians improving with degree)
/// exercised by the integration suite.
pub const CALIBRATED_KS_AT_200: f64 = 0.12;
/// See [`CALIBRATED_KS_AT_200`].
pub const CALIBRATED_LOGNORM_AT_300: f64 = 0.05;
/// See [`CALIBRATED_KS_AT_200`].
pub const CALIBRATED_MARKOV_EXPONENT: f64 = 2.2;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("empty angle sample")]
    EmptyAngles,
    #[error("angle sample contains a non-finite value")]
    NonFiniteAngle,
    #[error("zero set has no atoms")]
    EmptyZeroSet,
    #[error("probe level rho_K = {rho} must lie strictly between r_inner = {lo} and 1")]
    ProbeLevelOutOfRange { rho: f64, lo: f64 },
    #[error("contour level R = {r} must exceed 1 (the boundary level)")]
    ContourTooSmall { r: f64 },
    #[error("probe grids need at least one point")]
    BadProbeGrid,
    #[error("quadrature size {m} must be a power of two >= 256")]
    BadQuadratureSize { m: usize },
    #[error("P has degree {got}, above the recovery index {n}")]
    DegreeMismatch { n: usize, got: usize },
    #[error("a zero of B_{n} sits at |Phi| = {modulus:.6}, not strictly inside the contour R = {r}")]
    BasisZeroNotEnclosed { n: usize, modulus: f64, r: f64 },
    #[error("the origin sits at |Phi| = {modulus:.6}, not strictly inside the contour R = {r}")]
    OriginNotEnclosed { modulus: f64, r: f64 },
    #[error("|B_{n}| dips to {min_abs:.3e} on the contour; the integrand is near-singular")]
    ContourThroughBasisZero { n: usize, min_abs: f64 },
    #[error("recovery quadrature produced a non-finite value at M = {m}")]
    NonFiniteQuadrature { m: usize },
    #[error("contour quadrature still moving {delta:.3e} > {tol:.1e} at M = {m}")]
    QuadratureNotConverged { m: usize, delta: f64, tol: f64 },
    #[error("sup-norm grid still moving {delta:.3e} at {m} points")]
    GridNotConverged { m: usize, delta: f64 },
    #[error("domain: {0}")]
    Domain(#[from] DomainError),
    #[error("roots: {0}")]
    Roots(#[from] RootsError),
    #[error("bases: {0}")]
    Bases(#[from] BasesError),
}

/// Knobs of the discrepancy probes.
#[derive(Debug, Clone, Copy)]
pub struct ProbeConfig {
    /// Interior level defining the compact set `K = {|Φ| ≤ ρ_K}`.
    pub rho_k: f64,
    /// Exterior level for the log-norm probe grid.
    pub contour_r: f64,
    /// Number of points on the `L_R` probe grid.
    pub contour_points: usize,
    /// Starting size of the boundary sup-norm grid.
    pub boundary_points: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            rho_k: DEFAULT_RHO_K,
            contour_r: DEFAULT_CONTOUR_R,
            contour_points: DEFAULT_CONTOUR_POINTS,
            boundary_points: DEFAULT_BOUNDARY_POINTS,
        }
    }
}

/// Equidistribution statistics of one zero set.
///
/// Every atom lands in exactly one of three buckets — angle assigned
/// (`|Φ| > ρ_K`), interior (`|Φ| ≤ ρ_K`, or continuation failed at a point
/// the level polygon winds around), or excluded (continuation failed away
/// from the interior) — so the three masses sum to one.
#[derive(Debug, Clone)]
pub struct DiscrepancyReport {
    /// Degree (number of atoms).
    pub n: usize,
    /// Circular KS distance of the assigned angles from uniform; `None`
    /// when no atom received an angle (an unassigned-dominated zero set).
    pub ks_angle: Option<f64>,
    /// Fraction of atoms with an assigned angle.
    pub assigned_mass: f64,
    /// Fraction of atoms inside the `ρ_K` level set.
    pub interior_mass: f64,
    /// Fraction of atoms where `Φ`-continuation failed away from `K`.
    pub excluded_mass: f64,
    /// `max over the L_R grid of |(1/n)·log|P_n| − log|Φ||`.
    pub lognorm_dev: f64,
    /// `‖P_n‖_E^{1/n}` from a stabilized boundary grid.
    pub sup_norm_e_root: f64,
}

/// The exterior Green function `g(z) = log|Φ(z)|` with pole at infinity:
/// zero on `L`, `log R` on the level curve `L_R`, and defined through the
/// analytic continuation of `Φ` across `L` down to the critical annulus.
pub fn green_value(d: &ConformalDomain, z: Complex64) -> Result<f64, PotentialError> {
    Ok(d.phi_eval(z)?.norm().ln())
}

/// Position of `z` under the circular coordinate of the equilibrium measure:
/// `θ = arg Φ(z) ∈ [0, 2π)`, or `None` when the `Φ`-continuation does not
/// reach `z` (deep interior). Unassigned is a value, not an error — the
/// discrepancy statistics count such atoms separately.
pub fn equilibrium_angle(d: &ConformalDomain, z: Complex64) -> Option<f64> {
    d.phi_eval(z).ok().map(|w| w.arg().rem_euclid(TAU))
}

/// Circular Kolmogorov–Smirnov distance of an angle sample from the uniform
/// law on `[0, 2π)`: the classical KS statistic of the wrapped sample,
/// minimized over 360 rotation offsets so that the arbitrary branch cut at
/// angle zero cannot inflate the distance.
pub fn ks_uniformity(angles: &[f64]) -> Result<f64, PotentialError> {
    if angles.is_empty() {
        return Err(PotentialError::EmptyAngles);
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(PotentialError::NonFiniteAngle);
    }
    let n = angles.len();
    let base: Vec<f64> = angles.iter().map(|a| a.rem_euclid(TAU) / TAU).collect();
    let mut shifted = vec![0.0f64; n];
    let mut best = f64::INFINITY;
    for s in 0..360 {
        let t = s as f64 / 360.0;
        for (dst, &u) in shifted.iter_mut().zip(&base) {
            let v = u + t;
            *dst = if v >= 1.0 { v - 1.0 } else { v };
        }
        shifted.sort_by(|a, b| a.partial_cmp(b).expect("finite by the gate above"));
        let mut dist = 0.0f64;
        for (i, &u) in shifted.iter().enumerate() {
            dist = dist
                .max(u - i as f64 / n as f64)
                .max((i as f64 + 1.0) / n as f64 - u);
        }
        best = best.min(dist);
    }
    Ok(best)
}

/// Doubles the grid behind `stat` until the value moves by at most `tol`
/// relative, starting from `start` points and giving up at `cap`.
fn stabilize(
    start: usize,
    cap: usize,
    tol: f64,
    mut stat: impl FnMut(usize) -> Result<f64, PotentialError>,
) -> Result<f64, PotentialError> {
    let mut m = start.max(16);
    let mut coarse = stat(m)?;
    loop {
        m *= 2;
        let fine = stat(m)?;
        let delta = (fine - coarse).abs() / (1.0 + fine.abs());
        if delta <= tol {
            return Ok(fine);
        }
        if m >= cap {
            return Err(PotentialError::GridNotConverged { m, delta });
        }
        coarse = fine;
    }
}

/// Assembles the equidistribution statistics of a converged zero set.
///
/// Each atom is classified once: a successful `Φ`-continuation assigns it an
/// angle when `|Φ| > ρ_K` and interior mass otherwise; a failed continuation
/// is checked geometrically against the `ρ_K` level polygon (continuation
/// only fails deep inside, but the winding test keeps the bookkeeping honest)
/// and counts as interior or excluded accordingly. The log-norm deviation is
/// taken over a fixed grid on `L_R`; the boundary sup norm is grid-doubled
/// until stable to `1e−6` relative.
pub fn discrepancy(
    zs: &ZeroSet,
    d: &ConformalDomain,
    probes: &ProbeConfig,
) -> Result<DiscrepancyReport, PotentialError> {
    if !zs.converged {
        return Err(RootsError::NotConverged.into());
    }
    let n = zs.degree();
    if n == 0 {
        return Err(PotentialError::EmptyZeroSet);
    }
    if !(probes.rho_k > d.r_inner() && probes.rho_k < 1.0) {
        return Err(PotentialError::ProbeLevelOutOfRange { rho: probes.rho_k, lo: d.r_inner() });
    }
    if !(probes.contour_r > 1.0) {
        return Err(PotentialError::ContourTooSmall { r: probes.contour_r });
    }
    if probes.contour_points == 0 || probes.boundary_points == 0 {
        return Err(PotentialError::BadProbeGrid);
    }

    let polygon: Vec<Complex64> =
        d.level_curve(probes.rho_k, 4096)?.into_iter().map(|p| p.z).collect();
    let mut angles: Vec<f64> = Vec::new();
    let mut interior = 0usize;
    let mut excluded = 0usize;
    for &z in &zs.roots {
        match d.phi_eval(z) {
            Ok(w) => {
                if w.norm() <= probes.rho_k {
                    interior += 1;
                } else {
                    angles.push(w.arg().rem_euclid(TAU));
                }
            }
            Err(_) => {
                if polygon_winding(&polygon, z) != 0 {
                    interior += 1;
                } else {
                    excluded += 1;
                }
            }
        }
    }
    let ks_angle = if angles.is_empty() { None } else { Some(ks_uniformity(&angles)?) };

    let nf = n as f64;
    let mut lognorm_dev = 0.0f64;
    for pt in d.level_curve(probes.contour_r, probes.contour_points)? {
        let g = green_value(d, pt.z)?;
        lognorm_dev = lognorm_dev.max((zs.log_abs_at(pt.z) / nf - g).abs());
    }

    let sup_norm_e_root = stabilize(probes.boundary_points, 1 << 17, 1e-6, |m| {
        let mut top = f64::NEG_INFINITY;
        for pt in d.level_curve(1.0, m)? {
            top = top.max(zs.log_abs_at(pt.z));
        }
        Ok((top / nf).exp())
    })?;

    Ok(DiscrepancyReport {
        n,
        ks_angle,
        assigned_mass: angles.len() as f64 / nf,
        interior_mass: interior as f64 / nf,
        excluded_mass: excluded as f64 / nf,
        lognorm_dev,
        sup_norm_e_root,
    })
}

/// Recovers the top expansion coefficient of `P = Σ_{k≤n} a_k B_k` from the
/// residue identity `a_n = (1/2πi)·∮_{L_R} P(z) / (z·B_n(z)) dz`.
///
/// The identity needs every finite pole of the integrand inside the contour:
/// the zeros of `B_n` (located with the root finder and checked through `Φ`;
/// continuation failures are deep interior, hence enclosed) and the origin.
/// The trapezoid sum over `z = Ψ(R·e^{iθ})` then converges geometrically and
/// is doubled until two sizes agree to `1e−9` relative.
pub fn recover_coefficient(
    p: &Poly<Complex64>,
    table: &BasisTable,
    n: usize,
    r: f64,
    m: usize,
) -> Result<Complex64, PotentialError> {
    if !m.is_power_of_two() || m < 256 {
        return Err(PotentialError::BadQuadratureSize { m });
    }
    if !(r > 1.0) {
        return Err(PotentialError::ContourTooSmall { r });
    }
    let bn = table.poly(n)?;
    let deg_p = p.degree().unwrap_or(0);
    if deg_p > n {
        return Err(PotentialError::DegreeMismatch { n, got: deg_p });
    }
    let d = table.domain();
    if n >= 1 {
        let zeros = find_roots(bn)?;
        for &root in &zeros.roots {
            if let Ok(w) = d.phi_eval(root) {
                if w.norm() >= r - 1e-6 {
                    return Err(PotentialError::BasisZeroNotEnclosed {
                        n,
                        modulus: w.norm(),
                        r,
                    });
                }
            }
        }
    }
    if let Ok(w0) = d.phi_eval(Complex64::new(0.0, 0.0)) {
        if w0.norm() >= r - 1e-6 {
            return Err(PotentialError::OriginNotEnclosed { modulus: w0.norm(), r });
        }
    }

    let psi = d.psi();
    let dpsi = psi.derivative();
    // (1/2πi)·∮ f dz with z = Ψ(w), w = R·e^{iθ}, dz = Ψ′(w)·i·w dθ gives
    // (1/M)·Σ_j f(Ψ(w_j))·Ψ′(w_j)·w_j.
    let pass = |mm: usize| -> Result<Complex64, PotentialError> {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut min_b = f64::INFINITY;
        let mut max_b = 0.0f64;
        for j in 0..mm {
            let w = Complex64::from_polar(r, TAU * j as f64 / mm as f64);
            let z = psi.eval(&w);
            let bv = bn.eval(&z);
            min_b = min_b.min(bv.norm());
            max_b = max_b.max(bv.norm());
            acc += p.eval(&z) / (z * bv) * dpsi.eval(&w) * w;
        }
        if !(min_b > 1e-12 * max_b) {
            return Err(PotentialError::ContourThroughBasisZero { n, min_abs: min_b });
        }
        let value = acc / mm as f64;
        if !value.is_finite() {
            return Err(PotentialError::NonFiniteQuadrature { m: mm });
        }
        Ok(value)
    };
    let tol = 1e-9;
    let mut mm = m;
    let mut coarse = pass(mm)?;
    loop {
        mm *= 2;
        let fine = pass(mm)?;
        let delta = (fine - coarse).norm() / (1.0 + fine.norm());
        if delta <= tol {
            return Ok(fine);
        }
        if mm >= (1 << 17) {
            return Err(PotentialError::QuadratureNotConverged { m: mm, delta, tol });
        }
        coarse = fine;
    }
}

/// Keeps the coefficients of degree `< below` (hard truncation).
fn truncate_below(p: &Poly<Complex64>, below: usize) -> Poly<Complex64> {
    let coeffs = p.coeffs();
    Poly::new(coeffs[..coeffs.len().min(below)].to_vec())
}

/// Recovers every expansion coefficient of `P` in the table's basis by
/// peeling: the contour integral extracts only the top coefficient, so the
/// recovered component is subtracted and the procedure recurses downward.
/// After each subtraction the polynomial is hard-truncated below the peeled
/// degree — the cancellation is exact in exact arithmetic, and the rounding
/// residue must not masquerade as a higher basis component.
pub fn recover_all(
    p: &Poly<Complex64>,
    table: &BasisTable,
    r: f64,
    m: usize,
) -> Result<Vec<Complex64>, PotentialError> {
    let deg = match p.degree() {
        None => return Ok(Vec::new()),
        Some(k) => k,
    };
    let mut out = vec![Complex64::new(0.0, 0.0); deg + 1];
    let mut rest = p.clone();
    for k in (0..=deg).rev() {
        let a = recover_coefficient(&rest, table, k, r, m)?;
        out[k] = a;
        let peeled = rest.sub(&table.poly(k)?.scale(&a));
        rest = truncate_below(&peeled, k);
    }
    Ok(out)
}

/// Sup of `f` over a fixed boundary grid on `L`.
fn boundary_sup(
    d: &ConformalDomain,
    m: usize,
    f: &dyn Fn(Complex64) -> f64,
) -> Result<f64, PotentialError> {
    let mut top = 0.0f64;
    for pt in d.level_curve(1.0, m)? {
        top = top.max(f(pt.z));
    }
    Ok(top)
}

/// The Markov–Bernstein ratio `‖P′‖_E / ‖P‖_E` from 2048-point boundary-grid
/// sup norms (both norms are attained on `L` by the maximum principle). The
/// numerator and denominator share the grid, so the mild sup underestimate of
/// a fixed grid largely cancels in the ratio — which is what the growth-rate
/// fit consumes. Constants map to ratio zero.
pub fn markov_bernstein_ratio(
    p: &Poly<Complex64>,
    d: &ConformalDomain,
) -> Result<f64, PotentialError> {
    if p.degree().unwrap_or(0) == 0 {
        return Ok(0.0);
    }
    let dp = p.derivative();
    let sup_p = boundary_sup(d, 2048, &|z| p.eval(&z).norm())?;
    let sup_dp = boundary_sup(d, 2048, &|z| dp.eval(&z).norm())?;
    Ok(sup_dp / sup_p)
}
