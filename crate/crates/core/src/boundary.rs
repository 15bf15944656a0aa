//! Faber-tail bounds, the Carleman split of a Bergman expansion, and the
//! Taylor-radius experiment that probes `L` as a natural boundary.
//!
//! Outside `G` the basis functions shadow powers of the exterior map: the
//! Faber polynomial satisfies `Φⁿ(z) = F_n(z) + E_n(z)` on the continuation
//! annulus, with [`faber_tail`] returning the tail `E_n` and certifying the
//! Cauchy-integral bound `|E_n(z)| ≤ |Γ_{r+ε}| (r+ε)ⁿ / (2π d(z, Γ_{r+ε}))`
//! over the collar contour `Γ_{r+ε} = Ψ({|w| = r+ε})`. For the Bergman
//! family, Carleman's asymptotics `B_n = √((n+1)/π)·Φⁿ Φ′·(1 + e_n)` split a
//! random expansion `Σ aₙBₙ` into a closed-form main series and a remainder
//! whose terms die off geometrically near `L`; [`carleman_split`] forms both
//! partial sums and reports the sup of the late remainder terms, the
//! numerical face of "the remainder defines an analytic function".
//!
//! The boundary experiment itself rests on a dichotomy for the limit
//! function `f = Σ aₙBₙ` of an i.i.d. coefficient stream: when the series
//! has radius-type one, every interior center `z₀` should see a local Taylor
//! radius equal to `dist(z₀, L)` — no analytic continuation leaks across any
//! boundary arc. [`taylor_radius`] measures that radius by the root test on
//! Cauchy-quadrature Taylor coefficients, and [`boundary_evidence`] repeats
//! the measurement at seeded random centers, reporting how many land in a
//! fixed ratio band around 1. A genuinely entire input (the `1/k!` control)
//! must instead blow through the band and trip the "no singularity" flag —
//! the experiment is falsifiable, not a formality.
//!
//! The coefficients the root test consumes are *tiny*: at the top Taylor
//! index `K = 60` on a circle of half the boundary distance, the genuine
//! signal sits near `2^{-K}·‖f‖ ≈ 1e−18·‖f‖`, below the f64 round-off of
//! any node value. The quadrature therefore runs in extended precision,
//! where the arithmetic noise floor (`≈ 1e−35·‖f‖` at 128 bits) leaves the
//! signal twelve orders of magnitude of headroom.

use crate::bases::{BasesError, BasisFamily, BasisTable, Combination, FaberEngine};
use crate::domain::{ConformalDomain, DomainError};
use crate::random::{child_seed, sample, CoefficientSample, Distribution, RandomError};
use crate::scalar::{mp_roots_of_unity, mpf, CScalar, MpC};
use crate::series::Poly;
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Ratio band `radius_est / dist` counted as agreeing with a singularity on `L`.
pub const EVIDENCE_BAND: (f64, f64) = (0.8, 1.2);
/// Taylor terms measured per center in the evidence experiment.
pub const EVIDENCE_TAYLOR_TERMS: usize = 60;
/// Nodes on the Cauchy quadrature circle (exact for degrees below this).
pub const CAUCHY_POINTS: usize = 4096;
/// Working precision of the quadrature sums.
pub const MP_QUADRATURE_BITS: usize = 128;
/// Default coefficient count of the evidence experiment.
pub const DEFAULT_EVIDENCE_DEGREE: usize = 600;
/// Default number of interior centers.
pub const DEFAULT_CENTERS: usize = 20;

/// Collar width `ε` of the continuation contour `Γ_{r+ε}`.
const CONTOUR_EPS: f64 = 0.05;
/// Polyline resolution used for the contour length and distance.
const CONTOUR_SAMPLES: usize = 4096;
/// `|γ_k|` below this multiple of the circle sup counts as "no signal at k".
const ENTIRE_GAMMA_CUT: f64 = 1e-25;
/// Root-test clamp floor: above the quadrature round-off (`≈ 1e−35·sup`),
/// below any genuine top-quartile coefficient (`≈ 1e−18·sup`).
const GAMMA_FLOOR: f64 = 1e-30;

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Bases(#[from] BasesError),
    #[error(transparent)]
    Random(#[from] RandomError),
    #[error("continuation point has |Φ(z)| = {modulus:.6}, tails need |Φ(z)| > {needed:.6}")]
    ContinuationTooDeep { modulus: f64, needed: f64 },
    #[error("Faber tail {measured:e} at n = {n} exceeds its contour bound {bound:e}")]
    TailBoundExceeded { n: usize, measured: f64, bound: f64 },
    #[error("Carleman split needs a Bergman table, got {family:?}")]
    NotBergman { family: BasisFamily },
    #[error("sample carries {have} coefficients, a split to index {need} needs one per term")]
    CoefficientsTooShort { have: usize, need: usize },
    #[error("Taylor order {k} leaves no top quartile for the root test (need ≥ 4)")]
    TaylorOrderTooSmall { k: usize },
    #[error("quadrature circle around {z0} exits the domain")]
    CircleExitsDomain { z0: Complex64 },
    #[error("degree {n} cannot back {terms} Taylor terms (need n ≥ 3·terms)")]
    EvidenceDegreeTooSmall { n: usize, terms: usize },
    #[error("drew {found} of {wanted} interior centers before the rejection budget ran out")]
    CentersExhausted { found: usize, wanted: usize },
    #[error("distribution {0:?} lacks the finite log-moment the evidence run requires")]
    LogMomentMissing(Distribution),
}

/// Root-test outcome at one interior center.
#[derive(Debug, Clone)]
pub struct RadiusEstimate {
    pub center: Complex64,
    /// `|c_k|` of the local Taylor coefficients, `k = 0..=K`.
    pub taylor_norms: Vec<f64>,
    /// Median of `|c_k|^{-1/k}` over the top-index quartile.
    pub radius_est: f64,
    pub dist_to_l: f64,
    /// Set when the top-quartile coefficients carry no signal above the
    /// quadrature floor — the input looks entire from this center.
    pub no_singularity: bool,
}

/// Partial sums of the Carleman decomposition at one point.
#[derive(Debug, Clone, Copy)]
pub struct CarlemanSplit {
    /// `Σ_{n≤N} aₙ √((n+1)/π) Φⁿ(z) Φ′(z)`.
    pub main: Complex64,
    /// `Σ_{n≤N} aₙ (Bₙ(z) − √((n+1)/π) Φⁿ(z) Φ′(z))`.
    pub remainder: Complex64,
    /// Sup of `|term_k|` of the remainder over the last index quartile — the
    /// Cauchy-sequence gauge for its convergence.
    pub tail_gap: f64,
}

/// Aggregated center-by-center evidence for a natural boundary on `L`.
#[derive(Debug, Clone)]
pub struct EvidenceSummary {
    pub n: usize,
    pub band: (f64, f64),
    pub estimates: Vec<RadiusEstimate>,
    /// `radius_est / dist_to_l` per center, in center order.
    pub ratios: Vec<f64>,
    pub in_band: usize,
    pub in_band_fraction: f64,
    /// Fraction of centers whose root test saw no signal at all.
    pub entire_fraction: f64,
    /// At least 80% of centers in band and a minority of "entire" flags.
    pub consistent_with_natural_boundary: bool,
}

/// The Faber tail `E_n(z) = Φⁿ(z) − F_n(z)`, certified against its
/// Cauchy-integral bound over the collar contour `Γ_{r+ε}`, `ε = 0.05`.
///
/// The representation needs `z` strictly outside the contour, so the call
/// rejects points with `|Φ(z)| ≤ r_inner + ε`.
pub fn faber_tail(
    d: &ConformalDomain,
    n: usize,
    z: Complex64,
) -> Result<Complex64, BoundaryError> {
    let w = d.phi_eval(z)?;
    let needed = d.r_inner() + CONTOUR_EPS;
    if w.norm() <= needed {
        return Err(BoundaryError::ContinuationTooDeep {
            modulus: w.norm(),
            needed,
        });
    }
    let engine = FaberEngine::new(d);
    let f_n = engine.values(&z, n)[n];
    let w_n = w.powu(n as u32);
    let tail = w_n - f_n;
    // E_n = −(1/2πi)·∮_{Γ_{r+ε}} Φⁿ(t)/(t−z) dt with |Φ| ≡ r+ε on the
    // contour, so |E_n| ≤ len·(r+ε)ⁿ/(2π·dist). The slack term absorbs the
    // f64 round-off of forming Φⁿ − F_n itself, which on the disk (where the
    // tail is exactly zero) would otherwise outweigh a vanishing bound.
    let curve: Vec<Complex64> = d
        .level_curve(needed, CONTOUR_SAMPLES)?
        .iter()
        .map(|p| p.z)
        .collect();
    let len = closed_length(&curve);
    let gap = dist_to_closed(z, &curve);
    let bound = len * needed.powi(n as i32) / (2.0 * std::f64::consts::PI * gap);
    let slack = 1e-12 * (w_n.norm() + f_n.norm());
    if tail.norm() > bound + slack {
        return Err(BoundaryError::TailBoundExceeded {
            n,
            measured: tail.norm(),
            bound,
        });
    }
    Ok(tail)
}

/// Splits the Bergman partial sum `Σ_{n≤N} aₙBₙ(z)` into the Carleman main
/// series and its remainder, term by term.
pub fn carleman_split(
    table: &BasisTable,
    draw: &CoefficientSample,
    z: Complex64,
    n_split: usize,
) -> Result<CarlemanSplit, BoundaryError> {
    if table.family() != BasisFamily::Bergman {
        return Err(BoundaryError::NotBergman {
            family: table.family(),
        });
    }
    if draw.values.len() <= n_split {
        return Err(BoundaryError::CoefficientsTooShort {
            have: draw.values.len(),
            need: n_split + 1,
        });
    }
    let d = table.domain();
    let w = d.phi_eval(z)?;
    // Φ′(z) = 1/Ψ′(w) by the inverse-function rule.
    let phi_prime = Complex64::new(1.0, 0.0) / d.psi_prime(w)?;
    let basis = table.eval_through(n_split, z)?;
    let first_tail = (3 * n_split) / 4 + 1;
    let mut main = Complex64::new(0.0, 0.0);
    let mut remainder = Complex64::new(0.0, 0.0);
    let mut tail_gap = 0.0f64;
    let mut w_pow = Complex64::new(1.0, 0.0);
    for k in 0..=n_split {
        let carleman = ((k as f64 + 1.0) / std::f64::consts::PI).sqrt() * w_pow * phi_prime;
        let main_term = draw.values[k] * carleman;
        let rem_term = draw.values[k] * basis[k] - main_term;
        main += main_term;
        remainder += rem_term;
        if k >= first_tail {
            tail_gap = tail_gap.max(rem_term.norm());
        }
        w_pow *= w;
    }
    Ok(CarlemanSplit {
        main,
        remainder,
        tail_gap,
    })
}

/// Local Taylor radius of `f_N` at `z₀` by the top-quartile root test on
/// Cauchy-quadrature coefficients over `|z − z₀| = dist(z₀, L)/2`.
pub fn taylor_radius(
    f_n: &Poly<Complex64>,
    z0: Complex64,
    k_top: usize,
    d: &ConformalDomain,
) -> Result<RadiusEstimate, BoundaryError> {
    if k_top < 4 {
        return Err(BoundaryError::TaylorOrderTooSmall { k: k_top });
    }
    if !d.winding_contains(z0) {
        return Err(BoundaryError::CircleExitsDomain { z0 });
    }
    let dist = d.dist_to_boundary(z0)?;
    if !(dist > 0.0) {
        return Err(BoundaryError::CircleExitsDomain { z0 });
    }
    let deg = f_n.degree().unwrap_or(0);
    let coeffs: Vec<MpC> = (0..=deg)
        .map(|k| MpC::from_c64_prec(f_n.coeff(k), MP_QUADRATURE_BITS))
        .collect();
    let eval = MpEvaluator::Monomial { coeffs };
    Ok(radius_from_circle(&eval, z0, dist, k_top))
}

/// Draws one coefficient sample, assembles `f_N = Σ aₙBₙ`, and runs the
/// Taylor-radius test at `centers` seeded interior points with
/// `dist(z₀, L) ∈ [0.1, 0.6]·inradius`.
pub fn boundary_evidence(
    table: &BasisTable,
    dist: Distribution,
    n: usize,
    centers: usize,
    seed: u64,
) -> Result<EvidenceSummary, BoundaryError> {
    if !dist.finite_log_plus() {
        return Err(BoundaryError::LogMomentMissing(dist));
    }
    if n < 3 * EVIDENCE_TAYLOR_TERMS {
        return Err(BoundaryError::EvidenceDegreeTooSmall {
            n,
            terms: EVIDENCE_TAYLOR_TERMS,
        });
    }
    let draw = sample(dist, n, seed)?;
    let combo = table.combine(&draw.values)?;
    let eval = mp_evaluator_for(&combo, table.domain());
    let d = table.domain();
    let picked = pick_centers(d, centers, child_seed(seed, 1))?;
    let estimates = picked
        .par_iter()
        .map(|&z0| {
            let dist0 = d.dist_to_boundary(z0)?;
            Ok(radius_from_circle(&eval, z0, dist0, EVIDENCE_TAYLOR_TERMS))
        })
        .collect::<Result<Vec<RadiusEstimate>, BoundaryError>>()?;
    let ratios: Vec<f64> = estimates
        .iter()
        .map(|e| e.radius_est / e.dist_to_l)
        .collect();
    let in_band = ratios
        .iter()
        .filter(|r| EVIDENCE_BAND.0 <= **r && **r <= EVIDENCE_BAND.1)
        .count();
    let entire = estimates.iter().filter(|e| e.no_singularity).count();
    let total = centers.max(1) as f64;
    let in_band_fraction = in_band as f64 / total;
    let entire_fraction = entire as f64 / total;
    Ok(EvidenceSummary {
        n,
        band: EVIDENCE_BAND,
        estimates,
        ratios,
        in_band,
        in_band_fraction,
        entire_fraction,
        consistent_with_natural_boundary: in_band_fraction >= 0.8 && entire_fraction < 0.5,
    })
}

/// Extended-precision evaluator for the assembled polynomial: the Faber
/// recurrence when a stable representation exists (monomial coefficients of
/// a high-degree combination can dwarf the function values by tens of
/// orders, so Horner on them would cancel catastrophically), plain Horner
/// on lifted coefficients otherwise.
enum MpEvaluator {
    Monomial { coeffs: Vec<MpC> },
    Faber { engine: FaberEngine<MpC>, g: Vec<MpC> },
}

impl MpEvaluator {
    fn eval(&self, z: &MpC) -> MpC {
        match self {
            MpEvaluator::Monomial { coeffs } => {
                let mut acc = MpC::zero_prec(MP_QUADRATURE_BITS);
                for c in coeffs.iter().rev() {
                    acc = MpC::mul_ref(&acc, z) + c.clone();
                }
                acc
            }
            MpEvaluator::Faber { engine, g } => {
                let f = engine.values(z, g.len().saturating_sub(1));
                let mut acc = MpC::zero_prec(MP_QUADRATURE_BITS);
                for (gk, fk) in g.iter().zip(f.iter()) {
                    MpC::mul_add_assign(&mut acc, gk, fk);
                }
                acc
            }
        }
    }
}

fn mp_evaluator_for(combo: &Combination, d: &ConformalDomain) -> MpEvaluator {
    if let Some(g) = combo.faber_coords() {
        return MpEvaluator::Faber {
            engine: FaberEngine::new_mp(d, MP_QUADRATURE_BITS),
            g: g.iter()
                .map(|c| MpC::from_c64_prec(*c, MP_QUADRATURE_BITS))
                .collect(),
        };
    }
    let p = combo
        .monomial()
        .expect("combination carries a representation");
    let deg = p.degree().unwrap_or(0);
    MpEvaluator::Monomial {
        coeffs: (0..=deg)
            .map(|k| MpC::from_c64_prec(p.coeff(k), MP_QUADRATURE_BITS))
            .collect(),
    }
}

/// Cauchy quadrature on `|z − z₀| = dist/2` with `CAUCHY_POINTS` nodes:
/// `γ_k = (1/M) Σ_j f(z_j) ω_j^{−k}` recovers `c_k qᵏ` exactly for
/// polynomial input of degree < M, up to extended-precision round-off.
fn radius_from_circle(eval: &MpEvaluator, z0: Complex64, dist: f64, k_top: usize) -> RadiusEstimate {
    let bits = MP_QUADRATURE_BITS;
    let q = 0.5 * dist;
    let nodes = mp_roots_of_unity(CAUCHY_POINTS, bits);
    let z0m = MpC::from_c64_prec(z0, bits);
    let qm = mpf(q, bits);
    let mut acc: Vec<MpC> = (0..=k_top).map(|_| MpC::zero_prec(bits)).collect();
    let mut vmax = 0.0f64;
    for node in &nodes {
        let zj = z0m.clone() + node.scale(&qm);
        let v = eval.eval(&zj);
        vmax = vmax.max(v.abs_f64());
        let wbar = node.conj();
        let mut u = MpC::from_c64_prec(Complex64::new(1.0, 0.0), bits);
        for a in acc.iter_mut() {
            MpC::mul_add_assign(a, &v, &u);
            u = MpC::mul_ref(&u, &wbar);
        }
    }
    let inv_m = 1.0 / CAUCHY_POINTS as f64;
    let mut gammas = Vec::with_capacity(k_top + 1);
    let mut taylor_norms = Vec::with_capacity(k_top + 1);
    let mut q_pow = 1.0f64;
    for a in &acc {
        let gamma = a.abs_f64() * inv_m;
        gammas.push(gamma);
        taylor_norms.push(gamma / q_pow);
        q_pow *= q;
    }
    // |c_k|^{−1/k} = q·γ_k^{−1/k}; clamping γ_k keeps an all-but-silent
    // coefficient from reporting an infinite radius while still pushing the
    // estimate far out of band.
    let first = (3 * k_top) / 4 + 1;
    let floor = GAMMA_FLOOR * vmax + 1e-300;
    let cut = ENTIRE_GAMMA_CUT * vmax;
    let mut ests: Vec<f64> = Vec::with_capacity(k_top - first + 1);
    let mut quiet = 0usize;
    for k in first..=k_top {
        let gamma = gammas[k].max(floor);
        ests.push(q * gamma.powf(-1.0 / k as f64));
        if gammas[k] <= cut {
            quiet += 1;
        }
    }
    let no_singularity = 2 * quiet > ests.len();
    RadiusEstimate {
        center: z0,
        taylor_norms,
        radius_est: median(&mut ests),
        dist_to_l: dist,
        no_singularity,
    }
}

/// Rejection-samples `wanted` interior points with boundary distance in
/// `[0.1, 0.6]·inradius`, uniformly from the bounding box of `L`.
fn pick_centers(
    d: &ConformalDomain,
    wanted: usize,
    seed: u64,
) -> Result<Vec<Complex64>, BoundaryError> {
    let inr = d.inradius()?;
    let hull = d.boundary_polyline(1024);
    let re_lo = hull.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
    let re_hi = hull.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    let im_lo = hull.iter().map(|p| p.im).fold(f64::INFINITY, f64::min);
    let im_hi = hull.iter().map(|p| p.im).fold(f64::NEG_INFINITY, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |r: &mut ChaCha8Rng| (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut out = Vec::with_capacity(wanted);
    for _ in 0..10_000 * wanted.max(1) {
        if out.len() == wanted {
            break;
        }
        let x = re_lo + (re_hi - re_lo) * unit(&mut rng);
        let y = im_lo + (im_hi - im_lo) * unit(&mut rng);
        let z0 = Complex64::new(x, y);
        if !d.winding_contains(z0) {
            continue;
        }
        let dist0 = d.dist_to_boundary(z0)?;
        if dist0 < 0.1 * inr || dist0 > 0.6 * inr {
            continue;
        }
        out.push(z0);
    }
    if out.len() < wanted {
        return Err(BoundaryError::CentersExhausted {
            found: out.len(),
            wanted,
        });
    }
    Ok(out)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite radius estimates"));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn closed_length(pts: &[Complex64]) -> f64 {
    let mut total = 0.0;
    for (i, p) in pts.iter().enumerate() {
        total += (pts[(i + 1) % pts.len()] - p).norm();
    }
    total
}

fn dist_to_closed(z: Complex64, pts: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, p) in pts.iter().enumerate() {
        best = best.min(segment_dist(z, *p, pts[(i + 1) % pts.len()]));
    }
    best
}

fn segment_dist(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a).re * ab.re + (z - a).im * ab.im) / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::build_basis_stable;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn faber_tail_vanishes_on_the_disk() {
        let d = ConformalDomain::disk();
        for n in 1..=25 {
            let z = c(0.5, 0.1);
            let tail = faber_tail(&d, n, z).unwrap();
            assert!(
                tail.norm() <= 1e-12,
                "disk tail should vanish, |E_{n}| = {:e}",
                tail.norm()
            );
        }
    }

    #[test]
    fn faber_tail_matches_the_ellipse_identity() {
        // Ψ(w) = w + b/w gives F_n(Ψ(w)) = wⁿ + bⁿw^{−n}, so E_n = −bⁿw^{−n}.
        let d = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let b = 0.25f64;
        // On and inside the unit circle the comparison is clean; outside,
        // the n·|w|ⁿ conditioning of wⁿ against the re-inverted w limits a
        // float check to moderate n.
        for &(r, theta, n_hi) in &[(1.0, 0.3, 30), (0.9, 2.1, 30), (1.4, 5.0, 8)] {
            for n in 1..=n_hi {
                let w = Complex64::from_polar(r, theta);
                let z = d.psi_eval(w).unwrap();
                let tail = faber_tail(&d, n, z).unwrap();
                let exact = -b.powi(n as i32) * w.powi(-(n as i32));
                assert!(
                    (tail - exact).norm() < 1e-10,
                    "n={n} r={r}: tail {tail} vs exact {exact}"
                );
            }
        }
        // |E_4| on |w| = 1 is b⁴ = 0.00390625 exactly.
        let w = Complex64::from_polar(1.0, 0.3);
        let z = d.psi_eval(w).unwrap();
        let tail = faber_tail(&d, 4, z).unwrap();
        assert!((tail.norm() - 0.00390625).abs() < 1e-12);
    }

    #[test]
    fn faber_tail_decays_at_the_collar_rate() {
        // |E_n| = (b/|w|)ⁿ on the ellipse: the fitted slope of log|E_n| must
        // undercut log(r_inner + ε), the contour bound's decay rate.
        let d = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let w = Complex64::from_polar(0.9, 1.1);
        let z = d.psi_eval(w).unwrap();
        // Past n ≈ 24 the tail (≈ 0.278ⁿ) sinks under the round-off of the
        // wⁿ − F_n subtraction, so the fit stops there.
        let pts: Vec<(f64, f64)> = (10..=24)
            .map(|n| {
                let tail = faber_tail(&d, n, z).unwrap();
                (n as f64, tail.norm().ln())
            })
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let expected = (0.25f64 / 0.9).ln();
        assert!((slope - expected).abs() < 0.02, "slope {slope}");
        assert!(slope <= (d.r_inner() + 0.05).ln());
    }

    #[test]
    fn faber_tail_rejects_points_deep_inside() {
        let d = ConformalDomain::disk();
        let err = faber_tail(&d, 5, c(0.01, 0.0)).unwrap_err();
        assert!(matches!(err, BoundaryError::ContinuationTooDeep { .. }));

        let ell = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let z = ell.psi_eval(c(0.52, 0.0)).unwrap();
        let err = faber_tail(&ell, 5, z).unwrap_err();
        assert!(matches!(err, BoundaryError::ContinuationTooDeep { .. }));
    }

    #[test]
    fn carleman_split_is_exact_on_the_disk_and_additive() {
        // Disk Bergman polynomials are exactly √((n+1)/π)·zⁿ, so e_n ≡ 0 and
        // the remainder partial sums stay at round-off.
        let d = ConformalDomain::disk();
        let table = build_basis_stable(&d, BasisFamily::Bergman, 60, 1024).unwrap();
        let draw = sample(Distribution::ComplexGaussian, 60, 3).unwrap();
        let z = c(0.3, 0.2);
        let split = carleman_split(&table, &draw, z, 60).unwrap();
        assert!(
            split.remainder.norm() <= 1e-9 * (1.0 + split.main.norm()),
            "disk remainder {:e}",
            split.remainder.norm()
        );

        // main + remainder telescopes back to the straight partial sum.
        let combo = table.combine(&draw.values).unwrap();
        let whole = combo.eval(z);
        let glued = split.main + split.remainder;
        assert!(
            (whole - glued).norm() <= 1e-10 * (1.0 + whole.norm()),
            "decomposition identity broke: {whole} vs {glued}"
        );
    }

    #[test]
    fn carleman_remainder_terms_die_off_near_the_ellipse_boundary() {
        let d = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let table = build_basis_stable(&d, BasisFamily::Bergman, 200, 1024).unwrap();
        let draw = sample(Distribution::ComplexGaussian, 200, 5).unwrap();
        let z = d.psi_eval(Complex64::from_polar(0.9, 0.7)).unwrap();
        let split = carleman_split(&table, &draw, z, 200).unwrap();
        assert!(
            split.tail_gap < 1e-6,
            "late remainder terms not Cauchy: {:e}",
            split.tail_gap
        );

        let combo = table.combine(&draw.values).unwrap();
        let whole = combo.eval(z);
        let glued = split.main + split.remainder;
        assert!((whole - glued).norm() <= 1e-10 * (1.0 + whole.norm()));
    }

    #[test]
    fn carleman_split_rejects_other_families() {
        let d = ConformalDomain::disk();
        let table = build_basis_stable(&d, BasisFamily::Szego, 20, 1024).unwrap();
        let draw = sample(Distribution::ComplexGaussian, 20, 3).unwrap();
        let err = carleman_split(&table, &draw, c(0.3, 0.0), 20).unwrap_err();
        assert!(matches!(err, BoundaryError::NotBergman { .. }));
    }

    #[test]
    fn taylor_radius_recovers_geometric_singularities() {
        // Truncated 1/(s−z) = Σ z^k/s^{k+1} has its lone singularity at s;
        // the root test must recover |z₀ − s| within 10%.
        let d = ConformalDomain::disk();
        for &(s_re, s_im, z0) in &[
            (1.0, 0.0, c(0.0, 0.0)),
            (1.05, 0.0, c(0.0, 0.0)),
            (0.7, 0.4, c(0.1, 0.0)),
        ] {
            let s = c(s_re, s_im);
            let coeffs: Vec<Complex64> = (0..=300)
                .scan(1.0 / s, |state, _| {
                    let out = *state;
                    *state /= s;
                    Some(out)
                })
                .collect();
            let p = Poly::new(coeffs);
            let est = taylor_radius(&p, z0, 60, &d).unwrap();
            let truth = (s - z0).norm();
            assert!(
                (est.radius_est - truth).abs() <= 0.1 * truth,
                "s={s}: est {} vs |z0−s| {truth}",
                est.radius_est
            );
            assert!(!est.no_singularity);
        }
    }

    #[test]
    fn taylor_radius_tracks_the_disk_for_random_taylor_series() {
        // An i.i.d. Gaussian power series has |z| = 1 as natural boundary;
        // at z₀ = 0.4 the local radius is the boundary distance 0.6.
        let d = ConformalDomain::disk();
        let draw = sample(Distribution::ComplexGaussian, 300, 11).unwrap();
        let p = Poly::new(draw.values.clone());
        let est = taylor_radius(&p, c(0.4, 0.0), 60, &d).unwrap();
        let ratio = est.radius_est / est.dist_to_l;
        assert!(
            (0.85..=1.15).contains(&ratio),
            "radius/dist ratio {ratio} for a radius-one series"
        );
    }

    #[test]
    fn taylor_radius_flags_entire_inputs() {
        // z² carries no singularity: the estimate must blow past the
        // boundary distance and raise the flag, while the k = 2 coefficient
        // itself comes back exactly.
        let d = ConformalDomain::disk();
        let p = Poly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let est = taylor_radius(&p, c(0.0, 0.0), 60, &d).unwrap();
        assert!(est.no_singularity);
        assert!(est.radius_est > 1.5, "ceiling estimate {}", est.radius_est);
        assert!((est.taylor_norms[2] - 1.0).abs() < 1e-10);
        assert!(est.taylor_norms.iter().all(|t| t.is_finite()));
        assert!(est.radius_est > 0.0);
    }

    #[test]
    fn taylor_radius_rejects_exterior_centers() {
        let d = ConformalDomain::disk();
        let p = Poly::new(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let err = taylor_radius(&p, c(1.5, 0.0), 60, &d).unwrap_err();
        assert!(matches!(err, BoundaryError::CircleExitsDomain { .. }));
        let err = taylor_radius(&p, c(0.2, 0.0), 3, &d).unwrap_err();
        assert!(matches!(err, BoundaryError::TaylorOrderTooSmall { .. }));
    }

    #[test]
    fn boundary_evidence_smoke_run_is_deterministic() {
        let d = ConformalDomain::disk();
        let table = build_basis_stable(&d, BasisFamily::Bergman, 180, 1024).unwrap();
        let a = boundary_evidence(&table, Distribution::ComplexGaussian, 180, 3, 7).unwrap();
        let b = boundary_evidence(&table, Distribution::ComplexGaussian, 180, 3, 7).unwrap();
        assert_eq!(a.ratios, b.ratios);
        assert_eq!(a.estimates.len(), 3);
        assert!(a
            .estimates
            .iter()
            .all(|e| e.dist_to_l >= 0.1 * 0.999 && e.dist_to_l <= 0.6 * 1.001));
        let err = boundary_evidence(&table, Distribution::ComplexGaussian, 100, 3, 7).unwrap_err();
        assert!(matches!(
            err,
            BoundaryError::EvidenceDegreeTooSmall { .. }
        ));
    }
}
