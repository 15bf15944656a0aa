//! Simultaneous polynomial root finding (Aberth–Ehrlich) with certified
//! residuals, and zero-counting measures.
//!
//! The finder accepts either a monomial-coefficient [`Poly`] or any
//! [`RootTarget`] — an object that can evaluate the polynomial and its
//! derivative at a point and report its degree, leading coefficient, and the
//! Vieta reference data. The target indirection matters because high-degree
//! polynomials assembled in non-monomial bases are well-conditioned to
//! *evaluate* through their basis recurrences while their monomial coefficient
//! form is catastrophically cancellation-prone near the boundary where the
//! zeros live; the iteration itself only ever needs values.
//!
//! Convergence is never assumed: each [`ZeroSet`] carries per-root residuals
//! (Newton-step lengths `|p|/|p′|`) and two Vieta identities — the root sum
//! against `−c_{n−1}/c_n` and the log-product against `log|c_0/c_n|` — and is
//! flagged unconverged when any gate fails.

use crate::domain::{polygon_winding, ConformalDomain, DomainError};
use crate::series::Poly;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

/// Hard cap for double-precision root finding.
pub const DEGREE_CAP: usize = 500;

/// Constant coefficients at or below this fraction of the largest
/// coefficient are treated as rounding dust by the Vieta product gate: the
/// reference `log|c_0/c_n|` then has no significant digits (pure monomials
/// assembled through quadrature land here), so the gate is not applicable.
pub const VIETA_PROD_FLOOR: f64 = 1e-13;

/// Mantissa renormalization for [`ScaledEval`]: pull values down by 2^600
/// whenever a component passes 2^600 (headroom on both sides of the f64
/// exponent range).
pub(crate) const RESCALE_SHIFT: i64 = 600;
pub(crate) const RESCALE_LIMIT: f64 = 4.149515568880993e180; // 2^600
pub(crate) const RESCALE_FACTOR: f64 = 2.409919865102884e-181; // 2^-600

/// Errors from root finding and measure construction.
#[derive(Debug, Error)]
pub enum RootsError {
    #[error("degree {degree} exceeds the double-precision cap {cap}")]
    DegreeTooLarge { degree: usize, cap: usize },
    #[error("root finding requires degree >= 1")]
    DegreeZero,
    #[error(
        "root iteration failed its gates after {sweeps} sweeps \
         (worst residual {worst_residual:.3e}, vieta gaps {sum_gap:.3e}/{prod_gap:.3e})"
    )]
    Unconverged {
        sweeps: usize,
        worst_residual: f64,
        sum_gap: f64,
        prod_gap: f64,
        partial: Box<ZeroSet>,
    },
    #[error("counting measure requires a converged zero set")]
    NotConverged,
    #[error("rho_K must lie in (r_inner, 1) = ({lo}, {hi}), got {rho}")]
    RhoOutOfRange { rho: f64, lo: f64, hi: f64 },
    #[error("domain: {0}")]
    Domain(#[from] DomainError),
}

/// Value/derivative pair carried as mantissas with a shared power-of-two
/// exponent: `P(z) = p·2^exp2`, `P′(z) = dp·2^exp2`. Newton data (`p/dp`
/// ratios, residuals) is scale-free, so a target can report points where the
/// raw values overflow `f64` — a degree-400 polynomial is routinely infinite
/// in plain arithmetic at a modest outlier root.
#[derive(Debug, Clone, Copy)]
pub struct ScaledEval {
    pub p: Complex64,
    pub dp: Complex64,
    pub exp2: i64,
}

/// Anything the Aberth iteration can find the roots of.
pub trait RootTarget {
    fn degree(&self) -> usize;
    /// `(p(z), p′(z))`.
    fn eval_with_deriv(&self, z: Complex64) -> (Complex64, Complex64);
    /// Scale-tracked `(p, p′)`; the default wraps [`Self::eval_with_deriv`]
    /// and is fine whenever raw values cannot overflow.
    fn eval_scaled(&self, z: Complex64) -> ScaledEval {
        let (p, dp) = self.eval_with_deriv(z);
        ScaledEval { p, dp, exp2: 0 }
    }
    fn leading(&self) -> Complex64;
    /// Expected root sum `−c_{n−1}/c_n`.
    fn vieta_sum(&self) -> Complex64;
    /// Expected `Σ log|root| = log|c_0/c_n|`; `None` when `c_0` carries no
    /// significant digits (zero, or at the rounding floor of the coefficient
    /// vector) — such a reference is noise, and roots next to the origin
    /// have unbounded log error, so the product gate stands down and the
    /// residual and root-sum gates carry the convergence decision alone.
    fn vieta_log_prod(&self) -> Option<f64>;
    /// Radius of the circle of initial guesses (must enclose all roots
    /// loosely; overshooting is harmless).
    fn initial_radius(&self) -> f64;
}

impl RootTarget for Poly<Complex64> {
    fn degree(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    fn eval_with_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        self.eval_with_derivative(&z)
    }

    fn eval_scaled(&self, z: Complex64) -> ScaledEval {
        let n = match self.degree() {
            Some(n) => n,
            None => {
                return ScaledEval {
                    p: Complex64::new(0.0, 0.0),
                    dp: Complex64::new(0.0, 0.0),
                    exp2: 0,
                }
            }
        };
        // Horner with renormalization: whenever a mantissa outgrows 2^600 it
        // is pulled down and the shared exponent absorbs the factor. Later
        // coefficients enter at the current scale (`down` underflows to zero
        // once they are provably negligible against |z|^k terms).
        let mut exp2: i64 = 0;
        let mut down = 1.0f64;
        let mut p = self.coeff(n);
        let mut dp = Complex64::new(0.0, 0.0);
        for k in (0..n).rev() {
            dp = dp * z + p;
            p = p * z + self.coeff(k) * down;
            let top = p.re.abs().max(p.im.abs()).max(dp.re.abs()).max(dp.im.abs());
            if top > RESCALE_LIMIT {
                p *= RESCALE_FACTOR;
                dp *= RESCALE_FACTOR;
                exp2 += RESCALE_SHIFT;
                down = (-(exp2 as f64)).exp2();
            }
        }
        ScaledEval { p, dp, exp2 }
    }

    fn leading(&self) -> Complex64 {
        *self.leading().expect("nonzero polynomial")
    }

    fn vieta_sum(&self) -> Complex64 {
        let n = self.degree().expect("nonzero polynomial");
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        -self.coeff(n - 1) / self.coeff(n)
    }

    fn vieta_log_prod(&self) -> Option<f64> {
        let n = self.degree().expect("nonzero polynomial");
        let c0 = self.coeff(0);
        let scale = self.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if c0.norm() <= VIETA_PROD_FLOOR * scale {
            None
        } else {
            Some((c0.norm() / self.coeff(n).norm()).ln())
        }
    }

    fn initial_radius(&self) -> f64 {
        // Fujiwara bound: all roots lie within 2·max_k |c_{n−k}/c_n|^{1/k}.
        let n = self.degree().unwrap_or(0);
        let cn = self.coeff(n).norm();
        let mut r: f64 = 0.0;
        for k in 1..=n {
            let ck = self.coeff(n - k).norm();
            if ck > 0.0 {
                r = r.max((ck / cn).powf(1.0 / k as f64));
            }
        }
        (2.0 * r).max(1e-3)
    }
}

/// Roots of one polynomial with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct ZeroSet {
    pub roots: Vec<Complex64>,
    /// Newton-step length `|p(r)|/|p′(r)|` at each root — a local error scale.
    pub residuals: Vec<f64>,
    /// Relative gap in the Vieta sum identity.
    pub vieta_sum_gap: f64,
    /// Relative gap in the log-product identity (0 when not applicable).
    pub vieta_prod_gap: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Leading coefficient of the polynomial (product-form evaluation needs it).
    pub leading: Complex64,
}

impl ZeroSet {
    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn worst_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// `log|P(z)|` from the product form `log|lead| + Σ log|z − r_i|` —
    /// overflow-free at any degree.
    pub fn log_abs_at(&self, z: Complex64) -> f64 {
        let mut s = self.leading.norm().ln();
        for r in &self.roots {
            s += (z - r).norm().ln();
        }
        s
    }
}

/// Normalized zero counting measure: unit mass split evenly over the atoms,
/// with the weight kept as the exact rational `1/den`.
#[derive(Debug, Clone)]
pub struct CountingMeasure {
    pub atoms: Vec<Complex64>,
    pub weight_num: u64,
    pub weight_den: u64,
}

impl CountingMeasure {
    /// Total mass as an exact rational statement: `atoms·(1/den) = 1`.
    pub fn mass_is_one(&self) -> bool {
        self.weight_num == 1 && self.atoms.len() as u64 == self.weight_den
    }
}

/// Aberth–Ehrlich on a monomial polynomial (see [`find_roots_target`]).
pub fn find_roots(p: &Poly<Complex64>) -> Result<ZeroSet, RootsError> {
    find_roots_seeded(p, 0x0a0b_e27f)
}

/// Monomial root finding with a chosen jitter seed.
pub fn find_roots_seeded(p: &Poly<Complex64>, seed: u64) -> Result<ZeroSet, RootsError> {
    find_roots_target(p, seed)
}

/// Aberth–Ehrlich simultaneous iteration over any [`RootTarget`].
///
/// Initial guesses sit on the target's enclosing circle with seeded jitter
/// (symmetric polynomials stall from perfectly symmetric starts); roots are
/// Newton-polished; residual and Vieta gates decide convergence. Failure
/// returns the partial result inside the error.
pub fn find_roots_target<T: RootTarget + ?Sized>(
    target: &T,
    seed: u64,
) -> Result<ZeroSet, RootsError> {
    let n = target.degree();
    if n == 0 {
        return Err(RootsError::DegreeZero);
    }
    if n > DEGREE_CAP {
        return Err(RootsError::DegreeTooLarge { degree: n, cap: DEGREE_CAP });
    }
    let tau = 2.0 * std::f64::consts::PI;
    // Cap the starting circle: a coefficient draw with an extreme
    // trailing/leading ratio can push the
    // root bound far beyond the shell where the zeros concentrate, and the
    // ring-contraction phase of the iteration costs one sweep per factor
    // (1 - 1/n) of radius. Outlier roots beyond the capped circle are still
    // reached: once its neighbors settle, an iterate's Aberth correction
    // implicitly deflates them and jumps toward the stragglers.
    let radius = target.initial_radius().min((650.0 / n as f64).exp());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut zs: Vec<Complex64> = (0..n)
        .map(|i| {
            let theta = tau * (i as f64 + 0.5 * uniform()) / n as f64 + 0.26;
            Complex64::from_polar(radius * (1.0 + 0.05 * (uniform() - 0.5)), theta)
        })
        .collect();

    const MAX_SWEEPS: usize = 1200;
    let mut sweeps = 0;
    // Overflow-safe complex division: the naive quotient squares |b| and
    // overflows once |b| exceeds ~1e154, which degree-hundreds evaluations
    // reach routinely on the starting circle. |b| itself (hypot) does not
    // overflow, so rescaling both operands by it keeps every intermediate
    // on scale.
    let div_robust = |a: Complex64, b: Complex64| -> Complex64 {
        let s = b.norm();
        if !s.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        if s == 0.0 {
            return a / b;
        }
        a.unscale(s) / b.unscale(s)
    };
    let mut frozen = vec![false; n];
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_step = 0.0f64;
        for i in 0..n {
            if frozen[i] {
                continue;
            }
            let ScaledEval { p, dp, .. } = target.eval_scaled(zs[i]);
            if !p.is_finite() || !dp.is_finite() {
                // kick wayward iterates back toward the circle
                zs[i] = Complex64::from_polar(radius, tau * uniform());
                max_step = f64::INFINITY;
                continue;
            }
            let w = if dp.norm() > 1e-290 {
                div_robust(p, dp)
            } else {
                Complex64::from_polar(1e-3 * radius, tau * uniform())
            };
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = zs[i] - zs[j];
                    if d.norm() > 1e-290 {
                        s += div_robust(Complex64::new(1.0, 0.0), d);
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * s;
            // A vanishing denominator is not a failure: it signals that the
            // other iterates already explain the local Newton slope, and the
            // exact correction points at a root none of them claims (implicit
            // deflation). Keep its direction and trust-region its length.
            let raw = div_robust(w, denom);
            let mut corr = if raw.is_finite() { raw } else { w };
            if !corr.is_finite() {
                zs[i] = Complex64::from_polar(radius, tau * uniform());
                max_step = f64::INFINITY;
                continue;
            }
            let longest = 0.75 * (1.0 + zs[i].norm());
            if corr.norm() > longest {
                corr *= longest / corr.norm();
            }
            zs[i] -= corr;
            let rel = corr.norm() / (1.0 + zs[i].norm());
            if rel < 1e-15 {
                frozen[i] = true;
            }
            max_step = max_step.max(rel);
        }
        if max_step < 1e-14 {
            break;
        }
    }

    // Newton polish and residuals.
    let mut residuals = Vec::with_capacity(n);
    for z in zs.iter_mut() {
        for _ in 0..3 {
            let ScaledEval { p, dp, .. } = target.eval_scaled(*z);
            if dp.norm() > 1e-290 && p.is_finite() && dp.is_finite() {
                let step = div_robust(p, dp);
                if step.norm() < 0.25 * (1.0 + z.norm()) {
                    *z -= step;
                }
            }
        }
        let ScaledEval { p, dp, .. } = target.eval_scaled(*z);
        residuals.push(if dp.norm() > 1e-290 && p.is_finite() && dp.is_finite() {
            p.norm() / dp.norm()
        } else {
            f64::INFINITY
        });
    }

    // Vieta gates.
    let sum: Complex64 = zs.iter().sum();
    let want_sum = target.vieta_sum();
    let sum_gap = (sum - want_sum).norm() / (1.0 + want_sum.norm());
    let prod_gap = match target.vieta_log_prod() {
        Some(want_log) => {
            let got: f64 = zs.iter().map(|z| z.norm().ln()).sum();
            (got - want_log).abs() / (1.0 + want_log.abs())
        }
        None => 0.0,
    };
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    let converged = sum_gap <= 1e-6 && prod_gap <= 1e-6 && worst.is_finite() && worst <= 1e-6;
    let set = ZeroSet {
        roots: zs,
        residuals,
        vieta_sum_gap: sum_gap,
        vieta_prod_gap: prod_gap,
        sweeps,
        converged,
        leading: target.leading(),
    };
    if converged {
        Ok(set)
    } else {
        Err(RootsError::Unconverged {
            sweeps,
            worst_residual: worst,
            sum_gap,
            prod_gap,
            partial: Box::new(set),
        })
    }
}

/// [`find_roots_target`] under a deterministic multistart schedule: Aberth
/// convergence is start-dependent, so a stalled sweep is retried with the
/// consecutive jitter seeds `seed, seed+1, …` (a fresh start pattern is the
/// standard remedy). Returns the last failure when every attempt stalls.
pub fn find_roots_target_retry<T: RootTarget + ?Sized>(
    target: &T,
    seed: u64,
    attempts: usize,
) -> Result<ZeroSet, RootsError> {
    let mut last = None;
    for k in 0..attempts.max(1) as u64 {
        match find_roots_target(target, seed.wrapping_add(k)) {
            Ok(zs) => return Ok(zs),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt runs"))
}

/// Uniform unit-mass measure on a converged zero set.
pub fn counting_measure(zs: &ZeroSet) -> Result<CountingMeasure, RootsError> {
    if !zs.converged {
        return Err(RootsError::NotConverged);
    }
    Ok(CountingMeasure {
        atoms: zs.roots.clone(),
        weight_num: 1,
        weight_den: zs.roots.len() as u64,
    })
}

/// Fraction of atoms inside the closed level curve `Ψ(ρ_K e^{iθ})`
/// (winding-number test against a 4096-gon), for `ρ_K` strictly between the
/// inner radius and 1 — realizing "a closed set K in the interior".
pub fn interior_mass(
    cm: &CountingMeasure,
    d: &ConformalDomain,
    rho_k: f64,
) -> Result<f64, RootsError> {
    if !(rho_k > d.r_inner() && rho_k < 1.0) {
        return Err(RootsError::RhoOutOfRange { rho: rho_k, lo: d.r_inner(), hi: 1.0 });
    }
    let polygon: Vec<Complex64> =
        d.level_curve(rho_k, 4096)?.into_iter().map(|p| p.z).collect();
    let inside = cm
        .atoms
        .iter()
        .filter(|&&z| polygon_winding(&polygon, z) != 0)
        .count();
    Ok(inside as f64 * cm.weight_num as f64 / cm.weight_den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sort_roots(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .expect("finite roots")
        });
        v
    }

    #[test]
    fn simple_examples() {
        // z² + 1 → ±i
        let p = Poly::from_real(&[1.0, 0.0, 1.0]);
        let zs = find_roots(&p).unwrap();
        let got = sort_roots(zs.roots.clone());
        assert!((got[0] - c(0.0, -1.0)).norm() < 1e-10);
        assert!((got[1] - c(0.0, 1.0)).norm() < 1e-10);
        assert!(zs.worst_residual() < 1e-12);

        // z³ − 1 → cube roots of unity
        let q = Poly::from_real(&[-1.0, 0.0, 0.0, 1.0]);
        let zs = find_roots(&q).unwrap();
        for r in &zs.roots {
            assert!((r.powi(3) - c(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn constructed_roots_recovered() {
        // Π_{k=1..12} (z − k/13), expanded
        let mut p = Poly::from_real(&[1.0]);
        for k in 1..=12 {
            p = p.mul(&Poly::from_real(&[-(k as f64) / 13.0, 1.0]));
        }
        let zs = find_roots(&p).unwrap();
        let got = sort_roots(zs.roots.clone());
        for (k, r) in got.iter().enumerate() {
            let want = (k as f64 + 1.0) / 13.0;
            assert!((r - c(want, 0.0)).norm() < 1e-8, "root {k}: {r} vs {want}");
        }
    }

    #[test]
    fn oracle_multiset_recovery_separated_roots() {
        use rand_chacha::ChaCha8Rng;
        use rand_core::{RngCore, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut uniform = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        for trial in 0..12 {
            // rejection-sample ≤ 15 roots separated by ≥ 0.05
            let want_deg = 5 + (trial % 11);
            let mut roots: Vec<Complex64> = Vec::new();
            while roots.len() < want_deg {
                let cand = c(2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0);
                if roots.iter().all(|r| (r - cand).norm() >= 0.05) {
                    roots.push(cand);
                }
            }
            let mut p = Poly::from_real(&[1.0]);
            for r in &roots {
                p = p.mul(&Poly::new(vec![-r, c(1.0, 0.0)]));
            }
            let zs = find_roots(&p).unwrap();
            // Hausdorff distance of the multisets
            let mut worst = 0.0f64;
            for r in &roots {
                let d = zs.roots.iter().map(|g| (g - r).norm()).fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
            }
            for g in &zs.roots {
                let d = roots.iter().map(|r| (g - r).norm()).fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
            }
            assert!(worst <= 1e-7, "trial {trial}: Hausdorff {worst:.2e}");
        }
    }

    #[test]
    fn degree_gates() {
        let zero_deg = Poly::from_real(&[3.0]);
        assert!(matches!(find_roots(&zero_deg), Err(RootsError::DegreeZero)));
        let big = Poly::new(
            (0..=501)
                .map(|k| if k == 501 || k == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) })
                .collect(),
        );
        assert!(matches!(
            find_roots(&big),
            Err(RootsError::DegreeTooLarge { degree: 501, .. })
        ));
    }

    #[test]
    fn monomial_with_rounding_dust_converges() {
        // A quadrature-assembled pure monomial carries low-order rounding
        // dust; its zeros cluster at the origin and the product gate must
        // recognize its reference as noise and stand down.
        let mut coeffs = vec![c(0.0, 0.0); 7];
        coeffs[6] = c(0.977, 0.0);
        coeffs[0] = c(1.3e-17, -4.2e-18);
        coeffs[1] = c(-2.6e-17, 8.1e-18);
        let p = Poly::new(coeffs);
        assert_eq!(p.vieta_log_prod(), None);
        let zs = find_roots(&p).unwrap();
        assert_eq!(zs.roots.len(), 6);
        for z in &zs.roots {
            assert!(z.norm() < 1e-2, "root {z} should hug the origin");
        }
        // A constant term with real digits keeps the gate armed.
        let q = Poly::from_real(&[0.25, 0.0, 1.0]);
        assert!(q.vieta_log_prod().is_some());
    }

    #[test]
    fn counting_measure_examples() {
        let p = Poly::from_real(&[1.0, 0.0, 1.0]);
        let zs = find_roots(&p).unwrap();
        let cm = counting_measure(&zs).unwrap();
        assert_eq!(cm.atoms.len(), 2);
        assert!(cm.mass_is_one());
        assert_eq!(cm.weight_den, 2);

        // 200 constructed roots on a circle: mass still exactly one
        let atoms: Vec<Complex64> = (0..200)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 200.0))
            .collect();
        let cm = CountingMeasure { atoms, weight_num: 1, weight_den: 200 };
        assert!(cm.mass_is_one());
    }

    #[test]
    fn interior_mass_examples() {
        let d = ConformalDomain::disk();
        // all atoms on the level curve |Φ| = 1.2 → none inside ρ_K = 0.8
        let outer: Vec<Complex64> = (0..64)
            .map(|k| Complex64::from_polar(1.2, 2.0 * std::f64::consts::PI * k as f64 / 64.0))
            .collect();
        let cm = CountingMeasure { atoms: outer, weight_num: 1, weight_den: 64 };
        assert_eq!(interior_mass(&cm, &d, 0.8).unwrap(), 0.0);

        // a single atom at 0 → mass 1 inside ρ_K = 0.5
        let cm = CountingMeasure { atoms: vec![c(0.0, 0.0)], weight_num: 1, weight_den: 1 };
        assert_eq!(interior_mass(&cm, &d, 0.5).unwrap(), 1.0);

        // ρ_K out of range rejected
        assert!(matches!(
            interior_mass(&cm, &d, 1.2),
            Err(RootsError::RhoOutOfRange { .. })
        ));
    }

    #[test]
    fn statistics_invariant_under_permutation() {
        let d = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let atoms: Vec<Complex64> = (0..50)
            .map(|k| Complex64::from_polar(0.3 + 0.01 * k as f64, 0.7 * k as f64))
            .collect();
        let mut shuffled = atoms.clone();
        shuffled.reverse();
        shuffled.swap(3, 27);
        let cm1 = CountingMeasure { atoms, weight_num: 1, weight_den: 50 };
        let cm2 = CountingMeasure { atoms: shuffled, weight_num: 1, weight_den: 50 };
        assert_eq!(
            interior_mass(&cm1, &d, 0.9).unwrap(),
            interior_mass(&cm2, &d, 0.9).unwrap()
        );
    }

    #[test]
    fn derivative_roots_interlace_for_real_rooted() {
        // p = (z−1)(z−2)(z−3)(z−4)
        let mut p = Poly::from_real(&[1.0]);
        for k in 1..=4 {
            p = p.mul(&Poly::from_real(&[-(k as f64), 1.0]));
        }
        let dp = p.derivative();
        let zs = find_roots(&dp).unwrap();
        let mut got: Vec<f64> = zs.roots.iter().map(|r| r.re).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, r) in got.iter().enumerate() {
            assert!(zs.roots[i].im.abs() < 1e-8);
            let (lo, hi) = (i as f64 + 1.0, i as f64 + 2.0);
            assert!(*r > lo && *r < hi, "critical point {r} outside ({lo},{hi})");
        }
    }

    #[test]
    fn retry_schedule_is_deterministic() {
        let p = Poly::from_real(&[-1.0, 0.0, 0.0, 1.0]);
        let a = find_roots_target_retry(&p, 17, 3).unwrap();
        let b = find_roots_target_retry(&p, 17, 3).unwrap();
        assert_eq!(a.sweeps, b.sweeps);
        for (x, y) in a.roots.iter().zip(&b.roots) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        // attempts = 0 is treated as a single attempt, not a vacuous loop
        assert!(find_roots_target_retry(&p, 17, 0).is_ok());
    }
}
