//! Catalog of Jordan domains with explicitly known exterior conformal maps.
//!
//! Each domain `G` (boundary `L`, exterior `Ω`) is described by the inverse
//! exterior map `Ψ(w) = b₁w + b₀ + Σ_{k≥1} b_k w^{−k}`, a *finite* Laurent
//! polynomial mapping `{|w| > r_inner}` conformally onto the exterior of a
//! curve inside `G`, with `Ψ({|w| = 1}) = L`. The direct map `Φ = Ψ^{−1}`
//! (normalized by `Φ(∞) = ∞`, `Φ′(∞) = 1/b₁ > 0`) is recovered numerically by
//! Newton inversion, and as a Laurent series at infinity by reversion. The
//! region `r_inner < |w| < 1` realizes the analytic continuation of `Φ`
//! through `L` into `G` that analytic boundaries admit; level curves
//! `L_ρ = Ψ({|w| = ρ})` foliate both sides of `L`.
//!
//! Catalog:
//! - `disk`: `Ψ(w) = w`, capacity 1, `r_inner = 0`;
//! - `ellipse(a, b)`: `Ψ(w) = aw + b/w` (Joukowski), semi-axes `a ± b`,
//!   capacity `a`, `Ψ′` vanishes on `|w| = √(|b|/a) = r_inner`;
//! - `perturbed_circle(c, m)`: `Ψ(w) = w + c·w^{−m}`, univalent outside
//!   `(m|c|)^{1/(m+1)}`, stored `r_inner` padded by +0.05.

use crate::scalar::CScalar;
use crate::series::{laurent_multiply_max, laurent_recip, LaurentSlice, SeriesError};
use num_complex::Complex64;
use thiserror::Error;

/// Errors from domain construction and conformal-map evaluation.
#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid domain parameters: {0}")]
    InvalidParameter(String),
    #[error("Ψ′ vanishes near |w| = {rho} (min |Ψ′| = {min_abs:.3e} on the check grid)")]
    PsiPrimeVanishes { rho: f64, min_abs: f64 },
    #[error("|w| = {modulus} is not exterior to the inner radius {r_inner}")]
    InsideInnerRadius { modulus: f64, r_inner: f64 },
    #[error(
        "inversion found no preimage with |w| > {r_inner} + 1e-6 for z = {z} \
         (point lies inside the inner annulus)"
    )]
    InversionFailed { z: Complex64, r_inner: f64 },
    #[error("z = {z} is not strictly inside the domain")]
    NotInterior { z: Complex64 },
    #[error("level curves require rho > r_inner = {r_inner}, got {rho}")]
    LevelOutOfRange { rho: f64, r_inner: f64 },
    #[error("series reversion stalled at window bottom {reached} (target {target})")]
    ReversionStalled { reached: i64, target: i64 },
    #[error("series arithmetic: {0}")]
    Series(#[from] SeriesError),
}

/// Domain families available in the catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    Disk,
    Ellipse { a: f64, b: f64 },
    PerturbedCircle { c: f64, m: u32 },
}

/// A Jordan domain with exterior map data; immutable after construction.
#[derive(Debug, Clone)]
pub struct ConformalDomain {
    kind: DomainKind,
    psi: LaurentSlice<Complex64>,
    psi_deriv: LaurentSlice<Complex64>,
    r_inner: f64,
    capacity: f64,
}

/// A point on the level curve `L_ρ`, carrying its circle coordinates.
#[derive(Debug, Clone, Copy)]
pub struct LevelPoint {
    pub theta: f64,
    pub rho: f64,
    pub z: Complex64,
}

/// Winding number of a closed polygon (given by its vertices, in order)
/// around `z0`: the net number of counterclockwise turns of `p − z0`.
pub fn polygon_winding(polygon: &[Complex64], z0: Complex64) -> i64 {
    if polygon.is_empty() {
        return 0;
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut total = 0.0;
    let mut prev = (polygon[0] - z0).arg();
    for j in 1..=polygon.len() {
        let a = (polygon[j % polygon.len()] - z0).arg();
        let mut d = a - prev;
        if d > std::f64::consts::PI {
            d -= tau;
        } else if d < -std::f64::consts::PI {
            d += tau;
        }
        total += d;
        prev = a;
    }
    (total / tau).round() as i64
}

/// Validated constructor for any catalog domain.
pub fn make_domain(kind: DomainKind) -> Result<ConformalDomain, DomainError> {
    let (psi, r_inner, capacity) = match kind {
        DomainKind::Disk => (LaurentSlice::finite(1, vec![Complex64::new(1.0, 0.0)]), 0.0, 1.0),
        DomainKind::Ellipse { a, b } => {
            if !(a > b.abs() && b.abs() > 0.0) {
                return Err(DomainError::InvalidParameter(format!(
                    "ellipse requires a > |b| > 0, got a = {a}, b = {b}"
                )));
            }
            let psi = LaurentSlice::finite(
                -1,
                vec![Complex64::new(b, 0.0), Complex64::new(0.0, 0.0), Complex64::new(a, 0.0)],
            );
            (psi, (b.abs() / a).sqrt(), a)
        }
        DomainKind::PerturbedCircle { c, m } => {
            if m < 1 {
                return Err(DomainError::InvalidParameter(format!(
                    "perturbed_circle requires m >= 1, got m = {m}"
                )));
            }
            let mc = m as f64 * c.abs();
            if !(mc < 1.0) {
                return Err(DomainError::InvalidParameter(format!(
                    "perturbed_circle requires m·|c| < 1, got m·|c| = {mc}"
                )));
            }
            let r_univ = mc.powf(1.0 / (m as f64 + 1.0));
            let r_inner = r_univ + 0.05;
            if r_inner >= 1.0 {
                return Err(DomainError::InvalidParameter(format!(
                    "perturbed_circle requires (m·|c|)^(1/(m+1)) + 0.05 < 1, got {r_inner}"
                )));
            }
            let mut coeffs = vec![Complex64::new(0.0, 0.0); m as usize + 2];
            coeffs[0] = Complex64::new(c, 0.0);
            *coeffs.last_mut().unwrap() = Complex64::new(1.0, 0.0);
            (LaurentSlice::finite(-(m as i64), coeffs), r_inner, 1.0)
        }
    };
    let psi_deriv = psi.derivative();
    let d = ConformalDomain { kind, psi, psi_deriv, r_inner, capacity };
    // Conformality spot check: Ψ′ must not vanish on the working annulus.
    for rho in [d.r_inner + 0.05, 1.0, 2.0] {
        let mut min_abs = f64::INFINITY;
        for j in 0..256 {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / 256.0;
            let w = Complex64::from_polar(rho, theta);
            min_abs = min_abs.min(d.psi_deriv.eval(&w).norm());
        }
        if min_abs <= 1e-12 {
            return Err(DomainError::PsiPrimeVanishes { rho, min_abs });
        }
    }
    Ok(d)
}

impl ConformalDomain {
    pub fn disk() -> ConformalDomain {
        make_domain(DomainKind::Disk).expect("disk catalog entry is always valid")
    }

    pub fn ellipse(a: f64, b: f64) -> Result<ConformalDomain, DomainError> {
        make_domain(DomainKind::Ellipse { a, b })
    }

    pub fn perturbed_circle(c: f64, m: u32) -> Result<ConformalDomain, DomainError> {
        make_domain(DomainKind::PerturbedCircle { c, m })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Human-readable label used in output files.
    pub fn label(&self) -> String {
        match self.kind {
            DomainKind::Disk => "disk".to_string(),
            DomainKind::Ellipse { a, b } => format!("ellipse({a},{b})"),
            DomainKind::PerturbedCircle { c, m } => format!("perturbed_circle({c},{m})"),
        }
    }

    /// Leading coefficient `b₁` of `Ψ` — the logarithmic capacity of `Ḡ`.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Inner radius of the annulus on which `Ψ` is conformal.
    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    /// The exterior map `Ψ` as a finite Laurent polynomial.
    pub fn psi(&self) -> &LaurentSlice<Complex64> {
        &self.psi
    }

    /// `Ψ′` as a finite Laurent polynomial.
    pub fn psi_prime_series(&self) -> &LaurentSlice<Complex64> {
        &self.psi_deriv
    }

    /// `Ψ(∞)`-centering constant `b₀` — a natural interior anchor point.
    pub fn center(&self) -> Complex64 {
        self.psi.get(0).unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    fn require_exterior(&self, w: Complex64) -> Result<(), DomainError> {
        if w.norm() <= self.r_inner {
            return Err(DomainError::InsideInnerRadius {
                modulus: w.norm(),
                r_inner: self.r_inner,
            });
        }
        Ok(())
    }

    /// Evaluates `Ψ(w)` (exact finite sum) for `|w| > r_inner`.
    pub fn psi_eval(&self, w: Complex64) -> Result<Complex64, DomainError> {
        self.require_exterior(w)?;
        Ok(self.psi.eval(&w))
    }

    /// Evaluates `Ψ′(w)` for `|w| > r_inner`.
    pub fn psi_prime(&self, w: Complex64) -> Result<Complex64, DomainError> {
        self.require_exterior(w)?;
        Ok(self.psi_deriv.eval(&w))
    }

    /// Evaluates `Φ(z) = Ψ^{−1}(z)` by Newton iteration with multistart.
    ///
    /// Succeeds with the unique preimage satisfying `|w| > r_inner + 1e−6`
    /// and `|Ψ(w) − z| ≤ 1e−12·(1 + |z|)`; errors when `z` has no such
    /// preimage (the point lies inside the inner annulus — deep interior).
    pub fn phi_eval(&self, z: Complex64) -> Result<Complex64, DomainError> {
        let tol = 1e-12 * (1.0 + z.norm());
        let accept_radius = self.r_inner + 1e-6;
        let try_seed = |w0: Complex64| -> Option<Complex64> {
            let mut w = w0;
            for _ in 0..60 {
                let f = self.psi.eval(&w) - z;
                if f.norm() <= tol {
                    break;
                }
                let df = self.psi_deriv.eval(&w);
                if df.norm() < 1e-300 || !df.is_finite() || !f.is_finite() {
                    return None;
                }
                let step = f / df;
                w -= step;
                if w.norm() < 1e-14 {
                    // keep Newton away from the w = 0 pole of Ψ
                    w = Complex64::new(1e-14, 1e-14);
                }
            }
            if (self.psi.eval(&w) - z).norm() <= tol && w.norm() > accept_radius {
                Some(w)
            } else {
                None
            }
        };
        // Primary seed at the capacity-normalized point, then two multistart
        // rings: one at the asymptotic radius, one mid-annulus (to catch
        // continuation points between the critical curve and L).
        if let Some(w) = try_seed(z / self.capacity) {
            return Ok(w);
        }
        let r_far = (z.norm() / self.capacity).max(1.0);
        let r_mid = 0.5 * (1.0 + self.r_inner);
        for radius in [r_far, r_mid] {
            for j in 0..16 {
                let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.37) / 16.0;
                if let Some(w) = try_seed(Complex64::from_polar(radius, theta)) {
                    return Ok(w);
                }
            }
        }
        Err(DomainError::InversionFailed { z, r_inner: self.r_inner })
    }

    /// Winding number of the boundary 4096-gon around `z0` (true = enclosed).
    pub fn winding_contains(&self, z0: Complex64) -> bool {
        polygon_winding(&self.boundary_polyline(4096), z0) != 0
    }

    /// Distance from an interior point to the boundary `L`: grid minimum over
    /// 4096 boundary points refined by golden-section search.
    pub fn dist_to_boundary(&self, z0: Complex64) -> Result<f64, DomainError> {
        match self.phi_eval(z0) {
            Ok(w) if w.norm() >= 1.0 => return Err(DomainError::NotInterior { z: z0 }),
            Ok(_) => {}
            Err(_) => {
                if !self.winding_contains(z0) {
                    return Err(DomainError::NotInterior { z: z0 });
                }
            }
        }
        let m = 4096usize;
        let tau = 2.0 * std::f64::consts::PI;
        let g = |theta: f64| (z0 - self.psi.eval(&Complex64::from_polar(1.0, theta))).norm();
        let mut best_j = 0;
        let mut best = f64::INFINITY;
        for j in 0..m {
            let v = g(tau * j as f64 / m as f64);
            if v < best {
                best = v;
                best_j = j;
            }
        }
        // golden-section refine on the bracketing arc
        let mut lo = tau * (best_j as f64 - 1.0) / m as f64;
        let mut hi = tau * (best_j as f64 + 1.0) / m as f64;
        let phi_ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - phi_ratio * (hi - lo);
        let mut x2 = lo + phi_ratio * (hi - lo);
        let mut f1 = g(x1);
        let mut f2 = g(x2);
        while hi - lo > 1e-10 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi_ratio * (hi - lo);
                f1 = g(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi_ratio * (hi - lo);
                f2 = g(x2);
            }
        }
        Ok(best.min(f1).min(f2))
    }

    /// Distance from the center `b₀` to the boundary — the scale used when
    /// seeding interior probe points.
    pub fn inradius(&self) -> Result<f64, DomainError> {
        self.dist_to_boundary(self.center())
    }

    /// A point of the level curve `L_ρ`.
    pub fn level_point(&self, rho: f64, theta: f64) -> Result<LevelPoint, DomainError> {
        if !(rho > self.r_inner) {
            return Err(DomainError::LevelOutOfRange { rho, r_inner: self.r_inner });
        }
        let z = self.psi.eval(&Complex64::from_polar(rho, theta));
        Ok(LevelPoint { theta, rho, z })
    }

    /// Uniform-in-θ sampling of `L_ρ`.
    pub fn level_curve(&self, rho: f64, points: usize) -> Result<Vec<LevelPoint>, DomainError> {
        (0..points)
            .map(|j| self.level_point(rho, 2.0 * std::f64::consts::PI * j as f64 / points as f64))
            .collect()
    }

    /// The boundary polyline `Ψ(e^{iθ})` (ρ = 1).
    pub fn boundary_polyline(&self, points: usize) -> Vec<Complex64> {
        (0..points)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / points as f64;
                self.psi.eval(&Complex64::from_polar(1.0, theta))
            })
            .collect()
    }

    /// Laurent expansion of `Φ` at infinity, `Φ(z) = z/cap + c₀ + Σ c_k z^{−k}`,
    /// by fixed-point reversion of `Ψ`, certified down to exponent `1 − depth`.
    pub fn phi_series(&self, depth: usize) -> Result<LaurentSlice<Complex64>, DomainError> {
        revert_exterior_map(&self.psi, Complex64::new(1.0 / self.capacity, 0.0), depth)
    }
}

/// Reverts an exterior map `Ψ(w) = cap·w + b₀ + Σ_k b_k w^{−k}` (a Laurent
/// window with top exponent 1) into the expansion of its inverse at infinity,
/// certified down to exponent `1 − depth`.
///
/// The iteration `w ← (z − b₀ − Σ_k b_k w^{−k}) / cap` refines the window
/// bottom; the slice arithmetic tracks exactly which coefficients each iterate
/// certifies, so the returned window is trustworthy by construction. Generic
/// over the scalar so the same code runs in double and extended precision;
/// `cap_inv` is taken pre-divided because the quotient should be formed at the
/// caller's working precision.
pub fn revert_exterior_map<C: CScalar>(
    psi: &LaurentSlice<C>,
    cap_inv: C,
    depth: usize,
) -> Result<LaurentSlice<C>, DomainError> {
    assert_eq!(psi.hi(), 1, "exterior map must have top exponent 1");
    let target_lo = 1 - depth as i64;
    let b0 = psi.get(0).unwrap_or_else(C::zero);
    let m_max = (-psi.lo()).max(0);
    let z_minus_b0 = LaurentSlice::finite(0, vec![-b0, C::one()]);
    let mut w = LaurentSlice::with_truncation(1, vec![cap_inv.clone()], false, true);
    loop {
        if w.zero_below() || w.lo() <= target_lo {
            break;
        }
        let prev_lo = w.lo();
        let inv = laurent_recip(&w, w.lo() - 2)?;
        let mut rhs = z_minus_b0.clone();
        let mut pw = inv.clone();
        for k in 1..=m_max {
            if k > 1 {
                pw = laurent_multiply_max(&pw, &inv, target_lo - 2, 1)?;
            }
            let bk = psi.get(-k).unwrap_or_else(C::zero);
            if !bk.is_zero() {
                rhs = rhs.sub(&pw.scale(&bk))?;
            }
        }
        w = rhs.scale(&cap_inv);
        if !w.zero_below() && w.lo() >= prev_lo && w.lo() > target_lo {
            return Err(DomainError::ReversionStalled { reached: w.lo(), target: target_lo });
        }
    }
    // Clip to the requested depth (flags: truncated below unless finite).
    let out_lo = w.lo().max(target_lo);
    let coeffs: Vec<C> = (out_lo..=w.hi()).map(|k| w.get(k).expect("inside window")).collect();
    Ok(LaurentSlice::with_truncation(
        out_lo,
        coeffs,
        w.zero_below() && w.lo() >= target_lo,
        true,
    ))
}
