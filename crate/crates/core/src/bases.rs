//! Faber, Bergman, and Szegő polynomial bases on a [`ConformalDomain`], with
//! checkers for their level-curve asymptotics.
//!
//! Three construction routes coexist, because they fail differently:
//!
//! 1. **Moment route** (`build_orthonormal`): monomial Gram matrix from
//!    boundary quadrature — `⟨z^m, z^n⟩` reduced by Green's theorem to
//!    `(1/(2i(n+1))) ∮ z^m z̄^{n+1} dz` for the area (Bergman) product, plain
//!    `∮ z^m z̄^n |dz|` for the arclength (Szegő) product — followed by
//!    Cholesky. The Gram matrix conditioning grows geometrically with the
//!    degree, so this route is gated by a verified orthonormality residual:
//!    diagonal equilibration plus iterative refinement reaches the double
//!    precision measurement floor (safe to N ≈ 30 on the catalog domains),
//!    and an extended-precision mode pushes to N ≈ 60.
//! 2. **Faber route** (`build_faber`): the recurrence obtained by equating
//!    coefficients in `Ψ′(w)/(Ψ(w) − z) = Σ F_n(z) w^{−n−1}`, cross-checked
//!    coefficient-by-coefficient against an independent oracle (series
//!    reversion of `Ψ`, powered and truncated to the polynomial part), both
//!    in 128-bit arithmetic.
//! 3. **Stable route** (`build_basis_stable`): orthonormalization carried out
//!    in the *Faber* basis instead of the monomial one. The Faber Gram matrix
//!    is O(1)-conditioned on the catalog domains, so degrees in the hundreds
//!    are fine in double precision. The Bergman Faber-Gram is assembled
//!    exactly (up to rounding) through Parseval on the unit circle; the Szegő
//!    one by trapezoid quadrature, spectrally converged. Tables built this
//!    way evaluate through the Faber value recurrence, never through monomial
//!    coefficients, which avoids catastrophic cancellation near the boundary.
//!
//! Normalization: orthonormal tables have real positive leading coefficients;
//! Faber tables have leading coefficient `capacity^{−n}` exactly.

use crate::domain::{revert_exterior_map, ConformalDomain, DomainError};
use crate::roots::{RootTarget, ScaledEval, RESCALE_FACTOR, RESCALE_LIMIT, RESCALE_SHIFT};
use crate::scalar::{mp_pi, mp_roots_of_unity, CScalar, MpC, MpF};
use crate::series::{laurent_multiply_max, LaurentSlice, Poly, SeriesError};
use dashu_base::SquareRoot;
use num_complex::Complex64;
use thiserror::Error;

/// Default boundary quadrature size.
pub const DEFAULT_QUADRATURE_M: usize = 4096;
/// Quadrature sizes are doubled until convergence, up to this cap.
pub const QUADRATURE_M_CAP: usize = 1 << 16;
/// Acceptance threshold for quadrature doubling (relative, per entry).
pub const QUADRATURE_TOL: f64 = 1e-11;
/// Verified orthonormality gate on the (re-quadratured) Gram residual.
pub const GRAM_TOL: f64 = 1e-8;
/// Conjugate-symmetry gate on moment matrices (relative, per entry).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Agreement gate between the Faber recurrence and the reversion oracle.
pub const FABER_ORACLE_TOL: f64 = 1e-9;
/// Deviations below this are treated as measurement floor by the fitters.
pub const DEVIATION_FLOOR: f64 = 1e-12;

const WIDE: i64 = 1 << 40;

/// Errors from basis construction and the asymptotics checkers.
#[derive(Debug, Error)]
pub enum BasesError {
    #[error("quadrature size {m} must be a power of two >= 256")]
    BadQuadratureSize { m: usize },
    #[error(
        "quadrature did not converge: doubling at M = {m} still changes \
         entries by {delta:.3e} (tolerance {tol:.1e})"
    )]
    QuadratureNotConverged { m: usize, delta: f64, tol: f64 },
    #[error(
        "moment matrix is not conjugate-symmetric at ({row},{col}): \
         relative deviation {deviation:.3e}"
    )]
    NotHermitian { row: usize, col: usize, deviation: f64 },
    #[error(
        "Cholesky breakdown at index {index} (pivot {pivot:.3e} not positive): \
         the Gram matrix lost positivity to rounding; use extended precision, \
         the stable Faber route, or a smaller degree"
    )]
    CholeskyBreakdown { index: usize, pivot: f64 },
    #[error(
        "orthonormality not certified: re-quadratured Gram residual {residual:.3e} \
         exceeds {tol:.1e}; use extended precision, the stable Faber route, or \
         a smaller degree"
    )]
    GramResidual { residual: f64, tol: f64 },
    #[error(
        "Faber construction self-check failed at n = {n} ({route}): max \
         coefficient discrepancy {discrepancy:.3e} exceeds {tol:.1e} — \
         recurrence bug"
    )]
    FaberOracleMismatch { n: usize, route: &'static str, discrepancy: f64, tol: f64 },
    #[error(
        "residue of F_{n}(Ψ(u))Ψ′(u) at u⁰... expected 0, got {magnitude:.3e}; \
         the antiderivative would be multivalued"
    )]
    ResidueNotZero { n: usize, magnitude: f64 },
    #[error("operation requires a Bergman table, got {family}")]
    BergmanOnly { family: BasisFamily },
    #[error("{op} does not apply to family {family}")]
    UnsupportedFamily { family: BasisFamily, op: &'static str },
    #[error("z = {z} is not exterior to the domain")]
    NotExterior { z: Complex64 },
    #[error("empty or invalid degree range [{lo}, {hi}]")]
    EmptyRange { lo: usize, hi: usize },
    #[error("degree {needed} not available: table holds degrees 0..={have}")]
    DegreeUnavailable { needed: usize, have: usize },
    #[error("combination has {len} coefficients but the table holds {table} polynomials")]
    CombinationTooLong { len: usize, table: usize },
    #[error("combination has no nonzero coefficient")]
    EmptyCombination,
    #[error("extended precision must use 64..=1024 bits, got {bits}")]
    BadPrecision { bits: usize },
    #[error("domain: {0}")]
    Domain(#[from] DomainError),
    #[error("series arithmetic: {0}")]
    Series(#[from] SeriesError),
}

/// The three polynomial families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    Faber,
    Bergman,
    Szego,
}

impl BasisFamily {
    pub fn from_name(name: &str) -> Option<BasisFamily> {
        match name.to_ascii_lowercase().as_str() {
            "faber" => Some(BasisFamily::Faber),
            "bergman" => Some(BasisFamily::Bergman),
            "szego" | "szegő" => Some(BasisFamily::Szego),
            _ => None,
        }
    }
}

impl std::fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisFamily::Faber => write!(f, "faber"),
            BasisFamily::Bergman => write!(f, "bergman"),
            BasisFamily::Szego => write!(f, "szego"),
        }
    }
}

/// Working precision for orthonormal construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Double,
    /// Mantissa bits of the extended mode.
    Extended(usize),
}

impl Precision {
    pub fn label(&self) -> String {
        match self {
            Precision::Double => "double".to_string(),
            Precision::Extended(bits) => format!("extended-{bits}"),
        }
    }
}

/// Provenance of a finished basis table.
#[derive(Debug, Clone)]
pub struct BuildMeta {
    /// Final boundary quadrature size (absent for quadrature-free builds).
    pub quadrature_m: Option<usize>,
    pub precision: Precision,
    /// Verified max |Gram − I| against an independent quadrature, measured at
    /// build precision (absent for Faber tables, which involve no Gram).
    pub max_gram_residual: Option<f64>,
    /// Degree up to which the Faber dual-route self-check ran.
    pub faber_oracle_checked_to: Option<usize>,
}

/// Monomial Gram matrix `⟨z^m, z^n⟩` in one family's inner product.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    pub n_max: usize,
    entries: Vec<Vec<Complex64>>,
    pub hermitian: bool,
    pub quadrature_m: usize,
}

impl MomentMatrix {
    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m][n]
    }

    pub fn entries(&self) -> &[Vec<Complex64>] {
        &self.entries
    }
}

/// A finished polynomial basis, index = degree; immutable after build.
#[derive(Debug, Clone)]
pub struct BasisTable {
    family: BasisFamily,
    domain: ConformalDomain,
    /// Monomial coefficient form. For stable-route tables of large degree
    /// these are reference/export data; evaluation goes through `faber_rows`.
    polys: Vec<Poly<Complex64>>,
    /// Rows of the representation `B_n = Σ_j rows[n][j] F_j` (stable route).
    faber_rows: Option<Vec<Vec<Complex64>>>,
    meta: BuildMeta,
}

impl BasisTable {
    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn domain(&self) -> &ConformalDomain {
        &self.domain
    }

    /// Largest degree stored.
    pub fn n_max(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn poly(&self, n: usize) -> Result<&Poly<Complex64>, BasesError> {
        self.polys.get(n).ok_or(BasesError::DegreeUnavailable { needed: n, have: self.n_max() })
    }

    pub fn polys(&self) -> &[Poly<Complex64>] {
        &self.polys
    }

    pub fn meta(&self) -> &BuildMeta {
        &self.meta
    }

    pub fn faber_rows(&self) -> Option<&[Vec<Complex64>]> {
        self.faber_rows.as_deref()
    }

    fn engine(&self) -> FaberEngine<Complex64> {
        FaberEngine::new(&self.domain)
    }

    /// Whether evaluation routes through the Faber value recurrence.
    pub fn has_stable_eval(&self) -> bool {
        self.faber_rows.is_some() || self.family == BasisFamily::Faber
    }

    /// Evaluates `B_n(z)` (stable recurrence when available, Horner else).
    pub fn eval_basis(&self, n: usize, z: Complex64) -> Result<Complex64, BasesError> {
        if n > self.n_max() {
            return Err(BasesError::DegreeUnavailable { needed: n, have: self.n_max() });
        }
        if let Some(rows) = &self.faber_rows {
            let f = self.engine().values(&z, n);
            return Ok(dot_row(&rows[n], &f));
        }
        if self.family == BasisFamily::Faber {
            let f = self.engine().values(&z, n);
            return Ok(f[n]);
        }
        Ok(self.polys[n].eval(&z))
    }

    /// Evaluates all of `B_0..B_{n_hi}` at once.
    pub fn eval_through(&self, n_hi: usize, z: Complex64) -> Result<Vec<Complex64>, BasesError> {
        if n_hi > self.n_max() {
            return Err(BasesError::DegreeUnavailable { needed: n_hi, have: self.n_max() });
        }
        if let Some(rows) = &self.faber_rows {
            let f = self.engine().values(&z, n_hi);
            return Ok((0..=n_hi).map(|n| dot_row(&rows[n], &f)).collect());
        }
        if self.family == BasisFamily::Faber {
            return Ok(self.engine().values(&z, n_hi));
        }
        Ok((0..=n_hi).map(|n| self.polys[n].eval(&z)).collect())
    }

    /// Values and derivatives of `B_0..B_{n_hi}` at once.
    pub fn eval_through_with_deriv(
        &self,
        n_hi: usize,
        z: Complex64,
    ) -> Result<(Vec<Complex64>, Vec<Complex64>), BasesError> {
        if n_hi > self.n_max() {
            return Err(BasesError::DegreeUnavailable { needed: n_hi, have: self.n_max() });
        }
        if let Some(rows) = &self.faber_rows {
            let (f, df) = self.engine().values_with_deriv(&z, n_hi);
            let v = (0..=n_hi).map(|n| dot_row(&rows[n], &f)).collect();
            let d = (0..=n_hi).map(|n| dot_row(&rows[n], &df)).collect();
            return Ok((v, d));
        }
        if self.family == BasisFamily::Faber {
            return Ok(self.engine().values_with_deriv(&z, n_hi));
        }
        let mut v = Vec::with_capacity(n_hi + 1);
        let mut d = Vec::with_capacity(n_hi + 1);
        for n in 0..=n_hi {
            let (p, dp) = self.polys[n].eval_with_derivative(&z);
            v.push(p);
            d.push(dp);
        }
        Ok((v, d))
    }

    /// Forms `P = Σ_n a_n B_n` with a stable evaluation representation when
    /// the table has one.
    pub fn combine(&self, coeffs: &[Complex64]) -> Result<Combination, BasesError> {
        if coeffs.len() > self.polys.len() {
            return Err(BasesError::CombinationTooLong {
                len: coeffs.len(),
                table: self.polys.len(),
            });
        }
        let mut trimmed: Vec<Complex64> = coeffs.to_vec();
        while trimmed.last().map_or(false, |c| c.norm() == 0.0) {
            trimmed.pop();
        }
        if trimmed.is_empty() {
            return Err(BasesError::EmptyCombination);
        }
        let degree = trimmed.len() - 1;

        let stable = if let Some(rows) = &self.faber_rows {
            let mut g = vec![Complex64::new(0.0, 0.0); degree + 1];
            for (n, a) in trimmed.iter().enumerate() {
                if a.norm() == 0.0 {
                    continue;
                }
                for (j, r) in rows[n].iter().enumerate() {
                    g[j] += a * r;
                }
            }
            Some(StableCombo {
                g,
                engine: self.engine(),
                cap: self.domain.capacity(),
                b0: self.domain.center(),
            })
        } else if self.family == BasisFamily::Faber {
            Some(StableCombo {
                g: trimmed.clone(),
                engine: self.engine(),
                cap: self.domain.capacity(),
                b0: self.domain.center(),
            })
        } else {
            None
        };

        // Monomial form: authoritative for moment-route tables; for stable
        // tables it is only assembled at modest degree, where the monomial
        // coefficients of the catalog bases are still O(1)-conditioned.
        let monomial = if stable.is_none() || degree <= 150 {
            let mut p = Poly::zero();
            for (n, a) in trimmed.iter().enumerate() {
                if a.norm() != 0.0 {
                    p = p.add(&self.polys[n].scale(a));
                }
            }
            Some(p)
        } else {
            None
        };

        let leading = match &stable {
            Some(s) => s.g[degree] * s.cap.powi(-(degree as i32)),
            None => *monomial
                .as_ref()
                .expect("monomial form present when stable is absent")
                .leading()
                .expect("top coefficient nonzero"),
        };
        Ok(Combination { coeffs: trimmed, degree, leading, monomial, stable })
    }
}

fn dot_row(row: &[Complex64], values: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, v) in row.iter().zip(values) {
        acc += r * v;
    }
    acc
}

// ---------------------------------------------------------------------------
// Combinations (random polynomials in a basis)
// ---------------------------------------------------------------------------

/// Faber-coordinate representation of a combination: `P = Σ_j g_j F_j`,
/// evaluated through the value recurrence.
#[derive(Debug, Clone)]
pub struct StableCombo {
    g: Vec<Complex64>,
    engine: FaberEngine<Complex64>,
    cap: f64,
    b0: Complex64,
}

/// `P = Σ_n a_n B_n` for one basis table, with stable evaluation and exact
/// top-coefficient bookkeeping for root-finder gates.
#[derive(Debug, Clone)]
pub struct Combination {
    coeffs: Vec<Complex64>,
    degree: usize,
    leading: Complex64,
    monomial: Option<Poly<Complex64>>,
    stable: Option<StableCombo>,
}

impl Combination {
    pub fn coeffs_in_basis(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn leading_coefficient(&self) -> Complex64 {
        self.leading
    }

    pub fn monomial(&self) -> Option<&Poly<Complex64>> {
        self.monomial.as_ref()
    }

    /// Faber coordinates `g` with `P = Σ_j g_j F_j`, when available.
    pub fn faber_coords(&self) -> Option<&[Complex64]> {
        self.stable.as_ref().map(|s| s.g.as_slice())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        if let Some(s) = &self.stable {
            let f = s.engine.values(&z, self.degree);
            return dot_row(&s.g, &f);
        }
        self.monomial.as_ref().expect("representation present").eval(&z)
    }

    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        if let Some(s) = &self.stable {
            let (f, df) = s.engine.values_with_deriv(&z, self.degree);
            return (dot_row(&s.g, &f), dot_row(&s.g, &df));
        }
        self.monomial
            .as_ref()
            .expect("representation present")
            .eval_with_derivative(&z)
    }
}

impl RootTarget for Combination {
    fn degree(&self) -> usize {
        self.degree
    }

    fn eval_with_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        self.eval_with_derivative(z)
    }

    fn eval_scaled(&self, z: Complex64) -> ScaledEval {
        let s = match &self.stable {
            Some(s) => s,
            None => {
                let p = self.monomial.as_ref().expect("representation present");
                return p.eval_scaled(z);
            }
        };
        // Stream the Faber recurrence with the accumulated exponent pulled
        // out, so that |P(z)| past f64 range (outlier iterates during root
        // finding) still yields a usable mantissa pair. Only the last p+1
        // basis values feed the next step, so a ring window suffices; the
        // inhomogeneous (n−1)·b_{n−1} source enters at absolute scale and is
        // brought into the current frame by `down = 2^{−exp2}`.
        let e = &s.engine;
        let p = e.bs.len();
        let width = p + 1;
        let mut fwin = vec![Complex64::new(0.0, 0.0); width];
        let mut dfwin = vec![Complex64::new(0.0, 0.0); width];
        fwin[0] = Complex64::new(1.0, 0.0);
        let mut acc = s.g[0];
        let mut dacc = Complex64::new(0.0, 0.0);
        let mut exp2: i64 = 0;
        let mut down = 1.0f64;
        let zb = z - e.b0;
        for n in 1..=self.degree {
            let fp = fwin[(n - 1) % width];
            let mut v = zb * fp;
            let mut dv = zb * dfwin[(n - 1) % width] + fp;
            for j in 1..=p.min(n - 1) {
                v -= e.bs[j - 1] * fwin[(n - 1 - j) % width];
                dv -= e.bs[j - 1] * dfwin[(n - 1 - j) % width];
            }
            if n >= 2 && n <= p + 1 {
                v -= e.bs[n - 2] * (((n - 1) as f64) * down);
            }
            let fv = v * e.cap_inv;
            let dfv = dv * e.cap_inv;
            fwin[n % width] = fv;
            dfwin[n % width] = dfv;
            acc += s.g[n] * fv;
            dacc += s.g[n] * dfv;
            let top = fv
                .re
                .abs()
                .max(fv.im.abs())
                .max(dfv.re.abs())
                .max(dfv.im.abs())
                .max(acc.re.abs())
                .max(acc.im.abs())
                .max(dacc.re.abs())
                .max(dacc.im.abs());
            if top > RESCALE_LIMIT {
                for w in fwin.iter_mut() {
                    *w *= RESCALE_FACTOR;
                }
                for w in dfwin.iter_mut() {
                    *w *= RESCALE_FACTOR;
                }
                acc *= RESCALE_FACTOR;
                dacc *= RESCALE_FACTOR;
                exp2 += RESCALE_SHIFT;
                down = (-(exp2 as f64)).exp2();
            }
        }
        ScaledEval {
            p: acc,
            dp: dacc,
            exp2,
        }
    }

    fn leading(&self) -> Complex64 {
        self.leading
    }

    fn vieta_sum(&self) -> Complex64 {
        if self.degree == 0 {
            return Complex64::new(0.0, 0.0);
        }
        if let Some(s) = &self.stable {
            // F_n(z) = cap^{−n}(z^n − n b₀ z^{n−1} + …), so with c_k the
            // monomial coefficients of P: −c_{N−1}/c_N = N b₀ − cap g_{N−1}/g_N.
            let n = self.degree;
            return (n as f64) * s.b0 - s.cap * s.g[n - 1] / s.g[n];
        }
        let p = self.monomial.as_ref().expect("representation present");
        -p.coeff(self.degree - 1) / p.coeff(self.degree)
    }

    fn vieta_log_prod(&self) -> Option<f64> {
        if let Some(s) = &self.stable {
            let c0 = self.eval(Complex64::new(0.0, 0.0));
            if c0.norm() == 0.0 {
                return None;
            }
            // log|c_0/c_N| with c_N = g_N cap^{−N}, kept in logs to avoid
            // under/overflow of cap^{±N}.
            let n = self.degree as f64;
            return Some(c0.norm().ln() - s.g[self.degree].norm().ln() + n * s.cap.ln());
        }
        let p = self.monomial.as_ref().expect("representation present");
        let c0 = p.coeff(0);
        let scale = p.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if c0.norm() <= crate::roots::VIETA_PROD_FLOOR * scale {
            None
        } else {
            Some((c0.norm() / p.coeff(self.degree).norm()).ln())
        }
    }

    fn initial_radius(&self) -> f64 {
        if let Some(s) = &self.stable {
            // Fujiwara bound in the w-plane (F_j ≈ Φ^j on level curves), then
            // mapped through Ψ with margin.
            let n = self.degree;
            let gn = s.g[n].norm();
            let mut rw: f64 = 1.25;
            for k in 1..=n {
                let gk = s.g[n - k].norm();
                if gk > 0.0 {
                    rw = rw.max(2.0 * (gk / gn).powf(1.0 / k as f64));
                }
            }
            let psi = s.engine.psi_abs_bound(rw);
            return psi + 0.5;
        }
        let p = self.monomial.as_ref().expect("representation present");
        let n = self.degree;
        let cn = p.coeff(n).norm();
        let mut r: f64 = 0.0;
        for k in 1..=n {
            let ck = p.coeff(n - k).norm();
            if ck > 0.0 {
                r = r.max((ck / cn).powf(1.0 / k as f64));
            }
        }
        (2.0 * r).max(1e-3)
    }
}

/// Root target for `P′` that shares `P`'s evaluation representation: the
/// stable route differentiates through the Faber recurrence, so derivative
/// zeros stay reachable at degrees where `P′`'s monomial form is unusable.
/// By Gauss–Lucas the zeros of `P′` lie in the convex hull of the zeros of
/// `P`, so `P`'s initial circle encloses them too.
pub enum DerivCombination<'a> {
    Stable(&'a Combination),
    Monomial(Poly<Complex64>),
}

impl Combination {
    /// The derivative `P′` as a root-finder target.
    pub fn derivative_target(&self) -> DerivCombination<'_> {
        if self.stable.is_some() {
            DerivCombination::Stable(self)
        } else {
            DerivCombination::Monomial(
                self.monomial
                    .as_ref()
                    .expect("representation present")
                    .derivative(),
            )
        }
    }
}

impl RootTarget for DerivCombination<'_> {
    fn degree(&self) -> usize {
        match self {
            DerivCombination::Stable(c) => c.degree.saturating_sub(1),
            DerivCombination::Monomial(p) => p.degree().unwrap_or(0),
        }
    }

    fn eval_with_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        match self {
            DerivCombination::Stable(c) => {
                let s = c.stable.as_ref().expect("stable representation");
                let (_, df, ddf) = s.engine.values_with_two_derivs(&z, c.degree);
                (dot_row(&s.g, &df), dot_row(&s.g, &ddf))
            }
            DerivCombination::Monomial(p) => p.eval_with_derivative(&z),
        }
    }

    fn eval_scaled(&self, z: Complex64) -> ScaledEval {
        let c = match self {
            DerivCombination::Stable(c) => c,
            DerivCombination::Monomial(p) => return p.eval_scaled(z),
        };
        // Streamed scaled recurrence as in `Combination::eval_scaled`, one
        // derivative order up: accumulate Σ g·F′ and Σ g·F″.
        let s = c.stable.as_ref().expect("stable representation");
        let e = &s.engine;
        let p = e.bs.len();
        let width = p + 1;
        let mut fwin = vec![Complex64::new(0.0, 0.0); width];
        let mut dfwin = vec![Complex64::new(0.0, 0.0); width];
        let mut ddfwin = vec![Complex64::new(0.0, 0.0); width];
        fwin[0] = Complex64::new(1.0, 0.0);
        let mut dacc = Complex64::new(0.0, 0.0);
        let mut ddacc = Complex64::new(0.0, 0.0);
        let mut exp2: i64 = 0;
        let mut down = 1.0f64;
        let zb = z - e.b0;
        for n in 1..=c.degree {
            let fp = fwin[(n - 1) % width];
            let dfp = dfwin[(n - 1) % width];
            let mut v = zb * fp;
            let mut dv = zb * dfp + fp;
            let mut ddv = zb * ddfwin[(n - 1) % width] + 2.0 * dfp;
            for j in 1..=p.min(n - 1) {
                v -= e.bs[j - 1] * fwin[(n - 1 - j) % width];
                dv -= e.bs[j - 1] * dfwin[(n - 1 - j) % width];
                ddv -= e.bs[j - 1] * ddfwin[(n - 1 - j) % width];
            }
            if n >= 2 && n <= p + 1 {
                v -= e.bs[n - 2] * (((n - 1) as f64) * down);
            }
            let fv = v * e.cap_inv;
            let dfv = dv * e.cap_inv;
            let ddfv = ddv * e.cap_inv;
            fwin[n % width] = fv;
            dfwin[n % width] = dfv;
            ddfwin[n % width] = ddfv;
            dacc += s.g[n] * dfv;
            ddacc += s.g[n] * ddfv;
            let top = fv
                .re
                .abs()
                .max(fv.im.abs())
                .max(dfv.re.abs())
                .max(dfv.im.abs())
                .max(ddfv.re.abs())
                .max(ddfv.im.abs())
                .max(dacc.re.abs())
                .max(dacc.im.abs())
                .max(ddacc.re.abs())
                .max(ddacc.im.abs());
            if top > RESCALE_LIMIT {
                for w in fwin.iter_mut() {
                    *w *= RESCALE_FACTOR;
                }
                for w in dfwin.iter_mut() {
                    *w *= RESCALE_FACTOR;
                }
                for w in ddfwin.iter_mut() {
                    *w *= RESCALE_FACTOR;
                }
                dacc *= RESCALE_FACTOR;
                ddacc *= RESCALE_FACTOR;
                exp2 += RESCALE_SHIFT;
                down = (-(exp2 as f64)).exp2();
            }
        }
        ScaledEval {
            p: dacc,
            dp: ddacc,
            exp2,
        }
    }

    fn leading(&self) -> Complex64 {
        match self {
            DerivCombination::Stable(c) => (c.degree as f64) * c.leading,
            DerivCombination::Monomial(p) => RootTarget::leading(p),
        }
    }

    fn vieta_sum(&self) -> Complex64 {
        match self {
            DerivCombination::Stable(c) => {
                // c′_k = (k+1)c_{k+1} gives −c′_{m−1}/c′_m = (m/(m+1))·(−c_{m}/c_{m+1}).
                let m = c.degree.saturating_sub(1);
                if m == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                (m as f64 / c.degree as f64) * RootTarget::vieta_sum(*c)
            }
            DerivCombination::Monomial(p) => RootTarget::vieta_sum(p),
        }
    }

    fn vieta_log_prod(&self) -> Option<f64> {
        match self {
            DerivCombination::Stable(c) => {
                let m = c.degree.saturating_sub(1);
                if m == 0 {
                    return None;
                }
                let dp0 = c.eval_with_derivative(Complex64::new(0.0, 0.0)).1;
                if dp0.norm() == 0.0 {
                    return None;
                }
                // log|c′_0/c′_m| with c′_m = N·g_N·cap^{−N}, kept in logs.
                let s = c.stable.as_ref().expect("stable representation");
                let n = c.degree as f64;
                Some(dp0.norm().ln() - n.ln() - s.g[c.degree].norm().ln() + n * s.cap.ln())
            }
            DerivCombination::Monomial(p) => RootTarget::vieta_log_prod(p),
        }
    }

    fn initial_radius(&self) -> f64 {
        match self {
            DerivCombination::Stable(c) => RootTarget::initial_radius(*c),
            DerivCombination::Monomial(p) => RootTarget::initial_radius(p),
        }
    }
}

// ---------------------------------------------------------------------------
// Moment quadratures (double precision)
// ---------------------------------------------------------------------------

fn require_valid_m(m: usize) -> Result<(), BasesError> {
    if !m.is_power_of_two() || m < 256 {
        return Err(BasesError::BadQuadratureSize { m });
    }
    Ok(())
}

/// Double-double scalar: an unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`,
/// carrying ≈106 effective bits through pure f64 arithmetic (Dekker/Knuth
/// error-free transformations).
///
/// The moment quadratures need this headroom: a plain f64 power chain puts
/// ~(m+n)·ε of relative error into every sample of `⟨z^m, z^n⟩`, and the
/// monomial Gram matrices built from those entries are conditioned like
/// κ ~ (boundary radius / inradius)^{2N}, so per-entry noise is amplified by
/// several orders of magnitude before the orthonormality gate measures it.
/// Compensated products and sums push the per-term error back to ~ε.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

/// Knuth's exact sum: `a + b = s + e` with `s = fl(a + b)`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bv = s - a;
    (s, (a - (s - bv)) + (b - bv))
}

/// Renormalization assuming `|a| ≥ |b|` up to rounding.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

/// Veltkamp split of a f64 into two 26-bit halves (exact for |a| < 2^996).
#[inline]
fn veltkamp_split(a: f64) -> (f64, f64) {
    let c = 134_217_729.0 * a; // 2^27 + 1
    let hi = c - (c - a);
    (hi, a - hi)
}

/// Dekker's exact product: `a·b = p + e` with `p = fl(a·b)`.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = veltkamp_split(a);
    let (bh, bl) = veltkamp_split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        quick_two_sum(s, e + self.lo + o.lo)
    }

    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }
}

/// Complex double-double; only the operations the moment kernels need.
#[derive(Clone, Copy)]
struct DdC {
    re: Dd,
    im: Dd,
}

impl DdC {
    const ZERO: DdC = DdC { re: Dd::ZERO, im: Dd::ZERO };
    const ONE: DdC = DdC { re: Dd { hi: 1.0, lo: 0.0 }, im: Dd::ZERO };

    #[inline]
    fn real(re: Dd) -> DdC {
        DdC { re, im: Dd::ZERO }
    }

    #[inline]
    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    fn conj(self) -> DdC {
        DdC { re: self.re, im: self.im.neg() }
    }

    #[inline]
    fn add(self, o: DdC) -> DdC {
        DdC { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    #[inline]
    fn mul(self, o: DdC) -> DdC {
        DdC {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    #[inline]
    fn powu(self, n: u32) -> DdC {
        let mut acc = DdC::ONE;
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }
}

/// Splits an extended-precision real into a normalized hi/lo f64 pair.
fn dd_from_mpf(x: &MpF) -> Dd {
    let hi = x.to_f64().value();
    let lo = (x.clone() - MpF::try_from(hi).expect("finite node value")).to_f64().value();
    Dd { hi, lo }
}

fn ddc_from_mpc(z: &MpC) -> DdC {
    DdC { re: dd_from_mpf(&z.re), im: dd_from_mpf(&z.im) }
}

struct BoundaryNodes {
    z: Vec<DdC>,
    /// Green weight `Ψ′(u)·u·(π/M)` for area moments.
    area_w: Vec<DdC>,
    /// Arclength weight `|Ψ′(u)|·(2π/M)` for Szegő moments.
    arc_w: Vec<Dd>,
}

/// Quadrature nodes `z_j = Ψ(e^{iθ_j})` and weights, `θ_j = 2π(j + off)/M`.
///
/// Nodes and weights are evaluated once per pass in 128-bit arithmetic and
/// handed to the kernels as hi/lo pairs: the moment sums raise each node to
/// the monomial degree, so plain f64 nodes cost ~(m+n)·ε of relative error
/// per term — at degree 30 that noise, amplified through the ill-conditioned
/// monomial Gram factorization, lands exactly at the certification gate.
/// Only this O(M) setup uses extended precision; the O(N²·M) accumulation
/// runs in compensated f64.
fn boundary_nodes(d: &ConformalDomain, m: usize, half_offset: bool) -> BoundaryNodes {
    const BITS: usize = 128;
    let psi = lift_slice(d.psi(), BITS);
    let dpsi = psi.derivative();
    // Even/odd indices of the 2M-th roots give the plain and half-offset grids.
    let roots = mp_roots_of_unity(2 * m, BITS);
    let parity = usize::from(half_offset);
    let pi_over_m = mp_pi(BITS) / MpF::from(m as u64);
    let two_pi_over_m = mp_pi(BITS) * MpF::from(2u8) / MpF::from(m as u64);
    let mut z = Vec::with_capacity(m);
    let mut area_w = Vec::with_capacity(m);
    let mut arc_w = Vec::with_capacity(m);
    for j in 0..m {
        let u = &roots[2 * j + parity];
        let dp = dpsi.eval(u);
        z.push(ddc_from_mpc(&psi.eval(u)));
        area_w.push(ddc_from_mpc(&MpC::mul_ref(&dp, u).scale(&pi_over_m)));
        arc_w.push(dd_from_mpf(&(dp.norm_sqr().sqrt() * &two_pi_over_m)));
    }
    BoundaryNodes { z, area_w, arc_w }
}

/// One trapezoid pass of `(1/(2i(n+1))) ∮ z^m z̄^{n+1} dz`.
fn area_moment_once(d: &ConformalDomain, mp: usize, np: usize, m: usize) -> Complex64 {
    let nodes = boundary_nodes(d, m, false);
    let mut s = DdC::ZERO;
    for j in 0..m {
        let z = nodes.z[j];
        s = s.add(z.powu(mp as u32).mul(z.powu(np as u32 + 1).conj()).mul(nodes.area_w[j]));
    }
    s.to_c64() / (np as f64 + 1.0)
}

fn arc_moment_once(d: &ConformalDomain, mp: usize, np: usize, m: usize) -> Complex64 {
    let nodes = boundary_nodes(d, m, false);
    let mut s = DdC::ZERO;
    for j in 0..m {
        let z = nodes.z[j];
        let w = DdC::real(nodes.arc_w[j]);
        s = s.add(z.powu(mp as u32).mul(z.powu(np as u32).conj()).mul(w));
    }
    s.to_c64()
}

fn accept_by_doubling(
    mut m: usize,
    f: impl Fn(usize) -> Complex64,
) -> Result<(Complex64, usize), BasesError> {
    let mut coarse = f(m);
    loop {
        let fine = f(2 * m);
        let delta = (fine - coarse).norm() / (1.0 + fine.norm());
        if delta < QUADRATURE_TOL {
            return Ok((fine, 2 * m));
        }
        m *= 2;
        coarse = fine;
        if 2 * m > QUADRATURE_M_CAP {
            return Err(BasesError::QuadratureNotConverged { m, delta, tol: QUADRATURE_TOL });
        }
    }
}

/// Area inner product of monomials, `⟨z^m, z^n⟩_G = ∫_G z^m z̄^n dA`, via the
/// Green's-theorem boundary reduction; accepted only after doubling the
/// quadrature changes it by less than the tolerance.
pub fn area_moment(
    d: &ConformalDomain,
    m_pow: usize,
    n_pow: usize,
    m: usize,
) -> Result<Complex64, BasesError> {
    require_valid_m(m)?;
    Ok(accept_by_doubling(m, |mm| area_moment_once(d, m_pow, n_pow, mm))?.0)
}

/// Arclength inner product of monomials, `⟨z^m, z^n⟩_L = ∮_L z^m z̄^n |dz|`.
pub fn arc_moment(
    d: &ConformalDomain,
    m_pow: usize,
    n_pow: usize,
    m: usize,
) -> Result<Complex64, BasesError> {
    require_valid_m(m)?;
    Ok(accept_by_doubling(m, |mm| arc_moment_once(d, m_pow, n_pow, mm))?.0)
}

/// One full moment-matrix pass at fixed quadrature size.
fn moment_entries_f64(
    d: &ConformalDomain,
    family: BasisFamily,
    n_max: usize,
    m: usize,
    half_offset: bool,
) -> Vec<Vec<Complex64>> {
    let nodes = boundary_nodes(d, m, half_offset);
    let dim = n_max + 1;
    let mut s = vec![vec![DdC::ZERO; dim]; dim];
    let mut pows = vec![DdC::ZERO; dim + 1];
    let mut t = vec![DdC::ZERO; dim];
    for j in 0..m {
        let z = nodes.z[j];
        pows[0] = DdC::ONE;
        for k in 1..=n_max + 1 {
            pows[k] = pows[k - 1].mul(z);
        }
        match family {
            BasisFamily::Bergman => {
                let w = nodes.area_w[j];
                for n in 0..dim {
                    t[n] = pows[n + 1].conj().mul(w);
                }
            }
            BasisFamily::Szego => {
                let w = DdC::real(nodes.arc_w[j]);
                for n in 0..dim {
                    t[n] = pows[n].conj().mul(w);
                }
            }
            BasisFamily::Faber => unreachable!("moment matrices are for inner-product families"),
        }
        for mm in 0..dim {
            for nn in 0..dim {
                s[mm][nn] = s[mm][nn].add(pows[mm].mul(t[nn]));
            }
        }
    }
    let norm = |e: DdC, nn: usize| {
        let v = e.to_c64();
        if family == BasisFamily::Bergman { v / (nn as f64 + 1.0) } else { v }
    };
    (0..dim).map(|mm| (0..dim).map(|nn| norm(s[mm][nn], nn)).collect()).collect()
}

/// Scale at which entry (i, j) of a Gram matrix is meaningful: the
/// Cauchy–Schwarz bound `√(G_ii·G_jj)` (entries whose true value is exactly
/// zero — parity, symmetry — still carry summation noise at this scale).
fn entry_scale(diag: &[f64], i: usize, j: usize) -> f64 {
    1.0 + (diag[i].max(0.0) * diag[j].max(0.0)).sqrt()
}

fn matrix_delta(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    let diag: Vec<f64> = (0..b.len()).map(|i| b[i][i].re).collect();
    let mut worst = 0.0f64;
    for (i, (ra, rb)) in a.iter().zip(b).enumerate() {
        for (j, (ea, eb)) in ra.iter().zip(rb).enumerate() {
            worst = worst.max((ea - eb).norm() / entry_scale(&diag, i, j));
        }
    }
    worst
}

/// Validates conjugate symmetry and positive real diagonal, then symmetrizes.
fn validate_hermitian(entries: &mut Vec<Vec<Complex64>>) -> Result<(), BasesError> {
    let dim = entries.len();
    let diag: Vec<f64> = (0..dim).map(|i| entries[i][i].re).collect();
    for i in 0..dim {
        let di = entries[i][i];
        if !(di.re > 0.0) || di.im.abs() > HERMITIAN_TOL * di.re {
            return Err(BasesError::CholeskyBreakdown { index: i, pivot: di.re });
        }
        for j in 0..dim {
            let dev =
                (entries[i][j] - entries[j][i].conj()).norm() / entry_scale(&diag, i, j);
            if dev > HERMITIAN_TOL {
                return Err(BasesError::NotHermitian { row: i, col: j, deviation: dev });
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            let avg = 0.5 * (entries[i][j] + entries[j][i].conj());
            entries[i][j] = avg;
            entries[j][i] = avg.conj();
        }
        entries[i][i] = Complex64::new(entries[i][i].re, 0.0);
    }
    Ok(())
}

/// Assembles the monomial Gram matrix of the family's inner product, accepted
/// under quadrature doubling, validated conjugate-symmetric, and symmetrized.
pub fn moment_matrix(
    d: &ConformalDomain,
    family: BasisFamily,
    n_max: usize,
    m: usize,
) -> Result<MomentMatrix, BasesError> {
    if family == BasisFamily::Faber {
        return Err(BasesError::UnsupportedFamily { family, op: "moment_matrix" });
    }
    require_valid_m(m)?;
    let mut size = m;
    let mut coarse = moment_entries_f64(d, family, n_max, size, false);
    let (mut entries, final_m) = loop {
        let fine = moment_entries_f64(d, family, n_max, 2 * size, false);
        let delta = matrix_delta(&coarse, &fine);
        if delta < QUADRATURE_TOL {
            break (fine, 2 * size);
        }
        size *= 2;
        coarse = fine;
        if 2 * size > QUADRATURE_M_CAP {
            return Err(BasesError::QuadratureNotConverged {
                m: size,
                delta,
                tol: QUADRATURE_TOL,
            });
        }
    };
    validate_hermitian(&mut entries)?;
    Ok(MomentMatrix { n_max, entries, hermitian: true, quadrature_m: final_m })
}

// ---------------------------------------------------------------------------
// Cholesky machinery (generic over the scalar)
// ---------------------------------------------------------------------------

fn cholesky<C: CScalar>(g: &[Vec<C>]) -> Result<Vec<Vec<C>>, BasesError> {
    let n = g.len();
    let mut l = vec![vec![C::zero(); n]; n];
    for j in 0..n {
        let mut d = g[j][j].clone();
        for k in 0..j {
            d = d - l[j][k].clone() * l[j][k].conj();
        }
        let pivot = d.to_c64().re;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(BasesError::CholeskyBreakdown { index: j, pivot });
        }
        let ljj = d.sqrt_positive_real();
        for i in j + 1..n {
            let mut s = g[i][j].clone();
            for k in 0..j {
                s = s - l[i][k].clone() * l[j][k].conj();
            }
            l[i][j] = s / ljj.clone();
        }
        l[j][j] = ljj;
    }
    Ok(l)
}

fn lower_inverse<C: CScalar>(l: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = l.len();
    let mut x = vec![vec![C::zero(); n]; n];
    for i in 0..n {
        x[i][i] = C::one() / l[i][i].clone();
        for j in (0..i).rev() {
            let mut s = C::zero();
            for k in j..i {
                s = s + l[i][k].clone() * x[k][j].clone();
            }
            x[i][j] = -(s / l[i][i].clone());
        }
    }
    x
}

/// `R = C G C^H` for square matrices.
fn congruence<C: CScalar>(c: &[Vec<C>], g: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = c.len();
    let mut t = vec![vec![C::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if c[i][j].is_zero() {
                continue;
            }
            for k in 0..n {
                t[i][k] = t[i][k].clone() + c[i][j].clone() * g[j][k].clone();
            }
        }
    }
    let mut r = vec![vec![C::zero(); n]; n];
    for i in 0..n {
        for l in 0..n {
            let mut s = C::zero();
            for k in 0..n {
                s = s + t[i][k].clone() * c[l][k].conj();
            }
            r[i][l] = s;
        }
    }
    r
}

fn identity_residual<C: CScalar>(r: &[Vec<C>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in r.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let want = if i == j { C::one() } else { C::zero() };
            worst = worst.max((e.clone() - want).abs_f64());
        }
    }
    worst
}

/// Equilibrated Cholesky orthonormalization: returns the coefficient matrix
/// `C` (lower triangular, rows = polynomials) with `C G C^H ≈ I`.
fn orthonormal_rows_from_gram<C: CScalar>(g: &[Vec<C>]) -> Result<Vec<Vec<C>>, BasesError> {
    let n = g.len();
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let pivot = g[i][i].to_c64().re;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(BasesError::CholeskyBreakdown { index: i, pivot });
        }
        d.push(C::one() / g[i][i].sqrt_positive_real());
    }
    let mut gt = vec![vec![C::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            gt[i][j] = d[i].clone() * g[i][j].clone() * d[j].clone();
        }
    }
    let l = cholesky(&gt)?;
    let linv = lower_inverse(&l);
    let mut c = vec![vec![C::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            c[i][j] = linv[i][j].clone() * d[j].clone();
        }
    }
    Ok(c)
}

/// One iterative-refinement sweep: factor the measured Gram of the current
/// rows and absorb its inverse Cholesky factor.
fn refine_rows(
    c: &mut Vec<Vec<Complex64>>,
    g: &[Vec<Complex64>],
) -> Result<f64, BasesError> {
    let r = congruence(c, g);
    let before = identity_residual(&r);
    let l2 = cholesky(&r)?;
    let linv2 = lower_inverse(&l2);
    let n = c.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = Complex64::new(0.0, 0.0);
            for k in j..=i {
                s += linv2[i][k] * c[k][j];
            }
            out[i][j] = s;
        }
    }
    *c = out;
    Ok(before)
}

// ---------------------------------------------------------------------------
// Extended-precision moment matrices
// ---------------------------------------------------------------------------

fn lift_slice(s: &LaurentSlice<Complex64>, bits: usize) -> LaurentSlice<MpC> {
    LaurentSlice::with_truncation(
        s.lo(),
        s.coeffs().iter().map(|c| MpC::from_c64_prec(*c, bits)).collect(),
        s.zero_below(),
        s.zero_above(),
    )
}

/// `Σ_e x(e)·conj(y(e))` over the overlap of two finite windows.
fn dot_conj_mp(x: &LaurentSlice<MpC>, y: &LaurentSlice<MpC>, bits: usize) -> MpC {
    let lo = x.lo().max(y.lo());
    let hi = x.hi().min(y.hi());
    let mut acc = MpC::zero_prec(bits);
    for e in lo..=hi {
        let xe = x.get(e).expect("inside window");
        let ye = y.get(e).expect("inside window");
        MpC::mul_add_assign(&mut acc, &xe, &ye.conj());
    }
    acc
}

/// Bergman moments by exact Laurent-coefficient extraction: writing
/// `z = Ψ(u)` on the unit circle turns the Green's-theorem integrand into a
/// finite Laurent polynomial, whose mean over the circle is its `u⁰`
/// coefficient — no quadrature error at all. Concretely
/// `⟨z^m, z^n⟩ = (π/(n+1)) Σ_e [Ψ^m Ψ′ u](e) · conj([Ψ^{n+1}](e))`.
fn bergman_moments_extended(
    d: &ConformalDomain,
    n_max: usize,
    bits: usize,
) -> Result<Vec<Vec<MpC>>, BasesError> {
    let psi = lift_slice(d.psi(), bits);
    let dpsi = psi.derivative();
    let pi = mp_pi(bits);
    let mut pows: Vec<LaurentSlice<MpC>> = Vec::with_capacity(n_max + 2);
    pows.push(LaurentSlice::finite(0, vec![MpC::from_c64_prec(Complex64::new(1.0, 0.0), bits)]));
    for k in 1..=n_max + 1 {
        pows.push(laurent_multiply_max(&pows[k - 1], &psi, -WIDE, WIDE)?);
    }
    let qs: Vec<LaurentSlice<MpC>> = (0..=n_max)
        .map(|m| Ok(laurent_multiply_max(&pows[m], &dpsi, -WIDE, WIDE)?.shift(1)))
        .collect::<Result<_, BasesError>>()?;
    let dim = n_max + 1;
    let mut g = vec![vec![MpC::zero_prec(bits); dim]; dim];
    for mm in 0..dim {
        for nn in 0..dim {
            let scale = &pi / MpF::from((nn + 1) as u64);
            g[mm][nn] = dot_conj_mp(&qs[mm], &pows[nn + 1], bits).scale(&scale);
        }
    }
    validate_hermitian_mp(&mut g)?;
    Ok(g)
}

/// Bergman moments by extended-precision trapezoid quadrature — the
/// independent route used to certify the exact-extraction matrix.
fn bergman_moments_mp_quadrature(
    d: &ConformalDomain,
    n_max: usize,
    m: usize,
    bits: usize,
) -> Vec<Vec<MpC>> {
    let psi = lift_slice(d.psi(), bits);
    let dpsi = psi.derivative();
    let nodes = mp_roots_of_unity(m, bits);
    let pi = mp_pi(bits);
    let pi_over_m = &pi / MpF::from(m as u64);
    let dim = n_max + 1;
    let mut g = vec![vec![MpC::zero_prec(bits); dim]; dim];
    let mut pows = vec![MpC::zero_prec(bits); dim + 1];
    for u in &nodes {
        let z = psi.eval(u);
        let w = MpC::mul_ref(&dpsi.eval(u), u).scale(&pi_over_m);
        pows[0] = MpC::from_c64_prec(Complex64::new(1.0, 0.0), bits);
        for k in 1..=n_max + 1 {
            pows[k] = MpC::mul_ref(&pows[k - 1], &z);
        }
        for nn in 0..dim {
            let t = MpC::mul_ref(&pows[nn + 1].conj(), &w);
            for mm in 0..dim {
                MpC::mul_add_assign(&mut g[mm][nn], &pows[mm], &t);
            }
        }
    }
    for row in g.iter_mut() {
        for (nn, e) in row.iter_mut().enumerate() {
            let s = MpF::ONE / MpF::from((nn + 1) as u64).with_precision(bits).value();
            *e = e.scale(&s);
        }
    }
    g
}

/// Szegő moments by extended-precision trapezoid quadrature (the arclength
/// weight `|Ψ′|` has a square root, so no exact extraction exists).
fn szego_moments_mp_quadrature(
    d: &ConformalDomain,
    n_max: usize,
    m: usize,
    bits: usize,
) -> Vec<Vec<MpC>> {
    let psi = lift_slice(d.psi(), bits);
    let dpsi = psi.derivative();
    let nodes = mp_roots_of_unity(m, bits);
    let two_pi_over_m = mp_pi(bits) * MpF::from(2u8) / MpF::from(m as u64);
    let dim = n_max + 1;
    let mut g = vec![vec![MpC::zero_prec(bits); dim]; dim];
    let mut pows = vec![MpC::zero_prec(bits); dim];
    for u in &nodes {
        let z = psi.eval(u);
        let w = dpsi.eval(u).norm_sqr().sqrt() * &two_pi_over_m;
        pows[0] = MpC::from_c64_prec(Complex64::new(1.0, 0.0), bits);
        for k in 1..=n_max {
            pows[k] = MpC::mul_ref(&pows[k - 1], &z);
        }
        for nn in 0..dim {
            let t = pows[nn].conj().scale(&w);
            for mm in 0..=nn {
                MpC::mul_add_assign(&mut g[mm][nn], &pows[mm], &t);
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            g[i][j] = g[j][i].conj();
        }
    }
    g
}

fn validate_hermitian_mp(g: &mut Vec<Vec<MpC>>) -> Result<(), BasesError> {
    let dim = g.len();
    let diag: Vec<f64> = (0..dim).map(|i| g[i][i].re.to_f64().value()).collect();
    for i in 0..dim {
        for j in 0..dim {
            let dev =
                (g[i][j].clone() - g[j][i].conj()).abs_f64() / entry_scale(&diag, i, j);
            if dev > HERMITIAN_TOL {
                return Err(BasesError::NotHermitian { row: i, col: j, deviation: dev });
            }
        }
    }
    let half = MpF::try_from(0.5).expect("exact");
    for i in 0..dim {
        for j in 0..i {
            let avg = (g[i][j].clone() + g[j][i].conj()).scale(&half);
            g[j][i] = avg.conj();
            g[i][j] = avg;
        }
        g[i][i] = MpC::new(g[i][i].re.clone(), MpF::ZERO);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Orthonormal construction (moment route)
// ---------------------------------------------------------------------------

/// `build_orthonormal` with the default quadrature and double precision.
pub fn build_orthonormal(
    d: &ConformalDomain,
    family: BasisFamily,
    n_max: usize,
) -> Result<BasisTable, BasesError> {
    build_orthonormal_prec(d, family, n_max, Precision::Double, DEFAULT_QUADRATURE_M)
}

/// Orthonormalizes `1, z, …, z^N` in the family's inner product by Cholesky
/// factorization of the moment matrix, then *certifies* the result against an
/// independently quadratured Gram matrix: the build fails unless the verified
/// residual is ≤ 1e−8. Double precision holds to N ≈ 30 on the catalog
/// domains; the extended mode (exact-extraction moments for Bergman,
/// extended-precision quadrature for Szegő) holds to N ≈ 60 and beyond.
pub fn build_orthonormal_prec(
    d: &ConformalDomain,
    family: BasisFamily,
    n_max: usize,
    precision: Precision,
    m: usize,
) -> Result<BasisTable, BasesError> {
    if family == BasisFamily::Faber {
        return Err(BasesError::UnsupportedFamily { family, op: "build_orthonormal" });
    }
    require_valid_m(m)?;
    match precision {
        Precision::Double => {
            let mm = moment_matrix(d, family, n_max, m)?;
            let g = &mm.entries;
            let mut c = orthonormal_rows_from_gram(g)?;
            for _ in 0..2 {
                refine_rows(&mut c, g)?;
            }
            // Independent re-quadrature: same node count, half-step offset —
            // a disjoint node set, hence independent rounding and aliasing.
            let mut g2 = moment_entries_f64(d, family, n_max, mm.quadrature_m, true);
            validate_hermitian(&mut g2)?;
            let residual = identity_residual(&congruence(&c, &g2));
            if residual > GRAM_TOL {
                return Err(BasesError::GramResidual { residual, tol: GRAM_TOL });
            }
            let polys = rows_to_polys_c64(&c);
            Ok(BasisTable {
                family,
                domain: d.clone(),
                polys,
                faber_rows: None,
                meta: BuildMeta {
                    quadrature_m: Some(mm.quadrature_m),
                    precision,
                    max_gram_residual: Some(residual),
                    faber_oracle_checked_to: None,
                },
            })
        }
        Precision::Extended(bits) => {
            if !(64..=1024).contains(&bits) {
                return Err(BasesError::BadPrecision { bits });
            }
            let (g, g2) = match family {
                BasisFamily::Bergman => (
                    bergman_moments_extended(d, n_max, bits)?,
                    bergman_moments_mp_quadrature(d, n_max, m, bits),
                ),
                BasisFamily::Szego => (
                    szego_moments_mp_quadrature(d, n_max, m, bits),
                    szego_moments_mp_quadrature(d, n_max, 2 * m, bits),
                ),
                BasisFamily::Faber => unreachable!(),
            };
            let c = orthonormal_rows_from_gram(&g)?;
            let residual = identity_residual(&congruence(&c, &g2));
            if residual > GRAM_TOL {
                return Err(BasesError::GramResidual { residual, tol: GRAM_TOL });
            }
            let polys = rows_to_polys_mp(&c);
            Ok(BasisTable {
                family,
                domain: d.clone(),
                polys,
                faber_rows: None,
                meta: BuildMeta {
                    quadrature_m: Some(m),
                    precision,
                    max_gram_residual: Some(residual),
                    faber_oracle_checked_to: None,
                },
            })
        }
    }
}

fn rows_to_polys_c64(c: &[Vec<Complex64>]) -> Vec<Poly<Complex64>> {
    c.iter()
        .enumerate()
        .map(|(i, row)| Poly::new(row[..=i].to_vec()))
        .collect()
}

fn rows_to_polys_mp(c: &[Vec<MpC>]) -> Vec<Poly<Complex64>> {
    c.iter()
        .enumerate()
        .map(|(i, row)| Poly::new(row[..=i].iter().map(|e| e.to_c64()).collect()))
        .collect()
}

// ---------------------------------------------------------------------------
// Faber polynomials
// ---------------------------------------------------------------------------

/// Monomial coefficient vectors of `F_0..F_N` from the generating-identity
/// recurrence. Writing `Ψ(w) = c·w + b₀ + Σ_{j=1}^p b_j w^{−j}` and matching
/// coefficients of `w^{−N}` in `Ψ′(w) = (Ψ(w) − z) Σ_n F_n(z) w^{−n−1}`:
///
/// `c·F_N = (z − b₀)F_{N−1} − Σ_{j=1}^{min(p,N−1)} b_j F_{N−1−j}
///          − (N−1)·b_{N−1}·[2 ≤ N ≤ p+1]`, with `F_0 = 1`.
fn faber_coefficients<C: CScalar>(
    psi: &LaurentSlice<C>,
    cap_inv: &C,
    n_max: usize,
) -> Vec<Vec<C>> {
    let b0 = psi.get(0).unwrap_or_else(C::zero);
    let p = (-psi.lo()).max(0) as usize;
    let bs: Vec<C> = (1..=p).map(|j| psi.get(-(j as i64)).unwrap_or_else(C::zero)).collect();
    let mut f: Vec<Vec<C>> = Vec::with_capacity(n_max + 1);
    f.push(vec![C::one()]);
    for n in 1..=n_max {
        let mut c = vec![C::zero(); n + 1];
        for k in 0..n {
            c[k + 1] = c[k + 1].clone() + f[n - 1][k].clone();
        }
        if !b0.is_zero() {
            for k in 0..n {
                c[k] = c[k].clone() - b0.clone() * f[n - 1][k].clone();
            }
        }
        for j in 1..=p.min(n - 1) {
            if bs[j - 1].is_zero() {
                continue;
            }
            for (k, fk) in f[n - 1 - j].iter().enumerate() {
                c[k] = c[k].clone() - bs[j - 1].clone() * fk.clone();
            }
        }
        if n >= 2 && n <= p + 1 {
            let scale = C::from_c64(Complex64::new((n - 1) as f64, 0.0));
            c[0] = c[0].clone() - scale * bs[n - 2].clone();
        }
        for e in c.iter_mut() {
            *e = e.clone() * cap_inv.clone();
        }
        f.push(c);
    }
    f
}

/// Value/derivative recurrences for the Faber family of one domain. The same
/// coefficients that define the polynomials drive a numerically benign
/// three-term-style recurrence on *values*, which is how every high-degree
/// evaluation in this crate proceeds.
#[derive(Debug, Clone)]
pub struct FaberEngine<C: CScalar> {
    b0: C,
    bs: Vec<C>,
    cap_inv: C,
    cap: f64,
    bs_abs: Vec<f64>,
}

impl FaberEngine<Complex64> {
    pub fn new(d: &ConformalDomain) -> Self {
        let psi = d.psi();
        let p = (-psi.lo()).max(0) as usize;
        let bs: Vec<Complex64> =
            (1..=p).map(|j| psi.get(-(j as i64)).unwrap_or_else(CScalar::zero)).collect();
        FaberEngine {
            b0: d.center(),
            bs_abs: bs.iter().map(|b| b.norm()).collect(),
            bs,
            cap_inv: Complex64::new(1.0 / d.capacity(), 0.0),
            cap: d.capacity(),
        }
    }
}

impl FaberEngine<MpC> {
    /// Extended-precision engine; the capacity reciprocal is formed at the
    /// working precision rather than rounded through `f64`.
    pub fn new_mp(d: &ConformalDomain, bits: usize) -> Self {
        let psi = d.psi();
        let p = (-psi.lo()).max(0) as usize;
        let bs: Vec<MpC> = (1..=p)
            .map(|j| {
                MpC::from_c64_prec(
                    psi.get(-(j as i64)).unwrap_or_else(CScalar::zero),
                    bits,
                )
            })
            .collect();
        let one = MpC::from_c64_prec(Complex64::new(1.0, 0.0), bits);
        let cap = MpC::from_c64_prec(Complex64::new(d.capacity(), 0.0), bits);
        FaberEngine {
            b0: MpC::from_c64_prec(d.center(), bits),
            bs_abs: bs.iter().map(|b| b.abs_f64()).collect(),
            bs,
            cap_inv: MpC::div_ref(&one, &cap),
            cap: d.capacity(),
        }
    }
}

impl<C: CScalar> FaberEngine<C> {
    /// `[F_0(z), …, F_{n_max}(z)]`.
    pub fn values(&self, z: &C, n_max: usize) -> Vec<C> {
        let p = self.bs.len();
        let mut f = Vec::with_capacity(n_max + 1);
        f.push(C::one());
        for n in 1..=n_max {
            let mut v = (z.clone() - self.b0.clone()) * f[n - 1].clone();
            for j in 1..=p.min(n - 1) {
                v = v - self.bs[j - 1].clone() * f[n - 1 - j].clone();
            }
            if n >= 2 && n <= p + 1 {
                let s = C::from_c64(Complex64::new((n - 1) as f64, 0.0));
                v = v - s * self.bs[n - 2].clone();
            }
            f.push(v * self.cap_inv.clone());
        }
        f
    }

    /// Values and derivatives (the derivative recurrence is the z-derivative
    /// of the value recurrence).
    pub fn values_with_deriv(&self, z: &C, n_max: usize) -> (Vec<C>, Vec<C>) {
        let p = self.bs.len();
        let mut f = Vec::with_capacity(n_max + 1);
        let mut df = Vec::with_capacity(n_max + 1);
        f.push(C::one());
        df.push(C::zero());
        for n in 1..=n_max {
            let zb = z.clone() - self.b0.clone();
            let mut v = zb.clone() * f[n - 1].clone();
            let mut dv = zb * df[n - 1].clone() + f[n - 1].clone();
            for j in 1..=p.min(n - 1) {
                v = v - self.bs[j - 1].clone() * f[n - 1 - j].clone();
                dv = dv - self.bs[j - 1].clone() * df[n - 1 - j].clone();
            }
            if n >= 2 && n <= p + 1 {
                let s = C::from_c64(Complex64::new((n - 1) as f64, 0.0));
                v = v - s * self.bs[n - 2].clone();
            }
            f.push(v * self.cap_inv.clone());
            df.push(dv * self.cap_inv.clone());
        }
        (f, df)
    }

    /// Values with first and second derivatives of `F_0..F_{n_max}`.
    pub fn values_with_two_derivs(&self, z: &C, n_max: usize) -> (Vec<C>, Vec<C>, Vec<C>) {
        let p = self.bs.len();
        let mut f = Vec::with_capacity(n_max + 1);
        let mut df = Vec::with_capacity(n_max + 1);
        let mut ddf = Vec::with_capacity(n_max + 1);
        f.push(C::one());
        df.push(C::zero());
        ddf.push(C::zero());
        let two = C::from_c64(Complex64::new(2.0, 0.0));
        for n in 1..=n_max {
            let zb = z.clone() - self.b0.clone();
            let mut v = zb.clone() * f[n - 1].clone();
            let mut dv = zb.clone() * df[n - 1].clone() + f[n - 1].clone();
            let mut ddv = zb * ddf[n - 1].clone() + two.clone() * df[n - 1].clone();
            for j in 1..=p.min(n - 1) {
                v = v - self.bs[j - 1].clone() * f[n - 1 - j].clone();
                dv = dv - self.bs[j - 1].clone() * df[n - 1 - j].clone();
                ddv = ddv - self.bs[j - 1].clone() * ddf[n - 1 - j].clone();
            }
            if n >= 2 && n <= p + 1 {
                let s = C::from_c64(Complex64::new((n - 1) as f64, 0.0));
                v = v - s * self.bs[n - 2].clone();
            }
            f.push(v * self.cap_inv.clone());
            df.push(dv * self.cap_inv.clone());
            ddf.push(ddv * self.cap_inv.clone());
        }
        (f, df, ddf)
    }

    /// Upper bound for `max_{|w|=r} |Ψ(w)|` (initial root circles).
    fn psi_abs_bound(&self, r: f64) -> f64 {
        let mut s = self.cap * r + self.b0.abs_f64();
        for (j, b) in self.bs_abs.iter().enumerate() {
            s += b * r.powi(-(j as i32 + 1));
        }
        s
    }
}

/// Builds `F_0..F_N` by the generating-identity recurrence and hard-verifies
/// them (for `n ≤ min(N, 40)`) against two independent routes in 128-bit
/// arithmetic: the same recurrence at extended precision, and the reversion
/// oracle — `Φ` expanded at infinity by series reversion of `Ψ`, raised to
/// the n-th power, truncated to nonnegative exponents.
pub fn build_faber(d: &ConformalDomain, n_max: usize) -> Result<BasisTable, BasesError> {
    let cap_inv = Complex64::new(1.0 / d.capacity(), 0.0);
    let coeffs = faber_coefficients(d.psi(), &cap_inv, n_max);

    let check_to = n_max.min(40);
    let bits = 128;
    let psi_mp = lift_slice(d.psi(), bits);
    let one_mp = MpC::from_c64_prec(Complex64::new(1.0, 0.0), bits);
    let cap_mp = MpC::from_c64_prec(Complex64::new(d.capacity(), 0.0), bits);
    let cap_inv_mp = MpC::div_ref(&one_mp, &cap_mp);
    let mp = faber_coefficients(&psi_mp, &cap_inv_mp, check_to);

    // Route 1: double recurrence vs extended recurrence.
    let mut worst = (0usize, 0.0f64);
    for n in 0..=check_to {
        for k in 0..=n {
            let diff = (MpC::from_c64_prec(coeffs[n][k], bits) - mp[n][k].clone()).abs_f64();
            if diff > worst.1 {
                worst = (n, diff);
            }
        }
    }
    if worst.1 > FABER_ORACLE_TOL {
        return Err(BasesError::FaberOracleMismatch {
            n: worst.0,
            route: "double recurrence vs extended recurrence",
            discrepancy: worst.1,
            tol: FABER_ORACLE_TOL,
        });
    }

    // Route 2: extended recurrence vs reversion oracle.
    let depth = check_to + 4;
    let phi = revert_exterior_map(&psi_mp, cap_inv_mp, depth)?;
    let mut pow = phi.clone();
    let mut worst = (0usize, 0.0f64);
    for n in 1..=check_to {
        if n > 1 {
            pow = laurent_multiply_max(&pow, &phi, -(depth as i64) - 8, check_to as i64 + 2)?;
        }
        for k in 0..=n {
            let oracle = pow
                .get(k as i64)
                .expect("reversion depth certifies the polynomial part");
            let diff = (oracle - mp[n][k].clone()).abs_f64();
            if diff > worst.1 {
                worst = (n, diff);
            }
        }
    }
    if worst.1 > FABER_ORACLE_TOL {
        return Err(BasesError::FaberOracleMismatch {
            n: worst.0,
            route: "recurrence vs reversion oracle",
            discrepancy: worst.1,
            tol: FABER_ORACLE_TOL,
        });
    }

    Ok(BasisTable {
        family: BasisFamily::Faber,
        domain: d.clone(),
        polys: coeffs.into_iter().map(Poly::new).collect(),
        faber_rows: None,
        meta: BuildMeta {
            quadrature_m: None,
            precision: Precision::Double,
            max_gram_residual: None,
            faber_oracle_checked_to: Some(check_to),
        },
    })
}

/// The composites `G_n(u) = F_n(Ψ(u))` as finite Laurent windows, by the same
/// recurrence run in `u`-space. On the catalog domains their coefficients
/// stay O(1) at every degree — this is the well-conditioned representation
/// behind the stable route (e.g. on the ellipse, `G_n = u^n + b^n u^{−n}`
/// exactly).
pub fn faber_circle_slices(
    d: &ConformalDomain,
    n_max: usize,
) -> Result<Vec<LaurentSlice<Complex64>>, BasesError> {
    let psi = d.psi();
    let cap_inv = Complex64::new(1.0 / d.capacity(), 0.0);
    let p = (-psi.lo()).max(0) as usize;
    let bs: Vec<Complex64> =
        (1..=p).map(|j| psi.get(-(j as i64)).unwrap_or_else(CScalar::zero)).collect();
    // Ψ − b₀ as a slice
    let psi_mb0 = {
        let mut coeffs = psi.coeffs().to_vec();
        if psi.lo() <= 0 && psi.hi() >= 0 {
            coeffs[(-psi.lo()) as usize] = Complex64::new(0.0, 0.0);
        }
        LaurentSlice::finite(psi.lo(), coeffs)
    };
    let mut g: Vec<LaurentSlice<Complex64>> = Vec::with_capacity(n_max + 1);
    g.push(LaurentSlice::finite(0, vec![Complex64::new(1.0, 0.0)]));
    for n in 1..=n_max {
        let mut s = laurent_multiply_max(&g[n - 1], &psi_mb0, -WIDE, WIDE)?;
        for j in 1..=p.min(n - 1) {
            if bs[j - 1].norm() != 0.0 {
                s = s.sub(&g[n - 1 - j].scale(&bs[j - 1]))?;
            }
        }
        if n >= 2 && n <= p + 1 {
            let konst = Complex64::new((n - 1) as f64, 0.0) * bs[n - 2];
            if konst.norm() != 0.0 {
                s = s.sub(&LaurentSlice::finite(0, vec![konst]))?;
            }
        }
        g.push(s.scale(&cap_inv));
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// Stable route: orthonormalization in the Faber basis
// ---------------------------------------------------------------------------

/// Term-by-term `u`-antiderivative of a finite window; the `u^{−1}`
/// coefficient must vanish (it is the residue of `F_n(Ψ(u))Ψ′(u)`, zero
/// because `∮ F_n(z) dz = 0`), which is asserted and dropped.
fn antiderivative_u(
    g: &LaurentSlice<Complex64>,
    n_for_err: usize,
) -> Result<LaurentSlice<Complex64>, BasesError> {
    let residue = g.get(-1).unwrap_or_else(CScalar::zero);
    if residue.norm() > 1e-9 * (1.0 + g.max_coeff_abs()) {
        return Err(BasesError::ResidueNotZero { n: n_for_err, magnitude: residue.norm() });
    }
    let lo = g.lo();
    let hi = g.hi();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); (hi + 1 - lo + 1).max(1) as usize];
    for e in lo..=hi {
        if e == -1 {
            continue;
        }
        let c = g.get(e).expect("inside window");
        coeffs[(e + 1 - lo) as usize] = c / (e as f64 + 1.0);
    }
    Ok(LaurentSlice::finite(lo, coeffs))
}

fn dot_conj_c64(x: &LaurentSlice<Complex64>, y: &LaurentSlice<Complex64>) -> Complex64 {
    let lo = x.lo().max(y.lo());
    let hi = x.hi().min(y.hi());
    let mut acc = Complex64::new(0.0, 0.0);
    for e in lo..=hi {
        acc += x.get(e).expect("inside window") * y.get(e).expect("inside window").conj();
    }
    acc
}

/// The Faber-basis Gram matrix `⟨F_j, F_k⟩` of the family's inner product.
///
/// Bergman: with `g_k = G_k·Ψ′`, `A_k` its `u`-antiderivative and
/// `P_j = g_j·u`, Green's theorem plus Parseval on the circle give
/// `⟨F_j, F_k⟩ = π Σ_e P_j(e)·conj(A_k(e))` — exact up to rounding.
/// Szegő: trapezoid over the circle with the value recurrence at each node
/// (spectrally converged: the aliased coefficients decay like
/// `r_inner^{|e|}` past the window).
pub fn faber_gram(
    d: &ConformalDomain,
    family: BasisFamily,
    n_max: usize,
    m: usize,
) -> Result<Vec<Vec<Complex64>>, BasesError> {
    let dim = n_max + 1;
    let mut g = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    match family {
        BasisFamily::Bergman => {
            let slices = faber_circle_slices(d, n_max)?;
            let dpsi = d.psi_prime_series();
            let mut ps = Vec::with_capacity(dim);
            let mut anti = Vec::with_capacity(dim);
            for (n, s) in slices.iter().enumerate() {
                let gk = laurent_multiply_max(s, dpsi, -WIDE, WIDE)?;
                anti.push(antiderivative_u(&gk, n)?);
                ps.push(gk.shift(1));
            }
            for j in 0..dim {
                for k in 0..dim {
                    g[j][k] = std::f64::consts::PI * dot_conj_c64(&ps[j], &anti[k]);
                }
            }
        }
        BasisFamily::Szego => {
            require_valid_m(m)?;
            let engine = FaberEngine::new(d);
            let nodes = boundary_nodes(d, m, false);
            for i in 0..m {
                let v = engine.values(&nodes.z[i].to_c64(), n_max);
                let w = nodes.arc_w[i].to_f64();
                for k in 0..dim {
                    let t = v[k].conj() * w;
                    for j in 0..=k {
                        g[j][k] += v[j] * t;
                    }
                }
            }
            for i in 0..dim {
                for j in 0..i {
                    g[i][j] = g[j][i].conj();
                }
            }
        }
        BasisFamily::Faber => {
            return Err(BasesError::UnsupportedFamily { family, op: "faber_gram" })
        }
    }
    validate_hermitian(&mut g)?;
    Ok(g)
}

/// Linear combination of Laurent windows with the given weights.
fn combine_slices(
    slices: &[LaurentSlice<Complex64>],
    weights: &[Complex64],
) -> LaurentSlice<Complex64> {
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for (s, w) in slices.iter().zip(weights) {
        if w.norm() != 0.0 {
            lo = lo.min(s.lo());
            hi = hi.max(s.hi());
        }
    }
    if lo > hi {
        return LaurentSlice::zero();
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
    for (s, w) in slices.iter().zip(weights) {
        if w.norm() == 0.0 {
            continue;
        }
        for (i, c) in s.coeffs().iter().enumerate() {
            coeffs[(s.lo() + i as i64 - lo) as usize] += w * c;
        }
    }
    LaurentSlice::finite(lo, coeffs)
}

/// Deterministic spread of row indices for the sampled residual check.
fn sample_rows(n_max: usize, count: usize) -> Vec<usize> {
    let mut s: Vec<usize> = vec![0, 1, 2, n_max.saturating_sub(2), n_max.saturating_sub(1), n_max];
    for i in 0..count {
        s.push(((i + 1) * n_max) / (count + 1));
    }
    s.sort_unstable();
    s.dedup();
    s.retain(|&i| i <= n_max);
    s
}

/// Orthonormalizes the Faber basis in the family's inner product; returns the
/// lower-triangular rows `B_n = Σ_j rows[n][j] F_j` together with the
/// verified residual from an independent quadrature.
fn orthonormal_in_faber(
    d: &ConformalDomain,
    family: BasisFamily,
    n_max: usize,
    m: usize,
) -> Result<(Vec<Vec<Complex64>>, f64), BasesError> {
    let g = faber_gram(d, family, n_max, m)?;
    let mut c = orthonormal_rows_from_gram(&g)?;
    refine_rows(&mut c, &g)?;

    // Independent residual check. Full matrix when small; a deterministic
    // row sample at large degree (the check guards against route-level bugs —
    // normalization, index shifts — which any sampled row exposes).
    let residual = if n_max <= 128 {
        let g2 = match family {
            BasisFamily::Bergman => {
                // quadrature route, node-for-node independent of Parseval
                let slices = faber_circle_slices(d, n_max)?;
                let dpsi = d.psi_prime_series();
                let mut ps = Vec::with_capacity(n_max + 1);
                let mut anti = Vec::with_capacity(n_max + 1);
                for (n, s) in slices.iter().enumerate() {
                    let gk = laurent_multiply_max(s, dpsi, -WIDE, WIDE)?;
                    anti.push(antiderivative_u(&gk, n)?);
                    ps.push(gk.shift(1));
                }
                let tau = 2.0 * std::f64::consts::PI;
                let dim = n_max + 1;
                let mut g2 = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
                for i in 0..m {
                    let u = Complex64::from_polar(1.0, tau * (i as f64 + 0.5) / m as f64);
                    let pv: Vec<Complex64> = ps.iter().map(|s| s.eval(&u)).collect();
                    let av: Vec<Complex64> = anti.iter().map(|s| s.eval(&u)).collect();
                    for j in 0..dim {
                        for k in 0..dim {
                            g2[j][k] += pv[j] * av[k].conj();
                        }
                    }
                }
                let scale = std::f64::consts::PI / m as f64;
                for row in g2.iter_mut() {
                    for e in row.iter_mut() {
                        *e *= scale;
                    }
                }
                g2
            }
            BasisFamily::Szego => {
                let engine = FaberEngine::new(d);
                let nodes = boundary_nodes(d, 2 * m, true);
                let dim = n_max + 1;
                let mut g2 = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
                for i in 0..2 * m {
                    let v = engine.values(&nodes.z[i].to_c64(), n_max);
                    for k in 0..dim {
                        let t = v[k].conj() * nodes.arc_w[i].to_f64();
                        for j in 0..dim {
                            g2[j][k] += v[j] * t;
                        }
                    }
                }
                g2
            }
            BasisFamily::Faber => unreachable!(),
        };
        identity_residual(&congruence(&c, &g2))
    } else {
        let rows_idx = sample_rows(n_max, 26);
        let mut worst = 0.0f64;
        match family {
            BasisFamily::Bergman => {
                let slices = faber_circle_slices(d, n_max)?;
                let dpsi = d.psi_prime_series();
                let mut ps = Vec::with_capacity(n_max + 1);
                let mut anti = Vec::with_capacity(n_max + 1);
                for (n, s) in slices.iter().enumerate() {
                    let gk = laurent_multiply_max(s, dpsi, -WIDE, WIDE)?;
                    anti.push(antiderivative_u(&gk, n)?);
                    ps.push(gk.shift(1));
                }
                let collapsed_p: Vec<LaurentSlice<Complex64>> =
                    rows_idx.iter().map(|&s| combine_slices(&ps[..=s], &c[s][..=s])).collect();
                let collapsed_a: Vec<LaurentSlice<Complex64>> =
                    rows_idx.iter().map(|&s| combine_slices(&anti[..=s], &c[s][..=s])).collect();
                let tau = 2.0 * std::f64::consts::PI;
                let mut r = vec![vec![Complex64::new(0.0, 0.0); rows_idx.len()]; rows_idx.len()];
                for i in 0..m {
                    let u = Complex64::from_polar(1.0, tau * (i as f64 + 0.5) / m as f64);
                    let pv: Vec<Complex64> = collapsed_p.iter().map(|s| s.eval(&u)).collect();
                    let av: Vec<Complex64> = collapsed_a.iter().map(|s| s.eval(&u)).collect();
                    for s in 0..rows_idx.len() {
                        for t in 0..rows_idx.len() {
                            r[s][t] += pv[s] * av[t].conj();
                        }
                    }
                }
                let scale = std::f64::consts::PI / m as f64;
                for (s, row) in r.iter().enumerate() {
                    for (t, e) in row.iter().enumerate() {
                        let want = if rows_idx[s] == rows_idx[t] { 1.0 } else { 0.0 };
                        worst = worst.max((e * scale - Complex64::new(want, 0.0)).norm());
                    }
                }
            }
            BasisFamily::Szego => {
                let engine = FaberEngine::new(d);
                let nodes = boundary_nodes(d, 2 * m, true);
                let mut r = vec![vec![Complex64::new(0.0, 0.0); rows_idx.len()]; rows_idx.len()];
                for i in 0..2 * m {
                    let v = engine.values(&nodes.z[i].to_c64(), n_max);
                    let coll: Vec<Complex64> =
                        rows_idx.iter().map(|&s| dot_row(&c[s][..=s], &v)).collect();
                    for s in 0..rows_idx.len() {
                        let t0 = coll[s].conj() * nodes.arc_w[i].to_f64();
                        for t in 0..rows_idx.len() {
                            r[t][s] += coll[t] * t0;
                        }
                    }
                }
                for (s, row) in r.iter().enumerate() {
                    for (t, e) in row.iter().enumerate() {
                        let want = if rows_idx[s] == rows_idx[t] { 1.0 } else { 0.0 };
                        worst = worst.max((e - Complex64::new(want, 0.0)).norm());
                    }
                }
            }
            BasisFamily::Faber => unreachable!(),
        }
        worst
    };
    if residual > GRAM_TOL {
        return Err(BasesError::GramResidual { residual, tol: GRAM_TOL });
    }
    let rows: Vec<Vec<Complex64>> = c
        .iter()
        .enumerate()
        .map(|(i, row)| row[..=i].to_vec())
        .collect();
    Ok((rows, residual))
}

/// Builds an orthonormal table through the Faber-basis route: well-conditioned
/// at degrees far beyond the monomial moment route (the equilibrated Faber
/// Gram of the catalog domains has O(1) condition number), with evaluation
/// through the value recurrence. For `family = Faber` this is `build_faber`.
///
/// The stored monomial `polys` of a high-degree stable table are derived
/// reference data (their coefficients are exact images of the rows, but
/// *evaluating* them at interesting points cancels catastrophically); all
/// numerics on the table go through the rows.
pub fn build_basis_stable(
    d: &ConformalDomain,
    family: BasisFamily,
    n_max: usize,
    m: usize,
) -> Result<BasisTable, BasesError> {
    if family == BasisFamily::Faber {
        return build_faber(d, n_max);
    }
    // Building the Faber table first both provides the monomial forms and
    // runs the dual-route recurrence oracle.
    let faber = build_faber(d, n_max)?;
    let (rows, residual) = orthonormal_in_faber(d, family, n_max, m)?;
    let polys: Vec<Poly<Complex64>> = rows
        .iter()
        .map(|row| {
            let mut p = Poly::zero();
            for (j, w) in row.iter().enumerate() {
                if w.norm() != 0.0 {
                    p = p.add(&faber.polys[j].scale(w));
                }
            }
            p
        })
        .collect();
    Ok(BasisTable {
        family,
        domain: d.clone(),
        polys,
        faber_rows: Some(rows),
        meta: BuildMeta {
            quadrature_m: Some(m),
            precision: Precision::Double,
            max_gram_residual: Some(residual),
            faber_oracle_checked_to: faber.meta.faber_oracle_checked_to,
        },
    })
}

// ---------------------------------------------------------------------------
// Asymptotics checkers
// ---------------------------------------------------------------------------

/// One degree's deviation sample.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticsRow {
    pub n: usize,
    /// `max_θ |B_n(Ψ(ρe^{iθ})) / (√((n+1)/π)·(ρe^{iθ})^n·Φ′) − 1|`.
    pub deviation: f64,
    /// False when the evaluation overflowed at this degree.
    pub finite: bool,
}

/// Deviation-from-asymptotic report with empirical decay fits.
#[derive(Debug, Clone)]
pub struct AsymptoticsReport {
    /// "exterior" (ρ > 1) or "interior" (r_inner < ρ < 1).
    pub regime: &'static str,
    pub rows: Vec<AsymptoticsRow>,
    /// Deviations below this are at the measurement floor and excluded from
    /// the fits (they certify fast decay rather than measuring a rate).
    pub floor: f64,
    pub floor_rows: usize,
    /// Least-squares slope of `log dev` vs `log n` (power-law regime).
    pub loglog_slope: Option<f64>,
    /// Least-squares slope of `log dev` vs `n` (geometric regime).
    pub semilog_rate: Option<f64>,
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Measures how fast `B_n(Ψ(ρe^{iθ}))` approaches its first-order asymptotic
/// form `√((n+1)/π)·(ρe^{iθ})^n·Φ′(Ψ(ρe^{iθ}))` on a 512-point grid of the
/// level curve `L_ρ`, and classifies the decay regime empirically (power law
/// outside, geometric in the interior ring `r_inner < ρ < 1`, where `Φ′`
/// means the analytic continuation `1/Ψ′`).
pub fn check_bergman_asymptotics(
    table: &BasisTable,
    rho: f64,
    n_lo: usize,
    n_hi: usize,
) -> Result<AsymptoticsReport, BasesError> {
    if table.family != BasisFamily::Bergman {
        return Err(BasesError::BergmanOnly { family: table.family });
    }
    if n_lo < 1 || n_lo > n_hi {
        return Err(BasesError::EmptyRange { lo: n_lo, hi: n_hi });
    }
    if n_hi > table.n_max() {
        return Err(BasesError::DegreeUnavailable { needed: n_hi, have: table.n_max() });
    }
    let d = &table.domain;
    if !(rho > d.r_inner()) || rho == 1.0 {
        return Err(BasesError::Domain(DomainError::LevelOutOfRange {
            rho,
            r_inner: d.r_inner(),
        }));
    }
    let grid = 512;
    let tau = 2.0 * std::f64::consts::PI;
    let mut devs = vec![0.0f64; n_hi - n_lo + 1];
    let mut finite = vec![true; n_hi - n_lo + 1];
    for i in 0..grid {
        let w = Complex64::from_polar(rho, tau * i as f64 / grid as f64);
        let z = d.psi().eval(&w);
        let dphi = Complex64::new(1.0, 0.0) / d.psi_prime_series().eval(&w);
        let values = table.eval_through(n_hi, z)?;
        let mut wn = w.powu(n_lo as u32 - 1);
        for n in n_lo..=n_hi {
            wn *= w;
            let target = ((n as f64 + 1.0) / std::f64::consts::PI).sqrt() * wn * dphi;
            let idx = n - n_lo;
            if !values[n].is_finite() || !target.is_finite() || target.norm() == 0.0 {
                finite[idx] = false;
                continue;
            }
            let dev = (values[n] / target - Complex64::new(1.0, 0.0)).norm();
            if !dev.is_finite() {
                finite[idx] = false;
            } else if dev > devs[idx] {
                devs[idx] = dev;
            }
        }
    }
    let rows: Vec<AsymptoticsRow> = (n_lo..=n_hi)
        .map(|n| AsymptoticsRow { n, deviation: devs[n - n_lo], finite: finite[n - n_lo] })
        .collect();
    let fit_rows: Vec<&AsymptoticsRow> = rows
        .iter()
        .filter(|r| r.finite && r.deviation > DEVIATION_FLOOR)
        .collect();
    let floor_rows = rows.iter().filter(|r| r.finite && r.deviation <= DEVIATION_FLOOR).count();
    let xs_log: Vec<f64> = fit_rows.iter().map(|r| (r.n as f64).ln()).collect();
    let xs_lin: Vec<f64> = fit_rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = fit_rows.iter().map(|r| r.deviation.ln()).collect();
    Ok(AsymptoticsReport {
        regime: if rho > 1.0 { "exterior" } else { "interior" },
        rows,
        floor: DEVIATION_FLOOR,
        floor_rows,
        loglog_slope: ls_slope(&xs_log, &ys),
        semilog_rate: ls_slope(&xs_lin, &ys),
    })
}

/// One degree's normalized modulus band on a level curve.
#[derive(Debug, Clone, Copy)]
pub struct BandRow {
    pub n: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Two-sided bound report: the normalized moduli stay in a band.
#[derive(Debug, Clone)]
pub struct LevelBandReport {
    pub normalizer: &'static str,
    pub rows: Vec<BandRow>,
    /// `max_n max_ratio / min_n min_ratio` — finite iff the band is real.
    pub band_spread: f64,
}

fn band_on_level(
    table: &BasisTable,
    rho: f64,
    n_lo: usize,
    n_hi: usize,
    derivative: bool,
) -> Result<Vec<BandRow>, BasesError> {
    if n_lo < 1 || n_lo > n_hi {
        return Err(BasesError::EmptyRange { lo: n_lo, hi: n_hi });
    }
    if n_hi > table.n_max() {
        return Err(BasesError::DegreeUnavailable { needed: n_hi, have: table.n_max() });
    }
    let d = &table.domain;
    if !(rho > 1.0) {
        return Err(BasesError::Domain(DomainError::LevelOutOfRange {
            rho,
            r_inner: d.r_inner(),
        }));
    }
    let grid = 512;
    let tau = 2.0 * std::f64::consts::PI;
    let mut mins = vec![f64::INFINITY; n_hi - n_lo + 1];
    let mut maxs = vec![0.0f64; n_hi - n_lo + 1];
    for i in 0..grid {
        let w = Complex64::from_polar(rho, tau * i as f64 / grid as f64);
        let z = d.psi().eval(&w);
        let moduli: Vec<f64> = if derivative {
            table.eval_through_with_deriv(n_hi, z)?.1.iter().map(|v| v.norm()).collect()
        } else {
            table.eval_through(n_hi, z)?.iter().map(|v| v.norm()).collect()
        };
        for n in n_lo..=n_hi {
            let nf = n as f64;
            let norm = if derivative {
                let expo = if table.family == BasisFamily::Bergman { 1.5 } else { 1.0 };
                nf.powf(expo) * rho.powi(n as i32 - 1)
            } else if table.family == BasisFamily::Bergman {
                nf.sqrt() * rho.powi(n as i32)
            } else {
                rho.powi(n as i32)
            };
            let r = moduli[n] / norm;
            let idx = n - n_lo;
            mins[idx] = mins[idx].min(r);
            maxs[idx] = maxs[idx].max(r);
        }
    }
    Ok((n_lo..=n_hi)
        .map(|n| BandRow { n, min_ratio: mins[n - n_lo], max_ratio: maxs[n - n_lo] })
        .collect())
}

fn spread(rows: &[BandRow]) -> f64 {
    let hi = rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Checks the two-sided level-curve growth `|B_n| ≍ √n ρ^n` on `L_ρ`, ρ > 1
/// (Bergman normalizer; the Faber/Szegő analogues drop the `√n` factor —
/// family-specific, chosen automatically and recorded in the report).
pub fn level_curve_bounds(
    table: &BasisTable,
    rho: f64,
    n_lo: usize,
    n_hi: usize,
) -> Result<LevelBandReport, BasesError> {
    let rows = band_on_level(table, rho, n_lo, n_hi, false)?;
    let normalizer = if table.family == BasisFamily::Bergman {
        "sqrt(n) * rho^n"
    } else {
        "rho^n (family-specific: no sqrt factor)"
    };
    Ok(LevelBandReport { normalizer, rows: rows.clone(), band_spread: spread(&rows) })
}

/// Checks the derivative growth `|B_n′| ≍ n^{3/2} ρ^{n−1}` on `L_ρ` (Bergman;
/// the Faber/Szegő exponent is 1, family-specific).
pub fn derivative_level_bounds(
    table: &BasisTable,
    rho: f64,
    n_lo: usize,
    n_hi: usize,
) -> Result<LevelBandReport, BasesError> {
    let rows = band_on_level(table, rho, n_lo, n_hi, true)?;
    let normalizer = if table.family == BasisFamily::Bergman {
        "n^(3/2) * rho^(n-1)"
    } else {
        "n * rho^(n-1) (family-specific: exponent 1)"
    };
    Ok(LevelBandReport { normalizer, rows: rows.clone(), band_spread: spread(&rows) })
}

/// n-th root asymptotics report: `|B_n(z)|^{1/n} → |Φ(z)|` for exterior `z`.
#[derive(Debug, Clone)]
pub struct NthRootReport {
    pub rows: Vec<(usize, f64)>,
    pub target: f64,
    pub final_deviation: f64,
}

/// Measures `|B_n(z)|^{1/n}` against `|Φ(z)|` at an exterior point.
pub fn nth_root_asymptotic(
    table: &BasisTable,
    z: Complex64,
    n_lo: usize,
    n_hi: usize,
) -> Result<NthRootReport, BasesError> {
    if n_lo < 1 || n_lo > n_hi {
        return Err(BasesError::EmptyRange { lo: n_lo, hi: n_hi });
    }
    if n_hi > table.n_max() {
        return Err(BasesError::DegreeUnavailable { needed: n_hi, have: table.n_max() });
    }
    let w = table
        .domain
        .phi_eval(z)
        .map_err(|_| BasesError::NotExterior { z })?;
    if w.norm() <= 1.0 {
        return Err(BasesError::NotExterior { z });
    }
    let values = table.eval_through(n_hi, z)?;
    let rows: Vec<(usize, f64)> = (n_lo..=n_hi)
        .map(|n| {
            // |B_n|^{1/n} through logs to survive huge moduli
            (n, (values[n].norm().ln() / n as f64).exp())
        })
        .collect();
    let target = w.norm();
    let final_deviation = (rows.last().expect("nonempty range").1 - target).abs();
    Ok(NthRootReport { rows, target, final_deviation })
}

/// Partial sums `Σ_{n≤k} |B_n(z)|²` for `k = 0..=up_to` (diagonal kernel
/// approximants; on the disk they converge to `1/(π(1−|z|²)²)` for Bergman
/// and `1/(2π(1−|z|²))` for Szegő).
pub fn kernel_partial_sum(
    table: &BasisTable,
    z: Complex64,
    up_to: usize,
) -> Result<Vec<f64>, BasesError> {
    if up_to > table.n_max() {
        return Err(BasesError::DegreeUnavailable { needed: up_to, have: table.n_max() });
    }
    let values = table.eval_through(up_to, z)?;
    let mut acc = 0.0;
    Ok(values
        .iter()
        .map(|v| {
            acc += v.norm_sqr();
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn moment_examples() {
        let disk = ConformalDomain::disk();
        let pi = std::f64::consts::PI;
        assert!((area_moment(&disk, 0, 0, 256).unwrap() - c(pi, 0.0)).norm() < 1e-10);
        assert!(area_moment(&disk, 1, 0, 256).unwrap().norm() < 1e-10);
        assert!((arc_moment(&disk, 0, 0, 256).unwrap() - c(2.0 * pi, 0.0)).norm() < 1e-10);
        assert!((arc_moment(&disk, 3, 3, 256).unwrap() - c(2.0 * pi, 0.0)).norm() < 1e-10);
        assert!(arc_moment(&disk, 2, 1, 256).unwrap().norm() < 1e-10);

        // area of the ellipse with semi-axes a ± b: π(a+b)(a−b) = π(1 − 1/16)
        let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let want = pi * (1.0 - 0.0625);
        assert!((area_moment(&e, 0, 0, 256).unwrap() - c(want, 0.0)).norm() < 1e-9);

        assert!(matches!(
            area_moment(&disk, 0, 0, 100),
            Err(BasesError::BadQuadratureSize { m: 100 })
        ));
    }

    #[test]
    fn moment_matrix_validates() {
        let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let mm = moment_matrix(&e, BasisFamily::Bergman, 8, 256).unwrap();
        assert!(mm.hermitian);
        for i in 0..=8 {
            assert!(mm.entry(i, i).re > 0.0);
            assert!(mm.entry(i, i).im.abs() < 1e-13);
        }
        // ⟨1, z²⟩ on a symmetric domain is real
        assert!(mm.entry(0, 2).im.abs() < 1e-12);
        assert!(matches!(
            moment_matrix(&e, BasisFamily::Faber, 4, 256),
            Err(BasesError::UnsupportedFamily { .. })
        ));
    }

    #[test]
    fn orthonormal_disk_closed_forms() {
        let disk = ConformalDomain::disk();
        let pi = std::f64::consts::PI;
        let b = build_orthonormal(&disk, BasisFamily::Bergman, 2).unwrap();
        // [√(1/π), √(2/π) z, √(3/π) z²]
        for n in 0..=2 {
            let want = ((n as f64 + 1.0) / pi).sqrt();
            let p = b.poly(n).unwrap();
            assert_eq!(p.degree(), Some(n));
            assert!((p.coeff(n) - c(want, 0.0)).norm() < 1e-10, "degree {n}");
            for k in 0..n {
                assert!(p.coeff(k).norm() < 1e-10);
            }
        }
        assert!(b.meta().max_gram_residual.unwrap() < 1e-12);

        let s = build_orthonormal(&disk, BasisFamily::Szego, 1).unwrap();
        let want = 1.0 / (2.0 * pi).sqrt();
        assert!((s.poly(0).unwrap().coeff(0) - c(want, 0.0)).norm() < 1e-10);
        assert!((s.poly(1).unwrap().coeff(1) - c(want, 0.0)).norm() < 1e-10);
        assert!(s.poly(1).unwrap().coeff(0).norm() < 1e-10);
    }

    #[test]
    fn orthonormal_ellipse_certified_to_gram_gate() {
        let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        for family in [BasisFamily::Bergman, BasisFamily::Szego] {
            let t = build_orthonormal_prec(&e, family, 10, Precision::Double, 1024).unwrap();
            let res = t.meta().max_gram_residual.unwrap();
            assert!(res <= 1e-8, "{family}: residual {res:.2e}");
            for n in 0..=10 {
                let lead = *t.poly(n).unwrap().leading().unwrap();
                assert!(lead.re > 0.0 && lead.im.abs() < 1e-10 * lead.re);
            }
        }
    }

    #[test]
    fn faber_disk_is_monomials_and_ellipse_matches_joukowski_identity() {
        let disk = ConformalDomain::disk();
        let t = build_faber(&disk, 3).unwrap();
        for n in 0..=3 {
            let p = t.poly(n).unwrap();
            assert_eq!(p.degree(), Some(n));
            assert!((p.coeff(n) - c(1.0, 0.0)).norm() < 1e-14);
            for k in 0..n {
                assert!(p.coeff(k).norm() < 1e-14);
            }
        }

        // z = w + b/w ⟹ F_1 = z, F_2 = z² − 2b (= z² − 0.5 at b = 1/4)
        let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let t = build_faber(&e, 12).unwrap();
        assert!((t.poly(1).unwrap().coeff(1) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(t.poly(1).unwrap().coeff(0).norm() < 1e-14);
        assert!((t.poly(2).unwrap().coeff(0) - c(-0.5, 0.0)).norm() < 1e-14);
        // F_n(Ψ(w)) = w^n + b^n w^{−n} (n ≥ 1; F_0 = 1)
        for n in 1..=12 {
            for &theta in &[0.3, 1.1, 2.9] {
                let w = Complex64::from_polar(1.4, theta);
                let z = e.psi_eval(w).unwrap();
                let want = w.powu(n) + c(0.25, 0.0).powu(n) * w.powu(n).inv();
                let got = t.poly(n as usize).unwrap().eval(&z);
                assert!((got - want).norm() < 1e-10 * (1.0 + want.norm()), "n={n}");
            }
        }
        assert_eq!(t.meta().faber_oracle_checked_to, Some(12));
    }

    #[test]
    fn faber_leading_coefficient_is_inverse_capacity_power() {
        // capacity 2 here, so leading(F_n) = 2^{−n}
        let e = ConformalDomain::ellipse(2.0, 0.5).unwrap();
        let t = build_faber(&e, 10).unwrap();
        for n in 0..=10 {
            let lead = *t.poly(n).unwrap().leading().unwrap();
            assert!(
                (lead - c(0.5f64.powi(n as i32), 0.0)).norm() < 1e-12 * 0.5f64.powi(n as i32),
                "n = {n}"
            );
        }
    }

    #[test]
    fn faber_oracle_runs_on_catalog() {
        for d in [
            ConformalDomain::disk(),
            ConformalDomain::ellipse(1.0, 0.25).unwrap(),
            ConformalDomain::perturbed_circle(0.15, 2).unwrap(),
        ] {
            let t = build_faber(&d, 10).unwrap();
            assert_eq!(t.meta().faber_oracle_checked_to, Some(10));
        }
    }

    #[test]
    fn faber_engine_matches_coefficient_polys() {
        let d = ConformalDomain::perturbed_circle(0.2, 3).unwrap();
        let t = build_faber(&d, 15).unwrap();
        let engine = FaberEngine::new(&d);
        for &z in &[c(1.3, 0.4), c(-0.2, 0.9), c(2.0, -1.0)] {
            let (vals, derivs) = engine.values_with_deriv(&z, 15);
            for n in 0..=15 {
                let (p, dp) = t.poly(n).unwrap().eval_with_derivative(&z);
                assert!((vals[n] - p).norm() < 1e-11 * (1.0 + p.norm()), "value n={n}");
                assert!((derivs[n] - dp).norm() < 1e-10 * (1.0 + dp.norm()), "deriv n={n}");
            }
        }
    }

    #[test]
    fn faber_circle_slices_match_ellipse_closed_form() {
        let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let g = faber_circle_slices(&e, 20).unwrap();
        for (n, s) in g.iter().enumerate() {
            // G_n = u^n + b^n u^{−n}
            for k in s.lo()..=s.hi() {
                let got = s.get(k).unwrap();
                let want = if k == n as i64 {
                    1.0
                } else if n > 0 && k == -(n as i64) {
                    0.25f64.powi(n as i32)
                } else {
                    0.0
                };
                assert!((got - c(want, 0.0)).norm() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn stable_bergman_ellipse_matches_frozen_closed_form() {
        // The Bergman-orthonormal polynomials of the ellipse are
        // q_n(w) = Σ_{k=0}^n b^k w^{n−2k} over √(π(1−b^{2n+2})/(n+1)):
        // orthogonality and the norm follow from Green+Parseval in u-space.
        let b = 0.25f64;
        let e = ConformalDomain::ellipse(1.0, b).unwrap();
        let t = build_basis_stable(&e, BasisFamily::Bergman, 30, 1024).unwrap();
        let rows = t.faber_rows().unwrap();
        let pi = std::f64::consts::PI;
        for n in (0..=30).step_by(3) {
            let mu = pi * (1.0 - b.powi(2 * n as i32 + 2)) / (n as f64 + 1.0);
            let lead = 1.0 / mu.sqrt();
            assert!(
                (rows[n][n] - c(lead, 0.0)).norm() < 1e-9 * lead,
                "leading Faber coordinate at n={n}"
            );
            if n >= 2 {
                // next band: coefficient of F_{n−2} is b·leading
                assert!((rows[n][n - 2] - c(b * lead, 0.0)).norm() < 1e-9 * lead);
            }
            // value check against q_n(w)/√μ_n
            let w = Complex64::from_polar(1.7, 0.83);
            let z = e.psi_eval(w).unwrap();
            let mut q = c(0.0, 0.0);
            for k in 0..=n {
                q += c(b.powi(k as i32), 0.0) * w.powi(n as i32 - 2 * k as i32);
            }
            let want = q / mu.sqrt();
            let got = t.eval_basis(n, z).unwrap();
            assert!((got - want).norm() < 1e-9 * (1.0 + want.norm()), "value at n={n}");
        }
        assert!(t.meta().max_gram_residual.unwrap() < 1e-10);
    }

    #[test]
    fn kernel_sums_match_disk_closed_forms() {
        let disk = ConformalDomain::disk();
        let z = c(0.5, 0.0);
        let bergman = build_orthonormal(&disk, BasisFamily::Bergman, 60).unwrap();
        let sums = kernel_partial_sum(&bergman, z, 60).unwrap();
        let want_b = 1.0 / (std::f64::consts::PI * (1.0 - 0.25) * (1.0 - 0.25));
        assert!((sums[60] - want_b).abs() < 1e-6, "bergman kernel: {} vs {want_b}", sums[60]);
        // increasing partial sums
        for k in 1..=60 {
            assert!(sums[k] >= sums[k - 1]);
        }

        let szego = build_orthonormal(&disk, BasisFamily::Szego, 60).unwrap();
        let sums = kernel_partial_sum(&szego, z, 60).unwrap();
        let want_s = 1.0 / (2.0 * std::f64::consts::PI * (1.0 - 0.25));
        assert!((sums[60] - want_s).abs() < 1e-6, "szego kernel: {} vs {want_s}", sums[60]);
    }

    #[test]
    fn level_bounds_disk_exact() {
        let disk = ConformalDomain::disk();
        let t = build_orthonormal(&disk, BasisFamily::Bergman, 20).unwrap();
        let rep = level_curve_bounds(&t, 2.0, 5, 20).unwrap();
        for row in &rep.rows {
            // |B_n| = √((n+1)/π)·2^n on |z| = 2 ⟹ ratio = √((n+1)/n)/√π
            let want = ((row.n as f64 + 1.0) / row.n as f64).sqrt() / std::f64::consts::PI.sqrt();
            assert!((row.min_ratio - want).abs() < 1e-10);
            assert!((row.max_ratio - want).abs() < 1e-10);
        }
        assert!(rep.band_spread < 1.1);

        let f = build_faber(&disk, 20).unwrap();
        let rep = level_curve_bounds(&f, 2.0, 5, 20).unwrap();
        assert!(rep.normalizer.contains("no sqrt"));
        for row in &rep.rows {
            assert!((row.min_ratio - 1.0).abs() < 1e-12 && (row.max_ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_bounds_disk_exact() {
        let disk = ConformalDomain::disk();
        let t = build_orthonormal(&disk, BasisFamily::Bergman, 20).unwrap();
        let rep = derivative_level_bounds(&t, 2.0, 5, 20).unwrap();
        for row in &rep.rows {
            // |B_n′| = √((n+1)/π)·n·2^{n−1} ⟹ ratio = √((n+1)/n)/√π
            let want = ((row.n as f64 + 1.0) / row.n as f64).sqrt() / std::f64::consts::PI.sqrt();
            assert!((row.min_ratio - want).abs() < 1e-10);
            assert!((row.max_ratio - want).abs() < 1e-10);
        }

        let f = build_faber(&disk, 20).unwrap();
        let rep = derivative_level_bounds(&f, 2.0, 5, 20).unwrap();
        assert!(rep.normalizer.contains("exponent 1"));
        for row in &rep.rows {
            assert!((row.min_ratio - 1.0).abs() < 1e-12 && (row.max_ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nth_root_examples() {
        let disk = ConformalDomain::disk();
        let t = build_orthonormal(&disk, BasisFamily::Bergman, 40).unwrap();
        let rep = nth_root_asymptotic(&t, c(2.0, 0.0), 10, 40).unwrap();
        // exact closed form: (41/π)^{1/80} · 2 ≈ 2.065
        let want = (41.0 / std::f64::consts::PI).powf(1.0 / 80.0) * 2.0;
        let got = rep.rows.last().unwrap().1;
        assert!((got - want).abs() < 1e-12);
        assert!((got - 2.064).abs() < 2e-3);
        assert_eq!(rep.target, 2.0);

        let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let f = build_faber(&e, 40).unwrap();
        let rep = nth_root_asymptotic(&f, c(2.125, 0.0), 10, 40).unwrap();
        assert!((rep.target - 2.0).abs() < 1e-12);
        assert!(rep.final_deviation < 1e-6);

        // interior points are rejected
        assert!(matches!(
            nth_root_asymptotic(&f, c(0.1, 0.0), 5, 10),
            Err(BasesError::NotExterior { .. })
        ));
    }

    #[test]
    fn asymptotics_disk_is_exact_to_floor() {
        let disk = ConformalDomain::disk();
        let t = build_orthonormal(&disk, BasisFamily::Bergman, 20).unwrap();
        let rep = check_bergman_asymptotics(&t, 1.5, 5, 20).unwrap();
        assert_eq!(rep.regime, "exterior");
        for row in &rep.rows {
            assert!(row.finite && row.deviation < 1e-12, "n={}: {:e}", row.n, row.deviation);
        }
        assert_eq!(rep.floor_rows, rep.rows.len());
        assert!(rep.loglog_slope.is_none());

        let f = build_faber(&disk, 10).unwrap();
        assert!(matches!(
            check_bergman_asymptotics(&f, 1.5, 2, 8),
            Err(BasesError::BergmanOnly { .. })
        ));
    }

    #[test]
    fn combine_reps_agree_and_gate_errors() {
        let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let t = build_basis_stable(&e, BasisFamily::Bergman, 40, 1024).unwrap();
        let mut a = vec![c(0.0, 0.0); 41];
        a[40] = c(1.0, -0.5);
        a[17] = c(-2.0, 0.3);
        a[0] = c(0.7, 0.0);
        let combo = t.combine(&a).unwrap();
        assert_eq!(combo.degree(), 40);
        // stable eval vs monomial eval (both exist at this degree)
        let p = combo.monomial().unwrap();
        for &z in &[c(1.1, 0.2), c(-0.4, 0.8), c(0.05, -0.03)] {
            let (v, dv) = combo.eval_with_derivative(z);
            let (pv, pdv) = p.eval_with_derivative(&z);
            assert!((v - pv).norm() < 1e-9 * (1.0 + pv.norm()));
            assert!((dv - pdv).norm() < 1e-8 * (1.0 + pdv.norm()));
        }
        // Vieta data from the Faber-coordinate formulas vs the monomial form
        let vieta_formula = combo.vieta_sum();
        let vieta_monomial = -p.coeff(39) / p.coeff(40);
        assert!((vieta_formula - vieta_monomial).norm() < 1e-9 * (1.0 + vieta_monomial.norm()));
        let lp_formula = combo.vieta_log_prod().unwrap();
        let lp_monomial = (p.coeff(0).norm() / p.coeff(40).norm()).ln();
        assert!((lp_formula - lp_monomial).abs() < 1e-9 * (1.0 + lp_monomial.abs()));
        assert!(combo.initial_radius() > 1.0);

        assert!(matches!(
            t.combine(&vec![c(0.0, 0.0); 3]),
            Err(BasesError::EmptyCombination)
        ));
        assert!(matches!(
            t.combine(&vec![c(1.0, 0.0); 64]),
            Err(BasesError::CombinationTooLong { .. })
        ));
    }

    #[test]
    fn derivative_target_agrees_with_the_monomial_derivative() {
        let e = ConformalDomain::ellipse(1.0, 0.25).unwrap();
        let t = build_basis_stable(&e, BasisFamily::Bergman, 30, 1024).unwrap();
        let mut a = vec![c(0.0, 0.0); 31];
        a[30] = c(0.8, 0.6);
        a[21] = c(-1.4, 0.2);
        a[9] = c(0.3, -1.1);
        a[0] = c(-0.5, 0.0);
        let combo = t.combine(&a).unwrap();
        let dp = combo.monomial().unwrap().derivative();
        let target = combo.derivative_target();
        assert!(matches!(target, DerivCombination::Stable(_)));
        assert_eq!(target.degree(), 29);
        for &z in &[c(1.2, -0.3), c(-0.6, 0.7), c(0.02, 0.04)] {
            let (v, dv) = target.eval_with_deriv(z);
            let (pv, pdv) = dp.eval_with_derivative(&z);
            assert!((v - pv).norm() < 1e-9 * (1.0 + pv.norm()));
            assert!((dv - pdv).norm() < 1e-8 * (1.0 + pdv.norm()));
            let s = target.eval_scaled(z);
            let up = (2.0f64).powi(s.exp2 as i32);
            assert!((s.p * up - pv).norm() < 1e-9 * (1.0 + pv.norm()));
            assert!((s.dp * up - pdv).norm() < 1e-8 * (1.0 + pdv.norm()));
        }
        let vs_mono = -dp.coeff(28) / dp.coeff(29);
        assert!((target.vieta_sum() - vs_mono).norm() < 1e-9 * (1.0 + vs_mono.norm()));
        let lp_mono = (dp.coeff(0).norm() / dp.coeff(29).norm()).ln();
        assert!((target.vieta_log_prod().unwrap() - lp_mono).abs() < 1e-9 * (1.0 + lp_mono.abs()));
        let lead_mono = dp.coeff(29);
        assert!((target.leading() - lead_mono).norm() < 1e-9 * lead_mono.norm());

        // Critical points from the stable target match the monomial route.
        let mut stable_roots = crate::roots::find_roots_target_retry(&target, 7, 3)
            .unwrap()
            .roots;
        let mut mono_roots = crate::roots::find_roots_target_retry(&dp, 7, 3)
            .unwrap()
            .roots;
        let key = |z: &Complex64| (z.re, z.im);
        stable_roots.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        mono_roots.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        assert_eq!(stable_roots.len(), 29);
        for (u, v) in stable_roots.iter().zip(&mono_roots) {
            assert!((u - v).norm() < 1e-6 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn eval_through_matches_eval_basis() {
        let d = ConformalDomain::perturbed_circle(0.2, 3).unwrap();
        let t = build_basis_stable(&d, BasisFamily::Szego, 25, 1024).unwrap();
        let z = c(0.9, 0.4);
        let all = t.eval_through(25, z).unwrap();
        for n in (0..=25).step_by(5) {
            let one = t.eval_basis(n, z).unwrap();
            assert_eq!(all[n], one);
        }
    }
}
