//! Dense polynomials and finite Laurent windows with explicit truncation
//! bookkeeping.
//!
//! A [`Poly`] is a coefficient vector `c₀ + c₁ z + … + c_d z^d` whose last
//! stored coefficient is nonzero; the zero polynomial is the empty vector and
//! reports no degree. A [`LaurentSlice`] stores the coefficients of exponents
//! `lo ..= hi` of a Laurent series together with two flags that record what is
//! *known* about the coefficients outside the window: on a side whose flag is
//! set the series is known to vanish identically (finite support); on a side
//! whose flag is clear the window is a truncation and the coefficients beyond
//! it are unknown. Products propagate this information, and
//! [`laurent_multiply`] refuses to return coefficients the inputs cannot
//! certify — the usual silent failure mode of truncated series arithmetic.
//!
//! Everything is generic over the complex scalar (double or extended
//! precision); see [`crate::scalar`].

use crate::scalar::CScalar;
use num_complex::Complex64;
use thiserror::Error;

/// Errors from series arithmetic.
#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("non-finite evaluation point")]
    NonFiniteInput,
    #[error("polynomial evaluation overflowed at |z| = {modulus:.3e}")]
    Overflow { modulus: f64 },
    #[error("requested window [{keep_lo}, {keep_hi}] is empty")]
    EmptyWindow { keep_lo: i64, keep_hi: i64 },
    #[error(
        "window [{keep_lo}, {keep_hi}] not certified: {operand} operand's truncation \
         only certifies exponents in [{cert_lo}, {cert_hi}]"
    )]
    WindowNotCertified {
        keep_lo: i64,
        keep_hi: i64,
        cert_lo: i64,
        cert_hi: i64,
        operand: &'static str,
    },
    #[error("operands certify disjoint exponent ranges")]
    IncompatibleWindows,
    #[error("reciprocal of a slice with zero leading coefficient")]
    ZeroLeadingCoefficient,
    #[error("reciprocal requires a certified finite top (a series at infinity)")]
    TopNotCertified,
}

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

/// Dense polynomial with ascending coefficients; empty = zero polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<C: CScalar = Complex64> {
    coeffs: Vec<C>,
}

impl<C: CScalar> Poly<C> {
    /// Builds a polynomial, trimming trailing exact zeros.
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![C::one()] }
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C {
        self.coeffs.get(k).cloned().unwrap_or_else(C::zero)
    }

    pub fn leading(&self) -> Option<&C> {
        self.coeffs.last()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation (unchecked; see [`poly_eval`] for the checked form).
    pub fn eval(&self, z: &C) -> C {
        let mut acc = C::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z.clone() + c.clone();
        }
        acc
    }

    /// Simultaneous Horner evaluation of the polynomial and its derivative.
    pub fn eval_with_derivative(&self, z: &C) -> (C, C) {
        let mut p = C::zero();
        let mut dp = C::zero();
        for c in self.coeffs.iter().rev() {
            dp = dp * z.clone() + p.clone();
            p = p * z.clone() + c.clone();
        }
        (p, dp)
    }

    /// Formal derivative; constants and the zero polynomial map to zero.
    pub fn derivative(&self) -> Poly<C> {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.clone() * C::from_c64(Complex64::new(k as f64, 0.0)))
            .collect();
        Poly::new(coeffs)
    }

    /// Antiderivative with constant term zero.
    pub fn antiderivative(&self) -> Poly<C> {
        if self.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(C::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.clone() / C::from_c64(Complex64::new((k + 1) as f64, 0.0)));
        }
        Poly::new(coeffs)
    }

    pub fn add(&self, rhs: &Poly<C>) -> Poly<C> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k) + rhs.coeff(k));
        }
        Poly::new(coeffs)
    }

    pub fn sub(&self, rhs: &Poly<C>) -> Poly<C> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k) - rhs.coeff(k));
        }
        Poly::new(coeffs)
    }

    pub fn scale(&self, s: &C) -> Poly<C> {
        Poly::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    /// Convolution product.
    pub fn mul(&self, rhs: &Poly<C>) -> Poly<C> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![C::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(coeffs)
    }

    /// Converts the coefficient scalar type (e.g. lifts `f64` coefficients to
    /// extended precision, or rounds extended coefficients back down).
    pub fn convert<D: CScalar>(&self) -> Poly<D> {
        Poly::new(self.coeffs.iter().map(|c| D::from_c64(c.to_c64())).collect())
    }

    /// Largest coefficient modulus (0 for the zero polynomial).
    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }
}

impl Poly<Complex64> {
    /// Convenience constructor from real coefficients.
    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }
}

/// Checked Horner evaluation: rejects non-finite points and reports overflow
/// instead of silently returning infinities.
pub fn poly_eval<C: CScalar>(p: &Poly<C>, z: &C) -> Result<C, SeriesError> {
    if !z.is_finite() {
        return Err(SeriesError::NonFiniteInput);
    }
    let value = p.eval(z);
    if !value.is_finite() {
        return Err(SeriesError::Overflow { modulus: z.abs_f64() });
    }
    Ok(value)
}

/// Formal derivative (free-function form of [`Poly::derivative`]).
pub fn poly_derivative<C: CScalar>(p: &Poly<C>) -> Poly<C> {
    p.derivative()
}

// ---------------------------------------------------------------------------
// Laurent slices
// ---------------------------------------------------------------------------

/// Coefficients of exponents `lo ..= hi` of a Laurent series, with certified
/// knowledge flags for the two sides outside the window.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSlice<C: CScalar = Complex64> {
    lo: i64,
    coeffs: Vec<C>,
    /// Coefficients below `lo` are known to vanish identically.
    zero_below: bool,
    /// Coefficients above `hi` are known to vanish identically.
    zero_above: bool,
}

impl<C: CScalar> LaurentSlice<C> {
    /// A finite Laurent polynomial: everything outside the window is zero.
    pub fn finite(lo: i64, coeffs: Vec<C>) -> Self {
        let mut s = LaurentSlice { lo, coeffs, zero_below: true, zero_above: true };
        s.trim();
        s
    }

    /// A window with explicit truncation flags. A cleared flag marks the side
    /// as a truncation: coefficients beyond it are unknown, not zero.
    pub fn with_truncation(lo: i64, coeffs: Vec<C>, zero_below: bool, zero_above: bool) -> Self {
        assert!(!coeffs.is_empty(), "empty Laurent window");
        let mut s = LaurentSlice { lo, coeffs, zero_below, zero_above };
        s.trim();
        s
    }

    /// The zero series (finite, empty support), anchored at exponent 0.
    pub fn zero() -> Self {
        LaurentSlice { lo: 0, coeffs: vec![C::zero()], zero_below: true, zero_above: true }
    }

    fn trim(&mut self) {
        // Only certified-zero sides may be trimmed: on a truncated side the
        // window boundary carries certification information.
        if self.zero_above {
            while self.coeffs.len() > 1 && self.coeffs.last().map_or(false, |c| c.is_zero()) {
                self.coeffs.pop();
            }
        }
        if self.zero_below {
            let leading_zeros = self.coeffs.iter().take_while(|c| c.is_zero()).count();
            let drop = leading_zeros.min(self.coeffs.len() - 1);
            if drop > 0 {
                self.coeffs.drain(0..drop);
                self.lo += drop as i64;
            }
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn zero_below(&self) -> bool {
        self.zero_below
    }

    pub fn zero_above(&self) -> bool {
        self.zero_above
    }

    /// The coefficient of `w^k` if it is known (inside the window, or outside
    /// on a certified-zero side); `None` if lost to truncation.
    pub fn get(&self, k: i64) -> Option<C> {
        if k < self.lo {
            if self.zero_below {
                Some(C::zero())
            } else {
                None
            }
        } else if k > self.hi() {
            if self.zero_above {
                Some(C::zero())
            } else {
                None
            }
        } else {
            Some(self.coeffs[(k - self.lo) as usize].clone())
        }
    }

    /// Exponent shift: multiplies by `w^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentSlice {
            lo: self.lo + k,
            coeffs: self.coeffs.clone(),
            zero_below: self.zero_below,
            zero_above: self.zero_above,
        }
    }

    pub fn scale(&self, s: &C) -> Self {
        LaurentSlice {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect(),
            zero_below: self.zero_below,
            zero_above: self.zero_above,
        }
    }

    pub fn neg(&self) -> Self {
        LaurentSlice {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
            zero_below: self.zero_below,
            zero_above: self.zero_above,
        }
    }

    /// Sum; the certified window is the intersection of the operands'
    /// certified ranges.
    pub fn add(&self, rhs: &Self) -> Result<Self, SeriesError> {
        let known_lo = match (self.zero_below, rhs.zero_below) {
            (true, true) => self.lo.min(rhs.lo),
            (true, false) => rhs.lo,
            (false, true) => self.lo,
            (false, false) => self.lo.max(rhs.lo),
        };
        let known_hi = match (self.zero_above, rhs.zero_above) {
            (true, true) => self.hi().max(rhs.hi()),
            (true, false) => rhs.hi(),
            (false, true) => self.hi(),
            (false, false) => self.hi().min(rhs.hi()),
        };
        if known_lo > known_hi {
            return Err(SeriesError::IncompatibleWindows);
        }
        let coeffs = (known_lo..=known_hi)
            .map(|k| {
                self.get(k).expect("inside certified range") + rhs.get(k).expect("inside certified range")
            })
            .collect();
        Ok(LaurentSlice {
            lo: known_lo,
            coeffs,
            zero_below: self.zero_below && rhs.zero_below,
            zero_above: self.zero_above && rhs.zero_above,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, SeriesError> {
        self.add(&rhs.neg())
    }

    /// Evaluates the window as a finite Laurent polynomial at `w` (0 excluded
    /// whenever negative exponents are present).
    pub fn eval(&self, w: &C) -> C {
        // Horner over ascending exponents, then a single shift by w^lo.
        let mut acc = C::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * w.clone() + c.clone();
        }
        let mut shift = C::one();
        if self.lo >= 0 {
            for _ in 0..self.lo {
                shift = shift * w.clone();
            }
        } else {
            for _ in 0..(-self.lo) {
                shift = shift / w.clone();
            }
        }
        acc * shift
    }

    /// Formal derivative d/dw of the window (certification windows shift
    /// accordingly: the derivative of an unknown coefficient is unknown).
    pub fn derivative(&self) -> Self {
        let coeffs: Vec<C> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.lo + i as i64;
                c.clone() * C::from_c64(Complex64::new(k as f64, 0.0))
            })
            .collect();
        let mut s = LaurentSlice {
            lo: self.lo - 1,
            coeffs,
            zero_below: self.zero_below,
            zero_above: self.zero_above,
        };
        s.trim();
        s
    }

    /// The series `s̄(1/w)`: coefficients conjugated, exponents negated. On
    /// the unit circle this is the pointwise complex conjugate of `s`, which
    /// turns Hermitian boundary inner products into Laurent products.
    pub fn conj_reflect(&self) -> Self {
        let coeffs: Vec<C> = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        LaurentSlice {
            lo: -self.hi(),
            coeffs,
            zero_below: self.zero_above,
            zero_above: self.zero_below,
        }
    }

    /// Converts the coefficient scalar (see [`Poly::convert`]).
    pub fn convert<D: CScalar>(&self) -> LaurentSlice<D> {
        LaurentSlice {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| D::from_c64(c.to_c64())).collect(),
            zero_below: self.zero_below,
            zero_above: self.zero_above,
        }
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }
}

/// The exponent range a product can certify, together with which operand is
/// binding on each side (`i64::MIN`/`i64::MAX` stand for unbounded).
fn certified_product_window<C: CScalar>(
    a: &LaurentSlice<C>,
    b: &LaurentSlice<C>,
) -> (i64, i64, &'static str, &'static str) {
    // A truncated side of one operand, multiplied against the *known* window
    // of the other, contaminates a half-line of product exponents. Two
    // truncated sides facing each other (below × above) contaminate
    // everything.
    let mut lo = i64::MIN;
    let mut hi = i64::MAX;
    let mut lo_blame = "left";
    let mut hi_blame = "left";
    if !a.zero_below && !b.zero_above || !a.zero_above && !b.zero_below {
        return (1, 0, "left", "right"); // empty: nothing certifiable
    }
    if !a.zero_below {
        let bound = a.lo() + b.hi(); // uncertified for k ≤ a.lo − 1 + b.hi
        if bound > lo {
            lo = bound;
            lo_blame = "left";
        }
    }
    if !b.zero_below {
        let bound = b.lo() + a.hi();
        if bound > lo {
            lo = bound;
            lo_blame = "right";
        }
    }
    if !a.zero_above {
        let bound = a.hi() + b.lo(); // uncertified for k ≥ a.hi + 1 + b.lo
        if bound < hi {
            hi = bound;
            hi_blame = "left";
        }
    }
    if !b.zero_above {
        let bound = b.hi() + a.lo();
        if bound < hi {
            hi = bound;
            hi_blame = "right";
        }
    }
    (lo, hi, lo_blame, hi_blame)
}

/// Exact convolution of two Laurent windows restricted to `keep_lo ..= keep_hi`.
///
/// Errors if the requested window includes exponents the operands' truncations
/// cannot certify, naming the deficient input.
pub fn laurent_multiply<C: CScalar>(
    a: &LaurentSlice<C>,
    b: &LaurentSlice<C>,
    keep_lo: i64,
    keep_hi: i64,
) -> Result<LaurentSlice<C>, SeriesError> {
    if keep_lo > keep_hi {
        return Err(SeriesError::EmptyWindow { keep_lo, keep_hi });
    }
    let (cert_lo, cert_hi, lo_blame, hi_blame) = certified_product_window(a, b);
    if keep_lo < cert_lo {
        return Err(SeriesError::WindowNotCertified {
            keep_lo,
            keep_hi,
            cert_lo,
            cert_hi,
            operand: lo_blame,
        });
    }
    if keep_hi > cert_hi {
        return Err(SeriesError::WindowNotCertified {
            keep_lo,
            keep_hi,
            cert_lo,
            cert_hi,
            operand: hi_blame,
        });
    }
    let mut coeffs = vec![C::zero(); (keep_hi - keep_lo + 1) as usize];
    for (i, ca) in a.coeffs().iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        let ea = a.lo() + i as i64;
        // contributions land at ea + eb ∈ [keep_lo, keep_hi]
        let jb_lo = (keep_lo - ea).max(b.lo());
        let jb_hi = (keep_hi - ea).min(b.hi());
        for eb in jb_lo..=jb_hi {
            let cb = &b.coeffs()[(eb - b.lo()) as usize];
            let k = (ea + eb - keep_lo) as usize;
            coeffs[k] = coeffs[k].clone() + ca.clone() * cb.clone();
        }
    }
    // Support bounds: when both flags on a side are certified the true product
    // support is bounded there, so a window reaching past it is still exact.
    let zero_below = a.zero_below() && b.zero_below() && keep_lo <= a.lo() + b.lo();
    let zero_above = a.zero_above() && b.zero_above() && keep_hi >= a.hi() + b.hi();
    Ok(LaurentSlice::with_truncation(keep_lo, coeffs, zero_below, zero_above))
}

/// Convolution on the widest window the operands certify, clamped to
/// `[clamp_lo, clamp_hi]` and to the possible support. Never fabricates
/// uncertified coefficients; errors only if nothing at all is certifiable.
pub fn laurent_multiply_max<C: CScalar>(
    a: &LaurentSlice<C>,
    b: &LaurentSlice<C>,
    clamp_lo: i64,
    clamp_hi: i64,
) -> Result<LaurentSlice<C>, SeriesError> {
    let (cert_lo, cert_hi, _, _) = certified_product_window(a, b);
    let mut lo = cert_lo.max(clamp_lo);
    let mut hi = cert_hi.min(clamp_hi);
    // Tighten to the possible support where it is certified finite.
    if a.zero_below() && b.zero_below() {
        lo = lo.max(a.lo() + b.lo());
    }
    if a.zero_above() && b.zero_above() {
        hi = hi.min(a.hi() + b.hi());
    }
    if lo > hi {
        return Err(SeriesError::EmptyWindow { keep_lo: lo, keep_hi: hi });
    }
    laurent_multiply(a, b, lo, hi)
}

/// Reciprocal of a slice with finite top and a nonzero top coefficient,
/// expanded downward (a series at infinity), keeping exponents ≥ `keep_lo`.
pub fn laurent_recip<C: CScalar>(
    a: &LaurentSlice<C>,
    keep_lo: i64,
) -> Result<LaurentSlice<C>, SeriesError> {
    if !a.zero_above() {
        return Err(SeriesError::TopNotCertified);
    }
    let t = a.hi();
    let top = a.get(t).expect("finite top");
    if top.is_zero() {
        return Err(SeriesError::ZeroLeadingCoefficient);
    }
    let target_lo = keep_lo + t; // window for 1/(1−u) before the shift back
    if target_lo > 0 {
        return Err(SeriesError::EmptyWindow { keep_lo, keep_hi: -t });
    }
    // a = top·w^t (1 − u). Build u with the exponent-0 coefficient forced to
    // an exact zero (top/top may round), so u is supported on exponents ≤ −1
    // and the Neumann series below terminates.
    let s = a.shift(-t).scale(&(C::one() / top.clone()));
    let ucoeffs: Vec<C> = (s.lo()..=0)
        .map(|k| if k == 0 { C::zero() } else { -s.get(k).expect("inside window") })
        .collect();
    // u inherits s's truncation state below; above 0 it is certainly zero.
    let u = LaurentSlice::with_truncation(s.lo(), ucoeffs, s.zero_below(), true);
    let u_top = (u.lo()..=u.hi()).rev().find(|&k| !u.get(k).expect("finite").is_zero());

    // 1/(1−u) = Σ uⁱ; the power uⁱ lives at exponents ≤ i·u_top ≤ −i, so only
    // finitely many powers reach the kept window.
    let mut acc = LaurentSlice::<C>::finite(0, vec![C::one()]);
    if let Some(ut) = u_top {
        let mut pow = u.clone();
        loop {
            acc = acc.add(&pow)?;
            let pow_top = (pow.lo()..=pow.hi())
                .rev()
                .find(|&k| !pow.get(k).map_or(true, |c| c.is_zero()));
            let pt = match pow_top {
                None => break,
                Some(p) => p,
            };
            if pt + ut < target_lo {
                break; // next power falls entirely below the window
            }
            pow = laurent_multiply(&pow, &u, target_lo, 0)?;
        }
    }
    let inv = acc.shift(-t).scale(&(C::one() / top));
    // The reciprocal is an infinite series downward: below the kept window it
    // is a truncation, not zero.
    let out_lo = inv.lo().max(keep_lo);
    Ok(LaurentSlice::with_truncation(
        out_lo,
        (out_lo..=inv.hi())
            .map(|k| inv.get(k).expect("inside window"))
            .collect(),
        false,
        true,
    ))
}
