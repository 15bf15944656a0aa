//! Scalar abstraction shared by the double-precision and extended-precision
//! numeric kernels.
//!
//! Basis construction at large degree leads through Gram matrices whose
//! condition number grows geometrically with the degree, so the library keeps
//! every coefficient-level kernel generic over a complex scalar type. Two
//! instantiations exist: [`num_complex::Complex64`] for the everyday path and
//! [`MpC`], a complex number over arbitrary-precision binary floats
//! (`dashu-float`), for the extended mode.
//!
//! Precision convention: an [`MpF`] carries its precision with it, and
//! arithmetic results take the larger operand precision. Kernels therefore
//! lift `f64` inputs once at entry (via [`mpf`] / [`MpC::from_c64`]) and all
//! derived values inherit the working precision. Exact constants (`ZERO`,
//! `ONE`, small integers) are precision-free and absorb the precision of
//! whatever they meet.

use dashu_base::SquareRoot;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arbitrary-precision binary float, round-half-to-even.
pub type MpF = FBig<HalfEven, 2>;

/// Lifts an `f64` (exact) to the given working precision in bits.
pub fn mpf(x: f64, bits: usize) -> MpF {
    MpF::try_from(x)
        .expect("non-finite f64 lifted to extended precision")
        .with_precision(bits)
        .value()
}

/// Complex scalar interface for the generic series / basis kernels.
///
/// Operations are by value; `f64`-returning accessors exist for tolerance
/// and window checks, where double precision is always sufficient (only the
/// *intermediate* arithmetic needs the extra mantissa).
pub trait CScalar:
    Clone
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_c64(z: Complex64) -> Self;
    fn to_c64(&self) -> Complex64;
    fn conj(&self) -> Self;
    /// Modulus, rounded to `f64`.
    fn abs_f64(&self) -> f64;
    /// Exact zero test (used to trim stored coefficient windows).
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;
    /// Principal square root of a value assumed to be real and non-negative
    /// (Cholesky pivots). Implementations may ignore a tiny imaginary part.
    fn sqrt_positive_real(&self) -> Self;
}

impl CScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn conj(&self) -> Self {
        Complex64::new(self.re, -self.im)
    }
    fn abs_f64(&self) -> f64 {
        self.norm()
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn sqrt_positive_real(&self) -> Self {
        Complex64::new(self.re.max(0.0).sqrt(), 0.0)
    }
}

/// Complex number over arbitrary-precision floats.
#[derive(Clone, Debug, PartialEq)]
pub struct MpC {
    pub re: MpF,
    pub im: MpF,
}

impl MpC {
    pub fn new(re: MpF, im: MpF) -> Self {
        MpC { re, im }
    }

    /// Lifts a `Complex64` to the given precision.
    pub fn from_c64_prec(z: Complex64, bits: usize) -> Self {
        MpC { re: mpf(z.re, bits), im: mpf(z.im, bits) }
    }

    pub fn zero_prec(bits: usize) -> Self {
        MpC { re: mpf(0.0, bits), im: mpf(0.0, bits) }
    }

    /// |self|² as a real.
    pub fn norm_sqr(&self) -> MpF {
        &self.re * &self.re + &self.im * &self.im
    }

    /// By-reference product, avoiding clones of the operands.
    pub fn mul_ref(a: &MpC, b: &MpC) -> MpC {
        MpC {
            re: &a.re * &b.re - &a.im * &b.im,
            im: &a.re * &b.im + &a.im * &b.re,
        }
    }

    /// `acc += a * b` without intermediate clones (hot path of the moment
    /// quadratures and Cholesky updates).
    pub fn mul_add_assign(acc: &mut MpC, a: &MpC, b: &MpC) {
        acc.re += &a.re * &b.re - &a.im * &b.im;
        acc.im += &a.re * &b.im + &a.im * &b.re;
    }

    /// `acc -= a * b`.
    pub fn mul_sub_assign(acc: &mut MpC, a: &MpC, b: &MpC) {
        acc.re -= &a.re * &b.re - &a.im * &b.im;
        acc.im -= &a.re * &b.im + &a.im * &b.re;
    }

    /// By-reference quotient.
    pub fn div_ref(a: &MpC, b: &MpC) -> MpC {
        let d = b.norm_sqr();
        MpC {
            re: (&a.re * &b.re + &a.im * &b.im) / &d,
            im: (&a.im * &b.re - &a.re * &b.im) / &d,
        }
    }

    /// Multiplies by a real scalar.
    pub fn scale(&self, s: &MpF) -> MpC {
        MpC { re: &self.re * s, im: &self.im * s }
    }
}

impl Add for MpC {
    type Output = MpC;
    fn add(self, rhs: MpC) -> MpC {
        MpC { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl Sub for MpC {
    type Output = MpC;
    fn sub(self, rhs: MpC) -> MpC {
        MpC { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Mul for MpC {
    type Output = MpC;
    fn mul(self, rhs: MpC) -> MpC {
        MpC::mul_ref(&self, &rhs)
    }
}

impl Div for MpC {
    type Output = MpC;
    fn div(self, rhs: MpC) -> MpC {
        MpC::div_ref(&self, &rhs)
    }
}

impl Neg for MpC {
    type Output = MpC;
    fn neg(self) -> MpC {
        MpC { re: -self.re, im: -self.im }
    }
}

impl CScalar for MpC {
    fn zero() -> Self {
        MpC { re: MpF::ZERO, im: MpF::ZERO }
    }
    fn one() -> Self {
        MpC { re: MpF::ONE, im: MpF::ZERO }
    }
    fn from_c64(z: Complex64) -> Self {
        // Exact (53-bit) value; absorbs the working precision on first use.
        MpC {
            re: MpF::try_from(z.re).expect("non-finite real part"),
            im: MpF::try_from(z.im).expect("non-finite imaginary part"),
        }
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().value(), self.im.to_f64().value())
    }
    fn conj(&self) -> Self {
        MpC { re: self.re.clone(), im: -self.im.clone() }
    }
    fn abs_f64(&self) -> f64 {
        let re = self.re.to_f64().value();
        let im = self.im.to_f64().value();
        re.hypot(im)
    }
    fn is_zero(&self) -> bool {
        self.re.repr().is_zero() && self.im.repr().is_zero()
    }
    fn is_finite(&self) -> bool {
        true // FBig has no NaN / infinity representation
    }
    fn sqrt_positive_real(&self) -> Self {
        let re = if self.re.repr().sign() == dashu_base::Sign::Negative {
            MpF::ZERO
        } else {
            self.re.sqrt()
        };
        MpC { re, im: MpF::ZERO }
    }
}

/// π to the given precision (Machin: π = 16·atan(1/5) − 4·atan(1/239)).
pub fn mp_pi(bits: usize) -> MpF {
    let work = bits + 32;
    let atan_inv = |q: u32| -> MpF {
        let x = MpF::ONE.with_precision(work).value() / MpF::from(q);
        let x2 = &x * &x;
        // Terms decay by a factor q² ≥ 25 each step; bound the count analytically.
        let terms = (work as f64 * std::f64::consts::LN_2 / (2.0 * (q as f64).ln())).ceil() as usize + 2;
        let mut term = x.clone();
        let mut sum = x;
        for k in 1..=terms {
            term = term * &x2;
            let contrib = &term / MpF::from(2 * k as u32 + 1);
            if k % 2 == 1 {
                sum -= contrib;
            } else {
                sum += contrib;
            }
        }
        sum
    };
    let pi = atan_inv(5) * MpF::from(16u8) - atan_inv(239) * MpF::from(4u8);
    pi.with_precision(bits).value()
}

/// (sin x, cos x) for small |x| (≲ 0.1) by Taylor series at the given precision.
fn mp_sincos_small(x: &MpF, bits: usize) -> (MpF, MpF) {
    let work = bits + 16;
    let x = x.clone().with_precision(work).value();
    let x2 = &x * &x;
    let xf = x.to_f64().value().abs().max(1e-300);
    // Terms of sin/cos fall at least as fast as x^{2k}/(2k)!.
    let terms = {
        let mut k = 1usize;
        let mut log_term = 0.0f64;
        let target = -((work as f64 + 8.0) * std::f64::consts::LN_2);
        while log_term > target && k < 200 {
            log_term += 2.0 * xf.ln() - ((2 * k - 1) as f64).ln() - ((2 * k) as f64).ln();
            k += 1;
        }
        k
    };
    let mut sin = x.clone();
    let mut cos = MpF::ONE.with_precision(work).value();
    let mut term_s = x.clone();
    let mut term_c = MpF::ONE.with_precision(work).value();
    for k in 1..=terms {
        let two_k = 2 * k as u32;
        term_c = term_c * &x2 / MpF::from(two_k - 1) / MpF::from(two_k);
        term_s = term_s * &x2 / MpF::from(two_k) / MpF::from(two_k + 1);
        if k % 2 == 1 {
            cos -= &term_c;
            sin -= &term_s;
        } else {
            cos += &term_c;
            sin += &term_s;
        }
    }
    (sin.with_precision(bits).value(), cos.with_precision(bits).value())
}

/// The m-th roots of unity e^{2πi j/m}, j = 0..m, at the given precision.
///
/// The primitive root comes from a small-angle Taylor evaluation of sin/cos;
/// the chain of multiplications drifts by at most ~m·2^{−bits}, negligible for
/// every use here (quadrature nodes).
pub fn mp_roots_of_unity(m: usize, bits: usize) -> Vec<MpC> {
    assert!(m >= 4, "need at least 4 nodes");
    let work = bits + 16;
    let theta = mp_pi(work) * MpF::from(2u8) / MpF::from(m as u64);
    let (s, c) = mp_sincos_small(&theta, work);
    let w1 = MpC::new(c, s);
    let mut out = Vec::with_capacity(m);
    out.push(MpC::new(
        MpF::ONE.with_precision(work).value(),
        MpF::ZERO.with_precision(work).value(),
    ));
    for j in 1..m {
        let prev = &out[j - 1];
        out.push(MpC::mul_ref(prev, &w1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_matches_f64_and_is_self_consistent() {
        assert_eq!(mp_pi(64).to_f64().value(), std::f64::consts::PI);
        let a = mp_pi(192);
        let b = mp_pi(256);
        let diff = (a - b).to_f64().value().abs();
        assert!(diff < 1e-55, "π precision drift: {diff:e}");
    }

    #[test]
    fn roots_of_unity_sum_to_zero() {
        let roots = mp_roots_of_unity(64, 128);
        let mut acc = MpC::zero_prec(128);
        for r in &roots {
            acc = acc + r.clone();
        }
        assert!(acc.abs_f64() < 1e-35, "rootsum = {:e}", acc.abs_f64());
        // spot value: e^{2πi·16/64} = i
        let q = roots[16].to_c64();
        assert!((q.re).abs() < 1e-30 && (q.im - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_field_ops_round_trip() {
        let bits = 128;
        let a = MpC::from_c64_prec(Complex64::new(1.25, -0.5), bits);
        let b = MpC::from_c64_prec(Complex64::new(0.3, 0.7), bits);
        let q = MpC::div_ref(&MpC::mul_ref(&a, &b), &b);
        let back = q.to_c64();
        assert!((back - Complex64::new(1.25, -0.5)).norm() < 1e-30);
        let s = MpC::from_c64_prec(Complex64::new(2.0, 0.0), bits).sqrt_positive_real();
        assert!((s.to_c64().re - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn precision_is_absorbed_from_operands() {
        let x = mpf(0.1, 192);
        let y = MpF::ONE * &x; // exact constant × 192-bit value
        assert_eq!(y.precision(), 192);
    }
}
