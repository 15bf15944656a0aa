//! Coefficient ensembles: registered distributions, reproducible seeded
//! sampling, random-polynomial assembly, and the almost-sure coefficient
//! statistics that zero equidistribution leans on.
//!
//! A random polynomial here is `P_n(z) = Σ_{k=0}^n a_k B_k(z)` with `{B_k}` an
//! orthonormal or Faber basis from [`crate::bases`] and `{a_k}` non-trivial
//! i.i.d. complex draws. Two classical Borel–Cantelli facts drive everything
//! downstream, and [`coeff_statistics`] measures both on finite samples:
//!
//! * if `E[log⁺|a_0|] < ∞` then `limsup_n |a_n|^{1/n} = 1` and
//!   `limsup_n (max_{k≤n} |a_k|)^{1/n} = 1` almost surely;
//! * for any non-trivial i.i.d. sequence there is a `b > 0` with
//!   `liminf_n (max_{n−b·log n < k ≤ n} |a_k|)^{1/n} ≥ 1` almost surely.
//!
//! The first caps the exponential size of the coefficients (so `P_n` behaves
//! like its basis on and outside the domain boundary), the second guarantees a
//! recent coefficient of near-unit size in every logarithmic window (so `P_n`
//! cannot collapse to a much lower effective degree). The unspecified window
//! constant `b` is exposed as a knob and reported for several values to show
//! the statistic is insensitive to it.
//!
//! Conventions: every finite-variance distribution is normalized to
//! `E|a|² = 1` (the asymptotic statements are scale-invariant, but one fixed
//! scale keeps root-finder behavior comparable across ensembles), and the
//! complex Gaussian has independent `N(0, 1/2)` real and imaginary parts.
//! Sampling is a pure function of `(distribution, degree, seed)`; per-trial
//! seeds come from [`child_seed`] so parallel trials never share generator
//! state.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bases::BasisTable;
use crate::series::Poly;

/// Default window constant in the logarithmic-window maximum statistic.
pub const DEFAULT_WINDOW_B: f64 = 5.0;

/// Window constants reported together to show insensitivity to the choice.
pub const WINDOW_BS: [f64; 3] = [1.0, 5.0, 10.0];

/// Minimum degree for which the coefficient statistics are meaningful.
pub const MIN_STATISTICS_DEGREE: usize = 10;

#[derive(Debug, Error)]
pub enum RandomError {
    #[error("unknown coefficient distribution `{name}`")]
    UnknownDistribution { name: String },
    #[error("distribution `{name}` requires a tail exponent alpha")]
    AlphaRequired { name: &'static str },
    #[error("tail exponent alpha = {alpha} is not a positive finite number")]
    BadAlpha { alpha: f64 },
    #[error(
        "sample holds {len} coefficients but the table only reaches degree {max_degree}"
    )]
    SampleTooLong { len: usize, max_degree: usize },
    #[error("coefficient statistics need degree ≥ {need}, got {n}")]
    DegreeTooSmall { n: usize, need: usize },
    #[error("every sampled coefficient is zero; the hypotheses require a non-trivial sequence")]
    AllZero,
    #[error("window constant b = {b} must be positive")]
    BadWindow { b: f64 },
}

/// A registered coefficient distribution together with the hypothesis flags
/// the experiment layer consults before drawing conclusions.
///
/// `Pareto` is real and positive (tail `P(|a| > x) = x^{−α}`, support
/// `[1, ∞)`), so its mean is nonzero; `ParetoSym` flips its sign with a fair
/// coin, restoring `mean zero` whenever the mean exists (`α > 1`).
/// `InvFactorial` is the deterministic control profile `a_k = 1/k!`: it
/// violates `limsup |a_k|^{1/k} = 1` by design (the assembled series is
/// entire), and experiments use it as the negative control that must fail
/// natural-boundary evidence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    ComplexGaussian,
    Rademacher,
    UniformDisk,
    Pareto { alpha: f64 },
    ParetoSym { alpha: f64 },
    InvFactorial,
}

impl Distribution {
    /// Resolves a distribution from its registered name; `pareto` and
    /// `pareto_sym` require the tail exponent.
    pub fn from_name(name: &str, alpha: Option<f64>) -> Result<Self, RandomError> {
        let need_alpha = |tag: &'static str| match alpha {
            None => Err(RandomError::AlphaRequired { name: tag }),
            Some(a) if !(a.is_finite() && a > 0.0) => Err(RandomError::BadAlpha { alpha: a }),
            Some(a) => Ok(a),
        };
        match name {
            "complex_gaussian" => Ok(Distribution::ComplexGaussian),
            "rademacher" => Ok(Distribution::Rademacher),
            "uniform_disk" => Ok(Distribution::UniformDisk),
            "pareto" => Ok(Distribution::Pareto { alpha: need_alpha("pareto")? }),
            "pareto_sym" => Ok(Distribution::ParetoSym { alpha: need_alpha("pareto_sym")? }),
            "inv_factorial" => Ok(Distribution::InvFactorial),
            _ => Err(RandomError::UnknownDistribution { name: name.to_owned() }),
        }
    }

    /// Whether `E[a] = 0` (where the mean exists at all).
    pub fn mean_zero(&self) -> bool {
        match self {
            Distribution::ComplexGaussian
            | Distribution::Rademacher
            | Distribution::UniformDisk => true,
            Distribution::Pareto { .. } | Distribution::InvFactorial => false,
            // Sign-symmetric, but the mean only exists for α > 1.
            Distribution::ParetoSym { alpha } => *alpha > 1.0,
        }
    }

    /// Whether `E|a|² < ∞`.
    pub fn finite_variance(&self) -> bool {
        match self {
            Distribution::ComplexGaussian
            | Distribution::Rademacher
            | Distribution::UniformDisk
            | Distribution::InvFactorial => true,
            Distribution::Pareto { alpha } | Distribution::ParetoSym { alpha } => *alpha > 2.0,
        }
    }

    /// Whether `E[log⁺|a|] < ∞`; true for every registered distribution
    /// (Pareto tails decay polynomially, which is enough for the logarithm).
    pub fn finite_log_plus(&self) -> bool {
        true
    }

    /// The deterministic entire-series control profile.
    pub fn is_control(&self) -> bool {
        matches!(self, Distribution::InvFactorial)
    }
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Distribution::ComplexGaussian => write!(f, "complex_gaussian"),
            Distribution::Rademacher => write!(f, "rademacher"),
            Distribution::UniformDisk => write!(f, "uniform_disk"),
            Distribution::Pareto { alpha } => write!(f, "pareto({alpha})"),
            Distribution::ParetoSym { alpha } => write!(f, "pareto_sym({alpha})"),
            Distribution::InvFactorial => write!(f, "inv_factorial"),
        }
    }
}

/// One reproducible draw of coefficients `a_0..a_n`.
#[derive(Clone, Debug)]
pub struct CoefficientSample {
    pub seed: u64,
    pub dist: Distribution,
    pub values: Vec<Complex64>,
}

/// SplitMix64 finalizer.
fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the generator seed of one trial from the master seed.
///
/// The trial index is spread by an odd multiplier and mixed through a
/// SplitMix64 finalizer; both steps are bijections of the 64-bit space, so
/// distinct trials of one master seed can never collide, and nearby indices
/// land in unrelated parts of the stream space.
pub fn child_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// One uniform draw in `[0, 1)` with 53 random mantissa bits.
fn uniform53(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One uniform draw in `(0, 1]`, safe under `ln` and negative powers.
fn uniform53_pos(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - uniform53(rng)
}

fn coin_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.next_u64() >> 63 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Draws `a_0..a_n` i.i.d. from the distribution, reproducibly in `seed`.
///
/// The stream is prefix-stable: the first `k+1` values for degree `n` equal
/// the sample of degree `k` with the same seed. `InvFactorial` ignores the
/// seed entirely (it is a deterministic profile routed through the same
/// plumbing so control experiments reuse the whole pipeline); its entries
/// underflow to zero beyond `k ≈ 170`, which only strengthens its entire
/// character.
pub fn sample(dist: Distribution, n: usize, seed: u64) -> Result<CoefficientSample, RandomError> {
    if let Distribution::Pareto { alpha } | Distribution::ParetoSym { alpha } = dist {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(RandomError::BadAlpha { alpha });
        }
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n + 1);
    let mut inv_fact = 1.0f64;
    for k in 0..=n {
        let v = match dist {
            Distribution::ComplexGaussian => {
                // Box–Muller in polar form; |a|² is Exp(1), so E|a|² = 1 and
                // the real/imaginary parts are independent N(0, 1/2).
                let r = (-uniform53_pos(&mut rng).ln()).sqrt();
                Complex64::from_polar(r, tau * uniform53(&mut rng))
            }
            Distribution::Rademacher => Complex64::new(coin_sign(&mut rng), 0.0),
            Distribution::UniformDisk => {
                // Uniform on {|a| ≤ √2}, the radius that makes E|a|² = 1.
                let r = (2.0 * uniform53(&mut rng)).sqrt();
                Complex64::from_polar(r, tau * uniform53(&mut rng))
            }
            Distribution::Pareto { alpha } => {
                Complex64::new(uniform53_pos(&mut rng).powf(-1.0 / alpha), 0.0)
            }
            Distribution::ParetoSym { alpha } => {
                let mag = uniform53_pos(&mut rng).powf(-1.0 / alpha);
                Complex64::new(coin_sign(&mut rng) * mag, 0.0)
            }
            Distribution::InvFactorial => {
                if k > 0 {
                    inv_fact /= k as f64;
                }
                Complex64::new(inv_fact, 0.0)
            }
        };
        values.push(v);
    }
    Ok(CoefficientSample { seed, dist, values })
}

/// Assembles `P = Σ_k a_k B_k` in monomial coordinates.
///
/// This is the small-degree / export representation; experiment pipelines at
/// large degree evaluate the same combination through
/// [`BasisTable::combine`], which stays in basis coordinates.
pub fn assemble(
    sample: &CoefficientSample,
    table: &BasisTable,
) -> Result<Poly<Complex64>, RandomError> {
    let len = sample.values.len();
    if len > table.polys().len() {
        return Err(RandomError::SampleTooLong { len, max_degree: table.n_max() });
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); len];
    for (k, a) in sample.values.iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            // Skipping exact zeros keeps unit-vector extraction bit-exact.
            continue;
        }
        for (i, c) in table.polys()[k].coeffs().iter().enumerate() {
            coeffs[i] += a * c;
        }
    }
    Ok(Poly::new(coeffs))
}

/// One window statistic `(max_{n−b·log n < k ≤ n} |a_k|)^{1/n}`, per `n`.
#[derive(Clone, Debug)]
pub struct WindowSequence {
    pub b: f64,
    /// Aligned with [`CoeffStatistics::ns`].
    pub roots: Vec<f64>,
    /// (min, max) over the last quarter of the range.
    pub last_quartile: (f64, f64),
}

/// The three almost-sure coefficient statistics measured on one sample.
#[derive(Clone, Debug)]
pub struct CoeffStatistics {
    /// Degrees `1..=n`.
    pub ns: Vec<usize>,
    /// `|a_n|^{1/n}`; its limsup is 1 a.s. under finite `E log⁺`.
    pub nth_root: Vec<f64>,
    /// `(max_{k≤n} |a_k|)^{1/n}`; same limit, but monotone enough to gate on.
    pub running_max_root: Vec<f64>,
    pub nth_root_last_quartile: (f64, f64),
    pub running_max_last_quartile: (f64, f64),
    /// The logarithmic-window statistic for each requested `b`.
    pub windows: Vec<WindowSequence>,
}

fn last_quartile(seq: &[f64]) -> (f64, f64) {
    let tail = &seq[(seq.len() * 3) / 4..];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in tail {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo, hi)
}

/// Computes the three root statistics of the sample for each window constant
/// in `bs` (use [`WINDOW_BS`] to reproduce the standard report).
pub fn coeff_statistics(
    sample: &CoefficientSample,
    bs: &[f64],
) -> Result<CoeffStatistics, RandomError> {
    let n_max = sample.values.len().saturating_sub(1);
    if n_max < MIN_STATISTICS_DEGREE {
        return Err(RandomError::DegreeTooSmall { n: n_max, need: MIN_STATISTICS_DEGREE });
    }
    for &b in bs {
        if !(b.is_finite() && b > 0.0) {
            return Err(RandomError::BadWindow { b });
        }
    }
    let abs: Vec<f64> = sample.values.iter().map(|v| v.norm()).collect();
    if abs.iter().all(|&x| x == 0.0) {
        return Err(RandomError::AllZero);
    }
    let ns: Vec<usize> = (1..=n_max).collect();
    let mut nth_root = Vec::with_capacity(n_max);
    let mut running_max_root = Vec::with_capacity(n_max);
    let mut running = abs[0];
    for &n in &ns {
        running = running.max(abs[n]);
        nth_root.push(abs[n].powf(1.0 / n as f64));
        running_max_root.push(running.powf(1.0 / n as f64));
    }
    let windows = bs
        .iter()
        .map(|&b| {
            let roots: Vec<f64> = ns
                .iter()
                .map(|&n| {
                    let lower = n as f64 - b * (n as f64).ln();
                    let k_min = if lower < 0.0 { 0 } else { lower.floor() as usize + 1 };
                    let mut w = 0.0f64;
                    for &a in &abs[k_min.min(n)..=n] {
                        w = w.max(a);
                    }
                    w.powf(1.0 / n as f64)
                })
                .collect();
            let last_quartile = last_quartile(&roots);
            WindowSequence { b, roots, last_quartile }
        })
        .collect();
    Ok(CoeffStatistics {
        ns,
        nth_root_last_quartile: last_quartile(&nth_root),
        running_max_last_quartile: last_quartile(&running_max_root),
        nth_root,
        running_max_root,
        windows,
    })
}
