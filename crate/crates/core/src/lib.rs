//! Numerical laboratory for random polynomials on smooth Jordan domains.
//!
//! The crate builds polynomial bases tied to a domain with a known exterior
//! conformal map — Szegő (boundary-orthonormal), Bergman (area-orthonormal)
//! and Faber polynomials — assembles random linear combinations with i.i.d.
//! coefficients, and measures where their zeros land and how the ensemble
//! behaves on level curves of the exterior Green function.
//!
//! Module map:
//! - [`scalar`]: complex arithmetic generic over `f64` and arbitrary-precision
//!   floats, so ill-conditioned kernels can be re-run in extended precision.
//! - [`series`]: polynomials and truncation-certified Laurent windows.
//! - [`domain`]: the domain catalog (disk, ellipse, perturbed circle) via
//!   exterior maps `Ψ`, their inverses, and level curves.
//! - [`bases`]: moment matrices, Gram–Schmidt / Cholesky orthonormalization,
//!   Faber recurrences, and asymptotic diagnostics for the bases.
//! - [`random`]: coefficient ensembles and reproducible sampling.
//! - [`roots`]: simultaneous root finding and zero-counting measures.
//! - [`potential`]: Green-function coordinates, equidistribution statistics,
//!   discrepancy bounds, and coefficient recovery from zeros.
//! - [`boundary`]: Faber-tail bounds, reproducing-kernel splits, and the
//!   natural-boundary evidence experiment.

pub mod bases;
pub mod boundary;
pub mod domain;
pub mod potential;
pub mod random;
pub mod roots;
pub mod scalar;
pub mod series;
