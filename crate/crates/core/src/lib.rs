//! Krasnosel'skii-Mann fixed-point iteration with certified rate bounds.
//!
//! The library is organized in four layers:
//!
//! - [`special_fn`]: exact combinatorial kernels (ballot function, Catalan
//!   numbers, terminating hypergeometric sums) and modified Bessel functions.
//! - [`stochastic`]: exact discrete distributions (Poisson-binomial, binomial,
//!   truncated Poisson), convex-order checks, and seeded Monte Carlo
//!   simulators for the associated random walks.
//! - [`bounds`]: step-schedule weights, the `c_{mn}` bound table, the
//!   residual bound `P^n` by three independent routes, and the envelope
//!   constants `1/sqrt(pi)`, `sqrt(2/pi)` and `eta`.
//! - [`km`]: the iterator itself over dense Euclidean and sparse `l1`
//!   spaces, residual traces, and bound certificates.
//!
//! With the default `parallel` feature, Monte Carlo trials and batch
//! evaluations shard across rayon workers; results are bit-identical to the
//! sequential fallback for a fixed seed.

pub mod bounds;
pub mod km;
pub mod rng;
pub mod special_fn;
pub mod stochastic;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bessel argument {0} exceeds the supported range (unscaled overflow)")]
    BesselOverflow(f64),
    #[error("relaxation parameter alpha_{0} is zero; recursion route undefined")]
    ZeroRelaxation(usize),
    #[error("operation requires a Hilbert space")]
    NotHilbert,
    #[error("convex function not certified on the required horizon")]
    UncertifiedConvex,
    #[error("point outside the operator domain: {0}")]
    OutsideDomain(String),
    #[error("certificate violated: observed residual {observed} exceeds bound {bound}")]
    CertificateViolated { observed: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// `1/sqrt(pi)`, the rate constant of the diameter bound.
pub const INV_SQRT_PI: f64 = 0.5641895835477563;

/// `sqrt(2/pi)`, the supremum of `R^n` and the limit of the Bessel envelope.
pub const SQRT_2_OVER_PI: f64 = 0.7978845608028654;
