//! Densities, rectangle probabilities, equicoordinate quantiles and
//! pseudo-random draws for the multivariate normal distribution and the
//! location-shifted non-central multivariate t distribution, with and
//! without box truncation.
//!
//! Rectangle probabilities use Genz's separation-of-variables transform
//! integrated by a randomized Korobov lattice rule, with Gibson-style
//! greedy variable reordering. Every stochastic routine takes an explicit
//! seed and is bit-reproducible.
//!
//! The crate is `no_std` (it needs `alloc`). Enable `std` for
//! `std::error::Error` integration and `parallel` to evaluate lattice
//! shifts on the rayon pool; results do not depend on the schedule.
//!
//! QMC error grows with the dimension; there is no hard cap on `k`, but
//! beyond a few dozen variables expect to raise `samples`.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod error;
pub mod density;
pub mod factor;
pub mod lattice;
pub mod qmc;
pub mod quantile;
pub mod sampling;
pub mod special;
pub mod types;

pub(crate) mod math;

pub use error::{Error, Result};
pub use types::{
    BisectionConfig, DegreesOfFreedom, DistributionSpec, ExtendedBounds, ExtendedReal, Family,
    FactorizationMethod, LocationVector, ProbabilityEstimate, QmcConfig, QuantileResult,
    ScaleMatrix, SearchStatus, Tail, TruncationBox,
};
