//! Random k-QSAT toolkit: interaction-graph sampling, 2-core extraction,
//! dimer coverings, cavity counting, matrix-free spectral satisfiability and
//! closed-form entropy estimates.
//!
//! Closed-form and message-passing routines are generic over [`Scalar`]
//! (`f32`/`f64`); the aliases below fix the common `f64` instantiations.
//! Spectral code works in `Complex64` throughout.

// `!(x > 0)` guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod degree;
pub mod dimer;
pub mod entropy;
pub mod error;
pub mod hypergraph;
pub mod instance;
pub mod kcore;
pub mod rng;
pub mod scalar;
pub mod spectrum;

pub use error::{QsatError, Result};
pub use hypergraph::{InteractionGraph, ProjectorMode, ProjectorSet};
pub use rng::RngSpec;
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type CoreStats64 = kcore::CoreStats<Real>;
pub type DegreeLaw64 = degree::DegreeLaw<Real>;
pub type CavityReport64 = cavity::CavityReport<Real>;
pub type EntropyLedger64 = entropy::EntropyLedger<Real>;
