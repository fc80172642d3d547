//! The MRCA-age process of a Poisson family-lifetime point process.
//!
//! Given a lifetime measure `μ`, the age `A_t` of the most recent common
//! ancestor drifts up with slope 1 and jumps down whenever the oldest living
//! family dies. This crate evaluates its exact transition kernels, stationary
//! law and jump-chain kernels, simulates paths exactly, extracts the record
//! set behind the time-reversal duality, and provides the Laplace transforms
//! and samplers of the critical `(1+β)`-stable branching family.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod csbp;
pub mod duality;
pub mod error;
pub mod kernels;
pub mod measure;
pub mod numerics;
pub mod simulate;
pub mod stats;

pub use acceptance::{AcceptanceOptions, CriterionReport, Suite};
pub use csbp::{StableBranchingParams, SubordinatorDraw};
pub use duality::{Record, RecordSet, ReversalOptions, ReversalReport};
pub use error::{Error, Result};
pub use kernels::Normalizer;
pub use measure::{
    ChainVerdict, ClassificationReport, CriterionValue, CriterionValues, LifetimeMeasure, MeasureSpec,
    Verdict,
};
pub use simulate::{Jump, JumpChainSample, PathOptions, PathSample, RngStream};
