//! Smooth sliding-mode path tracking for car-like vehicles.
//!
//! A bang-bang, distance-optimal reaching law is applied to a fictive wheel
//! chain ahead of the vehicle, which yields steering commands with bounded
//! rate and acceleration. The crate also ships the tuning rules for the chain,
//! kinematic and kinetic plant models, two baselines and an evaluation harness.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod harness;
pub mod jet;
pub mod plant;
pub mod ref_path;
pub mod smc;
pub mod tuner;

pub use error::{Error, Result};
