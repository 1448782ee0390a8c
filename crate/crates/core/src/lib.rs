//! Geometric magnetometry with field-insensitive clock states.
//!
//! The crate collects closed-form signal models and brute-force
//! Schrödinger integrations for two related sensing schemes: a
//! singlet/triplet pair whose readout depends on the direction of a
//! static field, and a hyperfine clock transition driven by an
//! elliptically polarized RF field. Units are natural (ħ = 1 and the
//! magnetic moment is folded into field values) unless a function says
//! otherwise.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ac;
pub mod dc;
pub mod diabatic;
pub mod dynamics;
mod error;
pub mod hyperfine;
pub mod sensitivity;
pub mod two_spin;

pub use error::{Error, Result};

/// Crate version, stamped into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
