//! Exact Fock-space simulation of polarizing-beam-splitter heralding of
//! Bell pairs from type-II parametric downconversion.
//!
//! The sparse path ([`fock`], [`optics`], [`detect`]) is cross-checked by a
//! brute-force dense path ([`oracle`]).

pub mod bell;
pub mod config;
pub mod detect;
pub mod error;
pub mod fock;
pub mod optics;
pub mod oracle;
pub mod random;
pub mod runner;
pub mod source;
pub mod verify;

pub use error::{Error, Result};
