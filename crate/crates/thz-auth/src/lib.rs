//! Physical-layer authentication for THz-band nanoscale networks.
//!
//! A receiver ("Bob") authenticates transmissions on a shared time-slotted
//! channel by comparing each measured path loss against a learnt vector of
//! per-device path-loss fingerprints. The crate provides:
//!
//! - a THz channel model (spreading loss plus molecular-absorption loss
//!   computed from line catalogs or tabulated absorption coefficients),
//! - node-deployment scenarios with slot-occupancy simulation,
//! - the two-step hypothesis-testing authenticator and its closed-form
//!   error probabilities,
//! - a two-state hidden Markov model with Viterbi smoothing of the
//!   per-slot decisions,
//! - transmitter identification by nearest fingerprint and by a Gaussian
//!   mixture model fitted with EM,
//! - a deterministic Monte Carlo harness and CLI that sweep SNR or
//!   false-alarm targets and emit CSV result tables.
//!
//! The guide under `book/` walks through each concept; its code snippets
//! are compiled and run as part of `cargo test`.

// Frozen reference constants keep their full 20-digit form.
#![allow(clippy::excessive_precision)]
// Validation guards use `!(x > 0.0)` on purpose: it rejects NaN, which
// `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auth;
pub mod channel;
pub mod error;
pub mod harness;
pub mod hmm;
pub mod numerics;
pub mod scenario;
pub mod txid;

pub use error::{Error, Result};

// Keep the book chapters honest: every fenced Rust block in the guide is
// compiled and executed by `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/scenario.md")]
    mod scenario {}
    #[doc = include_str!("../../../book/src/authentication.md")]
    mod authentication {}
    #[doc = include_str!("../../../book/src/hmm.md")]
    mod hmm {}
    #[doc = include_str!("../../../book/src/identification.md")]
    mod identification {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
