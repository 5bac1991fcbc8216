//! Simulation and rate analysis for BB84-style quantum key distribution
//! with a reusable shared base string.
//!
//! Alice and Bob hold a secret string of basis choices instead of picking
//! bases at random, so no qubit is wasted on mismatched bases — and the
//! base string itself can be distilled and reused round after round. This
//! crate provides:
//!
//! - [`block_sim`]: exact 16-dimensional density-matrix dynamics of one
//!   protocol block (two EPR pairs) under arbitrary single-qubit attacks;
//! - [`attack_models`]: named noise channels, arbitrary and random Kraus
//!   sets, and the channel spec grammar;
//! - [`error_analysis`]: the four block error rates computed both in closed
//!   form and by exact simulation, and the relations tying them together
//!   (equal bit/phase rates on the communicating pair, a zero bit-error
//!   rate on the base pair, and the factor-two bound on its phase rate);
//! - [`rate_theory`]: asymptotic key and base-refresh rates, their error
//!   thresholds, and CSV curve data;
//! - [`gf2_codes`]: binary linear codes, syndrome decoding, CSS pairs and
//!   coset labels for key distillation and base-string refresh;
//! - [`protocol`]: the full prepare-and-measure session and the multi-round
//!   reuse loop;
//! - [`selftest`]: reduced-size end-to-end checks.

pub mod attack_models;
pub mod block_sim;
pub mod error;
pub mod error_analysis;
pub mod gf2_codes;
pub mod linalg;
pub mod protocol;
pub mod rate_theory;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};
