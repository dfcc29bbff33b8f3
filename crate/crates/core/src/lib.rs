//! Continuous-time quantum error correction with real-time feedback.
//!
//! Simulates stabilizer codes under continuous syndrome measurement: the
//! exact 2^n-dimensional stochastic quantum filter (used as the physical
//! plant and as the reference controller), the Wonham syndrome-probability
//! filter, and reduced-dimensional truncated filters built by symbolic
//! closure of feedback-coefficient operators. The crate also carries the
//! discrete-time error-correction baseline and a trajectory-ensemble
//! harness with a CLI.

pub mod code;
pub mod discrete;
pub mod engine;
pub mod error;
pub mod feedback;
pub mod full_filter;
pub mod harness;
pub mod linalg;
pub mod pauli;
pub mod reduced;
pub mod sde;
pub mod sparse;

pub use code::{bit_flip_code, build_syndrome_space, encoded_zero, five_qubit_code, CodeSpec};
pub use error::{Error, Result};
pub use full_filter::ModelParams;
pub use pauli::{Letter, PauliString, Phase};
