//! Depolarized pure states: states of the form `(1 - p) 1/D + p |ψ⟩⟨ψ|`.
//!
//! The crate covers coherence-vector algebra and DPS identification
//! ([`bloch`]), closed-form distance measures ([`metrics`]), Schmidt forms and
//! partial-transpose entanglement analysis ([`bipartite`]), physical
//! depolarization channels ([`channels`]) and trace-moment estimation
//! ([`moments`]). Every closed form has a brute-force counterpart built on
//! [`matrix`].

pub mod error;
pub mod matrix;
pub mod random;
pub mod bloch;
pub mod metrics;
pub mod bipartite;
pub mod channels;
pub mod moments;
pub mod cli;

pub use error::{Error, Result};
pub use matrix::{CMatrix, CVector, DensityMatrix, Spectrum, Subsystem};
