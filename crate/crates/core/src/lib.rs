//! Entropy-driven dynamic shot allocation for variational quantum algorithms.
//!
//! The crate bundles everything needed to train QAOA and Hamiltonian
//! ansätze on a dense statevector simulator while the per-iteration shot
//! budget is chosen from the Shannon entropy of the previous iteration's
//! measurement histogram (`S = k * 2^H`), alongside the fixed, linear and
//! step baselines it is compared against.
//!
//! Bit convention: qubit `q` is bit `q` of a basis-state index (qubit 0 is
//! the least significant bit) everywhere in the crate.

pub mod allocation;
pub mod ansatz;
pub mod calibration;
pub mod error;
pub mod graphs;
pub mod noise;
pub mod optimizer;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod statevector;
pub mod training;

pub use error::{Error, Result};
