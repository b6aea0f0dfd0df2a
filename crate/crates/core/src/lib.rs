//! Reverse Ising circuit synthesis.
//!
//! Given the truth table of a logic circuit, this crate searches for Ising
//! Hamiltonian coefficients (fields `h` and couplings `J`) under which every
//! correct circuit state is likely under the Boltzmann distribution. The
//! worst-case failure probability is smoothed with a nested log-sum-exp so it
//! can be minimized with an analytic gradient, and the optimum
//! `rho = 1 - exp(min f)` is used as the training target for fast surrogate
//! regressors over auxiliary spin assignments.
//!
//! The crate is `no_std` with `alloc`. File formats, the command-line tool and
//! parallel drivers live in the companion `revising` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod boltzmann;
pub mod datagen;
mod error;
pub mod ising;
pub(crate) mod math;
pub mod oracle;
pub mod problems;
pub mod solver;
pub mod surrogate;

pub use error::{Error, Result};
