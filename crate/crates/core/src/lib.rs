//! Numerical laboratory for one-dimensional quantum cellular automata.
//!
//! Two engines live here:
//!
//! * a Clifford engine working in the binary symplectic phase space
//!   ([`pauli`], [`clifford`]) with a dense small-ring oracle ([`dense`]);
//! * a quasi-free fermion engine working at the Majorana single-particle
//!   level ([`fermion`], [`bands`], [`couplings`]).

pub mod bands;
pub mod clifford;
pub mod couplings;
pub mod dense;
pub mod error;
pub mod fermion;
pub mod linalg;
pub mod pauli;

pub use error::{Error, Result};
