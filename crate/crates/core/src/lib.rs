//! Two-photon quantum Rabi model: exact regular spectrum from G-function
//! zeros, finite-order analytic approximations, a variational ground state,
//! and an independent Fock-space diagonalization used as ground truth.
//!
//! The Hamiltonian (cavity frequency fixed to 1) is
//!
//! ```text
//! H = -(Ω/2) σx + a†a + g [(a†)² + a²] σz,     0 ≤ g < 1/2.
//! ```
//!
//! Every spectral quantity lives in one of four [`Sector`]s labelled by the
//! Bargmann index q ∈ {1/4, 3/4} (photon-number parity) and the parity
//! Π = ±1.

pub mod approx;
pub mod error;
pub mod gfunc;
pub mod linalg;
pub mod melem;
pub mod model;
pub mod oracle;
pub mod variational;

pub use error::{Error, Result};
pub use model::{BargmannIndex, BogoliubovFrame, ModelParams, Parity, Sector};
