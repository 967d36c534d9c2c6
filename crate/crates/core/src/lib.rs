//! Simulation and verification toolkit for the one-dimensional log-gas
//! gradient flow `dx_i/dt = -V'(x_i) + (2/N) sum_{j != i} 1/(x_i - x_j)`.
//!
//! The crate is organised bottom-up: [`potentials`] and [`measures`] hold the
//! basic value types, [`equilibrium`] the closed-form quartic equilibrium
//! measures, [`functionals`] entropy / Fisher information / Hilbert
//! transforms, [`dynamics`] the particle integrator, [`constants`] the
//! explicit convergence constants and [`verifier`] the trajectory checks.

// `!(x > 0.0)` is used throughout so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constants;
pub mod dynamics;
pub mod equilibrium;
mod error;
pub mod functionals;
pub mod io;
pub mod measures;
pub mod potentials;
pub mod quadrature;
pub mod verifier;

pub use error::{Error, Result};
pub use equilibrium::{EquilibriumDensity, EquilibriumSpec};
pub use measures::{ParticleEnsemble, QuantileFunction};
pub use potentials::{PerturbedPotential, Potential};
