//! Charging protocols, analytical bounds and numerical oracles for bosonic
//! quantum batteries.
//!
//! Units: `hbar = k_B = 1`. A single mode is described by its frequency
//! `omega` and inverse temperature `beta`; `beta = f64::INFINITY` is the
//! zero-temperature limit.

pub mod exec;
pub mod fock;
pub mod gaussian;
pub mod multimode;
pub mod oracle;
pub mod protocols;
pub mod solvers;

pub use exec::Execution;
pub use fock::{DiagonalState, FockError, Rotation, ThermalSpec, TransitionLedger};
