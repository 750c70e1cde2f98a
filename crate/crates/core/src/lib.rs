//! Simulation side of the data-augmented error-mitigation lab.
//!
//! The crate covers dense density-matrix simulation of qubit circuits and
//! Hamiltonian dynamics, Markovian noise channels, a discretized spin-boson
//! bath for gate-dependent non-Markovian noise, the target process builders
//! (VQE, swap test, QAOA, spin-chain dynamics), truncated-Fock
//! continuous-variable dynamics with Wigner sampling, fiducial dataset
//! construction, and the ZNE / CDR baselines.

pub mod baselines;
pub mod bath;
pub mod circuit;
pub mod cv;
pub mod dataset;
pub mod error;
pub mod fiducial;
pub mod ising;
pub mod linalg;
pub mod noise;
pub mod pauli;
pub mod process;
pub mod rng;
pub mod state;
pub mod transpile;

pub use circuit::{Circuit, Gate};
pub use error::{Result, SimError};
pub use linalg::{CMatrix, C64};
pub use pauli::{Pauli, PauliObservable};
pub use state::DensityMatrix;
