//! Exact diagonalization of a frustrated spin-1/2 square-lattice model with a
//! plaquette-projector term, on periodic clusters.

pub mod config;
pub mod coverings;
pub mod eigensolver;
pub mod error;
pub mod figures;
pub mod hamiltonian;
pub mod hilbert;
pub mod lattice;
pub mod linalg;
pub mod observables;
pub mod spectrum;
pub mod sweep;
pub mod swap;
pub mod vbs;

pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianOperator, ModelParams};
pub use hilbert::{SectorBasis, SpinConfig, StateVector};
pub use lattice::{Cluster, Momentum, Sublattice};
