//! Quantum-assisted training of restricted Boltzmann machine wavefunctions
//! for qubit Hamiltonians.

pub mod circuit;
pub mod cli;
pub mod hamiltonian;
pub mod optimizer;
pub mod rbm;
pub mod sampler;
pub mod spin;

pub use hamiltonian::{parse_hamiltonian, PauliHamiltonian};
pub use rbm::RbmParameters;
pub use spin::SpinConfiguration;
