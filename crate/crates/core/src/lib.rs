//! Desk-scale simulation of entanglement-spectrum counting constructions.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod cnf;
mod error;
pub mod history;
pub mod lcu;
pub mod linalg;
pub mod qpe;
pub mod spectrum;
pub mod statevector;

pub use cnf::{
    brute_force_count, build_hamiltonian, hamiltonian_to_density, parse_dimacs, CnfFormula,
    DiagonalHamiltonian,
};
pub use error::{Error, Result};
pub use history::{
    build_history_hamiltonian, build_history_state, build_purification_circuit,
    intermediate_spectra, oblivious_amplify, HistoryHamiltonian, TauDecomposition,
};
pub use spectrum::{
    count_above, count_ground_degeneracy, CountPromise, Hamiltonian, SchmidtSpectrum,
};
pub use statevector::{apply_circuit, Circuit, DensityMatrix, Statevector};
