//! Purification of `H/Tr H`, its amplitude-amplified preparation, and the
//! clock Hamiltonian whose ground state is the history of that preparation.

mod clock;
pub mod compile;
mod formula;
pub mod lanczos;
mod purification;
mod spectra;

pub use clock::{
    gate_list_matrix, HistoryCircuit, HistoryHamiltonian, HistoryState, LegalOperator, Penalty,
    Term, TermLabel, MAX_LOCALITY,
};
pub use compile::{compile_two_local, elementary_gates, embed, fuse};
pub use formula::{
    build_history_hamiltonian, build_history_state, history_circuit, FormulaHistory, HistoryLayout,
};
pub use lanczos::{lowest_eigenpair, Eigenpair, LanczosOptions};
pub use purification::{
    amplified_circuit, build_purification_circuit, flag_branch_weight, normalization,
    oblivious_amplify, purified_state, PurificationLayout,
};
pub use spectra::{
    count_density_above, ground_report, intermediate_spectra, spectra_from_state, tau_threshold,
    verify_history, GroundReport, HistoryReport, IntermediateSpectra, TauDecomposition, TimeReport,
};
