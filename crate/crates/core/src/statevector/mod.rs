//! Dense statevector simulation with non-renormalizing projections.
//!
//! Qubit 0 is the least-significant bit of a basis index. A register written
//! leftmost in a ket occupies the highest qubit indices.

mod circuit;
mod density;
pub mod gates;
mod sparse;
mod state;

pub use circuit::{apply_circuit, Circuit, Control, Gate, Step, MAX_GATE_TARGETS, UNITARY_TOL};
pub use density::{
    prepare_max_entangled, reduced_density_matrix, schmidt_spectrum, uev, DensityMatrix,
};
pub use sparse::{apply_circuit_sparse, SparseState};
pub use state::Statevector;

use std::sync::OnceLock;

/// Default ceiling on dense register width.
pub const DEFAULT_MAX_QUBITS: usize = 22;

/// Desk-scale qubit cap, overridable through `ENTSPEC_MAX_QUBITS`.
pub fn max_qubits() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("ENTSPEC_MAX_QUBITS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_QUBITS)
    })
}

pub(crate) fn check_cap(num_qubits: usize) -> crate::Result<()> {
    let cap = max_qubits();
    if num_qubits > cap {
        return Err(crate::Error::Scale(format!(
            "{num_qubits} qubits exceeds the desk cap of {cap}"
        )));
    }
    Ok(())
}
