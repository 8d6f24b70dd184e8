//! Basis-sparse simulation for registers too wide for a dense vector but
//! whose states stay concentrated on few basis strings.

use std::collections::BTreeMap;

use crate::linalg::{C64, ZERO};
use crate::{Error, Result};

use super::{Circuit, Step};

/// Basis index to amplitude; absent keys are zero.
pub type SparseState = BTreeMap<u64, C64>;

/// Runs `circuit` on `input`, dropping exact zeros as they appear.
pub fn apply_circuit_sparse(circuit: &Circuit, input: &SparseState) -> Result<SparseState> {
    if circuit.num_qubits() > 64 {
        return Err(Error::Scale(format!(
            "{} qubits exceeds the 64-bit sparse index",
            circuit.num_qubits()
        )));
    }
    let mut state = input.clone();
    for step in circuit.steps() {
        match step {
            Step::Project { qubit, outcome } => {
                state.retain(|&idx, _| ((idx >> qubit) & 1 == 1) == *outcome);
            }
            Step::Gate(g) => {
                let mut next = SparseState::new();
                let m = g.matrix();
                for (&idx, &amp) in &state {
                    let fires = g
                        .controls()
                        .iter()
                        .all(|c| ((idx >> c.qubit) & 1 == 1) == c.value);
                    if !fires {
                        *next.entry(idx).or_insert(ZERO) += amp;
                        continue;
                    }
                    let col = g.targets().iter().enumerate().fold(0usize, |acc, (b, &t)| {
                        acc | (((idx >> t) & 1) as usize) << b
                    });
                    let cleared = g.targets().iter().fold(idx, |acc, &t| acc & !(1u64 << t));
                    for row in 0..m.nrows() {
                        let entry = m[(row, col)];
                        if entry == ZERO {
                            continue;
                        }
                        let out = g
                            .targets()
                            .iter()
                            .enumerate()
                            .fold(cleared, |acc, (b, &t)| acc | (((row >> b) & 1) as u64) << t);
                        *next.entry(out).or_insert(ZERO) += entry * amp;
                    }
                }
                next.retain(|_, a| *a != ZERO);
                state = next;
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{apply_circuit, gates, Control, Statevector};

    #[test]
    fn agrees_with_dense() {
        let mut c = Circuit::new(4);
        c.h(0).unwrap();
        c.cx(0, 2).unwrap();
        c.push(gates::ry(0.7), &[3], &[Control::off(2)]).unwrap();
        c.push(gates::swap(), &[1, 3], &[]).unwrap();
        c.project(2, true).unwrap();
        let dense = apply_circuit(&c, &Statevector::basis(4, 0b0010).unwrap()).unwrap();
        let sparse =
            apply_circuit_sparse(&c, &SparseState::from([(0b0010, C64::new(1.0, 0.0))])).unwrap();
        for (i, a) in dense.amplitudes().iter().enumerate() {
            let s = sparse.get(&(i as u64)).copied().unwrap_or(ZERO);
            assert!((a - s).norm() < 1e-15);
        }
    }

    #[test]
    fn wide_register_stays_small() {
        let mut c = Circuit::new(60);
        c.x(59).unwrap();
        c.h(0).unwrap();
        c.project(0, false).unwrap();
        let out = apply_circuit_sparse(&c, &SparseState::from([(0, C64::new(1.0, 0.0))])).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[&(1u64 << 59)].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }
}
