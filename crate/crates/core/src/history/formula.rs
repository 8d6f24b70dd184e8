use crate::cnf::CnfFormula;
use crate::linalg::{c, ZERO};
use crate::statevector::{gates, Gate, Statevector};
use crate::Result;

use super::clock::{HistoryCircuit, HistoryHamiltonian, HistoryState, Penalty};
use super::compile::elementary_gates;
use super::purification::{amplified_circuit, PurificationLayout};

/// System register of the history construction.
///
/// The `U_ξ` block occupies qubits `0..B` with `B = 2n + #C + 1`, laid out
/// as in [`PurificationLayout`]. Qubit `B` is the marker flipped by the last
/// step; EPR pair `v` follows as `(B + 1 + 2v, B + 2 + 2v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryLayout {
    pub purification: PurificationLayout,
    pub t0: usize,
}

impl HistoryLayout {
    fn block(&self) -> usize {
        self.purification.num_qubits()
    }

    pub fn n(&self) -> usize {
        self.purification.n
    }

    pub fn marker(&self) -> usize {
        self.block()
    }

    /// EPR half that receives assignment qubit `v`.
    pub fn half_a(&self, v: usize) -> usize {
        self.block() + 1 + 2 * v
    }

    pub fn half_b(&self, v: usize) -> usize {
        self.block() + 2 + 2 * v
    }

    pub fn num_system(&self) -> usize {
        self.block() + 1 + 2 * self.n()
    }

    /// `T = T0 + n + 1`.
    pub fn num_steps(&self) -> usize {
        self.t0 + self.n() + 1
    }

    /// Keep order of the `n`-qubit cut, variable `n-1` least significant.
    pub fn cut(&self) -> Vec<usize> {
        (0..self.n()).rev().map(|v| self.half_a(v)).collect()
    }

    /// The cut with the marker prepended as the least significant bit.
    pub fn tau_cut(&self) -> Vec<usize> {
        let mut keep = vec![self.marker()];
        keep.extend(self.cut());
        keep
    }
}

/// Gate sequence, input and penalties for a formula.
#[derive(Debug, Clone)]
pub struct FormulaHistory {
    pub layout: HistoryLayout,
    pub circuit: HistoryCircuit,
}

/// `U_1..U_T`: the elementary gates of `U_ξ`, one SWAP per variable into
/// its EPR half, then X on the marker.
pub fn history_circuit(f: &CnfFormula) -> Result<FormulaHistory> {
    let purification = PurificationLayout::new(f);
    let compiled = elementary_gates(&amplified_circuit(f)?)?;
    let layout = HistoryLayout {
        purification,
        t0: compiled.len(),
    };
    let n = layout.n();
    let s = layout.num_system();
    let mut gate_list = compiled;
    for v in 0..n {
        gate_list.push(Gate::new(
            gates::swap(),
            vec![purification.s(v), layout.half_a(v)],
            vec![],
        )?);
    }
    gate_list.push(Gate::single(gates::x(), layout.marker())?);

    let mut amps = vec![ZERO; 1 << s];
    let amp = c((-(n as f64) / 2.0).exp2(), 0.0);
    for pattern in 0..1usize << n {
        let mut idx = 1 << layout.marker();
        for v in 0..n {
            if pattern >> v & 1 == 1 {
                idx |= 1 << layout.half_a(v) | 1 << layout.half_b(v);
            }
        }
        amps[idx] = amp;
    }
    let input = Statevector::from_amplitudes(s, amps)?;

    let mut input_penalties: Vec<Penalty> = (0..layout.block())
        .map(|q| Penalty::qubit(q, true))
        .collect();
    input_penalties.extend((0..n).map(|v| Penalty::off_bell(layout.half_a(v), layout.half_b(v))));
    input_penalties.push(Penalty::qubit(layout.marker(), false));
    let output_penalties = vec![Penalty::qubit(purification.flag(), true)];

    Ok(FormulaHistory {
        layout,
        circuit: HistoryCircuit {
            num_system: s,
            gates: gate_list,
            input,
            input_penalties,
            output_penalties,
        },
    })
}

/// The history state of the formula's circuit, one vector per clock sector.
pub fn build_history_state(f: &CnfFormula) -> Result<HistoryState> {
    HistoryState::new(&history_circuit(f)?.circuit)
}

/// `H'` for the formula's circuit.
pub fn build_history_hamiltonian(f: &CnfFormula) -> Result<HistoryHamiltonian> {
    let h = history_circuit(f)?;
    HistoryHamiltonian::new(h.circuit, h.layout.t0)
}
