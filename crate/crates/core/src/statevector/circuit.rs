use crate::linalg::{is_unitary, CMatrix, C64, ZERO};
use crate::{Error, Result};

use super::{check_cap, gates, Statevector};

pub const UNITARY_TOL: f64 = 1e-10;
/// Widest matrix a single gate may carry.
pub const MAX_GATE_TARGETS: usize = 3;

/// A control condition: the gate fires when `qubit` reads `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Control {
    pub qubit: usize,
    pub value: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Self { qubit, value: true }
    }

    pub fn off(qubit: usize) -> Self {
        Self {
            qubit,
            value: false,
        }
    }
}

/// A unitary on up to three target qubits, optionally controlled.
///
/// `targets[0]` is the least-significant bit of the matrix index.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    matrix: CMatrix,
    targets: Vec<usize>,
    controls: Vec<Control>,
}

impl Gate {
    pub fn new(matrix: CMatrix, targets: Vec<usize>, controls: Vec<Control>) -> Result<Self> {
        let k = targets.len();
        if k == 0 || k > MAX_GATE_TARGETS {
            return Err(Error::Argument(format!(
                "gate must act on 1..={MAX_GATE_TARGETS} targets, got {k}"
            )));
        }
        if matrix.shape() != (1 << k, 1 << k) {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for {k} targets",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !is_unitary(&matrix, UNITARY_TOL) {
            return Err(Error::Argument("gate matrix is not unitary".into()));
        }
        let mut all: Vec<usize> = targets
            .iter()
            .copied()
            .chain(controls.iter().map(|c| c.qubit))
            .collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument("gate qubits must be distinct".into()));
        }
        Ok(Self {
            matrix,
            targets,
            controls,
        })
    }

    pub fn single(matrix: CMatrix, target: usize) -> Result<Self> {
        Self::new(matrix, vec![target], vec![])
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    /// Every qubit the gate touches: targets then controls.
    pub fn support(&self) -> Vec<usize> {
        self.targets
            .iter()
            .copied()
            .chain(self.controls.iter().map(|c| c.qubit))
            .collect()
    }

    pub fn adjoint(&self) -> Gate {
        Gate {
            matrix: self.matrix.adjoint(),
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    /// The gate with qubit `q` renamed to `map[q]`.
    pub fn remapped(&self, map: &[usize]) -> Gate {
        Gate {
            matrix: self.matrix.clone(),
            targets: self.targets.iter().map(|&q| map[q]).collect(),
            controls: self
                .controls
                .iter()
                .map(|c| Control {
                    qubit: map[c.qubit],
                    value: c.value,
                })
                .collect(),
        }
    }

    /// Full matrix on the ordered support (targets low, controls high).
    pub fn local_matrix(&self) -> CMatrix {
        let k = self.targets.len();
        let nc = self.controls.len();
        let dim = 1 << (k + nc);
        let mut m = CMatrix::identity(dim, dim);
        let fire: usize = self
            .controls
            .iter()
            .enumerate()
            .map(|(i, c)| (c.value as usize) << i)
            .sum();
        let base = fire << k;
        for r in 0..1 << k {
            for col in 0..1 << k {
                m[(base | r, base | col)] = self.matrix[(r, col)];
            }
        }
        m
    }

    pub(crate) fn apply(&self, amps: &mut [C64]) {
        let k = self.targets.len();
        let offsets: Vec<usize> = (0..1usize << k)
            .map(|j| {
                self.targets
                    .iter()
                    .enumerate()
                    .map(|(b, &t)| ((j >> b) & 1) << t)
                    .sum()
            })
            .collect();
        let tmask: usize = self.targets.iter().map(|&t| 1 << t).sum();
        let cmask: usize = self.controls.iter().map(|c| 1 << c.qubit).sum();
        let cval: usize = self
            .controls
            .iter()
            .map(|c| (c.value as usize) << c.qubit)
            .sum();
        let dim = 1usize << k;
        let m: Vec<C64> = (0..dim * dim)
            .map(|idx| self.matrix[(idx / dim, idx % dim)])
            .collect();
        let diagonal = (0..dim).all(|r| (0..dim).all(|c| r == c || m[r * dim + c] == ZERO));
        let mut buf = [ZERO; 1 << MAX_GATE_TARGETS];
        for base in 0..amps.len() {
            if base & tmask != 0 || base & cmask != cval {
                continue;
            }
            if diagonal {
                for j in 0..dim {
                    amps[base | offsets[j]] *= m[j * dim + j];
                }
                continue;
            }
            for j in 0..dim {
                buf[j] = amps[base | offsets[j]];
            }
            for r in 0..dim {
                let row = &m[r * dim..(r + 1) * dim];
                amps[base | offsets[r]] = row.iter().zip(&buf[..dim]).map(|(a, b)| a * b).sum();
            }
        }
    }
}

/// One step of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Gate(Gate),
    /// Keeps only the branch where `qubit` reads `outcome`, without rescaling.
    Project {
        qubit: usize,
        outcome: bool,
    },
}

/// Ordered list of gates and post-selections on a fixed qubit count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    num_qubits: usize,
    steps: Vec<Step>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            steps: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.steps.iter().filter_map(|s| match s {
            Step::Gate(g) => Some(g),
            Step::Project { .. } => None,
        })
    }

    pub fn gate_count(&self) -> usize {
        self.gates().count()
    }

    pub fn has_projections(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, Step::Project { .. }))
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::Argument(format!(
                "qubit {q} out of range for a {}-qubit circuit",
                self.num_qubits
            )));
        }
        Ok(())
    }

    pub fn push_gate(&mut self, gate: Gate) -> Result<&mut Self> {
        for q in gate.support() {
            self.check_qubit(q)?;
        }
        self.steps.push(Step::Gate(gate));
        Ok(self)
    }

    pub fn push(
        &mut self,
        matrix: CMatrix,
        targets: &[usize],
        controls: &[Control],
    ) -> Result<&mut Self> {
        self.push_gate(Gate::new(matrix, targets.to_vec(), controls.to_vec())?)
    }

    pub fn project(&mut self, qubit: usize, outcome: bool) -> Result<&mut Self> {
        self.check_qubit(qubit)?;
        self.steps.push(Step::Project { qubit, outcome });
        Ok(self)
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self> {
        self.push(gates::h(), &[q], &[])
    }

    pub fn x(&mut self, q: usize) -> Result<&mut Self> {
        self.push(gates::x(), &[q], &[])
    }

    pub fn z(&mut self, q: usize) -> Result<&mut Self> {
        self.push(gates::z(), &[q], &[])
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push(gates::x(), &[target], &[Control::on(control)])
    }

    pub fn swap(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        self.push(gates::swap(), &[a, b], &[])
    }

    /// Appends `other`'s steps; both circuits must have equal width.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::Dimension(format!(
                "appending a {}-qubit circuit to a {}-qubit circuit",
                other.num_qubits, self.num_qubits
            )));
        }
        self.steps.extend(other.steps.iter().cloned());
        Ok(self)
    }

    /// Places `other` on this circuit's qubits `map[0..]`.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize]) -> Result<&mut Self> {
        if map.len() != other.num_qubits {
            return Err(Error::Dimension(format!(
                "qubit map of length {} for a {}-qubit circuit",
                map.len(),
                other.num_qubits
            )));
        }
        for &q in map {
            self.check_qubit(q)?;
        }
        for step in &other.steps {
            self.steps.push(match step {
                Step::Gate(g) => Step::Gate(g.remapped(map)),
                Step::Project { qubit, outcome } => Step::Project {
                    qubit: map[*qubit],
                    outcome: *outcome,
                },
            });
        }
        Ok(self)
    }

    /// Adjoint circuit; undefined when the circuit post-selects.
    pub fn inverse(&self) -> Result<Circuit> {
        let mut steps = Vec::with_capacity(self.steps.len());
        for step in self.steps.iter().rev() {
            match step {
                Step::Gate(g) => steps.push(Step::Gate(g.adjoint())),
                Step::Project { .. } => {
                    return Err(Error::Argument(
                        "cannot invert a post-selecting circuit".into(),
                    ))
                }
            }
        }
        Ok(Circuit {
            num_qubits: self.num_qubits,
            steps,
        })
    }

    /// Every gate additionally conditioned on `control`.
    pub fn controlled_by(&self, control: Control, total_qubits: usize) -> Result<Circuit> {
        let mut out = Circuit::new(total_qubits);
        for step in &self.steps {
            match step {
                Step::Gate(g) => {
                    let mut controls = g.controls.clone();
                    controls.push(control);
                    out.push_gate(Gate::new(g.matrix.clone(), g.targets.clone(), controls)?)?;
                }
                Step::Project { .. } => {
                    return Err(Error::Argument("cannot control a projection".into()))
                }
            }
        }
        Ok(out)
    }

    /// Linear map realized by the circuit, assembled column by column.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.num_qubits > 12 {
            return Err(Error::Scale(format!(
                "dense matrix of a {}-qubit circuit",
                self.num_qubits
            )));
        }
        let dim = 1 << self.num_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let out = apply_circuit(self, &Statevector::basis(self.num_qubits, col)?)?;
            for (row, a) in out.amplitudes().iter().enumerate() {
                m[(row, col)] = *a;
            }
        }
        Ok(m)
    }
}

/// Runs `circuit` on `state`. Projections zero the opposite branch and clear
/// the normalized flag; nothing is ever rescaled.
pub fn apply_circuit(circuit: &Circuit, state: &Statevector) -> Result<Statevector> {
    if circuit.num_qubits != state.num_qubits() {
        return Err(Error::Dimension(format!(
            "{}-qubit circuit applied to a {}-qubit state",
            circuit.num_qubits,
            state.num_qubits()
        )));
    }
    check_cap(circuit.num_qubits)?;
    let mut out = state.clone();
    for step in &circuit.steps {
        apply_step(step, &mut out);
    }
    Ok(out)
}

pub(crate) fn apply_step(step: &Step, state: &mut Statevector) {
    match step {
        Step::Gate(g) => g.apply(state.amplitudes_mut()),
        Step::Project { qubit, outcome } => {
            let bit = 1usize << qubit;
            let keep = if *outcome { bit } else { 0 };
            for (i, a) in state.amplitudes_mut().iter_mut().enumerate() {
                if i & bit != keep {
                    *a = ZERO;
                }
            }
            state.mark_unnormalized();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff, ONE};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hadamard_on_zero() {
        let mut circ = Circuit::new(1);
        circ.h(0).unwrap();
        let out = apply_circuit(&circ, &Statevector::zero(1).unwrap()).unwrap();
        assert!((out.amplitude(0) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((out.amplitude(1) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!(out.is_normalized());
    }

    #[test]
    fn projection_does_not_renormalize() {
        let mut circ = Circuit::new(1);
        circ.h(0).unwrap().project(0, false).unwrap();
        let out = apply_circuit(&circ, &Statevector::zero(1).unwrap()).unwrap();
        assert!(!out.is_normalized());
        assert!((out.norm_sqr() - 0.5).abs() < 1e-15);
        assert!((out.amplitude(0) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(out.amplitude(1), ZERO);
    }

    #[test]
    fn dimension_mismatch() {
        let circ = Circuit::new(2);
        assert!(matches!(
            apply_circuit(&circ, &Statevector::zero(3).unwrap()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn rejects_bad_gates() {
        let not_unitary = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(Gate::new(not_unitary, vec![0], vec![]).is_err());
        assert!(Gate::new(gates::x(), vec![0], vec![Control::on(0)]).is_err());
        let mut circ = Circuit::new(2);
        assert!(circ.x(2).is_err());
        assert!(Gate::new(CMatrix::identity(16, 16), vec![0, 1, 2, 3], vec![]).is_err());
    }

    #[test]
    fn cnot_with_negative_control() {
        let mut circ = Circuit::new(2);
        circ.push(gates::x(), &[0], &[Control::off(1)]).unwrap();
        let out = apply_circuit(&circ, &Statevector::zero(2).unwrap()).unwrap();
        assert_eq!(out.amplitude(1), ONE);
    }

    #[test]
    fn multi_target_ordering() {
        // matrix index bit 0 is targets[0]
        let mut circ = Circuit::new(3);
        circ.swap(0, 2).unwrap();
        let out = apply_circuit(&circ, &Statevector::basis(3, 0b001).unwrap()).unwrap();
        assert_eq!(out.amplitude(0b100), ONE);
    }

    #[test]
    fn inverse_undoes() {
        let mut circ = Circuit::new(3);
        circ.h(0)
            .unwrap()
            .cx(0, 2)
            .unwrap()
            .push(gates::ry(0.4), &[1], &[Control::on(2)])
            .unwrap();
        let mut both = circ.clone();
        both.append(&circ.inverse().unwrap()).unwrap();
        assert!(max_abs_diff(&both.to_matrix().unwrap(), &CMatrix::identity(8, 8)) < 1e-14);
        let mut p = Circuit::new(1);
        p.project(0, true).unwrap();
        assert!(p.inverse().is_err());
    }

    #[test]
    fn local_matrix_of_cnot() {
        let g = Gate::new(gates::x(), vec![0], vec![Control::on(1)]).unwrap();
        let m = g.local_matrix();
        assert_eq!(m[(3, 2)], ONE);
        assert_eq!(m[(0, 0)], ONE);
    }
}
