use crate::cnf::CnfFormula;
use crate::linalg::{c, CMatrix, C64, ZERO};
use crate::statevector::{apply_circuit, check_cap, gates, uev, Circuit, Control, Statevector};
use crate::{build_hamiltonian, Error, Result};

const AMPLITUDE_TOL: f64 = 1e-9;

/// Qubit positions of the purification register.
///
/// From qubit 0 upward: the flag, the `#C` unary clause qubits, the copy of
/// the assignment, then the assignment itself. Variable `v` of either
/// assignment register sits at offset `n - 1 - v`, so reading a register as an
/// integer gives the assignment index used by [`crate::cnf`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PurificationLayout {
    pub n: usize,
    pub num_clause_qubits: usize,
}

impl PurificationLayout {
    pub fn new(f: &CnfFormula) -> Self {
        Self {
            n: f.num_vars(),
            num_clause_qubits: f.num_clauses(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        2 * self.n + self.num_clause_qubits + 1
    }

    pub fn flag(&self) -> usize {
        0
    }

    /// Bit `j` of the unary clause register.
    pub fn k(&self, j: usize) -> usize {
        1 + j
    }

    pub fn copy(&self, var: usize) -> usize {
        1 + self.num_clause_qubits + (self.n - 1 - var)
    }

    pub fn s(&self, var: usize) -> usize {
        1 + self.num_clause_qubits + self.n + (self.n - 1 - var)
    }

    /// Keep order for reading the assignment register as a density matrix.
    pub fn s_register(&self) -> Vec<usize> {
        (0..self.n).rev().map(|v| self.s(v)).collect()
    }

    /// Basis index of `|s>|s>|k>|flag>` with `k` in `1..=#C`.
    pub fn index(&self, assignment: usize, clause: usize, flag: bool) -> usize {
        let k_bits = ((1usize << clause) - 1) << 1;
        let base = 1 + self.num_clause_qubits;
        (assignment << (base + self.n)) | (assignment << base) | k_bits | flag as usize
    }

    /// Qubits reflected about `|0>` in the amplified circuit.
    ///
    /// Undoing the preparation leaves the copy, the first clause bit and the
    /// flag at zero, so only the assignment and the remaining clause bits
    /// need the reflection.
    pub fn reflection_qubits(&self) -> Vec<usize> {
        let mut qs: Vec<usize> = (1..self.num_clause_qubits).map(|j| self.k(j)).collect();
        qs.extend((0..self.n).map(|v| self.s(v)));
        qs
    }
}

/// `a = 1/sqrt(Tr H)`, or a degeneracy error when every clause is a tautology.
pub fn normalization(f: &CnfFormula) -> Result<f64> {
    let tr = build_hamiltonian(f).trace();
    if tr == 0 {
        return Err(Error::Degenerate {
            reason: "Hamiltonian has zero trace".into(),
            trivial_count: 1u64 << f.num_vars(),
        });
    }
    Ok(1.0 / (tr as f64).sqrt())
}

/// Circuit `U` with `U|0> = (1/2)|ξ>|0> + (√3/2)|ξ⊥>|1>` on the flag.
///
/// Prepares `|s>|s>` by Hadamards and copies, a uniform unary superposition
/// over clause labels `1..=#C`, then sets the flag and flips it once for
/// each clause the copy violates.
pub fn build_purification_circuit(f: &CnfFormula) -> Result<Circuit> {
    let m = f.num_clauses();
    if m == 0 {
        return Err(Error::Argument(
            "purification needs at least one clause".into(),
        ));
    }
    let layout = PurificationLayout::new(f);
    let n = layout.n;
    let mut circ = Circuit::new(layout.num_qubits());
    for v in 0..n {
        circ.h(layout.s(v))?;
        circ.cx(layout.s(v), layout.copy(v))?;
    }
    circ.x(layout.k(0))?;
    for j in 1..m {
        let alpha = 1.0 / ((m - j + 1) as f64).sqrt();
        let theta = 2.0 * alpha.acos();
        let controls = if j == 1 {
            vec![]
        } else {
            vec![Control::on(layout.k(j - 1))]
        };
        circ.push(gates::ry(theta), &[layout.k(j)], &controls)?;
    }
    circ.x(layout.flag())?;
    for (i, clause) in f.clauses().iter().enumerate() {
        let Some(pattern) = clause.unsat_pattern() else {
            continue;
        };
        // unary label i+1: bit i set, bit i+1 clear
        let mut controls = Vec::new();
        if i >= 1 {
            controls.push(Control::on(layout.k(i)));
        }
        if i + 1 < m {
            controls.push(Control::off(layout.k(i + 1)));
        }
        for (var, value) in pattern {
            controls.push(Control {
                qubit: layout.copy(var),
                value,
            });
        }
        circ.push(gates::x(), &[layout.flag()], &controls)?;
    }
    Ok(circ)
}

/// `|ξ>|0>` written out classically from the formula.
pub fn purified_state(f: &CnfFormula) -> Result<Statevector> {
    let layout = PurificationLayout::new(f);
    check_cap(layout.num_qubits())?;
    let a = normalization(f)?;
    let n = layout.n;
    let mut amps = vec![ZERO; 1 << layout.num_qubits()];
    for s in 0..1usize << n {
        for (i, clause) in f.clauses().iter().enumerate() {
            if !clause.satisfied_by(s, n) {
                amps[layout.index(s, i + 1, false)] = c(a, 0.0);
            }
        }
    }
    Statevector::from_amplitudes(layout.num_qubits(), amps)
}

/// Squared norm of the flag-0 branch of `U|0>`.
pub fn flag_branch_weight(u: &Circuit, flag: usize) -> Result<f64> {
    let out = apply_circuit(u, &Statevector::zero(u.num_qubits())?)?;
    uev(&out, &[(flag, false)])
}

/// `U S_0 U† Z_flag U`, with `S_0 = I - 2|0><0|` on `reflect`.
///
/// When `reflect` is just the flag this is `-U Z U† Z U`. Requires the
/// flag-0 branch of `U|0>` to have amplitude exactly 1/2.
pub fn oblivious_amplify(u: &Circuit, flag: usize, reflect: &[usize]) -> Result<Circuit> {
    if u.has_projections() {
        return Err(Error::Argument(
            "amplification needs a unitary circuit".into(),
        ));
    }
    if reflect.is_empty() {
        return Err(Error::Argument(
            "reflection needs at least one qubit".into(),
        ));
    }
    let measured = flag_branch_weight(u, flag)?.sqrt();
    if (measured - 0.5).abs() > AMPLITUDE_TOL {
        return Err(Error::Amplitude {
            measured,
            expected: 0.5,
        });
    }
    let u_dag = u.inverse()?;
    let mut out = u.clone();
    out.z(flag)?;
    out.append(&u_dag)?;
    let minus_on_zero = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c(-1.0, 0.0),
        C64::new(1.0, 0.0),
    ]));
    let controls: Vec<Control> = reflect[1..].iter().map(|&q| Control::off(q)).collect();
    out.push(minus_on_zero, &[reflect[0]], &controls)?;
    out.append(u)?;
    Ok(out)
}

/// `U_ξ` for the formula: maps `|0>` to `|ξ>|0>`.
pub fn amplified_circuit(f: &CnfFormula) -> Result<Circuit> {
    let layout = PurificationLayout::new(f);
    let u = build_purification_circuit(f)?;
    oblivious_amplify(&u, layout.flag(), &layout.reflection_qubits())
}
