use std::fmt;

use serde::Serialize;

use crate::linalg::{c, identity, kron, CMatrix, C64, ONE, ZERO};
use crate::statevector::{apply_circuit, check_cap, max_qubits, Circuit, Gate, Statevector};
use crate::{Error, Result};

/// Largest support a term may have.
pub const MAX_LOCALITY: usize = 5;

/// A positive semidefinite operator on a few system qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalty {
    pub support: Vec<usize>,
    pub matrix: CMatrix,
}

impl Penalty {
    /// `|value><value|` on one qubit.
    pub fn qubit(q: usize, value: bool) -> Self {
        let mut m = CMatrix::zeros(2, 2);
        m[(value as usize, value as usize)] = ONE;
        Self {
            support: vec![q],
            matrix: m,
        }
    }

    /// `I - |E><E|` on a pair, `|E> = (|00> + |11>)/√2`.
    pub fn off_bell(a: usize, b: usize) -> Self {
        let mut m = identity(4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] -= c(0.5, 0.0);
        }
        Self {
            support: vec![a, b],
            matrix: m,
        }
    }
}

/// A gate sequence with its input and the penalties pinning input and output.
#[derive(Debug, Clone)]
pub struct HistoryCircuit {
    pub num_system: usize,
    pub gates: Vec<Gate>,
    pub input: Statevector,
    pub input_penalties: Vec<Penalty>,
    pub output_penalties: Vec<Penalty>,
}

impl HistoryCircuit {
    /// Number of clock steps.
    pub fn num_steps(&self) -> usize {
        self.gates.len()
    }

    /// Global index of clock qubit `t` (1-based).
    pub fn clock_qubit(&self, t: usize) -> usize {
        self.num_system + t - 1
    }

    fn check(&self) -> Result<()> {
        if self.gates.is_empty() {
            return Err(Error::Argument("history needs at least one gate".into()));
        }
        if self.input.num_qubits() != self.num_system {
            return Err(Error::Dimension(format!(
                "{}-qubit input for a {}-qubit system",
                self.input.num_qubits(),
                self.num_system
            )));
        }
        check_cap(self.num_system)?;
        let legal_dim = (self.num_steps() + 1) << self.num_system;
        if legal_dim > 1usize << max_qubits() {
            return Err(Error::Scale(format!(
                "legal clock sector of dimension {legal_dim} exceeds the desk cap"
            )));
        }
        Ok(())
    }
}

/// Which part of `H'` a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermLabel {
    In,
    Out,
    Prop(usize),
    Clock(usize),
}

impl fmt::Display for TermLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermLabel::In => write!(f, "in"),
            TermLabel::Out => write!(f, "out"),
            TermLabel::Prop(t) => write!(f, "prop({t})"),
            TermLabel::Clock(t) => write!(f, "clock({t})"),
        }
    }
}

/// One local term: `matrix` on `support`, first entry least significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub label: TermLabel,
    pub support: Vec<usize>,
    pub matrix: CMatrix,
}

#[derive(Serialize)]
struct TermDump<'a> {
    label: String,
    support: &'a [usize],
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Clock Hamiltonian `H_in + H_out + Σ H_prop(t) + H_clock` with a unary clock.
///
/// System qubits come first; clock qubit `t` (1-based) follows them.
#[derive(Debug, Clone)]
pub struct HistoryHamiltonian {
    pub terms: Vec<Term>,
    pub num_system: usize,
    pub num_clock: usize,
    pub t0: usize,
    circuit: HistoryCircuit,
}

impl HistoryHamiltonian {
    pub fn new(circuit: HistoryCircuit, t0: usize) -> Result<Self> {
        circuit.check()?;
        let s = circuit.num_system;
        let t_max = circuit.num_steps();
        let clock = |t: usize| s + t - 1;
        let mut terms = Vec::new();
        let p0 = projector(false);
        let p1 = projector(true);
        for p in &circuit.input_penalties {
            terms.push(clocked(TermLabel::In, p, &[clock(1)], &p0));
        }
        for p in &circuit.output_penalties {
            terms.push(clocked(TermLabel::Out, p, &[clock(t_max)], &p1));
        }
        for (i, gate) in circuit.gates.iter().enumerate() {
            let t = i + 1;
            let (clock_support, before, after) = prop_clock(t, t_max);
            let clock_support: Vec<usize> = clock_support.into_iter().map(clock).collect();
            let sys_support = gate.support();
            let u = gate.local_matrix();
            let dc = 1 << clock_support.len();
            let ds = u.nrows();
            let mut m = CMatrix::zeros(ds * dc, ds * dc);
            let half = c(0.5, 0.0);
            for a in 0..ds {
                m[(after * ds + a, after * ds + a)] += half;
                m[(before * ds + a, before * ds + a)] += half;
                for b in 0..ds {
                    m[(after * ds + a, before * ds + b)] -= half * u[(a, b)];
                    m[(before * ds + a, after * ds + b)] -= half * u[(b, a)].conj();
                }
            }
            let mut support = sys_support;
            support.extend(clock_support);
            terms.push(Term {
                label: TermLabel::Prop(t),
                support,
                matrix: m,
            });
        }
        for t in 2..=t_max {
            let mut m = CMatrix::zeros(4, 4);
            // c_{t-1} = 0 (bit 0), c_t = 1 (bit 1)
            m[(2, 2)] = ONE;
            terms.push(Term {
                label: TermLabel::Clock(t),
                support: vec![clock(t - 1), clock(t)],
                matrix: m,
            });
        }
        Ok(Self {
            terms,
            num_system: s,
            num_clock: t_max,
            t0,
            circuit,
        })
    }

    pub fn circuit(&self) -> &HistoryCircuit {
        &self.circuit
    }

    pub fn num_qubits(&self) -> usize {
        self.num_system + self.num_clock
    }

    /// `1/(2(T+1)^2)`.
    pub fn gap_bound(&self) -> f64 {
        let t1 = (self.num_clock + 1) as f64;
        1.0 / (2.0 * t1 * t1)
    }

    /// Number of terms whose support exceeds [`MAX_LOCALITY`].
    pub fn locality_violations(&self) -> usize {
        self.terms
            .iter()
            .filter(|t| t.support.len() > MAX_LOCALITY)
            .count()
    }

    /// Dense `H'` on all system and clock qubits.
    pub fn to_dense(&self) -> Result<CMatrix> {
        let nq = self.num_qubits();
        if nq > 14 {
            return Err(Error::Scale(format!(
                "dense clock Hamiltonian on {nq} qubits"
            )));
        }
        let dim = 1usize << nq;
        let mut h = CMatrix::zeros(dim, dim);
        for term in &self.terms {
            let k = term.support.len();
            let mask: usize = term.support.iter().fold(0, |acc, &q| acc | 1 << q);
            let local = |i: usize| {
                term.support
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (j, &q)| acc | (((i >> q) & 1) << j))
            };
            let scatter = |base: usize, l: usize| {
                term.support
                    .iter()
                    .enumerate()
                    .fold(base, |acc, (j, &q)| acc | (((l >> j) & 1) << q))
            };
            for col in 0..dim {
                let base = col & !mask;
                let lc = local(col);
                for lr in 0..1usize << k {
                    let v = term.matrix[(lr, lc)];
                    if v != ZERO {
                        h[(scatter(base, lr), col)] += v;
                    }
                }
            }
        }
        Ok(h)
    }

    /// Term list as JSON objects `{label, support, matrix}`, entries `[re, im]`.
    pub fn to_json(&self) -> String {
        let dump: Vec<TermDump> = self
            .terms
            .iter()
            .map(|t| TermDump {
                label: t.label.to_string(),
                support: &t.support,
                matrix: (0..t.matrix.nrows())
                    .map(|r| {
                        (0..t.matrix.ncols())
                            .map(|col| [t.matrix[(r, col)].re, t.matrix[(r, col)].im])
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&dump).expect("term dump serializes")
    }

    /// `H'` restricted to legal clock states, applied without assembling.
    pub fn legal_operator(&self) -> LegalOperator {
        let c = &self.circuit;
        let t_max = c.num_steps();
        let mut blocks = Vec::new();
        for p in &c.input_penalties {
            blocks.push(Block::local(0, 0, 1.0, p.matrix.clone(), p.support.clone()));
        }
        for p in &c.output_penalties {
            blocks.push(Block::local(
                t_max,
                t_max,
                1.0,
                p.matrix.clone(),
                p.support.clone(),
            ));
        }
        let mut diag = vec![0.0; t_max + 1];
        for (i, gate) in c.gates.iter().enumerate() {
            let t = i + 1;
            diag[t] += 0.5;
            diag[t - 1] += 0.5;
            let u = gate.local_matrix();
            blocks.push(Block::local(t, t - 1, -0.5, u.clone(), gate.support()));
            blocks.push(Block::local(t - 1, t, -0.5, u.adjoint(), gate.support()));
        }
        LegalOperator {
            num_system: c.num_system,
            diag,
            blocks,
        }
    }
}

fn projector(value: bool) -> CMatrix {
    Penalty::qubit(0, value).matrix
}

fn clocked(label: TermLabel, p: &Penalty, clock: &[usize], clock_op: &CMatrix) -> Term {
    let mut support = p.support.clone();
    support.extend_from_slice(clock);
    Term {
        label,
        support,
        matrix: kron(clock_op, &p.matrix),
    }
}

/// Clock qubits (1-based) read by `H_prop(t)` and the local indices of the
/// legal states `t-1` and `t` on them.
fn prop_clock(t: usize, t_max: usize) -> (Vec<usize>, usize, usize) {
    match (t == 1, t == t_max) {
        (true, true) => (vec![1], 0, 1),
        (true, false) => (vec![1, 2], 0b00, 0b01),
        (false, true) => (vec![t - 1, t], 0b01, 0b11),
        (false, false) => (vec![t - 1, t, t + 1], 0b001, 0b011),
    }
}

#[derive(Debug, Clone)]
struct Block {
    row: usize,
    col: usize,
    scale: f64,
    matrix: CMatrix,
    offsets: Vec<usize>,
    mask: usize,
}

impl Block {
    fn local(row: usize, col: usize, scale: f64, matrix: CMatrix, support: Vec<usize>) -> Self {
        let offsets = (0..1usize << support.len())
            .map(|l| {
                support
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (j, &q)| acc | (((l >> j) & 1) << q))
            })
            .collect();
        let mask = support.iter().fold(0, |acc, &q| acc | 1 << q);
        Self {
            row,
            col,
            scale,
            matrix,
            offsets,
            mask,
        }
    }

    fn apply_add(&self, input: &[C64], out: &mut [C64]) {
        let k = self.offsets.len();
        let mut gathered = vec![ZERO; k];
        for base in 0..input.len() {
            if base & self.mask != 0 {
                continue;
            }
            for (g, &o) in gathered.iter_mut().zip(&self.offsets) {
                *g = input[base | o];
            }
            if gathered.iter().all(|z| *z == ZERO) {
                continue;
            }
            for (r, &o) in self.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (col, g) in gathered.iter().enumerate() {
                    acc += self.matrix[(r, col)] * g;
                }
                out[base | o] += acc * self.scale;
            }
        }
    }
}

/// Matrix-free `H'` on the legal sector, vectors laid out as `t · 2^S + x`.
#[derive(Debug, Clone)]
pub struct LegalOperator {
    num_system: usize,
    diag: Vec<f64>,
    blocks: Vec<Block>,
}

impl LegalOperator {
    pub fn num_sectors(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        self.num_sectors() << self.num_system
    }

    /// `out = H' v`.
    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        let sector = 1usize << self.num_system;
        for (t, d) in self.diag.iter().enumerate() {
            for i in t * sector..(t + 1) * sector {
                out[i] = v[i] * *d;
            }
        }
        for b in &self.blocks {
            let input = &v[b.col * sector..(b.col + 1) * sector];
            let output = &mut out[b.row * sector..(b.row + 1) * sector];
            b.apply_add(input, output);
        }
    }

    /// Dense matrix of the operator, for small instances.
    pub fn to_dense(&self) -> Result<CMatrix> {
        let dim = self.dim();
        if dim > 1 << 12 {
            return Err(Error::Scale(format!(
                "dense legal sector of dimension {dim}"
            )));
        }
        let mut m = CMatrix::zeros(dim, dim);
        let mut e = vec![ZERO; dim];
        let mut col = vec![ZERO; dim];
        for j in 0..dim {
            e[j] = ONE;
            self.apply(&e, &mut col);
            for (i, z) in col.iter().enumerate() {
                m[(i, j)] = *z;
            }
            e[j] = ZERO;
        }
        Ok(m)
    }
}

/// `(1/√(T+1)) Σ_t U_t⋯U_1|α>|t>`, stored as the normalized state of each clock sector.
#[derive(Debug, Clone)]
pub struct HistoryState {
    sectors: Vec<Statevector>,
}

impl HistoryState {
    pub fn new(circuit: &HistoryCircuit) -> Result<Self> {
        circuit.check()?;
        let mut sectors = Vec::with_capacity(circuit.num_steps() + 1);
        let mut current = circuit.input.clone();
        sectors.push(current.clone());
        for gate in &circuit.gates {
            let mut step = Circuit::new(circuit.num_system);
            step.push_gate(gate.clone())?;
            current = apply_circuit(&step, &current)?;
            sectors.push(current.clone());
        }
        Ok(Self { sectors })
    }

    /// Number of clock steps `T`.
    pub fn num_steps(&self) -> usize {
        self.sectors.len() - 1
    }

    /// `U_t⋯U_1|α>`.
    pub fn sector(&self, t: usize) -> &Statevector {
        &self.sectors[t]
    }

    pub fn sectors(&self) -> &[Statevector] {
        &self.sectors
    }

    /// Weight of each clock sector, `1/(T+1)`.
    pub fn sector_weight(&self) -> f64 {
        1.0 / self.sectors.len() as f64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sectors.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.sector_weight()
    }

    /// Flattened legal-sector vector matching [`LegalOperator`].
    pub fn to_legal_vector(&self) -> Vec<C64> {
        let w = self.sector_weight().sqrt();
        self.sectors
            .iter()
            .flat_map(|s| s.amplitudes().iter().map(move |a| a * w))
            .collect()
    }

    /// Embedding into the full system-plus-clock register.
    pub fn to_dense(&self) -> Result<Statevector> {
        let s = self.sectors[0].num_qubits();
        let nq = s + self.num_steps();
        check_cap(nq)?;
        let w = self.sector_weight().sqrt();
        let mut amps = vec![ZERO; 1 << nq];
        for (t, sector) in self.sectors.iter().enumerate() {
            let clock = (1usize << t) - 1;
            for (x, a) in sector.amplitudes().iter().enumerate() {
                amps[(clock << s) | x] = a * w;
            }
        }
        Statevector::from_amplitudes(nq, amps)
    }
}

/// Dense matrix of a gate list applied in order.
pub fn gate_list_matrix(gates: &[Gate], num_qubits: usize) -> Result<CMatrix> {
    let mut circ = Circuit::new(num_qubits);
    for g in gates {
        circ.push_gate(g.clone())?;
    }
    circ.to_matrix()
}
