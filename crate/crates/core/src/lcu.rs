//! Post-selected truncated-Taylor implementation of `e^{iρt}`.
//!
//! Pauli strings are indexed with two bits per qubit: bits `(2q, 2q+1)` of
//! the index hold the letter on system qubit `q` (00 = I, 01 = X, 10 = Y,
//! 11 = Z). Unary integers on `K` qubits set qubits `0..k`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::linalg::{c, expi_hermitian, identity, spectral_norm, CMatrix, C64, I, ONE, ZERO};
use crate::statevector::{
    apply_circuit, apply_circuit_sparse, gates, Circuit, Control, DensityMatrix, Gate, SparseState,
    Statevector,
};
use crate::{Error, Result};

/// Largest system handled by `pauli_decompose`.
pub const MAX_PAULI_QUBITS: usize = 6;
const PREP_TOL: f64 = 1e-10;

/// Letter (0..4) of Pauli string `index` on qubit `q`.
pub fn pauli_letter(index: usize, q: usize) -> u8 {
    ((index >> (2 * q)) & 3) as u8
}

/// `σ_index |y> = phase |x>`; returns `(x, phase)`.
pub fn pauli_apply(index: usize, num_qubits: usize, y: usize) -> (usize, C64) {
    let mut x = y;
    let mut phase = ONE;
    for q in 0..num_qubits {
        let bit = (y >> q) & 1 == 1;
        match pauli_letter(index, q) {
            1 => x ^= 1 << q,
            2 => {
                x ^= 1 << q;
                phase *= if bit { -I } else { I };
            }
            3 if bit => phase = -phase,
            _ => {}
        }
    }
    (x, phase)
}

/// Real coefficients `a_i = Tr[σ_i ρ] / 2^n` of `ρ = Σ_i a_i σ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliDecomposition {
    num_qubits: usize,
    coefficients: Vec<f64>,
}

pub fn pauli_decompose(rho: &DensityMatrix) -> Result<PauliDecomposition> {
    let n = rho.num_qubits();
    if n > MAX_PAULI_QUBITS {
        return Err(Error::Scale(format!(
            "{n} qubits exceeds the Pauli decomposition limit of {MAX_PAULI_QUBITS}"
        )));
    }
    let m = rho.entries();
    let dim = 1usize << n;
    let coefficients = (0..dim * dim)
        .map(|i| {
            // Tr[σ ρ] = Σ_y <y|ρ|σ y>... with σ|y> = p|x>, Tr[σρ] = Σ_y p ρ[y, x]
            let tr: C64 = (0..dim)
                .map(|y| {
                    let (x, p) = pauli_apply(i, n, y);
                    p * m[(y, x)]
                })
                .sum();
            tr.re / dim as f64
        })
        .collect();
    Ok(PauliDecomposition {
        num_qubits: n,
        coefficients,
    })
}

impl PauliDecomposition {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `Σ_i a_i σ_i`.
    pub fn recompose(&self) -> CMatrix {
        let dim = 1usize << self.num_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for (i, &a) in self.coefficients.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for y in 0..dim {
                let (x, p) = pauli_apply(i, self.num_qubits, y);
                m[(x, y)] += p * a;
            }
        }
        m
    }

    /// The unnormalized state `|A> = Σ_i a_i |i>` on `2n` qubits.
    pub fn state(&self) -> Statevector {
        let amps = self.coefficients.iter().map(|&a| c(a, 0.0)).collect();
        Statevector::from_amplitudes(2 * self.num_qubits, amps).expect("4^n coefficients")
    }
}

/// Controlled-`σ_i` on system qubit `sys` selected by index qubits `(lo, hi)`.
pub fn select_gate(sys: usize, lo: usize, hi: usize, controls: &[Control]) -> Result<Gate> {
    let mut m = CMatrix::zeros(8, 8);
    for letter in 0..4u8 {
        let p = gates::pauli(letter);
        let base = 2 * letter as usize;
        m.view_mut((base, base), (2, 2)).copy_from(&p);
    }
    Gate::new(m, vec![sys, lo, hi], controls.to_vec())
}

/// A circuit whose post-selected block equals `factor` times a target operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCircuit {
    pub circuit: Circuit,
    pub factor: C64,
}

/// Block of `circuit` on its low `num_system` qubits, with the high qubits
/// starting in `ancilla` and read out in `|0...0>`.
pub fn extract_block(
    circuit: &Circuit,
    num_system: usize,
    ancilla: &Statevector,
) -> Result<CMatrix> {
    let dim = 1usize << num_system;
    let mut block = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let input = ancilla.tensor(&Statevector::basis(num_system, col)?)?;
        let out = apply_circuit(circuit, &input)?;
        for row in 0..dim {
            block[(row, col)] = out.amplitude(row);
        }
    }
    Ok(block)
}

/// Selects `σ_i` from an index register and folds it back with `H^{⊗2n}`.
///
/// Qubits `0..n` are the system and `n..3n` the index register. With `|A>` on
/// the index the post-selected block is `ρ/2^n = factor · (iρt)`.
pub fn v_rho_t(a: &PauliDecomposition, t: f64) -> Result<BlockCircuit> {
    if t == 0.0 {
        return Err(Error::Argument("v_rho_t needs t != 0".into()));
    }
    let n = a.num_qubits;
    let mut circ = Circuit::new(3 * n);
    push_v_rho_t(&mut circ, n, &(0..n).collect::<Vec<_>>(), n, &[])?;
    for q in n..3 * n {
        circ.project(q, false)?;
    }
    let factor = ONE / (I * t * (1u64 << n) as f64);
    Ok(BlockCircuit {
        circuit: circ,
        factor,
    })
}

fn push_v_rho_t(
    circ: &mut Circuit,
    n: usize,
    system: &[usize],
    index_base: usize,
    controls: &[Control],
) -> Result<()> {
    for (q, &sys) in system.iter().enumerate().take(n) {
        circ.push_gate(select_gate(
            sys,
            index_base + 2 * q,
            index_base + 2 * q + 1,
            controls,
        )?)?;
    }
    for q in index_base..index_base + 2 * n {
        circ.push(gates::h(), &[q], controls)?;
    }
    Ok(())
}

/// Output of `encode_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedA {
    pub circuit: Circuit,
    /// Post-selected index amplitudes are `factor · a_i`.
    pub factor: C64,
    pub xi_qubits: usize,
    pub flag_qubits: usize,
    pub index_qubits: usize,
}

impl EncodedA {
    /// `|0^{2n}>|0_flags>|ξ>`.
    pub fn input_state(&self, xi: &Statevector) -> Result<Statevector> {
        Statevector::zero(self.index_qubits + self.flag_qubits)?.tensor(xi)
    }

    /// Index-register amplitudes of the post-selected output.
    pub fn read_index(&self, out: &Statevector) -> Vec<C64> {
        let shift = self.xi_qubits + self.flag_qubits;
        (0..1usize << self.index_qubits)
            .map(|i| out.amplitude(i << shift))
            .collect()
    }
}

/// Builds the post-selected circuit producing `|A>` from a purification.
///
/// `prep` acts on `ξ`'s qubits (low) and flag qubits (high) and must map
/// `|0>|0>` to `c|0>|ξ> + |1>|...>`. `rho_qubits` lists where `ρ` lives
/// inside `ξ`. Qubit layout: `ξ`, then flags, then the `2n`-qubit index.
pub fn encode_a(xi: &Statevector, prep: &Circuit, rho_qubits: &[usize]) -> Result<EncodedA> {
    let m = xi.num_qubits();
    if prep.num_qubits() < m {
        return Err(Error::Prep(format!(
            "preparation acts on {} qubits, fewer than the {m} of the state",
            prep.num_qubits()
        )));
    }
    if rho_qubits.is_empty() || rho_qubits.iter().any(|&q| q >= m) {
        return Err(Error::Argument(
            "reduced qubits must be a nonempty subset of the state".into(),
        ));
    }
    let f = prep.num_qubits() - m;
    let out = apply_circuit(prep, &Statevector::zero(prep.num_qubits())?)?;
    let branch = &out.amplitudes()[..1 << m];
    let xi_norm = xi.norm_sqr().sqrt();
    let overlap: C64 = xi
        .amplitudes()
        .iter()
        .zip(branch)
        .map(|(x, b)| x.conj() * b)
        .sum::<C64>()
        / xi_norm;
    let coeff = overlap / xi_norm;
    let residual: f64 = branch
        .iter()
        .zip(xi.amplitudes())
        .map(|(b, x)| (b - coeff * x).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if overlap.norm() < PREP_TOL || residual > PREP_TOL {
        return Err(Error::Prep(format!(
            "flag-0 branch is not proportional to the state (overlap {:.3e}, residual {residual:.3e})",
            overlap.norm()
        )));
    }
    let inverse = prep
        .inverse()
        .map_err(|_| Error::Prep("preparation must be projection-free".into()))?;
    let n = rho_qubits.len();
    let total = m + f + 2 * n;
    let mut circ = Circuit::new(total);
    for q in m + f..total {
        circ.h(q)?;
    }
    for (k, &q) in rho_qubits.iter().enumerate() {
        circ.push_gate(select_gate(q, m + f + 2 * k, m + f + 2 * k + 1, &[])?)?;
    }
    circ.append_mapped(&inverse, &(0..m + f).collect::<Vec<_>>())?;
    for q in 0..m + f {
        circ.project(q, false)?;
    }
    // prep maps |0> to c|ξ> with ξ as supplied, so <0|prep†|ξ> = conj(c) |ξ|^2
    Ok(EncodedA {
        circuit: circ,
        factor: coeff.conj() * xi.norm_sqr(),
        xi_qubits: m,
        flag_qubits: f,
        index_qubits: 2 * n,
    })
}

/// `(1/√(K+1)) Σ_k |k>` in unary on `K` qubits.
pub fn unary_superposition(k: usize) -> Circuit {
    let mut circ = Circuit::new(k);
    for j in 0..k {
        let alpha = 1.0 / ((k + 1 - j) as f64).sqrt();
        let theta = 2.0 * alpha.acos();
        let controls = if j == 0 {
            vec![]
        } else {
            vec![Control::on(j - 1)]
        };
        circ.push(gates::ry(theta), &[j], &controls)
            .expect("valid unary rotation");
    }
    circ
}

/// Basis index of unary `k`.
pub fn unary_index(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Smallest `K` with `(e·norm/(K+1))^{K+1} <= epsilon`.
pub fn choose_k(norm_rho_t: f64, epsilon: f64) -> usize {
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    let norm = norm_rho_t.abs();
    if norm == 0.0 {
        return 0;
    }
    let target = epsilon.ln();
    (0..)
        .find(|&k| truncation_bound_ln(norm, k) <= target)
        .expect("bound eventually decays")
}

fn truncation_bound_ln(norm: f64, k: usize) -> f64 {
    let m = (k + 1) as f64;
    m * (E * norm / m).ln()
}

/// Truncation order and target for one evolution time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorPlan {
    #[serde(rename = "K")]
    pub order: usize,
    pub t: f64,
    /// Bound on `‖ρ‖∞`; the plan controls `‖ρt‖∞ <= |t| · norm_bound`.
    pub norm_bound: f64,
    pub epsilon: f64,
}

impl TaylorPlan {
    pub fn new(norm_bound: f64, t: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Argument(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if !(norm_bound >= 0.0) || !t.is_finite() {
            return Err(Error::Argument(
                "norm bound and time must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            order: choose_k(norm_bound * t.abs(), epsilon),
            t,
            norm_bound,
            epsilon,
        })
    }

    pub fn with_order(self, order: usize) -> Self {
        Self { order, ..self }
    }

    /// `(e‖ρt‖/(K+1))^{K+1}`.
    pub fn bound(&self) -> f64 {
        let norm = self.norm_bound * self.t.abs();
        if norm == 0.0 {
            return 0.0;
        }
        truncation_bound_ln(norm, self.order).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorReport {
    #[serde(rename = "K")]
    pub order: usize,
    pub t: f64,
    pub norm_bound: f64,
    pub epsilon: f64,
    pub achieved_error: f64,
}

/// Amplitudes kept by the rotation qubit of one Taylor position when it is
/// used (`c·it/m`) and unused (`c`), with `c = 1/max(1, |t|)` so both fit in
/// a unitary for every `t`.
pub fn gadget_amplitudes(t: f64, m: usize) -> (C64, C64) {
    let scale = 1.0 / t.abs().max(1.0);
    (I * (scale * t / m as f64), c(scale, 0.0))
}

/// Qubit layout of `v_taylor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaylorLayout {
    pub n: usize,
    pub order: usize,
}

impl TaylorLayout {
    pub fn system(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    /// Index register of copy `m` (1-based).
    pub fn copy(&self, m: usize) -> std::ops::Range<usize> {
        let base = self.n + 2 * self.n * (m - 1);
        base..base + 2 * self.n
    }

    pub fn rot(&self, m: usize) -> usize {
        self.n + 2 * self.n * self.order + m - 1
    }

    pub fn k_bit(&self, m: usize) -> usize {
        self.n + 2 * self.n * self.order + self.order + m - 1
    }

    pub fn num_qubits(&self) -> usize {
        self.n + 2 * self.n * self.order + 2 * self.order
    }
}

fn push_position(
    circ: &mut Circuit,
    n: usize,
    system: &[usize],
    copy_base: usize,
    rot: usize,
    k_bit: usize,
    t: f64,
    m: usize,
) -> Result<()> {
    let used = [Control::on(k_bit)];
    push_v_rho_t(circ, n, system, copy_base, &used)?;
    let (z_used, z_unused) = gadget_amplitudes(t, m);
    circ.push(gates::with_amplitude(z_used), &[rot], &used)?;
    circ.push(
        gates::with_amplitude(z_unused),
        &[rot],
        &[Control::off(k_bit)],
    )?;
    Ok(())
}

/// `V_Taylor` followed by post-selection of every copy and rotation qubit.
///
/// On `|k>|0^K>|A>^{⊗K}|ψ>` the block is `factor · (iρt)^k/k!`, with
/// `factor = c^K / 2^{nK}` independent of `k`.
pub fn v_taylor(a: &PauliDecomposition, t: f64, order: usize) -> Result<BlockCircuit> {
    let n = a.num_qubits;
    let lay = TaylorLayout { n, order };
    let mut circ = Circuit::new(lay.num_qubits());
    let system: Vec<usize> = lay.system().collect();
    for m in 1..=order {
        push_position(
            &mut circ,
            n,
            &system,
            lay.copy(m).start,
            lay.rot(m),
            lay.k_bit(m),
            t,
            m,
        )?;
    }
    for m in 1..=order {
        for q in lay.copy(m) {
            circ.project(q, false)?;
        }
        circ.project(lay.rot(m), false)?;
    }
    Ok(BlockCircuit {
        circuit: circ,
        factor: c(taylor_common_factor(n, t, order), 0.0),
    })
}

fn taylor_common_factor(n: usize, t: f64, order: usize) -> f64 {
    let (_, unused) = gadget_amplitudes(t, 1);
    (unused.re / (1u64 << n) as f64).powi(order as i32)
}

/// Full `e^{iρt}` circuit: unary preparation, `V_Taylor`, `H^{⊗K}` on the
/// unary register and post-selection of every ancilla.
pub fn assemble_circuit(a: &PauliDecomposition, plan: &TaylorPlan) -> Result<BlockCircuit> {
    let n = a.num_qubits;
    let lay = TaylorLayout {
        n,
        order: plan.order,
    };
    let k_register: Vec<usize> = (1..=plan.order).map(|m| lay.k_bit(m)).collect();
    let mut circ = Circuit::new(lay.num_qubits());
    circ.append_mapped(&unary_superposition(plan.order), &k_register)?;
    circ.append(&v_taylor(a, plan.t, plan.order)?.circuit)?;
    circ.append_mapped(&unary_readout(plan.order), &k_register)?;
    let factor = taylor_common_factor(n, plan.t, plan.order) / ((plan.order + 1) as f64).sqrt()
        * (-(plan.order as f64) / 2.0).exp2();
    Ok(BlockCircuit {
        circuit: circ,
        factor: c(factor, 0.0),
    })
}

/// `H` then post-selection on `|0>`, qubit by qubit.
fn unary_readout(order: usize) -> Circuit {
    let mut circ = Circuit::new(order);
    for q in 0..order {
        circ.h(q).expect("in range");
        circ.project(q, false).expect("in range");
    }
    circ
}

/// Ancilla input `|0^K>_k |0^K>_rot |A>^{⊗K}` for the assembled circuit.
pub fn assembled_ancilla(a: &PauliDecomposition, order: usize) -> Result<Statevector> {
    let mut anc = Statevector::zero(2 * order)?;
    for _ in 0..order {
        anc = anc.tensor(&a.state())?;
    }
    Ok(anc)
}

/// An evaluated `e^{iρt}` block.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorBlock {
    pub circuit: Circuit,
    pub plan: TaylorPlan,
    /// Raw post-selected block.
    pub block: CMatrix,
    /// Common post-selection factor.
    pub factor: f64,
    /// `block / factor`.
    pub normalized: CMatrix,
    pub achieved_error: f64,
}

impl TaylorBlock {
    pub fn report(&self) -> TaylorReport {
        TaylorReport {
            order: self.plan.order,
            t: self.plan.t,
            norm_bound: self.plan.norm_bound,
            epsilon: self.plan.epsilon,
            achieved_error: self.achieved_error,
        }
    }
}

/// Post-selected block of the assembled circuit, evaluated branch by branch
/// over the unary register.
///
/// The unary register only controls `V_Taylor`, so the block is
/// `Σ_k <0|readout|k> <k|prep|0> B_k` where `B_k` is the product of the
/// per-position blocks with each control fixed. Unary amplitudes come from
/// sparse simulation; per-position blocks from dense simulation of one
/// position at a time.
pub fn evaluate_block(a: &PauliDecomposition, plan: &TaylorPlan) -> Result<CMatrix> {
    let n = a.num_qubits;
    let order = plan.order;
    let dim = 1usize << n;
    let prep = apply_circuit_sparse(&unary_superposition(order), &SparseState::from([(0, ONE)]))?;
    let readout = unary_readout(order);

    let slice_qubits = 3 * n + 2;
    let system: Vec<usize> = (0..n).collect();
    let mut positions = Vec::with_capacity(order);
    for m in 1..=order {
        let mut slice = Circuit::new(slice_qubits);
        push_position(&mut slice, n, &system, n, 3 * n, 3 * n + 1, plan.t, m)?;
        for q in n..3 * n + 1 {
            slice.project(q, false)?;
        }
        let mut pair = Vec::with_capacity(2);
        for bit in [false, true] {
            let control = Statevector::basis(1, bit as usize)?;
            let anc = control.tensor(&Statevector::zero(1)?)?.tensor(&a.state())?;
            let raw = extract_block_with_output(&slice, n, &anc, (bit as usize) << (3 * n + 1))?;
            pair.push(raw);
        }
        positions.push(pair);
    }

    let mut block = CMatrix::zeros(dim, dim);
    for k in 0..=order {
        let idx = unary_index(k);
        let Some(&u) = prep.get(&idx) else { continue };
        let h = apply_circuit_sparse(&readout, &SparseState::from([(idx, ONE)]))?
            .get(&0)
            .copied()
            .unwrap_or(ZERO);
        let mut bk = identity(dim);
        for (m, pair) in positions.iter().enumerate() {
            bk = &pair[(m < k) as usize] * bk;
        }
        block += bk * (u * h);
    }
    Ok(block)
}

fn extract_block_with_output(
    circuit: &Circuit,
    num_system: usize,
    ancilla: &Statevector,
    out_offset: usize,
) -> Result<CMatrix> {
    let dim = 1usize << num_system;
    let mut block = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let input = ancilla.tensor(&Statevector::basis(num_system, col)?)?;
        let out = apply_circuit(circuit, &input)?;
        for row in 0..dim {
            block[(row, col)] = out.amplitude(out_offset | row);
        }
    }
    Ok(block)
}

/// `‖block/factor - e^{iρt}‖` for the assembled circuit of `plan`.
pub fn block_error(a: &PauliDecomposition, plan: &TaylorPlan) -> Result<f64> {
    let factor = assemble_circuit(a, plan)?.factor.re;
    let normalized = evaluate_block(a, plan)?.map(|z| z / factor);
    Ok(spectral_norm(
        &(normalized - expi_hermitian(&a.recompose(), plan.t)),
    ))
}

/// Builds and evaluates the `e^{iρt}` block, failing when the normalized
/// block misses `e^{iρt}` by more than `plan.epsilon` in operator norm.
pub fn assemble_exp(a: &PauliDecomposition, plan: &TaylorPlan) -> Result<TaylorBlock> {
    let assembled = assemble_circuit(a, plan)?;
    let block = evaluate_block(a, plan)?;
    let factor = assembled.factor.re;
    let normalized = block.map(|z| z / factor);
    let exact = expi_hermitian(&a.recompose(), plan.t);
    let achieved_error = spectral_norm(&(&normalized - exact));
    if achieved_error > plan.epsilon {
        return Err(Error::Truncation {
            achieved: achieved_error,
            target: plan.epsilon,
        });
    }
    Ok(TaylorBlock {
        circuit: assembled.circuit,
        plan: *plan,
        block,
        factor,
        normalized,
        achieved_error,
    })
}

/// Normalized `e^{iρt}` block for a density matrix, with `K` chosen from
/// the largest eigenvalue of `ρ`.
pub fn exp_i_rho_t(rho: &DensityMatrix, t: f64, epsilon: f64) -> Result<TaylorBlock> {
    let a = pauli_decompose(rho)?;
    let lambda_max = crate::linalg::hermitian_eigenvalues(rho.entries())
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0);
    assemble_exp(&a, &TaylorPlan::new(lambda_max, t, epsilon)?)
}
