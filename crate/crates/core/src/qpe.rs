//! Phase-estimation counting of ground-state degeneracy.
//!
//! The evolution is `U = e^{-2πi s H}` for a recorded scale `s` that maps the
//! spectrum into `[0, 1)`. Round registers hold `d_t` bits with qubit 0 as
//! the least-significant bit of the phase estimate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::{expi_hermitian, CMatrix, C64};
use crate::spectrum::{CountPromise, Hamiltonian};
use crate::statevector::{
    apply_circuit, check_cap, gates, uev, Circuit, Control, DensityMatrix, Statevector,
};
use crate::{lcu, Error, Result};

const TIE_TOL: f64 = 1e-9;
/// Readouts this far from an integer are rejected.
pub const CONFIDENCE_DISTANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMode {
    ExactDiagonal,
    ExactExpm,
    LcuTaylor,
}

impl fmt::Display for EvolutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvolutionMode::ExactDiagonal => "exact_diagonal",
            EvolutionMode::ExactExpm => "exact_expm",
            EvolutionMode::LcuTaylor => "lcu_taylor",
        })
    }
}

impl FromStr for EvolutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_diagonal" => Ok(EvolutionMode::ExactDiagonal),
            "exact_expm" => Ok(EvolutionMode::ExactExpm),
            "lcu_taylor" => Ok(EvolutionMode::LcuTaylor),
            other => Err(Error::Argument(format!("unknown evolution mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimationConfig {
    pub d_t: usize,
    pub r: usize,
    /// Unscaled threshold `b`.
    pub threshold_b: f64,
    pub mode: EvolutionMode,
    /// Fixed scale `s`; derived from the spectrum when absent.
    pub scale: Option<f64>,
    /// Target error of each Taylor block in `lcu_taylor` mode.
    pub lcu_epsilon: f64,
}

impl PhaseEstimationConfig {
    pub fn new(d_t: usize, r: usize, threshold_b: f64, mode: EvolutionMode) -> Self {
        Self {
            d_t,
            r,
            threshold_b,
            mode,
            scale: None,
            lcu_epsilon: 1e-11,
        }
    }

    pub fn with_scale(self, scale: f64) -> Self {
        Self {
            scale: Some(scale),
            ..self
        }
    }

    /// Checks `r` odd, `d_t >= 1`, and `2^{-d_t} < s(a - b)`.
    pub fn validate(&self, p: &CountPromise, scale: f64) -> Result<()> {
        if self.d_t == 0 {
            return Err(Error::Argument("d_t must be at least 1".into()));
        }
        if self.r.is_multiple_of(2) {
            return Err(Error::Argument(format!("r must be odd, got {}", self.r)));
        }
        let resolution = (-(self.d_t as f64)).exp2();
        let gap = scale * (p.excited - self.threshold_b);
        if resolution >= gap {
            return Err(Error::Argument(format!(
                "phase resolution 2^-{} = {resolution} does not resolve the scaled gap {gap}",
                self.d_t
            )));
        }
        Ok(())
    }
}

/// `1/W` with `W` the smallest power of two strictly above the largest
/// eigenvalue.
pub fn phase_scale(h: &Hamiltonian) -> Result<f64> {
    let eig = h.eigenvalues();
    let lo = eig.first().copied().unwrap_or(0.0);
    let hi = eig.last().copied().unwrap_or(0.0);
    if lo < -1e-12 {
        return Err(Error::Range(format!(
            "eigenvalue {lo} is negative and cannot be placed in the phase window"
        )));
    }
    let mut w = 1.0f64;
    while w <= hi {
        w *= 2.0;
    }
    Ok(1.0 / w)
}

fn resolve_scale(h: &Hamiltonian, cfg: &PhaseEstimationConfig) -> Result<f64> {
    let derived = phase_scale(h)?;
    match cfg.scale {
        None => Ok(derived),
        Some(s) => {
            let hi = h.eigenvalues().last().copied().unwrap_or(0.0);
            if !(s > 0.0) || s * hi >= 1.0 {
                return Err(Error::Range(format!(
                    "scale {s} maps the spectrum outside [0, 1)"
                )));
            }
            Ok(s)
        }
    }
}

/// Controlled powers `U^{2^m}` for one Hamiltonian and scale.
enum Evolution {
    Diagonal(Vec<Vec<(usize, bool)>>),
    Dense(Vec<CMatrix>),
    /// Base block `U`, applied `2^m` times.
    Repeated(CMatrix),
}

fn prepare_evolution(
    h: &Hamiltonian,
    cfg: &PhaseEstimationConfig,
    scale: f64,
) -> Result<Evolution> {
    let n = h.num_qubits();
    let dense_ok = || {
        if n > crate::statevector::MAX_GATE_TARGETS {
            Err(Error::Argument(format!(
                "{n}-qubit dense evolution exceeds the {}-qubit gate limit",
                crate::statevector::MAX_GATE_TARGETS
            )))
        } else {
            Ok(())
        }
    };
    match cfg.mode {
        EvolutionMode::ExactDiagonal => match h {
            Hamiltonian::Diagonal(d) => Ok(Evolution::Diagonal(d.terms().to_vec())),
            Hamiltonian::Dense(_) => Err(Error::Argument(
                "exact_diagonal mode needs a diagonal Hamiltonian".into(),
            )),
        },
        EvolutionMode::ExactExpm => {
            dense_ok()?;
            let m = h.to_matrix();
            Ok(Evolution::Dense(
                (0..cfg.d_t)
                    .map(|j| expi_hermitian(&m, -2.0 * PI * scale * (1u64 << j) as f64))
                    .collect(),
            ))
        }
        EvolutionMode::LcuTaylor => {
            dense_ok()?;
            // U†U - I is about 2ε entrywise
            let limit = crate::statevector::UNITARY_TOL / 4.0;
            if !(cfg.lcu_epsilon > 0.0 && cfg.lcu_epsilon <= limit) {
                return Err(Error::Argument(format!(
                    "lcu epsilon {} must lie in (0, {limit:e}] for the block to pass as a gate",
                    cfg.lcu_epsilon
                )));
            }
            let m = h.to_matrix();
            let tr = m.trace().re;
            if tr <= 0.0 {
                // PSD with zero trace is the zero operator
                return Ok(Evolution::Repeated(CMatrix::identity(1 << n, 1 << n)));
            }
            let rho = DensityMatrix::new(m.map(|z| z / tr))?;
            let block = lcu::exp_i_rho_t(&rho, -2.0 * PI * scale * tr, cfg.lcu_epsilon)?;
            Ok(Evolution::Repeated(block.normalized))
        }
    }
}

fn push_controlled_power(
    circ: &mut Circuit,
    evo: &Evolution,
    system: &[usize],
    control: usize,
    power: usize,
    scale: f64,
) -> Result<()> {
    let n = system.len();
    let ctl = Control::on(control);
    match evo {
        Evolution::Diagonal(terms) => {
            let theta = 2.0 * PI * scale * (1u64 << power) as f64;
            for term in terms {
                let (v0, b0) = term[0];
                let m = if b0 {
                    gates::phase(-theta)
                } else {
                    phase_on_zero(-theta)
                };
                let mut controls = vec![ctl];
                controls.extend(term[1..].iter().map(|&(v, b)| Control {
                    qubit: system[n - 1 - v],
                    value: b,
                }));
                circ.push(m, &[system[n - 1 - v0]], &controls)?;
            }
        }
        Evolution::Dense(mats) => {
            circ.push(mats[power].clone(), system, &[ctl])?;
        }
        Evolution::Repeated(u) => {
            for _ in 0..1usize << power {
                circ.push(u.clone(), system, &[ctl])?;
            }
        }
    }
    Ok(())
}

fn phase_on_zero(theta: f64) -> CMatrix {
    let mut m = gates::phase(0.0);
    m[(0, 0)] = C64::from_polar(1.0, theta);
    m
}

/// Quantum Fourier transform `|x> -> 2^{-d/2} Σ_y e^{2πi xy/2^d} |y>` on `reg`.
pub fn push_qft(circ: &mut Circuit, reg: &[usize]) -> Result<()> {
    let d = reg.len();
    for j in (0..d).rev() {
        circ.h(reg[j])?;
        for k in (0..j).rev() {
            let angle = 2.0 * PI / (1u64 << (j - k + 1)) as f64;
            circ.push(gates::phase(angle), &[reg[j]], &[Control::on(reg[k])])?;
        }
    }
    for i in 0..d / 2 {
        circ.swap(reg[i], reg[d - 1 - i])?;
    }
    Ok(())
}

fn push_round(
    circ: &mut Circuit,
    evo: &Evolution,
    system: &[usize],
    reg: &[usize],
    scale: f64,
) -> Result<()> {
    for &q in reg {
        circ.h(q)?;
    }
    for (m, &q) in reg.iter().enumerate() {
        push_controlled_power(circ, evo, system, q, m, scale)?;
    }
    push_qft(circ, reg)
}

/// A phase-estimation circuit with the scale it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimation {
    pub circuit: Circuit,
    pub scale: f64,
}

/// One round: system on qubits `0..n`, phase register on `n..n+d_t`.
pub fn phase_estimation_circuit(
    h: &Hamiltonian,
    cfg: &PhaseEstimationConfig,
) -> Result<PhaseEstimation> {
    concatenated(h, cfg, 1)
}

/// `r` rounds on registers `n + i·d_t ..` sharing the system `0..n`.
pub fn concatenated_pe(h: &Hamiltonian, cfg: &PhaseEstimationConfig) -> Result<PhaseEstimation> {
    if cfg.r.is_multiple_of(2) {
        return Err(Error::Argument(format!("r must be odd, got {}", cfg.r)));
    }
    concatenated(h, cfg, cfg.r)
}

fn concatenated(
    h: &Hamiltonian,
    cfg: &PhaseEstimationConfig,
    rounds: usize,
) -> Result<PhaseEstimation> {
    let scale = resolve_scale(h, cfg)?;
    let evo = prepare_evolution(h, cfg, scale)?;
    let n = h.num_qubits();
    let mut circ = Circuit::new(n + rounds * cfg.d_t);
    let system: Vec<usize> = (0..n).collect();
    for i in 0..rounds {
        let reg: Vec<usize> = (n + i * cfg.d_t..n + (i + 1) * cfg.d_t).collect();
        push_round(&mut circ, &evo, &system, &reg, scale)?;
    }
    Ok(PhaseEstimation {
        circuit: circ,
        scale,
    })
}

/// Computes `f(k) = [k > b_phase · 2^{d_t}]` into qubit `d_t`, reading the
/// register on qubits `0..d_t`. `b_phase` is the scaled threshold `b·s`.
pub fn threshold_oracle(d_t: usize, b_phase: f64) -> Result<Circuit> {
    let grid = (1usize << d_t) as f64;
    let x = b_phase * grid;
    let nearest = x.round();
    if (x - nearest).abs() < TIE_TOL && nearest >= 0.0 && nearest < grid {
        return Err(Error::Tie {
            threshold: b_phase,
            grid_point: nearest as u64,
        });
    }
    let mut circ = Circuit::new(d_t + 1);
    for k in 0..1usize << d_t {
        if (k as f64) > x {
            let controls: Vec<Control> = (0..d_t)
                .map(|b| Control {
                    qubit: b,
                    value: (k >> b) & 1 == 1,
                })
                .collect();
            circ.push(gates::x(), &[d_t], &controls)?;
        }
    }
    Ok(circ)
}

/// Writes the majority of qubits `0..r` into qubit `r`.
pub fn majority_vote(r: usize) -> Result<Circuit> {
    if r.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "majority of an even count {r} can tie"
        )));
    }
    let mut circ = Circuit::new(r + 1);
    for pattern in 0..1usize << r {
        if pattern.count_ones() as usize > r / 2 {
            let controls: Vec<Control> = (0..r)
                .map(|b| Control {
                    qubit: b,
                    value: (pattern >> b) & 1 == 1,
                })
                .collect();
            circ.push(gates::x(), &[r], &controls)?;
        }
    }
    Ok(circ)
}

/// Qubit layout of the counting pipeline, lowest first: copy register `B`,
/// system `A`, `r` phase registers, `r` oracle ancillas, result qubit `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineLayout {
    pub n: usize,
    pub d_t: usize,
    pub r: usize,
}

impl PipelineLayout {
    pub fn copy(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    pub fn system(&self) -> std::ops::Range<usize> {
        self.n..2 * self.n
    }

    pub fn phase(&self, round: usize) -> std::ops::Range<usize> {
        let base = 2 * self.n + round * self.d_t;
        base..base + self.d_t
    }

    pub fn ancilla(&self, round: usize) -> usize {
        2 * self.n + self.r * self.d_t + round
    }

    pub fn result(&self) -> usize {
        2 * self.n + self.r * self.d_t + self.r
    }

    pub fn num_qubits(&self) -> usize {
        self.result() + 1
    }
}

/// Pipeline variants; `SkipUncompute` leaves the oracle ancillas dirty and
/// exists to show that the uncompute step matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineVariant {
    Full,
    SkipUncompute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub layout: PipelineLayout,
    pub scale: f64,
    /// Everything before the final post-selection.
    pub unitary: Circuit,
    /// `unitary` followed by post-selection of every phase register on 0.
    pub circuit: Circuit,
}

pub fn build_pipeline(
    h: &Hamiltonian,
    p: &CountPromise,
    cfg: &PhaseEstimationConfig,
    variant: PipelineVariant,
) -> Result<Pipeline> {
    let scale = resolve_scale(h, cfg)?;
    cfg.validate(p, scale)?;
    let n = h.num_qubits();
    let lay = PipelineLayout {
        n,
        d_t: cfg.d_t,
        r: cfg.r,
    };
    check_cap(lay.num_qubits())?;

    let evo = prepare_evolution(h, cfg, scale)?;
    let system: Vec<usize> = lay.system().collect();
    let mut v = Circuit::new(lay.num_qubits());
    for i in 0..cfg.r {
        let reg: Vec<usize> = lay.phase(i).collect();
        push_round(&mut v, &evo, &system, &reg, scale)?;
    }
    let oracle = threshold_oracle(cfg.d_t, cfg.threshold_b * scale)?;
    let mut uf = Circuit::new(lay.num_qubits());
    for i in 0..cfg.r {
        let mut map: Vec<usize> = lay.phase(i).collect();
        map.push(lay.ancilla(i));
        uf.append_mapped(&oracle, &map)?;
    }
    let mut mv_map: Vec<usize> = (0..cfg.r).map(|i| lay.ancilla(i)).collect();
    mv_map.push(lay.result());

    let mut unitary = v.clone();
    unitary.append(&uf)?;
    unitary.append_mapped(&majority_vote(cfg.r)?, &mv_map)?;
    if variant == PipelineVariant::Full {
        unitary.append(&uf.inverse()?)?;
    }
    unitary.append(&v.inverse()?)?;
    let mut circuit = unitary.clone();
    for i in 0..cfg.r {
        for q in lay.phase(i) {
            circuit.project(q, false)?;
        }
    }
    Ok(Pipeline {
        layout: lay,
        scale,
        unitary,
        circuit,
    })
}

impl Pipeline {
    /// Unnormalized `Σ_x |x>_A |x>_B` with every other qubit in `|0>`.
    pub fn input_state(&self) -> Result<Statevector> {
        let n = self.layout.n;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.layout.num_qubits()];
        for x in 0..1usize << n {
            amps[(x << n) | x] = C64::new(1.0, 0.0);
        }
        Statevector::from_amplitudes(self.layout.num_qubits(), amps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub uev: f64,
    pub rounded: u64,
    /// Squared norm kept by the post-selection, over the input's `2^n`.
    pub postselect_probability: f64,
}

pub fn run_pipeline(pipe: &Pipeline) -> Result<PipelineOutcome> {
    let out = apply_circuit(&pipe.circuit, &pipe.input_state()?)?;
    let value = uev(&out, &[(pipe.layout.result(), false)])?;
    let rounded = value.round();
    let distance = (value - rounded).abs();
    if distance >= CONFIDENCE_DISTANCE {
        return Err(Error::Confidence { value, distance });
    }
    Ok(PipelineOutcome {
        uev: value,
        rounded: rounded.max(0.0) as u64,
        postselect_probability: out.norm_sqr() / (1u64 << pipe.layout.n) as f64,
    })
}

/// Ground-state degeneracy read out as the unnormalized expectation of
/// `|0><0|` on the result qubit.
pub fn counting_pipeline(
    h: &Hamiltonian,
    p: &CountPromise,
    cfg: &PhaseEstimationConfig,
) -> Result<PipelineOutcome> {
    run_pipeline(&build_pipeline(h, p, cfg, PipelineVariant::Full)?)
}

/// Probability that more than half of `r` rounds return the bin nearest
/// `2^{d_t} s λ` for eigenvector `state` with eigenvalue `lambda`.
pub fn concatenated_success_weight(
    h: &Hamiltonian,
    cfg: &PhaseEstimationConfig,
    state: &Statevector,
    lambda: f64,
) -> Result<f64> {
    let pe = concatenated_pe(h, cfg)?;
    let n = h.num_qubits();
    let grid = 1usize << cfg.d_t;
    let best = ((grid as f64 * pe.scale * lambda).round() as usize) % grid;
    let input = Statevector::zero(cfg.r * cfg.d_t)?.tensor(state)?;
    let out = apply_circuit(&pe.circuit, &input)?;
    let mask = grid - 1;
    let mut weight = 0.0;
    for (idx, a) in out.amplitudes().iter().enumerate() {
        let regs = idx >> n;
        let hits = (0..cfg.r)
            .filter(|i| (regs >> (i * cfg.d_t)) & mask == best)
            .count();
        if hits > cfg.r / 2 {
            weight += a.norm_sqr();
        }
    }
    Ok(weight)
}

/// One line of an experiment log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub d_t: usize,
    pub r: usize,
    pub mode: EvolutionMode,
    pub uev: f64,
    pub rounded: u64,
    pub brute_force: Option<u64>,
    #[serde(rename = "match")]
    pub matches: bool,
}
