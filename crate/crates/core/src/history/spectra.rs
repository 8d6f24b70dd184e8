use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cnf::{build_hamiltonian, hamiltonian_to_density, CnfFormula};
use crate::linalg::{c, max_abs_diff, CMatrix, C64, ZERO};
use crate::spectrum::{ces_threshold, count_above, DEFAULT_ETA};
use crate::statevector::{reduced_density_matrix, schmidt_spectrum, DensityMatrix};
use crate::{Error, Result};

use super::clock::{HistoryHamiltonian, HistoryState};
use super::formula::{history_circuit, HistoryLayout};
use super::lanczos::{lowest_eigenpair, LanczosOptions};

/// Extremes of one reduced state's spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeReport {
    pub t: usize,
    pub max_eig: f64,
    pub min_nonzero_eig: f64,
}

fn extremes(t: usize, rho: &DensityMatrix) -> Result<TimeReport> {
    let spec = schmidt_spectrum(rho)?;
    let values = spec.values();
    Ok(TimeReport {
        t,
        max_eig: values[0],
        min_nonzero_eig: values
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min),
    })
}

/// `τ = w·ρ⊗|0><0| + (1-w)·ρ'⊗|1><1|`, the marker as the low qubit.
#[derive(Debug, Clone)]
pub struct TauDecomposition {
    pub rho: DensityMatrix,
    pub rho_prime: DensityMatrix,
    pub weight: f64,
}

impl TauDecomposition {
    pub fn assemble(&self) -> Result<DensityMatrix> {
        let p0 = DensityMatrix::from_diagonal(&[1.0, 0.0])?;
        let p1 = DensityMatrix::from_diagonal(&[0.0, 1.0])?;
        let a = self.rho.kron(&p0).into_entries() * c(self.weight, 0.0);
        let b = self.rho_prime.kron(&p1).into_entries() * c(1.0 - self.weight, 0.0);
        DensityMatrix::new(a + b)
    }
}

/// Reduced states along the history and the decomposition of `τ`.
#[derive(Debug, Clone)]
pub struct IntermediateSpectra {
    pub per_t: Vec<TimeReport>,
    pub rho_t: Vec<DensityMatrix>,
    pub tau: TauDecomposition,
    /// `τ` traced directly out of the history state.
    pub traced_tau: DensityMatrix,
    pub rho_prime_report: TimeReport,
}

impl IntermediateSpectra {
    /// Largest entry of `traced_tau - tau.assemble()`.
    pub fn tau_residual(&self) -> Result<f64> {
        Ok(max_abs_diff(
            self.traced_tau.entries(),
            self.tau.assemble()?.entries(),
        ))
    }

    /// `t,max_eig,min_nonzero_eig` per clock step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,max_eig,min_nonzero_eig\n");
        for r in &self.per_t {
            out.push_str(&format!(
                "{},{:e},{:e}\n",
                r.t, r.max_eig, r.min_nonzero_eig
            ));
        }
        out
    }
}

/// Spectra of `ρ_t` on the cut for every `t`, with `ρ' = Σ_{t<T} ρ_t / T`.
pub fn spectra_from_state(
    f: &CnfFormula,
    layout: &HistoryLayout,
    state: &HistoryState,
) -> Result<IntermediateSpectra> {
    let cut = layout.cut();
    let t_max = state.num_steps();
    let mut per_t = Vec::with_capacity(t_max + 1);
    let mut rho_t = Vec::with_capacity(t_max + 1);
    let dim = 1usize << cut.len();
    let mut prime = CMatrix::zeros(dim, dim);
    let tau_dim = 2 * dim;
    let mut traced = CMatrix::zeros(tau_dim, tau_dim);
    let w = state.sector_weight();
    for (t, sector) in state.sectors().iter().enumerate() {
        let rho = reduced_density_matrix(sector, &cut)?;
        per_t.push(extremes(t, &rho)?);
        if t < t_max {
            prime += rho.entries();
        }
        traced += reduced_density_matrix(sector, &layout.tau_cut())?.entries() * c(w, 0.0);
        rho_t.push(rho);
    }
    let rho_prime = DensityMatrix::new(prime / c(t_max as f64, 0.0))?;
    let rho_prime_report = extremes(t_max, &rho_prime)?;
    let rho = hamiltonian_to_density(&build_hamiltonian(f))?;
    Ok(IntermediateSpectra {
        per_t,
        rho_t,
        tau: TauDecomposition {
            rho,
            rho_prime,
            weight: w,
        },
        traced_tau: DensityMatrix::new(traced)?,
        rho_prime_report,
    })
}

/// Builds the history state of `f` and reports its intermediate spectra.
pub fn intermediate_spectra(f: &CnfFormula) -> Result<IntermediateSpectra> {
    let h = history_circuit(f)?;
    let state = HistoryState::new(&h.circuit)?;
    spectra_from_state(f, &h.layout, &state)
}

/// Mid-gap threshold for `τ`: half its smallest promised nonzero eigenvalue,
/// `min(w/Tr H, (1-w)/(2^n T))` with `w = 1/(T+1)`.
pub fn tau_threshold(f: &CnfFormula, num_steps: usize) -> Result<f64> {
    let tr = build_hamiltonian(f).trace();
    if tr == 0 {
        return Err(Error::Degenerate {
            reason: "Tr(H) = 0".into(),
            trivial_count: 1u64 << f.num_vars(),
        });
    }
    let w = 1.0 / (num_steps + 1) as f64;
    let floor_prime = (1.0 - w) / ((1u64 << f.num_vars()) as f64 * num_steps as f64);
    Ok(0.5 * (w / tr as f64).min(floor_prime))
}

/// Eigenvalues of `rho` above `delta`, with the default forbidden window.
pub fn count_density_above(rho: &DensityMatrix, delta: f64) -> Result<usize> {
    let spec = schmidt_spectrum(rho)?;
    let top = spec.values()[0];
    count_above(&spec.with_threshold(top, delta)?, DEFAULT_ETA)
}

/// Lowest two legal-sector eigenvalues of `H'`.
#[derive(Debug, Clone)]
pub struct GroundReport {
    pub ground_energy: f64,
    pub ground_residual: f64,
    /// `|<ξ'|g>|^2` for the computed ground vector `g`.
    pub overlap: f64,
    /// `<ξ'|H'|ξ'>`.
    pub history_energy: f64,
    /// `‖H'|ξ'>‖`.
    pub history_residual: f64,
    /// Lowest eigenvalue on the complement of `|ξ'>`.
    pub second: f64,
    pub second_residual: f64,
    pub converged: bool,
}

impl GroundReport {
    /// Illegal clock states cost at least 1, so the gap is `min(second, 1)`.
    pub fn gap(&self) -> f64 {
        self.second.min(1.0)
    }
}

/// Restarted Lanczos on the legal sector, seeded deterministically.
pub fn ground_report(
    h: &HistoryHamiltonian,
    state: &HistoryState,
    opts: LanczosOptions,
) -> GroundReport {
    let op = h.legal_operator();
    let xi = state.to_legal_vector();
    let apply = |v: &[C64], out: &mut [C64]| op.apply(v, out);
    let mut hx = vec![ZERO; xi.len()];
    apply(&xi, &mut hx);
    let history_energy = xi
        .iter()
        .zip(&hx)
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>()
        .re;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let start: Vec<C64> = (0..xi.len())
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let ground = lowest_eigenpair(apply, &start, &[], opts);
    let overlap = ground
        .vector
        .iter()
        .zip(&xi)
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>()
        .norm_sqr();
    let second = lowest_eigenpair(apply, &start, &[&xi], opts);
    GroundReport {
        ground_energy: ground.value,
        ground_residual: ground.residual,
        overlap,
        history_energy,
        history_residual: hx.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        second: second.value,
        second_residual: second.residual,
        converged: ground.converged && second.converged,
    }
}

/// Everything checked about one formula's history construction.
#[derive(Debug, Clone, Serialize)]
pub struct HistoryReport {
    pub num_vars: usize,
    pub num_clauses: usize,
    pub t0: usize,
    pub num_steps: usize,
    pub legal_dim: usize,
    pub ground_energy: f64,
    pub history_energy: f64,
    pub history_residual: f64,
    pub ground_overlap: f64,
    pub gap: f64,
    pub gap_bound: f64,
    pub lanczos_converged: bool,
    pub locality_violations: usize,
    pub max_support: usize,
    pub tau_residual: f64,
    pub per_t: Vec<TimeReport>,
    pub rho_t_bound: f64,
    pub rho_prime_min_nonzero: f64,
    pub rho_prime_min_bound: f64,
    pub rho_prime_max: f64,
    pub tau_threshold: f64,
    pub tau_count: usize,
    pub rho_count: usize,
}

pub fn verify_history(f: &CnfFormula, opts: LanczosOptions) -> Result<HistoryReport> {
    let h = history_circuit(f)?;
    let layout = h.layout;
    let state = HistoryState::new(&h.circuit)?;
    let ham = HistoryHamiltonian::new(h.circuit, layout.t0)?;
    let spectra = spectra_from_state(f, &layout, &state)?;
    let ground = ground_report(&ham, &state, opts);
    let n = f.num_vars() as i32;
    let t_max = state.num_steps();
    let tau_delta = tau_threshold(f, t_max)?;
    Ok(HistoryReport {
        num_vars: f.num_vars(),
        num_clauses: f.num_clauses(),
        t0: layout.t0,
        num_steps: t_max,
        legal_dim: (t_max + 1) << layout.num_system(),
        ground_energy: ground.ground_energy,
        history_energy: ground.history_energy,
        history_residual: ground.history_residual,
        ground_overlap: ground.overlap,
        gap: ground.gap(),
        gap_bound: ham.gap_bound(),
        lanczos_converged: ground.converged,
        locality_violations: ham.locality_violations(),
        max_support: ham.terms.iter().map(|t| t.support.len()).max().unwrap_or(0),
        tau_residual: spectra.tau_residual()?,
        per_t: spectra.per_t.clone(),
        rho_t_bound: 2f64.powi(2 - n),
        rho_prime_min_nonzero: spectra.rho_prime_report.min_nonzero_eig,
        rho_prime_min_bound: 1.0 / (2f64.powi(n) * t_max as f64),
        rho_prime_max: spectra.rho_prime_report.max_eig,
        tau_threshold: tau_delta,
        tau_count: count_density_above(&spectra.traced_tau, tau_delta)?,
        rho_count: count_density_above(&spectra.tau.rho, ces_threshold(&build_hamiltonian(f))?)?,
    })
}
