use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use entspec_core::cnf::{lambda_star, random_formula};
use entspec_core::history::{intermediate_spectra, verify_history, LanczosOptions};
use entspec_core::lcu::{block_error, pauli_decompose, TaylorPlan};
use entspec_core::linalg::{c, hermitian_eigenvalues, CMatrix};
use entspec_core::qpe::{
    counting_pipeline, phase_scale, EvolutionMode, ExperimentRecord, PhaseEstimationConfig,
};
use entspec_core::spectrum::{ces_threshold, count_report, DEFAULT_ETA};
use entspec_core::{
    brute_force_count, build_hamiltonian, build_history_hamiltonian, count_above,
    count_ground_degeneracy, hamiltonian_to_density, parse_dimacs, CnfFormula, CountPromise,
    DensityMatrix, DiagonalHamiltonian, Error, Hamiltonian, Result, SchmidtSpectrum,
};

use crate::{GenArgs, HistoryArgs, PipelineArgs, SpectrumArgs, TaylorArgs};

/// Largest system the Taylor sweep accepts.
const MAX_TAYLOR_QUBITS: usize = 4;

/// Threshold used by the counting pipeline; never lands on a grid point
/// because `W` is a power of two.
const PIPELINE_THRESHOLD: f64 = 1.0 / 3.0;

fn read_formula(path: &Path) -> Result<CnfFormula> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_dimacs(&text)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Format(e.to_string()))
}

fn hamiltonian_for(f: &CnfFormula, mode: EvolutionMode) -> Result<Hamiltonian> {
    let h = build_hamiltonian(f);
    match mode {
        EvolutionMode::ExactDiagonal => Ok(Hamiltonian::from(h)),
        _ => Hamiltonian::dense(Hamiltonian::from(h).to_matrix()),
    }
}

/// Eigenvalues of `H/Tr H`; the caller has already rejected `Tr H = 0`.
fn density_spectrum(h: &DiagonalHamiltonian) -> SchmidtSpectrum {
    let tr = h.trace() as f64;
    SchmidtSpectrum::from_values(h.eigenvalues().iter().map(|v| v / tr).collect())
}

fn pipeline_config(
    args: &PipelineArgs,
    h: &Hamiltonian,
    p: &CountPromise,
) -> Result<PhaseEstimationConfig> {
    let d_t = match args.dt {
        Some(d) => d as usize,
        None => {
            let gap = phase_scale(h)? * p.gap();
            (1..=16)
                .find(|&d| (-(d as f64)).exp2() < gap)
                .ok_or_else(|| {
                    Error::Scale(format!(
                        "no register width up to 16 resolves the scaled gap {gap}"
                    ))
                })?
        }
    };
    let mut cfg = PhaseEstimationConfig::new(d_t, args.r as usize, PIPELINE_THRESHOLD, args.mode);
    if let Some(eps) = args.epsilon {
        cfg.lcu_epsilon = eps;
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct CountSatReport {
    n: usize,
    num_clauses: usize,
    mode: EvolutionMode,
    d_t: usize,
    r: usize,
    brute_force: u64,
    cgd_exact: usize,
    cgd_pipeline: u64,
    pipeline_uev: f64,
    postselect_probability: f64,
    ces_threshold: f64,
    ces_count: usize,
    cgd_exact_matches: bool,
    cgd_pipeline_matches: bool,
    /// `CES + CGD = 2^n`.
    ces_complement_matches: bool,
    agreement: bool,
}

pub fn count_sat(args: &PipelineArgs) -> Result<()> {
    let f = read_formula(&args.dimacs)?;
    let diag = build_hamiltonian(&f);
    hamiltonian_to_density(&diag)?;
    let brute = brute_force_count(&f)?;

    let promise = CountPromise::new(PIPELINE_THRESHOLD, 1.0)?;
    let cgd_exact =
        count_ground_degeneracy(&Hamiltonian::from(diag.clone()), &CountPromise::integer())?;
    let h = hamiltonian_for(&f, args.mode)?;
    let cfg = pipeline_config(args, &h, &promise)?;
    let outcome = counting_pipeline(&h, &promise, &cfg)?;

    let delta = ces_threshold(&diag)?;
    let spec = density_spectrum(&diag);
    let top = spec.lambda_star();
    let ces_count = count_above(&spec.with_threshold(top, delta)?, DEFAULT_ETA)?;

    let total = 1u64 << f.num_vars();
    let cgd_exact_matches = cgd_exact as u64 == brute;
    let cgd_pipeline_matches = outcome.rounded == brute;
    let ces_complement_matches = ces_count as u64 + brute == total;
    let report = CountSatReport {
        n: f.num_vars(),
        num_clauses: f.num_clauses(),
        mode: args.mode,
        d_t: cfg.d_t,
        r: cfg.r,
        brute_force: brute,
        cgd_exact,
        cgd_pipeline: outcome.rounded,
        pipeline_uev: outcome.uev,
        postselect_probability: outcome.postselect_probability,
        ces_threshold: delta,
        ces_count,
        cgd_exact_matches,
        cgd_pipeline_matches,
        ces_complement_matches,
        agreement: cgd_exact_matches && cgd_pipeline_matches && ces_complement_matches,
    };
    emit(&to_json(&report)?, args.out.as_deref())
}

pub fn qpe_count(args: &PipelineArgs) -> Result<()> {
    let f = read_formula(&args.dimacs)?;
    let promise = CountPromise::new(PIPELINE_THRESHOLD, 1.0)?;
    let h = hamiltonian_for(&f, args.mode)?;
    let cfg = pipeline_config(args, &h, &promise)?;
    let outcome = counting_pipeline(&h, &promise, &cfg)?;
    let brute = brute_force_count(&f)?;
    let record = ExperimentRecord {
        n: f.num_vars(),
        d_t: cfg.d_t,
        r: cfg.r,
        mode: cfg.mode,
        uev: outcome.uev,
        rounded: outcome.rounded,
        brute_force: Some(brute),
        matches: outcome.rounded == brute,
    };
    emit(&to_json(&record)?, args.out.as_deref())
}

pub fn spectrum(args: &SpectrumArgs) -> Result<()> {
    let f = read_formula(&args.dimacs)?;
    let diag = build_hamiltonian(&f);
    hamiltonian_to_density(&diag)?;
    let spec = density_spectrum(&diag);
    let n = f.num_vars();
    let spec = match args.delta_exp {
        Some(c) => {
            let bound = lambda_star(n).max(spec.lambda_star());
            spec.with_poly_gap(bound, n, c as f64)?
        }
        None => {
            let top = spec.lambda_star();
            spec.with_threshold(top, ces_threshold(&diag)?)?
        }
    };
    let report = count_report(&spec, n, DEFAULT_ETA)?;
    if let Some(p) = &args.out {
        emit(&spec.to_csv(), Some(p))?;
    }
    emit(&to_json(&report)?, None)
}

/// Eigenvalues 0.55 and 0.45, so `‖ρπ‖ < 1.8` and every order in the sweep improves on the last.
fn default_rho() -> Result<DensityMatrix> {
    DensityMatrix::new(CMatrix::from_row_slice(
        2,
        2,
        &[c(0.5, 0.0), c(0.03, -0.04), c(0.03, 0.04), c(0.5, 0.0)],
    ))
}

/// `(I + r·σ)/2` with `r` uniform in the unit ball.
fn random_qubit_rho(seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = loop {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            break v;
        }
    };
    DensityMatrix::new(CMatrix::from_row_slice(
        2,
        2,
        &[
            c(0.5 * (1.0 + r[2]), 0.0),
            c(0.5 * r[0], -0.5 * r[1]),
            c(0.5 * r[0], 0.5 * r[1]),
            c(0.5 * (1.0 - r[2]), 0.0),
        ],
    ))
}

pub fn taylor_bench(args: &TaylorArgs) -> Result<()> {
    let rho = match (&args.dimacs, args.seed) {
        (Some(path), _) => hamiltonian_to_density(&build_hamiltonian(&read_formula(path)?))?,
        (None, Some(seed)) => random_qubit_rho(seed)?,
        (None, None) => default_rho()?,
    };
    if rho.num_qubits() > MAX_TAYLOR_QUBITS {
        return Err(Error::Scale(format!(
            "Taylor sweep supports at most {MAX_TAYLOR_QUBITS} qubits, got {}",
            rho.num_qubits()
        )));
    }
    let a = pauli_decompose(&rho)?;
    let norm = hermitian_eigenvalues(rho.entries())
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0);
    let plan = TaylorPlan::new(norm, args.t, args.epsilon)?;
    let k_max = args.k_max.map_or(plan.order + 4, |k| k as usize);

    let mut csv = String::from("t,K,error,bound,chosen\n");
    let still = TaylorPlan::new(norm, 0.0, args.epsilon)?.with_order(0);
    csv.push_str(&format!("0,0,{:e},0,0\n", block_error(&a, &still)?));
    for k in 0..=k_max {
        let p = plan.with_order(k);
        let err = block_error(&a, &p)?;
        csv.push_str(&format!(
            "{},{k},{err:e},{:e},{}\n",
            args.t,
            p.bound(),
            (k == plan.order) as u8
        ));
    }
    emit(&csv, args.out.as_deref())
}

pub fn history_verify(args: &HistoryArgs) -> Result<()> {
    let f = read_formula(&args.dimacs)?;
    let report = verify_history(&f, LanczosOptions::default())?;
    if let Some(p) = &args.csv {
        emit(&intermediate_spectra(&f)?.to_csv(), Some(p))?;
    }
    if let Some(p) = &args.terms {
        emit(&build_history_hamiltonian(&f)?.to_json(), Some(p))?;
    }
    emit(&to_json(&report)?, args.out.as_deref())
}

pub fn gen_formulas(args: &GenArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut joined = String::new();
    for i in 0..args.count {
        let f = random_formula(&mut rng, args.vars as usize, args.clauses as usize)?;
        match &args.out {
            Some(dir) => emit(
                &f.to_dimacs(),
                Some(&dir.join(format!("formula_{i:04}.cnf"))),
            )?,
            None => joined.push_str(&f.to_dimacs()),
        }
    }
    if args.out.is_none() {
        emit(&joined, None)?;
    }
    Ok(())
}
