//! Oracles, fixtures and the fixed-seed property suites shared by the
//! integration targets.
#![allow(dead_code)]

use entspec_core::cnf::{random_formula, Clause, Literal};
use entspec_core::lcu::{pauli_decompose, pauli_letter};
use entspec_core::linalg::{c, kron, max_abs_diff, CMatrix, C64, ONE, ZERO};
use entspec_core::spectrum::SchmidtSpectrum;
use entspec_core::statevector::{gates, reduced_density_matrix, schmidt_spectrum, Control};
use entspec_core::{
    apply_circuit, count_above, Circuit, CnfFormula, DensityMatrix, Error, Statevector,
};
use nalgebra::DVector;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PROPERTY_CASES: u32 = 1000;
pub const PROPERTY_SEED: u64 = 0x00e5_5eed;

pub type PropertySuite = fn() -> Result<(), String>;

pub fn clause(a: (usize, bool), b: (usize, bool)) -> Clause {
    let lit = |(v, neg): (usize, bool)| {
        if neg {
            Literal::neg(v)
        } else {
            Literal::pos(v)
        }
    };
    Clause::new(lit(a), lit(b))
}

/// Value of variable `v` in assignment `x`, with `x1` the most significant bit.
pub fn bit(x: usize, v: usize, n: usize) -> bool {
    (x >> (n - 1 - v)) & 1 == 1
}

fn literal_true(lit: &Literal, x: usize, n: usize) -> bool {
    bit(x, lit.var, n) != lit.negated
}

/// Unsatisfied-clause count per assignment, by direct evaluation.
pub fn violations_oracle(f: &CnfFormula) -> Vec<u64> {
    let n = f.num_vars();
    (0..1usize << n)
        .map(|x| {
            f.clauses()
                .iter()
                .filter(|cl| !(literal_true(&cl.a, x, n) || literal_true(&cl.b, x, n)))
                .count() as u64
        })
        .collect()
}

pub fn models_oracle(f: &CnfFormula) -> u64 {
    violations_oracle(f).iter().filter(|&&v| v == 0).count() as u64
}

/// `H/Tr H` from the violation oracle.
pub fn density_oracle(f: &CnfFormula) -> CMatrix {
    let v = violations_oracle(f);
    let tr: u64 = v.iter().sum();
    CMatrix::from_diagonal(&DVector::from_iterator(
        v.len(),
        v.iter().map(|&x| c(x as f64 / tr as f64, 0.0)),
    ))
}

/// `a Σ |s>|s>|k>|0>` with the register order flag, k, copy, s from qubit 0 up.
pub fn xi_oracle(f: &CnfFormula) -> Statevector {
    let n = f.num_vars();
    let m = f.num_clauses();
    let nq = 2 * n + m + 1;
    let mut amps = vec![ZERO; 1 << nq];
    let mut count = 0usize;
    for s in 0..1usize << n {
        for (i, cl) in f.clauses().iter().enumerate() {
            if !(literal_true(&cl.a, s, n) || literal_true(&cl.b, s, n)) {
                let k = ((1usize << (i + 1)) - 1) << 1;
                let idx = (s << (1 + m + n)) | (s << (1 + m)) | k;
                amps[idx] = ONE;
                count += 1;
            }
        }
    }
    let a = 1.0 / (count as f64).sqrt();
    Statevector::from_amplitudes(nq, amps.into_iter().map(|z| z * a).collect()).unwrap()
}

/// `count` formulas cycling through `n = 2..=max_n` with `1..=max_n+1` clauses.
pub fn random_formulas(seed: u64, count: usize, max_n: usize) -> Vec<CnfFormula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = 2 + i % (max_n - 1);
            let m = 1 + i % (n + 1);
            random_formula(&mut rng, n, m).unwrap()
        })
        .collect()
}

/// Amplitudes on flag = 0 only.
pub fn branch_zero(out: &Statevector) -> Statevector {
    let amps = out
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if i & 1 == 0 { *a } else { ZERO })
        .collect();
    Statevector::from_amplitudes(out.num_qubits(), amps).unwrap()
}

pub fn column(v: &Statevector) -> CMatrix {
    CMatrix::from_column_slice(v.dim(), 1, v.amplitudes())
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    let r = (-2.0 * u.ln()).sqrt();
    c(
        r * (std::f64::consts::TAU * v).cos(),
        r * (std::f64::consts::TAU * v).sin(),
    )
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Statevector {
    let amps: Vec<C64> = (0..1usize << n).map(|_| gaussian(rng)).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Statevector::from_amplitudes(n, amps.into_iter().map(|z| z / norm).collect()).unwrap()
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        (0..dim).map(|i| {
            let d = r[(i, i)];
            if d.norm() == 0.0 {
                ONE
            } else {
                d / d.norm()
            }
        }),
    ));
    q * phases
}

/// Full-rank random density matrix `A A† / Tr`.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let dim = 1 << n;
    let a = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.map(|z| z / tr)).unwrap()
}

/// One step of a random circuit, kept alongside the circuit so the oracle
/// can rebuild it independently.
#[derive(Debug, Clone)]
pub enum OracleStep {
    Gate {
        matrix: CMatrix,
        targets: Vec<usize>,
        controls: Vec<(usize, bool)>,
    },
    Project {
        qubit: usize,
        outcome: bool,
    },
}

pub fn random_circuit(
    rng: &mut ChaCha8Rng,
    n: usize,
    depth: usize,
    projections: bool,
) -> (Circuit, Vec<OracleStep>) {
    let mut circuit = Circuit::new(n);
    let mut steps = Vec::with_capacity(depth);
    for _ in 0..depth {
        if projections && rng.gen_bool(0.2) {
            let qubit = rng.gen_range(0..n);
            let outcome = rng.gen();
            circuit.project(qubit, outcome).unwrap();
            steps.push(OracleStep::Project { qubit, outcome });
            continue;
        }
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let k = rng.gen_range(1..=n.min(3));
        let nc = rng.gen_range(0..=(n - k).min(2));
        let targets = order[..k].to_vec();
        let controls: Vec<(usize, bool)> =
            order[k..k + nc].iter().map(|&q| (q, rng.gen())).collect();
        let matrix = random_unitary(rng, 1 << k);
        let ctl: Vec<Control> = controls
            .iter()
            .map(|&(q, v)| if v { Control::on(q) } else { Control::off(q) })
            .collect();
        circuit.push(matrix.clone(), &targets, &ctl).unwrap();
        steps.push(OracleStep::Gate {
            matrix,
            targets,
            controls,
        });
    }
    (circuit, steps)
}

/// Dense `2^n × 2^n` matrix of one step, built entry by entry.
pub fn step_matrix(step: &OracleStep, n: usize) -> CMatrix {
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    match step {
        OracleStep::Project { qubit, outcome } => {
            for x in 0..dim {
                if ((x >> qubit) & 1 == 1) == *outcome {
                    m[(x, x)] = ONE;
                }
            }
        }
        OracleStep::Gate {
            matrix,
            targets,
            controls,
        } => {
            for col in 0..dim {
                let active = controls.iter().all(|&(q, v)| ((col >> q) & 1 == 1) == v);
                if !active {
                    m[(col, col)] = ONE;
                    continue;
                }
                let local_in = targets
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (j, &q)| acc | (((col >> q) & 1) << j));
                let rest = targets.iter().fold(col, |acc, &q| acc & !(1 << q));
                for local_out in 0..matrix.nrows() {
                    let row = targets
                        .iter()
                        .enumerate()
                        .fold(rest, |acc, (j, &q)| acc | (((local_out >> j) & 1) << q));
                    m[(row, col)] += matrix[(local_out, local_in)];
                }
            }
        }
    }
    m
}

pub fn oracle_apply(steps: &[OracleStep], n: usize, input: &Statevector) -> CMatrix {
    steps
        .iter()
        .fold(column(input), |v, s| step_matrix(s, n) * v)
}

/// `σ_i` as a Kronecker product, qubit `n-1` leftmost.
pub fn pauli_oracle(index: usize, n: usize) -> CMatrix {
    (0..n).rev().fold(CMatrix::identity(1, 1), |acc, q| {
        kron(&acc, &gates::pauli(pauli_letter(index, q)))
    })
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: PROPERTY_CASES,
        rng_seed: RngSeed::Fixed(PROPERTY_SEED),
        failure_persistence: None,
        ..Config::default()
    })
}

fn report<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn sizes(max_n: usize) -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..=max_n)
}

/// Projection-free circuits preserve the norm and match the dense product.
pub fn prop_unitarity() -> Result<(), String> {
    report(
        runner().run(&(sizes(6), 1usize..=16), |((seed, n), depth)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (circuit, steps) = random_circuit(&mut rng, n, depth, false);
            let input = random_state(&mut rng, n);
            let out =
                apply_circuit(&circuit, &input).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!((out.norm_sqr() - input.norm_sqr()).abs() <= 1e-12);
            prop_assert!(max_abs_diff(&column(&out), &oracle_apply(&steps, n, &input)) <= 1e-12);
            Ok(())
        }),
    )
}

/// Squared norm after projections equals the dense-projector probability.
pub fn prop_post_selection() -> Result<(), String> {
    report(
        runner().run(&(sizes(6), 1usize..=16), |((seed, n), depth)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (circuit, steps) = random_circuit(&mut rng, n, depth, true);
            let input = random_state(&mut rng, n);
            let out =
                apply_circuit(&circuit, &input).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let want = oracle_apply(&steps, n, &input);
            let p = want.iter().map(|z| z.norm_sqr()).sum::<f64>();
            prop_assert!(
                (out.norm_sqr() - p).abs() <= 1e-12,
                "{} vs {}",
                out.norm_sqr(),
                p
            );
            prop_assert!(max_abs_diff(&column(&out), &want) <= 1e-12);
            if circuit.has_projections() {
                prop_assert!(!out.is_normalized() || (p - 1.0).abs() <= 1e-10);
            }
            Ok(())
        }),
    )
}

/// Both sides of a bipartition share their nonzero spectrum, and tracing
/// out preserves the trace.
pub fn prop_schmidt_symmetry() -> Result<(), String> {
    report(runner().run(&(any::<u64>(), 2usize..=8), |(seed, n)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_state(&mut rng, n);
        let mask = rng.gen_range(1..(1usize << n) - 1);
        let a: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
        let b: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 0).collect();
        let ra =
            reduced_density_matrix(&state, &a).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let rb =
            reduced_density_matrix(&state, &b).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!((ra.trace() - state.norm_sqr()).abs() <= 1e-10);
        prop_assert!((rb.trace() - state.norm_sqr()).abs() <= 1e-10);
        let sa = schmidt_spectrum(&ra).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let sb = schmidt_spectrum(&rb).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let len = sa.len().max(sb.len());
        for i in 0..len {
            let x = sa.values().get(i).copied().unwrap_or(0.0);
            let y = sb.values().get(i).copied().unwrap_or(0.0);
            prop_assert!((x - y).abs() <= 1e-10, "index {i}: {x} vs {y}");
        }
        Ok(())
    }))
}

/// `Σ a_i σ_i` rebuilds `ρ`, `a_0 = 1/2^n`, and `a_i = Tr(σ_i ρ)/2^n`.
pub fn prop_pauli_recomposition() -> Result<(), String> {
    report(runner().run(&(any::<u64>(), 1usize..=3), |(seed, n)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, n);
        let a = pauli_decompose(&rho).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(max_abs_diff(&a.recompose(), rho.entries()) <= 1e-10);
        let dim = (1usize << n) as f64;
        prop_assert!((a.coefficients()[0] - 1.0 / dim).abs() <= 1e-15);
        let mut rebuilt = CMatrix::zeros(1 << n, 1 << n);
        for (i, &ai) in a.coefficients().iter().enumerate() {
            let sigma = pauli_oracle(i, n);
            let want = (&sigma * rho.entries()).trace() / dim;
            prop_assert!((want - c(ai, 0.0)).norm() <= 1e-12, "a_{i}");
            rebuilt += sigma * c(ai, 0.0);
        }
        prop_assert!(max_abs_diff(&rebuilt, rho.entries()) <= 1e-10);
        Ok(())
    }))
}

fn spectrum_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..=32)
}

/// Raising the threshold never raises the count.
pub fn prop_count_monotone() -> Result<(), String> {
    report(runner().run(
        &(spectrum_values(), 1e-4f64..1.0, 1e-4f64..1.0),
        |(values, d1, d2)| {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let s = SchmidtSpectrum::from_values(values);
            let top = s.lambda_star();
            let count = |d: f64| count_above(&s.clone().with_threshold(top, d).unwrap(), 0.0);
            if let (Ok(a), Ok(b)) = (count(lo), count(hi)) {
                prop_assert!(a >= b, "{a} < {b} at Δ {lo} < {hi}");
            }
            Ok(())
        },
    ))
}

/// Scaling values, `λ*` and `Δ` together leaves the answer unchanged,
/// promise violations included.
pub fn prop_scaling_covariance() -> Result<(), String> {
    report(runner().run(
        &(spectrum_values(), 1e-3f64..1.0, -3.0f64..3.0),
        |(values, frac, log_k)| {
            let s = SchmidtSpectrum::from_values(values);
            let top = s.lambda_star();
            let s = s.with_threshold(top, frac * top.max(1e-3)).unwrap();
            let k = 10f64.powf(log_k);
            let base = count_above(&s, entspec_core::spectrum::DEFAULT_ETA);
            let scaled = count_above(&s.scaled(k), entspec_core::spectrum::DEFAULT_ETA);
            match (base, scaled) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(Error::PromiseViolation { .. }), Err(Error::PromiseViolation { .. })) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?} at k = {k}"),
            }
            Ok(())
        },
    ))
}

/// The named fixed-seed suites, in reporting order.
pub fn property_suites() -> Vec<(&'static str, PropertySuite)> {
    vec![
        ("unitarity", prop_unitarity),
        ("post-selection norm", prop_post_selection),
        ("Schmidt symmetry", prop_schmidt_symmetry),
        ("Pauli recomposition", prop_pauli_recomposition),
        ("count monotonicity", prop_count_monotone),
        ("scaling covariance", prop_scaling_covariance),
    ]
}
