//! Threshold counting on Schmidt spectra and ground-space degeneracy counting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cnf::DiagonalHamiltonian;
use crate::linalg::{hermitian_eigenvalues, is_hermitian, CMatrix};
use crate::statevector::{schmidt_spectrum, DensityMatrix};
use crate::{Error, Result};

/// Relative half-width of the forbidden window around a CES threshold.
pub const DEFAULT_ETA: f64 = 0.25;
/// Exponent `c` in `Δ >= λ*/n^c`.
pub const DEFAULT_POLY_EXPONENT: f64 = 4.0;
const BOUND_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-9;

/// Descending spectrum with its claimed bound `λ*` and threshold `Δ`.
///
/// `delta == 0` means no threshold has been attached yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    values: Vec<f64>,
    lambda_star: f64,
    delta: f64,
}

impl SchmidtSpectrum {
    /// Sorts descending and takes `λ*` as the largest value.
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        let lambda_star = values.first().copied().unwrap_or(0.0);
        Self {
            values,
            lambda_star,
            delta: 0.0,
        }
    }

    pub fn new(values: Vec<f64>, lambda_star: f64, delta: f64) -> Result<Self> {
        Self::from_values(values).with_threshold(lambda_star, delta)
    }

    pub fn with_threshold(mut self, lambda_star: f64, delta: f64) -> Result<Self> {
        if let Some(&top) = self.values.first() {
            if top > lambda_star + BOUND_TOL {
                return Err(Error::Argument(format!(
                    "largest value {top} exceeds the bound {lambda_star}"
                )));
            }
        }
        if !(delta > 0.0) {
            return Err(Error::Argument(format!(
                "threshold must be positive, got {delta}"
            )));
        }
        self.lambda_star = lambda_star;
        self.delta = delta;
        Ok(self)
    }

    /// Threshold `λ*/n^c`.
    pub fn with_poly_gap(self, lambda_star: f64, n: usize, exponent: f64) -> Result<Self> {
        self.with_threshold(lambda_star, lambda_star / (n as f64).powf(exponent))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Whether `Δ >= λ*/n^c`.
    pub fn satisfies_poly_gap(&self, n: usize, exponent: f64) -> bool {
        let bound = self.lambda_star / (n as f64).powf(exponent);
        self.delta > 0.0 && self.delta >= bound * (1.0 - 1e-12)
    }

    /// Every field multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * k).collect(),
            lambda_star: self.lambda_star * k,
            delta: self.delta * k,
        }
    }

    /// CSV with columns `index,eigenvalue`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{i},{v:e}");
        }
        out
    }
}

/// Number of values strictly above `Δ`, refusing to answer when any value
/// falls inside `[Δ(1-η), Δ(1+η)]`.
pub fn count_above(s: &SchmidtSpectrum, eta: f64) -> Result<usize> {
    if !(s.delta > 0.0) {
        return Err(Error::Argument("spectrum has no threshold attached".into()));
    }
    let low = s.delta * (1.0 - eta);
    let high = s.delta * (1.0 + eta);
    if let Some(&bad) = s.values.iter().find(|&&v| v >= low && v <= high) {
        return Err(Error::PromiseViolation {
            eigenvalue: bad,
            low,
            high,
        });
    }
    Ok(s.values.iter().filter(|&&v| v > s.delta).count())
}

/// Midpoint threshold between the zero eigenvalues of `H/Tr(H)` and its
/// smallest nonzero eigenvalue `1/Tr(H)`.
///
/// For formulas whose clauses use distinct variables this is `λ*/(2#C)`.
pub fn ces_threshold(h: &DiagonalHamiltonian) -> Result<f64> {
    let tr = h.trace();
    if tr == 0 {
        return Err(Error::Degenerate {
            reason: "Tr(H) = 0".into(),
            trivial_count: 1u64 << h.num_vars(),
        });
    }
    Ok(0.5 / tr as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CountReport {
    pub n: usize,
    pub lambda_star: f64,
    pub delta: f64,
    pub count: Option<usize>,
    pub promise_ok: bool,
}

pub fn count_report(s: &SchmidtSpectrum, n: usize, eta: f64) -> Result<CountReport> {
    let (count, promise_ok) = match count_above(s, eta) {
        Ok(c) => (Some(c), true),
        Err(Error::PromiseViolation { .. }) => (None, false),
        Err(e) => return Err(e),
    };
    Ok(CountReport {
        n,
        lambda_star: s.lambda_star,
        delta: s.delta,
        count,
        promise_ok,
    })
}

/// Promise that no eigenvalue lies strictly between `threshold` (b) and
/// `excited` (a).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountPromise {
    pub threshold: f64,
    pub excited: f64,
}

impl CountPromise {
    pub fn new(threshold: f64, excited: f64) -> Result<Self> {
        if !(excited > threshold) {
            return Err(Error::Argument(format!(
                "promise needs a > b, got a = {excited}, b = {threshold}"
            )));
        }
        Ok(Self { threshold, excited })
    }

    /// Integer spectra: `b = 1/2`, `a = 1`.
    pub fn integer() -> Self {
        Self {
            threshold: 0.5,
            excited: 1.0,
        }
    }

    pub fn gap(&self) -> f64 {
        self.excited - self.threshold
    }

    pub fn meets_min_gap(&self, min_gap: f64) -> bool {
        self.gap() >= min_gap
    }
}

/// Either a diagonal clause Hamiltonian or a dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Hamiltonian {
    Diagonal(DiagonalHamiltonian),
    Dense(CMatrix),
}

impl From<DiagonalHamiltonian> for Hamiltonian {
    fn from(h: DiagonalHamiltonian) -> Self {
        Hamiltonian::Diagonal(h)
    }
}

impl Hamiltonian {
    pub fn dense(m: CMatrix) -> Result<Self> {
        if !m.is_square() || !m.nrows().is_power_of_two() {
            return Err(Error::Dimension(format!(
                "{}x{} is not a qubit operator",
                m.nrows(),
                m.ncols()
            )));
        }
        if !is_hermitian(&m, 1e-10) {
            return Err(Error::Argument("Hamiltonian is not Hermitian".into()));
        }
        Ok(Hamiltonian::Dense(m))
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            Hamiltonian::Diagonal(h) => h.num_vars(),
            Hamiltonian::Dense(m) => m.nrows().trailing_zeros() as usize,
        }
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self {
            Hamiltonian::Diagonal(h) => {
                let mut v = h.eigenvalues();
                v.sort_by(f64::total_cmp);
                v
            }
            Hamiltonian::Dense(m) => hermitian_eigenvalues(m),
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        match self {
            Hamiltonian::Diagonal(h) => {
                let d = nalgebra::DVector::from_iterator(
                    h.violations().len(),
                    h.violations()
                        .iter()
                        .map(|&v| crate::linalg::c(v as f64, 0.0)),
                );
                CMatrix::from_diagonal(&d)
            }
            Hamiltonian::Dense(m) => m.clone(),
        }
    }
}

/// Number of eigenvalues `<= b`, with multiplicity.
pub fn count_ground_degeneracy(h: &Hamiltonian, p: &CountPromise) -> Result<usize> {
    let mut count = 0;
    for e in h.eigenvalues() {
        if e <= p.threshold + EIGEN_TOL {
            count += 1;
        } else if e < p.excited - EIGEN_TOL {
            return Err(Error::PromiseViolation {
                eigenvalue: e,
                low: p.threshold,
                high: p.excited,
            });
        }
    }
    Ok(count)
}

/// `{-ln λ : λ > 0}` ascending.
pub fn entanglement_hamiltonian_spectrum(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let s = schmidt_spectrum(rho)?;
    Ok(s.values()
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|v| -v.ln())
        .collect())
}
