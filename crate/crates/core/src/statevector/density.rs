use crate::linalg::{hermitian_eigenvalues, is_hermitian, CMatrix, C64, ZERO};
use crate::spectrum::SchmidtSpectrum;
use crate::{Error, Result};

use super::Statevector;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues with magnitude below this are reported as exact zeros.
pub const CLAMP_TOL: f64 = 1e-12;
/// Eigenvalues below minus this are a hard PSD failure.
pub const PSD_FAIL_TOL: f64 = 1e-8;

/// Hermitian matrix on `num_qubits` qubits, unit trace unless flagged otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: CMatrix,
    normalized: bool,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let dim = entries.nrows();
        if !entries.is_square() || !dim.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "{}x{} is not a qubit operator",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if !is_hermitian(&entries, HERMITIAN_TOL) {
            return Err(Error::Argument("density matrix is not Hermitian".into()));
        }
        let tr = entries.trace().re;
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            entries,
            normalized: (tr - 1.0).abs() <= TRACE_TOL,
        })
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        let d = nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| C64::new(v, 0.0)),
        );
        Self::new(CMatrix::from_diagonal(&d))
    }

    /// `|psi><psi|`.
    pub fn pure(state: &Statevector) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            num_qubits: state.num_qubits(),
            entries: &v * v.adjoint(),
            normalized: state.is_normalized(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// `self ⊗ low`.
    pub fn kron(&self, low: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            num_qubits: self.num_qubits + low.num_qubits,
            entries: self.entries.kronecker(&low.entries),
            normalized: self.normalized && low.normalized,
        }
    }
}

/// Partial trace onto `keep`; output index bit `j` is qubit `keep[j]`.
pub fn reduced_density_matrix(state: &Statevector, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.num_qubits();
    if keep.is_empty() {
        return Err(Error::Argument("keep set must be non-empty".into()));
    }
    let mut seen = vec![false; n];
    for &q in keep {
        if q >= n || seen[q] {
            return Err(Error::Argument(format!(
                "keep set {keep:?} is not a set of distinct qubits below {n}"
            )));
        }
        seen[q] = true;
    }
    let env: Vec<usize> = (0..n).filter(|&q| !seen[q]).collect();
    let k = keep.len();
    // amplitudes reshaped as (kept index) x (environment index)
    let mut m = CMatrix::from_element(1 << k, 1 << env.len(), ZERO);
    for (i, &a) in state.amplitudes().iter().enumerate() {
        if a == ZERO {
            continue;
        }
        let row = keep
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &q)| acc | (((i >> q) & 1) << j));
        let col = env
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &q)| acc | (((i >> q) & 1) << j));
        m[(row, col)] = a;
    }
    let entries = &m * m.adjoint();
    Ok(DensityMatrix {
        num_qubits: k,
        entries,
        normalized: state.is_normalized(),
    })
}

/// Descending eigenvalues of `rho`; `|λ| <= 1e-12` and small negatives read as 0.
pub fn schmidt_spectrum(rho: &DensityMatrix) -> Result<SchmidtSpectrum> {
    let mut values = hermitian_eigenvalues(rho.entries());
    if let Some(&lowest) = values.first() {
        if lowest < -PSD_FAIL_TOL {
            return Err(Error::NotPsd { eigenvalue: lowest });
        }
    }
    for v in &mut values {
        if *v < CLAMP_TOL {
            *v = 0.0;
        }
    }
    values.reverse();
    Ok(SchmidtSpectrum::from_values(values))
}

/// `<psi|P|psi>` on raw amplitudes, `P` the product of `|outcome><outcome|` on each listed qubit.
pub fn uev(state: &Statevector, projector: &[(usize, bool)]) -> Result<f64> {
    let mut mask = 0usize;
    let mut want = 0usize;
    for &(q, outcome) in projector {
        if q >= state.num_qubits() {
            return Err(Error::Argument(format!(
                "projector qubit {q} out of range for {} qubits",
                state.num_qubits()
            )));
        }
        mask |= 1 << q;
        if outcome {
            want |= 1 << q;
        }
    }
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask == want)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// `2^{-n/2} Σ_x |x>|x>` on `2n` qubits; the left register is the high half.
pub fn prepare_max_entangled(n: usize) -> Result<Statevector> {
    if n == 0 {
        return Err(Error::Argument(
            "need at least one qubit per register".into(),
        ));
    }
    super::check_cap(2 * n)?;
    let mut amps = vec![ZERO; 1 << (2 * n)];
    let a = C64::new((-(n as f64) / 2.0).exp2(), 0.0);
    for x in 0..1usize << n {
        amps[(x << n) | x] = a;
    }
    Statevector::from_amplitudes(2 * n, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff, ONE};
    use crate::statevector::{apply_circuit, Circuit};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell() -> Statevector {
        let s = c(FRAC_1_SQRT_2, 0.0);
        Statevector::from_amplitudes(2, vec![s, ZERO, ZERO, s]).unwrap()
    }

    #[test]
    fn product_state_reduces_to_zero_projector() {
        // qubit 1 in |0>, qubit 0 in |+>: |0>|+>
        let s = c(FRAC_1_SQRT_2, 0.0);
        let psi = Statevector::from_amplitudes(2, vec![s, s, ZERO, ZERO]).unwrap();
        let rho = reduced_density_matrix(&psi, &[1]).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        assert!(max_abs_diff(rho.entries(), &expected) < 1e-15);
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let rho = reduced_density_matrix(&bell(), &[0]).unwrap();
        let expected = CMatrix::identity(2, 2).scale(0.5);
        assert!(max_abs_diff(rho.entries(), &expected) < 1e-15);
        let spec = schmidt_spectrum(&rho).unwrap();
        assert!((spec.values()[0] - 0.5).abs() < 1e-15 && (spec.values()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_or_repeated_keep_rejected() {
        assert!(matches!(
            reduced_density_matrix(&bell(), &[]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            reduced_density_matrix(&bell(), &[0, 0]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            reduced_density_matrix(&bell(), &[2]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn spectrum_of_projector() {
        let rho = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(schmidt_spectrum(&rho).unwrap().values(), vec![1.0, 0.0]);
    }

    #[test]
    fn not_psd_detected() {
        let rho = DensityMatrix::from_diagonal(&[1.1, -0.1]).unwrap();
        assert!(matches!(schmidt_spectrum(&rho), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn uev_on_raw_amplitudes() {
        let zero = Statevector::zero(1).unwrap();
        assert_eq!(uev(&zero, &[(0, false)]).unwrap(), 1.0);
        let two_one = Statevector::basis(1, 1).unwrap().scaled(c(2.0, 0.0));
        assert_eq!(uev(&two_one, &[(0, false)]).unwrap(), 0.0);
        assert_eq!(uev(&two_one, &[(0, true)]).unwrap(), 4.0);
        assert!(uev(&two_one, &[(3, true)]).is_err());
    }

    #[test]
    fn max_entangled_small() {
        let one = prepare_max_entangled(1).unwrap();
        assert!(
            max_abs_diff(
                &CMatrix::from_column_slice(4, 1, one.amplitudes()),
                &CMatrix::from_column_slice(4, 1, bell().amplitudes())
            ) < 1e-15
        );
        let two = prepare_max_entangled(2).unwrap();
        for x in 0..4usize {
            assert!((two.amplitude((x << 2) | x) - c(0.5, 0.0)).norm() < 1e-15);
        }
        assert!((two.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bell_via_circuit_matches() {
        let mut circ = Circuit::new(2);
        circ.h(1).unwrap().cx(1, 0).unwrap();
        let out = apply_circuit(&circ, &Statevector::zero(2).unwrap()).unwrap();
        let overlap = out.inner(&prepare_max_entangled(1).unwrap()).unwrap();
        assert!((overlap - ONE).norm() < 1e-15);
    }
}
