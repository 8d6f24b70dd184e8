use crate::linalg::{C64, ONE, ZERO};
use crate::{Error, Result};

use super::check_cap;

const NORM_TOL: f64 = 1e-10;

/// Dense amplitude vector over `num_qubits` qubits.
///
/// `normalized` is cleared by projections and scaling; the squared norm of
/// an unnormalized vector is the accumulated post-selection weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<C64>,
    normalized: bool,
}

impl Statevector {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_cap(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::Argument(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
            normalized: true,
        })
    }

    /// Builds a state and sets the flag from the actual norm.
    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_cap(num_qubits)?;
        if amplitudes.len() != 1usize << num_qubits {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {num_qubits} qubits",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        Ok(Self {
            num_qubits,
            amplitudes,
            normalized: (norm - 1.0).abs() <= NORM_TOL,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub(crate) fn mark_unnormalized(&mut self) {
        self.normalized = false;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(mut self, factor: C64) -> Self {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
        if (factor.norm() - 1.0).abs() > NORM_TOL {
            self.normalized = false;
        }
        self
    }

    /// Explicit renormalization; fails on a vanishing vector.
    pub fn renormalized(self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::Argument("cannot renormalize the zero vector".into()));
        }
        let mut out = self.scaled(C64::new(1.0 / norm, 0.0));
        out.normalized = true;
        Ok(out)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::Dimension(format!(
                "inner product of {} and {} qubit states",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `self ⊗ low`, with `low` on the low-order qubits.
    pub fn tensor(&self, low: &Statevector) -> Result<Statevector> {
        let n = self.num_qubits + low.num_qubits;
        check_cap(n)?;
        let mut amplitudes = Vec::with_capacity(1 << n);
        for &hi in &self.amplitudes {
            for &lo in &low.amplitudes {
                amplitudes.push(hi * lo);
            }
        }
        Ok(Statevector {
            num_qubits: n,
            amplitudes,
            normalized: self.normalized && low.normalized,
        })
    }

    /// Little-endian `u32` qubit count followed by `(re, im)` f64 pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 16 * self.amplitudes.len());
        out.extend_from_slice(&(self.num_qubits as u32).to_le_bytes());
        for a in &self.amplitudes {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Format("statevector blob shorter than header".into()));
        }
        let n = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        check_cap(n)?;
        let body = &bytes[4..];
        if body.len() != 16usize << n {
            return Err(Error::Format(format!(
                "expected {} payload bytes for {n} qubits, found {}",
                16usize << n,
                body.len()
            )));
        }
        let amplitudes = body
            .chunks_exact(16)
            .map(|ch| {
                C64::new(
                    f64::from_le_bytes(ch[..8].try_into().unwrap()),
                    f64::from_le_bytes(ch[8..].try_into().unwrap()),
                )
            })
            .collect();
        Self::from_amplitudes(n, amplitudes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn length_must_match() {
        assert!(matches!(
            Statevector::from_amplitudes(2, vec![ZERO; 3]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(Statevector::zero(64), Err(Error::Scale(_))));
    }

    #[test]
    fn tensor_puts_left_factor_high() {
        let one = Statevector::basis(1, 1).unwrap();
        let zero = Statevector::basis(1, 0).unwrap();
        let s = one.tensor(&zero).unwrap();
        assert_eq!(s.amplitude(0b10), ONE);
    }

    #[test]
    fn header_is_little_endian() {
        let s = Statevector::zero(1).unwrap();
        let b = s.to_bytes();
        assert_eq!(&b[..4], &[1, 0, 0, 0]);
        assert_eq!(b.len(), 4 + 32);
        assert_eq!(&b[4..12], &1.0f64.to_le_bytes());
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let mut b = Statevector::zero(2).unwrap().to_bytes();
        b.pop();
        assert!(matches!(Statevector::from_bytes(&b), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn byte_roundtrip(n in 0usize..5, seed in proptest::collection::vec(-1.0f64..1.0, 64)) {
            let amps: Vec<C64> = (0..1usize << n).map(|k| C64::new(seed[2 * k], seed[2 * k + 1])).collect();
            let s = Statevector::from_amplitudes(n, amps).unwrap();
            let back = Statevector::from_bytes(&s.to_bytes()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
