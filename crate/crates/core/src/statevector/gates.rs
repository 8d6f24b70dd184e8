//! Standard gate matrices. Multi-qubit matrices index their first target as
//! the least-significant bit.

use crate::linalg::{c, CMatrix, C64, I, ONE, ZERO};
use std::f64::consts::FRAC_1_SQRT_2;

fn m2(a: C64, b: C64, c_: C64, d: C64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, b, c_, d])
}

pub fn h() -> CMatrix {
    let s = c(FRAC_1_SQRT_2, 0.0);
    m2(s, s, s, -s)
}

pub fn x() -> CMatrix {
    m2(ZERO, ONE, ONE, ZERO)
}

pub fn y() -> CMatrix {
    m2(ZERO, -I, I, ZERO)
}

pub fn z() -> CMatrix {
    m2(ONE, ZERO, ZERO, -ONE)
}

pub fn pauli(letter: u8) -> CMatrix {
    match letter {
        0 => CMatrix::identity(2, 2),
        1 => x(),
        2 => y(),
        3 => z(),
        _ => panic!("pauli letter {letter} out of range"),
    }
}

/// `diag(1, e^{i theta})`.
pub fn phase(theta: f64) -> CMatrix {
    m2(ONE, ZERO, ZERO, (I * theta).exp())
}

/// `exp(-i theta Y / 2)`.
pub fn ry(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    m2(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

pub fn swap() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// Single-qubit unitary with `<0|U|0> = z` and `<1|U|0> >= 0` real.
///
/// Requires `|z| <= 1`.
pub fn with_amplitude(z: C64) -> CMatrix {
    let r = z.norm();
    assert!(r <= 1.0 + 1e-12, "amplitude {z} exceeds unit modulus");
    let w = c((1.0 - r * r).max(0.0).sqrt(), 0.0);
    m2(z, -w, w, z.conj())
}
