//! Fixtures shared by the criterion benches in `benches/`.

use entspec_core::statevector::gates;
use entspec_core::statevector::Control;
use entspec_core::{Circuit, CnfFormula, Result};

/// `depth` layers of Hadamards, rotations and a CNOT ladder on `n` qubits.
pub fn layered_circuit(n: usize, depth: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n);
    for layer in 0..depth {
        for q in 0..n {
            c.push(gates::h(), &[q], &[])?;
            c.push(gates::ry(0.1 * (q + layer + 1) as f64), &[q], &[])?;
        }
        for q in 0..n - 1 {
            c.push(gates::x(), &[q + 1], &[Control::on(q)])?;
        }
    }
    Ok(c)
}

/// Chain formula `(x_i ∨ ¬x_{i+1})` over `n` variables, in DIMACS form.
pub fn chain_formula(n: usize) -> Result<CnfFormula> {
    let mut text = format!("p cnf {n} {}\n", n - 1);
    for i in 1..n {
        text.push_str(&format!("{i} -{} 0\n", i + 1));
    }
    entspec_core::parse_dimacs(&text)
}
