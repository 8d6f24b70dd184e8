//! Lowering of controlled gates to gates on at most two qubits.

use crate::linalg::{identity, max_abs_diff, sqrt_unitary_2x2, CMatrix};
use crate::statevector::{gates, Circuit, Control, Gate, Step};
use crate::{Error, Result};

const IDENTITY_TOL: f64 = 1e-12;

/// Largest support of a compiled gate.
pub const MAX_COMPILED_SUPPORT: usize = 2;

/// `matrix` on `support` (first entry least significant) rewritten on `onto`.
pub fn embed(matrix: &CMatrix, support: &[usize], onto: &[usize]) -> CMatrix {
    let pos: Vec<usize> = support
        .iter()
        .map(|q| {
            onto.iter()
                .position(|p| p == q)
                .expect("support contained in target set")
        })
        .collect();
    let rest_mask: usize = (0..onto.len())
        .filter(|i| !pos.contains(i))
        .fold(0, |acc, i| acc | 1 << i);
    let dim = 1 << onto.len();
    let local = |i: usize| {
        pos.iter()
            .enumerate()
            .fold(0, |acc, (j, &p)| acc | (((i >> p) & 1) << j))
    };
    let mut out = CMatrix::zeros(dim, dim);
    for row in 0..dim {
        for col in 0..dim {
            if row & rest_mask == col & rest_mask {
                out[(row, col)] = matrix[(local(row), local(col))];
            }
        }
    }
    out
}

/// Lowers every gate of a unitary circuit to gates with support `<= 2`.
pub fn compile_two_local(circuit: &Circuit) -> Result<Vec<Gate>> {
    let mut out = Vec::new();
    for step in circuit.steps() {
        match step {
            Step::Gate(g) => lower(g.matrix(), g.targets(), g.controls(), &mut out)?,
            Step::Project { .. } => {
                return Err(Error::Argument(
                    "cannot compile a post-selecting circuit".into(),
                ))
            }
        }
    }
    Ok(out)
}

fn lower(u: &CMatrix, targets: &[usize], controls: &[Control], out: &mut Vec<Gate>) -> Result<()> {
    if targets.len() + controls.len() <= MAX_COMPILED_SUPPORT {
        out.push(Gate::new(u.clone(), targets.to_vec(), controls.to_vec())?);
        return Ok(());
    }
    if targets.len() != 1 {
        return Err(Error::Argument(format!(
            "cannot lower a controlled {}-target gate",
            targets.len()
        )));
    }
    let (last, rest) = controls.split_last().expect("at least two controls");
    let v = sqrt_unitary_2x2(u);
    let v_dag = v.adjoint();
    lower(&v, targets, &[*last], out)?;
    lower(&gates::x(), &[last.qubit], rest, out)?;
    lower(&v_dag, targets, &[*last], out)?;
    lower(&gates::x(), &[last.qubit], rest, out)?;
    lower(&v, targets, rest, out)
}

/// Merges each gate into its predecessor while the union stays two-local,
/// dropping products that reduce to the identity.
pub fn fuse(gates_in: &[Gate]) -> Result<Vec<Gate>> {
    let mut out: Vec<(Vec<usize>, CMatrix)> = Vec::new();
    for g in gates_in {
        let support = g.support();
        if support.len() > MAX_COMPILED_SUPPORT {
            return Err(Error::Argument(format!("gate on {} qubits", support.len())));
        }
        let local = g.local_matrix();
        if let Some((prev_support, prev)) = out.last_mut() {
            let mut union = prev_support.clone();
            for &q in &support {
                if !union.contains(&q) {
                    union.push(q);
                }
            }
            if union.len() <= MAX_COMPILED_SUPPORT {
                let merged = embed(&local, &support, &union) * embed(prev, prev_support, &union);
                *prev_support = union;
                *prev = merged;
                if max_abs_diff(prev, &identity(prev.nrows())) < IDENTITY_TOL {
                    out.pop();
                }
                continue;
            }
        }
        out.push((support, local));
    }
    out.into_iter()
        .map(|(support, m)| Gate::new(m, support, vec![]))
        .collect()
}

/// Compiles and fuses: the elementary gate list of a unitary circuit.
pub fn elementary_gates(circuit: &Circuit) -> Result<Vec<Gate>> {
    fuse(&compile_two_local(circuit)?)
}
