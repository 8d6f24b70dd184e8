//! Restarted Lanczos for the bottom of a Hermitian spectrum.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::linalg::{C64, ZERO};

/// Iteration limits for [`lowest_eigenpair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    pub krylov: usize,
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov: 80,
            tol: 1e-9,
            max_restarts: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub matvecs: usize,
    pub converged: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn project_out(v: &mut [C64], basis: &[&[C64]]) {
    for b in basis {
        let p = dot(b, v);
        axpy(v, -p, b);
    }
}

/// Smallest eigenvalue of `A` on the complement of the orthonormal vectors
/// `deflate`, restarting from the current Ritz vector until the residual
/// `‖Ax - θx‖` drops below `tol`.
pub fn lowest_eigenpair<F>(
    apply: F,
    start: &[C64],
    deflate: &[&[C64]],
    opts: LanczosOptions,
) -> Eigenpair
where
    F: Fn(&[C64], &mut [C64]),
{
    let dim = start.len();
    let mut x = start.to_vec();
    let mut matvecs = 0;
    let mut w = vec![ZERO; dim];
    let mut best = Eigenpair {
        value: f64::NAN,
        vector: Vec::new(),
        residual: f64::INFINITY,
        matvecs: 0,
        converged: false,
    };
    for _ in 0..=opts.max_restarts {
        project_out(&mut x, deflate);
        let nx = norm(&x);
        if nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|z| *z /= nx);
        let mut basis: Vec<Vec<C64>> = vec![x.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..opts.krylov.min(dim) {
            apply(&basis[j], &mut w);
            matvecs += 1;
            project_out(&mut w, deflate);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            axpy(&mut w, C64::new(-a, 0.0), &basis[j]);
            if j > 0 {
                axpy(&mut w, C64::new(-beta[j - 1], 0.0), &basis[j - 1]);
            }
            for _ in 0..2 {
                for q in &basis {
                    let p = dot(q, &w);
                    axpy(&mut w, -p, q);
                }
                project_out(&mut w, deflate);
            }
            let b = norm(&w);
            if b < 1e-13 || j + 1 == opts.krylov.min(dim) {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
        let m = alpha.len();
        let tri = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        let (k, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty tridiagonal");
        let mut ritz = vec![ZERO; dim];
        for (i, q) in basis.iter().take(m).enumerate() {
            axpy(&mut ritz, C64::new(eig.eigenvectors[(i, k)], 0.0), q);
        }
        let nr = norm(&ritz);
        ritz.iter_mut().for_each(|z| *z /= nr);
        apply(&ritz, &mut w);
        matvecs += 1;
        project_out(&mut w, deflate);
        axpy(&mut w, C64::new(-theta, 0.0), &ritz);
        let residual = norm(&w);
        best = Eigenpair {
            value: theta,
            vector: ritz.clone(),
            residual,
            matvecs,
            converged: residual < opts.tol,
        };
        if best.converged {
            break;
        }
        x = ritz;
    }
    best.matvecs = matvecs;
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, hermitian_eigenvalues, CMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(dim: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&a + a.adjoint()).map(|z| z * 0.5)
    }

    fn matvec(m: &CMatrix) -> impl Fn(&[C64], &mut [C64]) + '_ {
        move |v, out| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (0..v.len()).map(|j| m[(i, j)] * v[j]).sum();
            }
        }
    }

    #[test]
    fn lowest_matches_dense() {
        let m = random_hermitian(60, 3);
        let exact = hermitian_eigenvalues(&m)[0];
        let start = vec![c(1.0, 0.0); 60];
        let opts = LanczosOptions {
            krylov: 20,
            tol: 1e-10,
            max_restarts: 500,
        };
        let e = lowest_eigenpair(matvec(&m), &start, &[], opts);
        assert!(e.converged);
        assert!((e.value - exact).abs() < 1e-9, "{} vs {exact}", e.value);
    }

    #[test]
    fn deflation_gives_second_eigenvalue() {
        let m = random_hermitian(40, 9);
        let (vals, vecs) = crate::linalg::hermitian_eigen(&m);
        let ground: Vec<C64> = vecs.column(0).iter().copied().collect();
        let start = vec![c(0.3, 0.1); 40];
        let e = lowest_eigenpair(matvec(&m), &start, &[&ground], LanczosOptions::default());
        assert!((e.value - vals[1]).abs() < 1e-9);
    }
}
