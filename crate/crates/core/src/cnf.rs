//! 2-CNF formulas, brute-force model counting, and the clause-violation
//! Hamiltonian with its normalized density matrix.
//!
//! Assignment convention: in an assignment index `x` over `n` variables,
//! variable `v` (0-based) is bit `n - 1 - v`, so `x1` is the most
//! significant bit and the bitstring reads `x1 x2 ... xn`.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::statevector::DensityMatrix;
use crate::{Error, Result};

/// Largest variable count the exhaustive counters accept.
pub const MAX_BRUTE_FORCE_VARS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self {
            var,
            negated: false,
        }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, negated: true }
    }

    /// Truth value under assignment `x`.
    pub fn eval(&self, x: usize, num_vars: usize) -> bool {
        var_value(x, self.var, num_vars) != self.negated
    }

    fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }
}

/// Value of variable `var` in assignment `x`.
pub fn var_value(x: usize, var: usize, num_vars: usize) -> bool {
    (x >> (num_vars - 1 - var)) & 1 == 1
}

/// A width-2 clause `a ∨ b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    pub a: Literal,
    pub b: Literal,
}

impl Clause {
    pub fn new(a: Literal, b: Literal) -> Self {
        Self { a, b }
    }

    pub fn is_tautology(&self) -> bool {
        self.a.var == self.b.var && self.a.negated != self.b.negated
    }

    pub fn satisfied_by(&self, x: usize, num_vars: usize) -> bool {
        self.a.eval(x, num_vars) || self.b.eval(x, num_vars)
    }

    /// The unique local pattern `(var, bit)` that falsifies the clause:
    /// a positive literal is falsified by 0 and a negated one by 1.
    /// Repeated variables collapse to one entry; tautologies have none.
    pub fn unsat_pattern(&self) -> Option<Vec<(usize, bool)>> {
        if self.is_tautology() {
            return None;
        }
        let first = (self.a.var, self.a.negated);
        if self.a.var == self.b.var {
            Some(vec![first])
        } else {
            Some(vec![first, (self.b.var, self.b.negated)])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    /// Validates variable indices and the `#C <= n^3` size bound.
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        Self::with_clause_limit(num_vars, clauses, num_vars.pow(3))
    }

    pub fn with_clause_limit(
        num_vars: usize,
        clauses: Vec<Clause>,
        max_clauses: usize,
    ) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::Format("formula needs at least one variable".into()));
        }
        if clauses.is_empty() {
            return Err(Error::Format("formula needs at least one clause".into()));
        }
        if clauses.len() > max_clauses {
            return Err(Error::Format(format!(
                "{} clauses exceeds the limit of {max_clauses}",
                clauses.len()
            )));
        }
        for c in &clauses {
            for lit in [c.a, c.b] {
                if lit.var >= num_vars {
                    return Err(Error::Format(format!(
                        "variable {} out of range for {num_vars} variables",
                        lit.var + 1
                    )));
                }
            }
        }
        Ok(Self { num_vars, clauses })
    }

    /// `(x̄1 ∨ x2) ∧ (x1 ∨ x̄3)`.
    pub fn example() -> Self {
        Self::new(
            3,
            vec![
                Clause::new(Literal::neg(0), Literal::pos(1)),
                Clause::new(Literal::pos(0), Literal::neg(2)),
            ],
        )
        .expect("example formula is valid")
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// True when every clause mentions two distinct variables.
    pub fn has_distinct_variables(&self) -> bool {
        self.clauses.iter().all(|c| c.a.var != c.b.var)
    }

    pub fn eval(&self, x: usize) -> bool {
        self.clauses
            .iter()
            .all(|c| c.satisfied_by(x, self.num_vars))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            let _ = writeln!(out, "{} {} 0", c.a.to_dimacs(), c.b.to_dimacs());
        }
        out
    }

    /// Same formula with variable `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let map = |l: Literal| Literal {
            var: perm[l.var],
            negated: l.negated,
        };
        Self::with_clause_limit(
            self.num_vars,
            self.clauses
                .iter()
                .map(|c| Clause::new(map(c.a), map(c.b)))
                .collect(),
            usize::MAX,
        )
    }
}

/// Uniformly random formula whose clauses use two distinct variables.
pub fn random_formula<R: Rng + ?Sized>(
    rng: &mut R,
    num_vars: usize,
    num_clauses: usize,
) -> Result<CnfFormula> {
    if num_vars < 2 {
        return Err(Error::Argument(
            "random 2-CNF needs at least two variables".into(),
        ));
    }
    let clauses = (0..num_clauses)
        .map(|_| {
            let i = rng.gen_range(0..num_vars);
            let mut j = rng.gen_range(0..num_vars - 1);
            if j >= i {
                j += 1;
            }
            Clause::new(
                Literal {
                    var: i,
                    negated: rng.gen(),
                },
                Literal {
                    var: j,
                    negated: rng.gen(),
                },
            )
        })
        .collect();
    CnfFormula::with_clause_limit(num_vars, clauses, usize::MAX)
}

/// Parses DIMACS CNF restricted to width-2 clauses; literals are 1-based.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut pending: Vec<i64> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::Format(format!(
                    "line {}: duplicate header",
                    lineno + 1
                )));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(Error::Format(format!(
                    "line {}: malformed header {line:?}",
                    lineno + 1
                )));
            }
            let vars = parts[2]
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad variable count", lineno + 1)))?;
            let count = parts[3]
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad clause count", lineno + 1)))?;
            header = Some((vars, count));
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(Error::Format(format!(
                "line {}: clause before header",
                lineno + 1
            )));
        };
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad literal {tok:?}", lineno + 1)))?;
            if lit != 0 {
                if lit.unsigned_abs() as usize > num_vars {
                    return Err(Error::Format(format!(
                        "line {}: literal {lit} exceeds {num_vars} variables",
                        lineno + 1
                    )));
                }
                pending.push(lit);
                continue;
            }
            if pending.len() != 2 {
                return Err(Error::Format(format!(
                    "line {}: clause of width {} (only width 2 is supported)",
                    lineno + 1,
                    pending.len()
                )));
            }
            let to_lit = |l: i64| Literal {
                var: l.unsigned_abs() as usize - 1,
                negated: l < 0,
            };
            clauses.push(Clause::new(to_lit(pending[0]), to_lit(pending[1])));
            pending.clear();
        }
    }
    let Some((num_vars, declared)) = header else {
        return Err(Error::Format("missing `p cnf` header".into()));
    };
    if !pending.is_empty() {
        return Err(Error::Format("last clause is not terminated by 0".into()));
    }
    if clauses.len() != declared {
        return Err(Error::Format(format!(
            "header declares {declared} clauses, found {}",
            clauses.len()
        )));
    }
    CnfFormula::new(num_vars, clauses)
}

/// Exact number of satisfying assignments by enumeration.
pub fn brute_force_count(f: &CnfFormula) -> Result<u64> {
    if f.num_vars > MAX_BRUTE_FORCE_VARS {
        return Err(Error::Scale(format!(
            "{} variables exceeds the enumeration limit of {MAX_BRUTE_FORCE_VARS}",
            f.num_vars
        )));
    }
    Ok((0..1usize << f.num_vars).filter(|&x| f.eval(x)).count() as u64)
}

/// `H = Σ_x N_x |x><x|`, kept as exact integers together with the projector
/// terms it was summed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalHamiltonian {
    num_vars: usize,
    num_clauses: usize,
    violations: Vec<u32>,
    terms: Vec<Vec<(usize, bool)>>,
}

impl DiagonalHamiltonian {
    /// The zero operator: every assignment is a ground state.
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            num_clauses: 0,
            violations: vec![0; 1 << num_vars],
            terms: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.num_clauses
    }

    pub fn violations(&self) -> &[u32] {
        &self.violations
    }

    /// Projector terms `|s_i s_j><s_i s_j|` as `(var, bit)` patterns.
    pub fn terms(&self) -> &[Vec<(usize, bool)>] {
        &self.terms
    }

    pub fn trace(&self) -> u64 {
        self.violations.iter().map(|&v| v as u64).sum()
    }

    /// `2^{n-2} #C`, the trace when every clause has two distinct variables.
    pub fn expected_trace(&self) -> Option<u64> {
        (self.num_vars >= 2).then(|| (1u64 << (self.num_vars - 2)) * self.num_clauses as u64)
    }

    pub fn max_violation(&self) -> u32 {
        self.violations.iter().copied().max().unwrap_or(0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.violations.iter().map(|&v| v as f64).collect()
    }

    /// CSV with columns `assignment,bitstring,violations`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("assignment,bitstring,violations\n");
        for (x, v) in self.violations.iter().enumerate() {
            let _ = writeln!(out, "{x},{:0width$b},{v}", x, width = self.num_vars);
        }
        out
    }
}

/// Sums one projector per clause onto its falsifying local pattern.
pub fn build_hamiltonian(f: &CnfFormula) -> DiagonalHamiltonian {
    let n = f.num_vars;
    let mut violations = vec![0u32; 1 << n];
    let mut terms = Vec::with_capacity(f.num_clauses());
    for clause in &f.clauses {
        let Some(pattern) = clause.unsat_pattern() else {
            continue;
        };
        let mask: usize = pattern.iter().map(|&(v, _)| 1 << (n - 1 - v)).sum();
        let want: usize = pattern
            .iter()
            .filter(|&&(_, bit)| bit)
            .map(|&(v, _)| 1 << (n - 1 - v))
            .sum();
        for (x, slot) in violations.iter_mut().enumerate() {
            if x & mask == want {
                *slot += 1;
            }
        }
        terms.push(pattern);
    }
    DiagonalHamiltonian {
        num_vars: n,
        num_clauses: f.num_clauses(),
        violations,
        terms,
    }
}

/// `ρ = H / Tr(H)`.
pub fn hamiltonian_to_density(h: &DiagonalHamiltonian) -> Result<DensityMatrix> {
    let tr = h.trace();
    if tr == 0 {
        return Err(Error::Degenerate {
            reason: "every assignment satisfies the formula, so Tr(H) = 0".into(),
            trivial_count: 1u64 << h.num_vars,
        });
    }
    let values: Vec<f64> = h.violations.iter().map(|&v| v as f64 / tr as f64).collect();
    DensityMatrix::from_diagonal(&values)
}

/// `λ* = 1 / 2^{n-2}`.
pub fn lambda_star(num_vars: usize) -> f64 {
    (2.0 - num_vars as f64).exp2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: evaluate the clause logic directly.
    fn violation_oracle(f: &CnfFormula) -> Vec<u32> {
        (0..1usize << f.num_vars())
            .map(|x| {
                f.clauses()
                    .iter()
                    .filter(|c| !c.satisfied_by(x, f.num_vars()))
                    .count() as u32
            })
            .collect()
    }

    #[test]
    fn parses_example() {
        let f = parse_dimacs("p cnf 3 2\n-1 2 0\n1 -3 0\n").unwrap();
        assert_eq!(f, CnfFormula::example());
    }

    #[test]
    fn parses_single_clause_with_comments() {
        let f = parse_dimacs("c hello\np cnf 2 1\n1 2 0\n").unwrap();
        assert_eq!(
            f.clauses(),
            &[Clause::new(Literal::pos(0), Literal::pos(1))]
        );
    }

    #[test]
    fn rejects_malformed() {
        for text in [
            "p cnf 2 1\n1 2 3 0\n",
            "p cnf 2 1\n1 0\n",
            "p cnf 2\n1 2 0\n",
            "p dnf 2 1\n1 2 0\n",
            "1 2 0\n",
            "p cnf 2 2\n1 2 0\n",
            "p cnf 2 1\n1 5 0\n",
            "p cnf 2 1\n1 2\n",
            "p cnf 2 1\n1 x 0\n",
        ] {
            assert!(
                matches!(parse_dimacs(text), Err(Error::Format(_))),
                "{text:?}"
            );
        }
    }

    #[test]
    fn clause_may_span_lines() {
        let f = parse_dimacs("p cnf 2 1\n1\n-2 0\n").unwrap();
        assert_eq!(
            f.clauses()[0],
            Clause::new(Literal::pos(0), Literal::neg(1))
        );
    }

    #[test]
    fn clause_limit() {
        let clauses = vec![Clause::new(Literal::pos(0), Literal::pos(1)); 9];
        assert!(CnfFormula::new(2, clauses.clone()).is_err());
        assert!(CnfFormula::with_clause_limit(2, clauses, 9).is_ok());
    }

    #[test]
    fn counts() {
        // enumerated by hand: satisfying assignments 000, 010, 110, 111
        assert_eq!(brute_force_count(&CnfFormula::example()).unwrap(), 4);
        let or = CnfFormula::new(2, vec![Clause::new(Literal::pos(0), Literal::pos(1))]).unwrap();
        assert_eq!(brute_force_count(&or).unwrap(), 3);
        let taut = CnfFormula::new(3, vec![Clause::new(Literal::pos(0), Literal::neg(0))]).unwrap();
        assert_eq!(brute_force_count(&taut).unwrap(), 8);
        let big = CnfFormula::new(25, vec![Clause::new(Literal::pos(0), Literal::pos(1))]).unwrap();
        assert!(matches!(brute_force_count(&big), Err(Error::Scale(_))));
    }

    #[test]
    fn example_hamiltonian() {
        let h = build_hamiltonian(&CnfFormula::example());
        assert_eq!(h.violations(), &[0, 1, 0, 1, 1, 1, 0, 0]);
        assert_eq!(h.trace(), 4);
        assert_eq!(h.expected_trace(), Some(4));
        assert_eq!(
            h.terms(),
            &[vec![(0, true), (1, false)], vec![(0, false), (2, true)]]
        );
    }

    #[test]
    fn or_hamiltonian_and_density() {
        let or = CnfFormula::new(2, vec![Clause::new(Literal::pos(0), Literal::pos(1))]).unwrap();
        let h = build_hamiltonian(&or);
        assert_eq!(h.violations(), &[1, 0, 0, 0]);
        let rho = hamiltonian_to_density(&h).unwrap();
        assert_eq!(rho.entries()[(0, 0)].re, 1.0);
        assert_eq!(rho.trace(), 1.0);
    }

    #[test]
    fn example_density() {
        let rho = hamiltonian_to_density(&build_hamiltonian(&CnfFormula::example())).unwrap();
        let diag: Vec<f64> = (0..8).map(|k| rho.entries()[(k, k)].re).collect();
        assert_eq!(diag, vec![0.0, 0.25, 0.0, 0.25, 0.25, 0.25, 0.0, 0.0]);
        assert!(diag.iter().all(|&d| d <= lambda_star(3)));
        assert_eq!(lambda_star(3), 0.5);
    }

    #[test]
    fn tautology_is_degenerate() {
        let taut = CnfFormula::new(2, vec![Clause::new(Literal::pos(1), Literal::neg(1))]).unwrap();
        let h = build_hamiltonian(&taut);
        assert_eq!(h.trace(), 0);
        match hamiltonian_to_density(&h) {
            Err(Error::Degenerate { trivial_count, .. }) => assert_eq!(trivial_count, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn repeated_variable_clause() {
        let f = CnfFormula::new(2, vec![Clause::new(Literal::pos(0), Literal::pos(0))]).unwrap();
        assert_eq!(
            build_hamiltonian(&f).violations(),
            &violation_oracle(&f)[..]
        );
        assert_eq!(build_hamiltonian(&f).violations(), &[1, 1, 0, 0]);
    }

    #[test]
    fn csv_export() {
        let csv = build_hamiltonian(&CnfFormula::example()).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "assignment,bitstring,violations");
        assert_eq!(lines[2], "1,001,1");
        assert_eq!(lines.len(), 9);
    }

    #[test]
    fn dimacs_roundtrip_of_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_formula(&mut rng, 6, 10).unwrap();
        assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
    }

    proptest! {
        #[test]
        fn ground_space_counts_models(seed in any::<u64>(), n in 2usize..=12, c in 1usize..=20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_formula(&mut rng, n, c).unwrap();
            let h = build_hamiltonian(&f);
            let zeros = h.violations().iter().filter(|&&v| v == 0).count() as u64;
            prop_assert_eq!(zeros, brute_force_count(&f).unwrap());
            prop_assert_eq!(h.violations(), &violation_oracle(&f)[..]);
            prop_assert_eq!(Some(h.trace()), h.expected_trace());
            prop_assert!(h.max_violation() as usize <= c);
        }

        #[test]
        fn relabeling_permutes_violations(seed in any::<u64>(), n in 2usize..=7, c in 1usize..=10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_formula(&mut rng, n, c).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let g = f.relabeled(&perm).unwrap();
            let hf = build_hamiltonian(&f);
            let hg = build_hamiltonian(&g);
            for x in 0..1usize << n {
                // bit for variable v in x moves to variable perm[v] in y
                let y = (0..n).fold(0usize, |acc, v| {
                    if var_value(x, v, n) { acc | 1 << (n - 1 - perm[v]) } else { acc }
                });
                prop_assert_eq!(hf.violations()[x], hg.violations()[y]);
            }
        }
    }
}
