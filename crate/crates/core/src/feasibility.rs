//! Does a family of pairwise outcome tables `P(aᵢ, b_j)` arise as marginals of
//! one joint distribution over `(a₁, a₂, b₁, b₂) ∈ {±1}⁴`?
//!
//! Decided by a phase-one simplex on the 16 deterministic strategies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;
const FEASIBILITY_TOL: f64 = 1e-9;

/// `P(a, b)` for one setting pair, indexed `[ia][ib]` with index 0 for `+1`
/// and 1 for `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTable(pub [[f64; 2]; 2]);

impl PairTable {
    pub fn from_correlation(e: f64) -> Self {
        let same = (1.0 + e) / 4.0;
        let diff = (1.0 - e) / 4.0;
        Self([[same, diff], [diff, same]])
    }

    pub fn total(&self) -> f64 {
        self.0.iter().flatten().sum()
    }

    pub fn correlation(&self) -> f64 {
        self.0[0][0] + self.0[1][1] - self.0[0][1] - self.0[1][0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().flatten().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidDistribution("negative cell".into()));
        }
        if (self.total() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "table sums to {}",
                self.total()
            )));
        }
        Ok(())
    }
}

/// Result of the phase-one linear program.
#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    /// Minimum total artificial mass; zero iff the system is feasible.
    pub infeasibility: f64,
    /// A non-negative solution of `A x = b` when feasible.
    pub solution: Option<Vec<f64>>,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        self.solution.is_some()
    }
}

/// Find `x ≥ 0` with `A x = b`, or report the least total violation.
pub fn find_nonnegative_solution(a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    // tableau rows: constraints, then the phase-one objective
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = sign * b[i];
    }
    for i in 0..m {
        for j in 0..n {
            t[m][j] -= t[i][j];
        }
        t[m][width - 1] -= t[i][width - 1];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        // Bland's rule: lowest-index improving column
        let Some(col) = (0..n + m).find(|&j| t[m][j] < -EPS) else {
            break;
        };
        let mut pivot: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][col] > EPS {
                let ratio = t[i][width - 1] / t[i][col];
                let better = match pivot {
                    None => true,
                    Some((r, best)) => {
                        ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[r])
                    }
                };
                if better {
                    pivot = Some((i, ratio));
                }
            }
        }
        // unbounded is impossible: the phase-one objective is bounded below by 0
        let Some((row, _)) = pivot else { break };
        let p = t[row][col];
        for v in t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = t[row].clone();
        for (i, r) in t.iter_mut().enumerate() {
            if i != row && r[col].abs() > 0.0 {
                let f = r[col];
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        basis[row] = col;
    }

    let infeasibility = -t[m][width - 1];
    if infeasibility > FEASIBILITY_TOL {
        return LpOutcome {
            infeasibility,
            solution: None,
        };
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][width - 1].max(0.0);
        }
    }
    LpOutcome {
        infeasibility: infeasibility.max(0.0),
        solution: Some(x),
    }
}

/// The 16 deterministic strategies `(a₁, a₂, b₁, b₂)` in canonical order.
pub fn deterministic_strategies() -> Vec<[i8; 4]> {
    let mut out = Vec::with_capacity(16);
    for bits in 0..16u8 {
        let v = |k: u8| if bits >> (3 - k) & 1 == 0 { 1 } else { -1 };
        out.push([v(0), v(1), v(2), v(3)]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub infeasibility: f64,
    /// Joint weights over [`deterministic_strategies`] when one exists.
    pub joint: Option<Vec<f64>>,
}

impl Embedding {
    pub fn exists(&self) -> bool {
        self.joint.is_some()
    }
}

/// Search for a joint distribution over `{±1}⁴` whose `(Aᵢ, B_j)` marginals
/// equal `tables[i-1][j-1]`.
pub fn embed_pairwise(tables: &[[PairTable; 2]; 2]) -> Result<Embedding> {
    for row in tables {
        for t in row {
            t.validate()?;
        }
    }
    let strategies = deterministic_strategies();
    let mut a = Vec::with_capacity(16);
    let mut b = Vec::with_capacity(16);
    for i in 0..2 {
        for j in 0..2 {
            for (ia, va) in [1i8, -1].into_iter().enumerate() {
                for (ib, vb) in [1i8, -1].into_iter().enumerate() {
                    a.push(
                        strategies
                            .iter()
                            .map(|w| f64::from(u8::from(w[i] == va && w[2 + j] == vb)))
                            .collect(),
                    );
                    b.push(tables[i][j].0[ia][ib]);
                }
            }
        }
    }
    let lp = find_nonnegative_solution(&a, &b);
    Ok(Embedding {
        infeasibility: lp.infeasibility,
        joint: lp.solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::derive_stream;
    use std::f64::consts::PI;

    /// Independent criterion: with consistent marginals, a joint exists iff
    /// all eight CHSH expressions are within ±2.
    fn chsh_forms_ok(t: &[[PairTable; 2]; 2]) -> bool {
        let e = |i: usize, j: usize| t[i][j].correlation();
        let terms = [e(0, 0), e(0, 1), e(1, 0), e(1, 1)];
        (0..4).all(|k| {
            let s: f64 = terms
                .iter()
                .enumerate()
                .map(|(m, v)| if m == k { -v } else { *v })
                .sum();
            s.abs() <= 2.0 + 1e-9
        })
    }

    fn correlation_tables(e: [f64; 4]) -> [[PairTable; 2]; 2] {
        [
            [
                PairTable::from_correlation(e[0]),
                PairTable::from_correlation(e[1]),
            ],
            [
                PairTable::from_correlation(e[2]),
                PairTable::from_correlation(e[3]),
            ],
        ]
    }

    #[test]
    fn quantum_tsirelson_tables_do_not_embed() {
        let angles = [
            (0.0, PI / 8.0),
            (0.0, 3.0 * PI / 8.0),
            (PI / 4.0, PI / 8.0),
            (PI / 4.0, 3.0 * PI / 8.0),
        ];
        let e = angles.map(|(a, b): (f64, f64)| -(2.0 * (a - b)).cos());
        let t = correlation_tables(e);
        let emb = embed_pairwise(&t).unwrap();
        assert!(!emb.exists());
        assert!(emb.infeasibility > 1e-3);
        assert!(!chsh_forms_ok(&t));
    }

    #[test]
    fn witness_reproduces_marginals() {
        let t = correlation_tables([0.5, -0.5, 0.5, 0.5]);
        let emb = embed_pairwise(&t).unwrap();
        let joint = emb.joint.expect("feasible");
        assert!((joint.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (i, row) in t.iter().enumerate() {
            for (j, table) in row.iter().enumerate() {
                let e: f64 = deterministic_strategies()
                    .iter()
                    .zip(&joint)
                    .map(|(w, p)| f64::from(w[i] * w[2 + j]) * p)
                    .sum();
                assert!((e - table.correlation()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lp_agrees_with_chsh_criterion_on_random_correlations() {
        let mut rng = derive_stream(1, "lp/random");
        let mut seen = [0, 0];
        for _ in 0..400 {
            let e = [0; 4].map(|_| 2.0 * rng.uniform() - 1.0);
            let t = correlation_tables(e);
            let expected = chsh_forms_ok(&t);
            seen[usize::from(expected)] += 1;
            assert_eq!(embed_pairwise(&t).unwrap().exists(), expected, "{e:?}");
        }
        assert!(seen[0] > 10 && seen[1] > 10);
    }

    #[test]
    fn simple_systems() {
        let a = vec![vec![1.0, 1.0]];
        assert!(find_nonnegative_solution(&a, &[1.0]).is_feasible());
        assert!(!find_nonnegative_solution(&a, &[-1.0]).is_feasible());
        let a = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let lp = find_nonnegative_solution(&a, &[1.0, 2.0]);
        assert!(!lp.is_feasible());
        assert!((lp.infeasibility - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_tables_rejected() {
        let mut t = correlation_tables([0.0; 4]);
        t[0][0].0[0][0] = 0.9;
        assert!(embed_pairwise(&t).is_err());
    }
}
