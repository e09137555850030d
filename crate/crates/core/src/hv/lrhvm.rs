//! Local realistic model: every pair carries predetermined outcomes for all
//! four settings, i.e. one joint distribution over `ω = (a₁, a₂, b₁, b₂)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hv::event::{Event, Outcome};
use crate::sampling::{par_blocks, DiscreteDistribution, RngStream, NORMALIZATION_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeAlphabet {
    /// Components in `{-1, +1}`: 16 points.
    Binary,
    /// Components in `{-1, 0, +1}`, allowing missing clicks: 81 points.
    WithNoClick,
}

impl OutcomeAlphabet {
    fn values(self) -> &'static [i8] {
        match self {
            OutcomeAlphabet::Binary => &[-1, 1],
            OutcomeAlphabet::WithNoClick => &[-1, 0, 1],
        }
    }

    /// All `ω` in canonical order.
    pub fn sample_space(self) -> Vec<[i8; 4]> {
        let v = self.values();
        let mut out = Vec::with_capacity(v.len().pow(4));
        for &a1 in v {
            for &a2 in v {
                for &b1 in v {
                    for &b2 in v {
                        out.push([a1, a2, b1, b2]);
                    }
                }
            }
        }
        out
    }
}

/// `P(a₁, a₂, b₁, b₂)` over the full sample space of the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcomeTable {
    alphabet: OutcomeAlphabet,
    dist: DiscreteDistribution<[i8; 4]>,
}

impl JointOutcomeTable {
    /// Unlisted points get probability zero.
    pub fn new(alphabet: OutcomeAlphabet, entries: &BTreeMap<[i8; 4], f64>) -> Result<Self> {
        let space = alphabet.sample_space();
        if let Some(k) = entries.keys().find(|k| !space.contains(k)) {
            return Err(Error::InvalidSpec(format!(
                "outcome {k:?} outside the {alphabet:?} sample space"
            )));
        }
        let weights = space
            .iter()
            .map(|w| entries.get(w).copied().unwrap_or(0.0))
            .collect();
        Ok(Self {
            alphabet,
            dist: DiscreteDistribution::new(space, weights)?,
        })
    }

    pub fn uniform(alphabet: OutcomeAlphabet) -> Self {
        let space = alphabet.sample_space();
        Self {
            alphabet,
            dist: DiscreteDistribution::uniform(space).expect("non-empty"),
        }
    }

    pub fn point_mass(omega: [i8; 4]) -> Result<Self> {
        let alphabet = if omega.contains(&0) {
            OutcomeAlphabet::WithNoClick
        } else {
            OutcomeAlphabet::Binary
        };
        Self::new(alphabet, &BTreeMap::from([(omega, 1.0)]))
    }

    /// Flat-Dirichlet random table.
    pub fn random(alphabet: OutcomeAlphabet, rng: &mut RngStream) -> Self {
        let space = alphabet.sample_space();
        let w: Vec<f64> = space.iter().map(|_| -(1.0 - rng.uniform()).ln()).collect();
        Self {
            alphabet,
            dist: DiscreteDistribution::from_unnormalized(space, w).expect("positive weights"),
        }
    }

    pub fn alphabet(&self) -> OutcomeAlphabet {
        self.alphabet
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i8; 4], f64)> {
        self.dist.iter()
    }

    /// Marginal `P(aᵢ, b_j)` obtained by summing out the other two components.
    pub fn marginal(&self, i: u8, j: u8) -> Result<BTreeMap<(i8, i8), f64>> {
        let (ia, ib) = component_indices(i, j)?;
        let mut m = BTreeMap::new();
        for (w, p) in self.iter() {
            *m.entry((w[ia], w[ib])).or_insert(0.0) += p;
        }
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        let total: f64 = self.dist.weights().iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!("table sums to {total}")));
        }
        Ok(())
    }
}

fn component_indices(i: u8, j: u8) -> Result<(usize, usize)> {
    if !(1..=2).contains(&i) || !(1..=2).contains(&j) {
        return Err(Error::InvalidSpec(format!(
            "setting indices ({i}, {j}) not in {{1, 2}}"
        )));
    }
    Ok((usize::from(i - 1), usize::from(j + 1)))
}

/// `E(AᵢB_j) = Σ_ω aᵢ b_j P(ω)`.
pub fn lrhvm_expectation(table: &JointOutcomeTable, i: u8, j: u8) -> Result<f64> {
    let (ia, ib) = component_indices(i, j)?;
    Ok(table
        .iter()
        .map(|(w, p)| f64::from(w[ia] * w[ib]) * p)
        .sum())
}

/// CHSH combination of the four exact expectations.
pub fn chsh_exact_lrhvm(table: &JointOutcomeTable) -> f64 {
    table.check().expect("validated table");
    let e = |i, j| lrhvm_expectation(table, i, j).expect("valid indices");
    (e(1, 1) - e(1, 2)).abs() + (e(2, 1) + e(2, 2)).abs()
}

/// Draw `n` pairs, each with a full predetermined `ω`, and reveal only
/// `(aᵢ, b_j)`. Time tags are the trial index.
pub fn lrhvm_simulate(
    table: &JointOutcomeTable,
    settings: (u8, u8),
    n: u64,
    rng: &RngStream,
) -> Result<(Vec<Event>, Vec<Event>)> {
    let (i, j) = settings;
    let (ia, ib) = component_indices(i, j)?;
    if n == 0 {
        return Err(Error::InvalidSpec("n must be at least 1".into()));
    }
    let pairs = par_blocks(n, rng, |range, s| {
        range
            .map(|t| {
                let w = table.dist.sample(s);
                let ev = |setting, v: i8| Event {
                    trial: t,
                    time_tag: t as f64,
                    setting,
                    outcome: Outcome::from_value(v).expect("alphabet value"),
                };
                (ev(i, w[ia]), ev(j, w[ib]))
            })
            .collect()
    });
    Ok(pairs.into_iter().unzip())
}
