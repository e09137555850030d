//! A single sample space for the whole randomized experiment: each elementary
//! event records the chosen settings and which detector fired on each side.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{embed_pairwise, Embedding, PairTable};
use crate::hv::event::Side;
use crate::inference::{CorrelationEstimate, LocalRun};
use crate::quantum::{joint_outcome_probabilities, ChshAngles, DensityMatrix};
use crate::sampling::{par_blocks, DiscreteDistribution, RngStream};

/// One trial. Click slots are indexed `(pbs - 1) * 2 + (detector - 1)`;
/// detector 1 means `+1` and detector 2 means `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub setting_a: u8,
    pub setting_b: u8,
    pub clicks_a: [bool; 4],
    pub clicks_b: [bool; 4],
}

fn slot(setting: u8, outcome: i8) -> usize {
    usize::from(setting - 1) * 2 + usize::from(outcome < 0)
}

fn side_value(setting: u8, clicks: &[bool; 4], query: u8) -> i8 {
    if setting != query {
        return 0;
    }
    let base = usize::from(setting - 1) * 2;
    if clicks[base] {
        1
    } else {
        -1
    }
}

fn check_side(setting: u8, clicks: &[bool; 4]) -> Result<()> {
    if !(1..=2).contains(&setting) {
        return Err(Error::InvalidSpec(format!(
            "setting {setting} not in {{1, 2}}"
        )));
    }
    let fired: Vec<usize> = (0..4).filter(|&k| clicks[k]).collect();
    if fired.len() != 1 || fired[0] / 2 != usize::from(setting - 1) {
        return Err(Error::InvalidSpec(format!(
            "clicks {clicks:?} inconsistent with setting {setting}"
        )));
    }
    Ok(())
}

impl SwitchRecord {
    pub fn new(setting_a: u8, setting_b: u8, a: i8, b: i8) -> Result<Self> {
        if a.abs() != 1 || b.abs() != 1 {
            return Err(Error::InvalidSpec("outcomes must be ±1".into()));
        }
        let mut clicks_a = [false; 4];
        let mut clicks_b = [false; 4];
        if (1..=2).contains(&setting_a) {
            clicks_a[slot(setting_a, a)] = true;
        }
        if (1..=2).contains(&setting_b) {
            clicks_b[slot(setting_b, b)] = true;
        }
        let r = Self {
            setting_a,
            setting_b,
            clicks_a,
            clicks_b,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        check_side(self.setting_a, &self.clicks_a)?;
        check_side(self.setting_b, &self.clicks_b)
    }

    /// Outcome on each side under the record's own settings.
    pub fn outcomes(&self) -> (i8, i8) {
        (
            side_value(self.setting_a, &self.clicks_a, self.setting_a),
            side_value(self.setting_b, &self.clicks_b, self.setting_b),
        )
    }

    /// Packs the record into ten bits: bit 0 is `i - 1`, bit 1 is `j - 1`,
    /// bits 2..6 hold Alice's click slots and bits 6..10 Bob's.
    pub fn to_bits(&self) -> u16 {
        let mut bits = u16::from(self.setting_a - 1) | (u16::from(self.setting_b - 1) << 1);
        for k in 0..4 {
            bits |= u16::from(self.clicks_a[k]) << (2 + k);
            bits |= u16::from(self.clicks_b[k]) << (6 + k);
        }
        bits
    }
}

/// Per-setting target laws `P(a, b | i, j)` stored at `[i - 1][j - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingTargets {
    tables: [[PairTable; 2]; 2],
}

impl SwitchingTargets {
    pub fn new(tables: [[PairTable; 2]; 2]) -> Result<Self> {
        for row in &tables {
            for t in row {
                t.validate()?;
            }
        }
        Ok(Self { tables })
    }

    /// Singlet outcome laws with Alice at `(a, a′)` and Bob at `(b, b′)`.
    pub fn singlet(angles: ChshAngles) -> Result<Self> {
        let rho = DensityMatrix::singlet();
        let alice = [angles.a, angles.a2];
        let bob = [angles.b, angles.b2];
        let mut tables = [[PairTable([[0.0; 2]; 2]); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                tables[i][j] = PairTable(joint_outcome_probabilities(&rho, alice[i], bob[j])?);
            }
        }
        Self::new(tables)
    }

    pub fn anti_correlated() -> Self {
        let t = PairTable::from_correlation(-1.0);
        Self {
            tables: [[t; 2]; 2],
        }
    }

    pub fn table(&self, i: u8, j: u8) -> &PairTable {
        &self.tables[usize::from(i - 1)][usize::from(j - 1)]
    }

    pub fn tables(&self) -> &[[PairTable; 2]; 2] {
        &self.tables
    }
}

fn sample_pair(table: &PairTable, u: f64) -> (i8, i8) {
    let mut acc = 0.0;
    for (ia, a) in [1i8, -1].into_iter().enumerate() {
        for (ib, b) in [1i8, -1].into_iter().enumerate() {
            acc += table.0[ia][ib];
            if u < acc {
                return (a, b);
            }
        }
    }
    // rounding left a sliver above the last cumulative weight
    let last = (0..4)
        .rev()
        .find(|&k| table.0[k / 2][k % 2] > 0.0)
        .unwrap_or(3);
    ([1, -1][last / 2], [1, -1][last % 2])
}

pub fn switching_simulate(
    targets: &SwitchingTargets,
    setting_dist: &DiscreteDistribution<(u8, u8)>,
    n: u64,
    rng: &RngStream,
) -> Result<Vec<SwitchRecord>> {
    if let Some(bad) = setting_dist
        .support()
        .iter()
        .find(|(i, j)| !(1..=2).contains(i) || !(1..=2).contains(j))
    {
        return Err(Error::InvalidSpec(format!(
            "setting pair {bad:?} outside {{1, 2}}²"
        )));
    }
    Ok(par_blocks(n, rng, |range, stream| {
        range
            .map(|_| {
                let &(i, j) = setting_dist.sample(stream);
                let (a, b) = sample_pair(targets.table(i, j), stream.uniform());
                SwitchRecord::new(i, j, a, b).expect("settings checked above")
            })
            .collect()
    }))
}

/// `(Aᵢ, B_j)` on one record: zero on a side whose setting differs from the
/// query.
pub fn switching_random_variable(record: &SwitchRecord, i: u8, j: u8) -> (i8, i8) {
    (
        side_value(record.setting_a, &record.clicks_a, i),
        side_value(record.setting_b, &record.clicks_b, j),
    )
}

fn product(r: &SwitchRecord, i: u8, j: u8) -> f64 {
    let (a, b) = switching_random_variable(r, i, j);
    f64::from(a * b)
}

/// `E(Aᵢ B_j | i, j)`.
pub fn switching_conditional_expectation(
    records: &[SwitchRecord],
    i: u8,
    j: u8,
) -> Result<CorrelationEstimate> {
    CorrelationEstimate::from_products(
        records
            .iter()
            .filter(|r| r.setting_a == i && r.setting_b == j)
            .map(|r| product(r, i, j)),
    )
    .map_err(|_| Error::UndefinedEstimate(format!("no records with settings ({i}, {j})")))
}

/// `E(Aᵢ B_j)` over all records, zeros included.
pub fn switching_unconditional_expectation(
    records: &[SwitchRecord],
    i: u8,
    j: u8,
) -> Result<CorrelationEstimate> {
    CorrelationEstimate::from_products(records.iter().map(|r| product(r, i, j)))
}

/// Empirical `P(a, b | i, j)` for all four setting pairs.
pub fn empirical_conditional_tables(records: &[SwitchRecord]) -> Result<[[PairTable; 2]; 2]> {
    let mut counts = [[[[0u64; 2]; 2]; 2]; 2];
    for r in records {
        let (a, b) = r.outcomes();
        let (i, j) = (usize::from(r.setting_a - 1), usize::from(r.setting_b - 1));
        counts[i][j][usize::from(a < 0)][usize::from(b < 0)] += 1;
    }
    let mut tables = [[PairTable([[0.0; 2]; 2]); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let total: u64 = counts[i][j].iter().flatten().sum();
            if total == 0 {
                return Err(Error::UndefinedEstimate(format!(
                    "no records with settings ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            for ia in 0..2 {
                for ib in 0..2 {
                    tables[i][j].0[ia][ib] = counts[i][j][ia][ib] as f64 / total as f64;
                }
            }
        }
    }
    Ok(tables)
}

/// Relative frequency of each distinct record, keyed by [`SwitchRecord::to_bits`].
pub fn record_frequencies(records: &[SwitchRecord]) -> BTreeMap<u16, f64> {
    let mut counts: BTreeMap<u16, u64> = BTreeMap::new();
    for r in records {
        *counts.entry(r.to_bits()).or_default() += 1;
    }
    let n = records.len() as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

/// Local outcome runs grouped by local and remote setting.
pub fn switching_local_runs(records: &[SwitchRecord]) -> Vec<LocalRun> {
    let mut groups: BTreeMap<(Side, u8, u8), Vec<f64>> = BTreeMap::new();
    for r in records {
        let (a, b) = r.outcomes();
        groups
            .entry((Side::Alice, r.setting_a, r.setting_b))
            .or_default()
            .push(f64::from(a));
        groups
            .entry((Side::Bob, r.setting_b, r.setting_a))
            .or_default()
            .push(f64::from(b));
    }
    groups
        .into_iter()
        .map(|((side, local_setting, remote_setting), values)| LocalRun {
            side,
            local_setting,
            remote_setting,
            values,
        })
        .collect()
}

/// Whether the four conditional laws are marginals of one distribution over
/// `(A₁, A₂, B₁, B₂)`.
pub fn conditional_embedding(tables: &[[PairTable; 2]; 2]) -> Result<Embedding> {
    embed_pairwise(tables)
}
