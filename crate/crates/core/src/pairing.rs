//! Turning two one-sided records into a joint sample. The joint law of the
//! result depends on the pairing rule as much as on the sources.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hv::event::Event;
use crate::sampling::RngStream;

/// An ordered series of outcomes, optionally time tagged.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    time_tags: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, time_tags: Option<Vec<f64>>) -> Result<Self> {
        if let Some(tags) = &time_tags {
            if tags.len() != values.len() {
                return Err(Error::InvalidSpec(format!(
                    "{} values but {} time tags",
                    values.len(),
                    tags.len()
                )));
            }
            if let Some(i) = tags.windows(2).position(|w| !(w[0] < w[1])) {
                return Err(Error::UnsortedTags(i + 1));
            }
        }
        Ok(Self { values, time_tags })
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            values,
            time_tags: None,
        }
    }

    pub fn from_outcomes(outcomes: &[i8]) -> Self {
        Self::from_values(outcomes.iter().map(|&o| f64::from(o)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time_tags(&self) -> Option<&[f64]> {
        self.time_tags.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn tag(&self, i: usize) -> Option<f64> {
        self.time_tags.as_ref().map(|t| t[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    /// Buckets `floor(t / W)`; first-with-first inside a bucket.
    FixedBins,
    /// Globally closest pairs first, ties by earlier a-index then b-index.
    NearestNeighbor,
    /// Each a-click takes the earliest unmatched b-click within `W`.
    #[default]
    FirstMatchGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    pub width: f64,
    #[serde(default)]
    pub rule: WindowRule,
}

impl WindowPolicy {
    pub fn new(width: f64, rule: WindowRule) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "window width {width} must be positive"
            )));
        }
        Ok(Self { width, rule })
    }
}

/// How a [`PairedSample`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairingPolicy {
    Shift {
        k: usize,
    },
    Random {
        n_pairs: usize,
    },
    Window(WindowPolicy),
    /// Ground truth available only in simulation: same emission index.
    Emission,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub index_a: usize,
    pub index_b: usize,
    pub t_a: Option<f64>,
    pub t_b: Option<f64>,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub pairs: Vec<Pair>,
    pub provenance: PairingPolicy,
    pub unmatched_a: usize,
    pub unmatched_b: usize,
}

impl PairedSample {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// `S₁ₖ = {(a₁, b_k), (a₂, b_{k+1}), …}`. The skipped head `b₁ … b_{k−1}` and
/// any tail are reported as unmatched.
pub fn pair_shift(s1: &TimeSeries, s2: &TimeSeries, k: usize) -> Result<PairedSample> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::InsufficientData(
            "both series must be non-empty".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidSpec("shift offset k starts at 1".into()));
    }
    let count = s1.len().min(s2.len().saturating_sub(k - 1));
    let pairs = (0..count)
        .map(|i| {
            let j = i + k - 1;
            Pair {
                index_a: i,
                index_b: j,
                t_a: s1.tag(i),
                t_b: s2.tag(j),
                a: s1.values[i],
                b: s2.values[j],
            }
        })
        .collect();
    Ok(PairedSample {
        pairs,
        provenance: PairingPolicy::Shift { k },
        unmatched_a: s1.len() - count,
        unmatched_b: s2.len() - count,
    })
}

/// `n_pairs` independent uniform index pairs, with replacement.
pub fn pair_random(
    s1: &TimeSeries,
    s2: &TimeSeries,
    n_pairs: usize,
    rng: &mut RngStream,
) -> Result<PairedSample> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::InsufficientData(
            "both series must be non-empty".into(),
        ));
    }
    let mut used_a = vec![false; s1.len()];
    let mut used_b = vec![false; s2.len()];
    let pairs = (0..n_pairs)
        .map(|_| {
            let (i, j) = (rng.index(s1.len()), rng.index(s2.len()));
            used_a[i] = true;
            used_b[j] = true;
            Pair {
                index_a: i,
                index_b: j,
                t_a: s1.tag(i),
                t_b: s2.tag(j),
                a: s1.values[i],
                b: s2.values[j],
            }
        })
        .collect();
    Ok(PairedSample {
        pairs,
        provenance: PairingPolicy::Random { n_pairs },
        unmatched_a: used_a.iter().filter(|u| !**u).count(),
        unmatched_b: used_b.iter().filter(|u| !**u).count(),
    })
}

fn clicks(events: &[Event]) -> Result<Vec<(usize, f64, f64)>> {
    if let Some(i) = events
        .windows(2)
        .position(|w| w[1].time_tag < w[0].time_tag)
    {
        return Err(Error::UnsortedTags(i + 1));
    }
    Ok(events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.outcome.is_click())
        .map(|(i, e)| (i, e.time_tag, e.outcome.as_f64()))
        .collect())
}

/// Coincidence pairing of two click streams. Non-detections are dropped
/// before matching; each click is used at most once. Indices in the result
/// refer to positions in the input slices.
pub fn pair_window(
    a_events: &[Event],
    b_events: &[Event],
    policy: WindowPolicy,
) -> Result<PairedSample> {
    WindowPolicy::new(policy.width, policy.rule)?;
    let a = clicks(a_events)?;
    let b = clicks(b_events)?;
    let w = policy.width;
    let matches: Vec<(usize, usize)> = match policy.rule {
        WindowRule::FixedBins => {
            let mut bins: BTreeMap<i64, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
            for (k, c) in a.iter().enumerate() {
                bins.entry((c.1 / w).floor() as i64).or_default().0.push(k);
            }
            for (k, c) in b.iter().enumerate() {
                bins.entry((c.1 / w).floor() as i64).or_default().1.push(k);
            }
            bins.values()
                .flat_map(|(xa, xb)| xa.iter().copied().zip(xb.iter().copied()))
                .collect()
        }
        WindowRule::FirstMatchGreedy => {
            let mut used = vec![false; b.len()];
            let mut lo = 0;
            let mut out = Vec::new();
            for (ka, ca) in a.iter().enumerate() {
                while lo < b.len() && b[lo].1 < ca.1 - w {
                    lo += 1;
                }
                let hit = (lo..b.len())
                    .take_while(|&kb| b[kb].1 <= ca.1 + w)
                    .find(|&kb| !used[kb]);
                if let Some(kb) = hit {
                    used[kb] = true;
                    out.push((ka, kb));
                }
            }
            out
        }
        WindowRule::NearestNeighbor => {
            let mut candidates = Vec::new();
            let mut lo = 0;
            for (ka, ca) in a.iter().enumerate() {
                while lo < b.len() && b[lo].1 < ca.1 - w {
                    lo += 1;
                }
                for (kb, cb) in b.iter().enumerate().skip(lo) {
                    if cb.1 > ca.1 + w {
                        break;
                    }
                    candidates.push(((ca.1 - cb.1).abs(), ka, kb));
                }
            }
            candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            let mut used_a = vec![false; a.len()];
            let mut used_b = vec![false; b.len()];
            let mut out = Vec::new();
            for (_, ka, kb) in candidates {
                if !used_a[ka] && !used_b[kb] {
                    used_a[ka] = true;
                    used_b[kb] = true;
                    out.push((ka, kb));
                }
            }
            out.sort_unstable();
            out
        }
    };
    let pairs: Vec<Pair> = matches
        .iter()
        .map(|&(ka, kb)| Pair {
            index_a: a[ka].0,
            index_b: b[kb].0,
            t_a: Some(a[ka].1),
            t_b: Some(b[kb].1),
            a: a[ka].2,
            b: b[kb].2,
        })
        .collect();
    Ok(PairedSample {
        unmatched_a: a.len() - pairs.len(),
        unmatched_b: b.len() - pairs.len(),
        pairs,
        provenance: PairingPolicy::Window(policy),
    })
}

/// Pair events that share an emission index, non-detections included.
pub fn pair_by_emission(a_events: &[Event], b_events: &[Event]) -> PairedSample {
    let mut pairs = Vec::with_capacity(a_events.len().min(b_events.len()));
    let (mut i, mut j) = (0, 0);
    while i < a_events.len() && j < b_events.len() {
        let (ea, eb) = (&a_events[i], &b_events[j]);
        match ea.trial.cmp(&eb.trial) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                pairs.push(Pair {
                    index_a: i,
                    index_b: j,
                    t_a: Some(ea.time_tag),
                    t_b: Some(eb.time_tag),
                    a: ea.outcome.as_f64(),
                    b: eb.outcome.as_f64(),
                });
                i += 1;
                j += 1;
            }
        }
    }
    PairedSample {
        unmatched_a: a_events.len() - pairs.len(),
        unmatched_b: b_events.len() - pairs.len(),
        pairs,
        provenance: PairingPolicy::Emission,
    }
}

/// A fair bit stream for Alice and its bit-flipped copy for Bob, both mapped
/// `1 → +1`, `0 → -1`.
pub fn charlie_generate(n: usize, rng: &mut RngStream) -> Result<(TimeSeries, TimeSeries)> {
    if n == 0 {
        return Err(Error::InvalidSpec("n must be at least 1".into()));
    }
    let bits: Vec<u8> = (0..n).map(|_| u8::from(rng.sign() > 0)).collect();
    let to_value = |bit: u8| if bit == 1 { 1.0 } else { -1.0 };
    let s1 = bits.iter().map(|&b| to_value(b)).collect();
    let s2 = bits.iter().map(|&b| to_value(1 - b)).collect();
    Ok((TimeSeries::from_values(s1), TimeSeries::from_values(s2)))
}

/// Empirical joint frequencies over outcome pairs, with marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Gjpd {
    pub n: usize,
    pub joint: BTreeMap<(i8, i8), f64>,
    pub marginal_a: BTreeMap<i8, f64>,
    pub marginal_b: BTreeMap<i8, f64>,
}

impl Gjpd {
    pub fn p(&self, a: i8, b: i8) -> f64 {
        self.joint.get(&(a, b)).copied().unwrap_or(0.0)
    }
}

pub(crate) fn as_outcome(v: f64) -> Result<i8> {
    match v {
        x if x == -1.0 => Ok(-1),
        x if x == 0.0 => Ok(0),
        x if x == 1.0 => Ok(1),
        _ => Err(Error::InvalidSpec(format!(
            "value {v} is not an outcome in {{-1, 0, 1}}"
        ))),
    }
}

pub fn empirical_gjpd(sample: &PairedSample) -> Result<Gjpd> {
    if sample.is_empty() {
        return Err(Error::UndefinedEstimate("empty paired sample".into()));
    }
    let mut counts: BTreeMap<(i8, i8), usize> = BTreeMap::new();
    for p in &sample.pairs {
        *counts
            .entry((as_outcome(p.a)?, as_outcome(p.b)?))
            .or_default() += 1;
    }
    let n = sample.len();
    let joint: BTreeMap<(i8, i8), f64> = counts
        .iter()
        .map(|(k, c)| (*k, *c as f64 / n as f64))
        .collect();
    let mut marginal_a = BTreeMap::new();
    let mut marginal_b = BTreeMap::new();
    for (&(a, b), &c) in &counts {
        *marginal_a.entry(a).or_insert(0usize) += c;
        *marginal_b.entry(b).or_insert(0usize) += c;
    }
    let norm = |m: BTreeMap<i8, usize>| {
        m.into_iter()
            .map(|(k, c)| (k, c as f64 / n as f64))
            .collect()
    };
    Ok(Gjpd {
        n,
        joint,
        marginal_a: norm(marginal_a),
        marginal_b: norm(marginal_b),
    })
}
