use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{chi_square_sf, normal_two_sided, TestReport};
use crate::error::{Error, Result};
use crate::hv::event::{Event, Side};

/// One side's outcomes under a fixed local setting and a fixed remote one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRun {
    pub side: Side,
    pub local_setting: u8,
    pub remote_setting: u8,
    pub values: Vec<f64>,
}

impl LocalRun {
    pub fn from_events(side: Side, remote_setting: u8, events: &[Event]) -> Result<Self> {
        let local_setting = events
            .first()
            .ok_or_else(|| Error::InsufficientData("no events".into()))?
            .setting;
        if events.iter().any(|e| e.setting != local_setting) {
            return Err(Error::InvalidSpec("events mix local settings".into()));
        }
        Ok(Self {
            side,
            local_setting,
            remote_setting,
            values: events.iter().map(|e| e.outcome.as_f64()).collect(),
        })
    }
}

struct Summary {
    n: f64,
    mean: f64,
    ss: f64,
}

fn summarize(v: &[f64]) -> Summary {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    Summary {
        n,
        mean,
        ss: v.iter().map(|x| (x - mean).powi(2)).sum(),
    }
}

/// Tests whether a local marginal mean depends on the remote setting; one
/// report per `(side, local setting)`. Two remote settings give a pooled
/// two-sample z-test, more give the corresponding chi-square test.
pub fn no_signalling_test(runs: &[LocalRun], alpha: f64) -> Result<Vec<TestReport>> {
    let mut groups: BTreeMap<(Side, u8), BTreeMap<u8, Vec<f64>>> = BTreeMap::new();
    for r in runs {
        groups
            .entry((r.side, r.local_setting))
            .or_default()
            .entry(r.remote_setting)
            .or_default()
            .extend_from_slice(&r.values);
    }
    let mut reports = Vec::with_capacity(groups.len());
    for ((side, local), by_remote) in groups {
        let name = format!("no_signalling[{}{}]", side.as_str(), local);
        if by_remote.len() < 2 || by_remote.values().any(Vec::is_empty) {
            return Err(Error::InsufficientData(format!(
                "{name}: need non-empty runs for at least two remote settings"
            )));
        }
        let stats: Vec<Summary> = by_remote.values().map(|v| summarize(v)).collect();
        let n_total: f64 = stats.iter().map(|s| s.n).sum();
        let k = stats.len() as f64;
        if n_total - k < 1.0 {
            return Err(Error::InsufficientData(format!(
                "{name}: too few observations"
            )));
        }
        let pooled_var = stats.iter().map(|s| s.ss).sum::<f64>() / (n_total - k);
        let grand = stats.iter().map(|s| s.n * s.mean).sum::<f64>() / n_total;
        if pooled_var == 0.0 {
            let all_equal = stats.iter().all(|s| s.mean == grand);
            if all_equal {
                reports.push(TestReport::degenerate(name, alpha));
            } else {
                reports.push(TestReport::new(name, f64::INFINITY, 0.0, alpha));
            }
            continue;
        }
        if stats.len() == 2 {
            let z = (stats[0].mean - stats[1].mean)
                / (pooled_var * (1.0 / stats[0].n + 1.0 / stats[1].n)).sqrt();
            reports.push(TestReport::new(name, z, normal_two_sided(z), alpha));
        } else {
            let x: f64 = stats
                .iter()
                .map(|s| s.n * (s.mean - grand).powi(2))
                .sum::<f64>()
                / pooled_var;
            reports.push(TestReport::new(name, x, chi_square_sf(x, k - 1.0), alpha));
        }
    }
    Ok(reports)
}
