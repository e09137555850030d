use serde::{Deserialize, Serialize};

use super::estimate::CorrelationEstimate;

/// Four correlations in role order `(A,B), (A,B′), (A′,B), (A′,B′)` and the
/// CHSH statistic `|E(AB) − E(AB′)| + |E(A′B) + E(A′B′)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub estimates: [CorrelationEstimate; 4],
    pub s_value: f64,
    /// Standard errors of the four estimates added in quadrature.
    pub s_se: f64,
}

fn combine(e: [f64; 4]) -> f64 {
    (e[0] - e[1]).abs() + (e[2] + e[3]).abs()
}

pub fn chsh_statistic(
    e11: CorrelationEstimate,
    e12: CorrelationEstimate,
    e21: CorrelationEstimate,
    e22: CorrelationEstimate,
) -> ChshReport {
    let estimates = [e11, e12, e21, e22];
    ChshReport {
        s_value: combine(estimates.map(|e| e.value)),
        s_se: estimates.iter().map(|e| e.se * e.se).sum::<f64>().sqrt(),
        estimates,
    }
}

impl ChshReport {
    pub fn values(&self) -> [f64; 4] {
        self.estimates.map(|e| e.value)
    }

    /// Largest statistic over relabelings of the settings: the maximum of
    /// `|Σ ±Eᵢⱼ|` with exactly one term negated.
    pub fn max_over_roles(&self) -> f64 {
        let e = self.values();
        (0..4)
            .map(|k| {
                e.iter()
                    .enumerate()
                    .map(|(m, v)| if m == k { -v } else { *v })
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Number of standard errors by which `S` exceeds `bound`.
    pub fn excess_sigma(&self, bound: f64) -> f64 {
        (self.s_value - bound) / self.s_se
    }
}
