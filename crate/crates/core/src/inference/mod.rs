//! Estimators and hypothesis tests applied to simulated click records.

mod bound;
mod chsh;
mod estimate;
mod no_signalling;
mod series;

pub use bound::finite_sample_bound;
pub use chsh::{chsh_statistic, ChshReport};
pub use estimate::{correlation_estimate, pearson_correlation, CorrelationEstimate, ZeroPolicy};
pub use no_signalling::{no_signalling_test, LocalRun};
pub use series::{fine_structure_tests, purity_test};

use serde::{Deserialize, Serialize};

/// Significance level used when none is configured.
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: Decision,
    /// Set when the data carry no variation to test; such reports never
    /// reject.
    pub degenerate: bool,
}

impl TestReport {
    pub(crate) fn new(
        test_name: impl Into<String>,
        statistic: f64,
        p_value: f64,
        alpha: f64,
    ) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            test_name: test_name.into(),
            statistic,
            p_value,
            alpha,
            decision: if p_value < alpha {
                Decision::Reject
            } else {
                Decision::FailToReject
            },
            degenerate: false,
        }
    }

    pub(crate) fn degenerate(test_name: impl Into<String>, alpha: f64) -> Self {
        Self {
            degenerate: true,
            ..Self::new(test_name, 0.0, 1.0, alpha)
        }
    }

    pub fn rejects(&self) -> bool {
        self.decision == Decision::Reject
    }
}

pub(crate) fn normal_two_sided(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    if z.is_nan() {
        return 1.0;
    }
    2.0 * Normal::standard().sf(z.abs())
}

pub(crate) fn chi_square_sf(x: f64, dof: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(dof).expect("positive dof").sf(x)
}
