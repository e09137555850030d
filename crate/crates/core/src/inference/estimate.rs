use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairing::{as_outcome, PairedSample};

/// Mean of outcome products with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub n: usize,
    /// Sample standard deviation of the products over `√n`.
    pub se: f64,
}

impl CorrelationEstimate {
    pub fn from_products(products: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (mut n, mut sum, mut sum_sq) = (0usize, 0.0, 0.0);
        for x in products {
            n += 1;
            sum += x;
            sum_sq += x * x;
        }
        if n == 0 {
            return Err(Error::UndefinedEstimate("no products".into()));
        }
        let nf = n as f64;
        let value = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * value * value) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Ok(Self {
            value,
            n,
            se: (var / nf).sqrt(),
        })
    }

    /// Exact value with no sampling error.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            n: 0,
            se: 0.0,
        }
    }
}

/// Whether pairs containing a non-detection count towards the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicy {
    /// All pairs; a missing click contributes a zero product.
    #[default]
    Include,
    /// Only pairs where both sides clicked.
    CoincidentOnly,
}

pub fn correlation_estimate(
    sample: &PairedSample,
    policy: ZeroPolicy,
) -> Result<CorrelationEstimate> {
    if sample.is_empty() {
        return Err(Error::UndefinedEstimate("empty paired sample".into()));
    }
    let mut products = Vec::with_capacity(sample.len());
    for p in &sample.pairs {
        let (a, b) = (as_outcome(p.a)?, as_outcome(p.b)?);
        if policy == ZeroPolicy::CoincidentOnly && (a == 0 || b == 0) {
            continue;
        }
        products.push(f64::from(a * b));
    }
    CorrelationEstimate::from_products(products)
        .map_err(|_| Error::UndefinedEstimate("no coincident pairs".into()))
}

/// Pearson correlation coefficient of arbitrary real-valued pairs.
pub fn pearson_correlation(sample: &PairedSample) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::UndefinedEstimate("need at least two pairs".into()));
    }
    let nf = n as f64;
    let ma = sample.pairs.iter().map(|p| p.a).sum::<f64>() / nf;
    let mb = sample.pairs.iter().map(|p| p.b).sum::<f64>() / nf;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for p in &sample.pairs {
        sab += (p.a - ma) * (p.b - mb);
        saa += (p.a - ma).powi(2);
        sbb += (p.b - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedEstimate("zero variance".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}
