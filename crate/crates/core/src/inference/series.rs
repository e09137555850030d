use std::collections::BTreeMap;

use super::{chi_square_sf, normal_two_sided, TestReport};
use crate::error::{Error, Result};
use crate::pairing::TimeSeries;

/// Shortest series accepted by [`fine_structure_tests`].
pub const MIN_SERIES_LEN: usize = 100;
/// Largest lag in the autocorrelation test.
pub const MAX_LAG: usize = 10;
/// Number of blocks in the drift test.
pub const DRIFT_BLOCKS: usize = 10;

/// Chi-square homogeneity test of outcome frequencies across consecutive
/// blocks. A trailing partial block is ignored.
pub fn purity_test(series: &TimeSeries, block_size: usize, alpha: f64) -> Result<TestReport> {
    let name = "purity";
    if block_size == 0 || series.len() < 2 * block_size {
        return Err(Error::InvalidSpec(format!(
            "block size {block_size} too large for a series of length {}",
            series.len()
        )));
    }
    let n_blocks = series.len() / block_size;
    // f64 keys are compared by bit pattern; outcomes are small integers
    let mut table: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (b, chunk) in series
        .values()
        .chunks_exact(block_size)
        .take(n_blocks)
        .enumerate()
    {
        for &v in chunk {
            let key = v.to_bits() as i64;
            table.entry(key).or_insert_with(|| vec![0.0; n_blocks])[b] += 1.0;
        }
    }
    if table.len() < 2 {
        return Ok(TestReport::degenerate(name, alpha));
    }
    let total = (n_blocks * block_size) as f64;
    let row_total = block_size as f64;
    let mut stat = 0.0;
    for counts in table.values() {
        let col_total: f64 = counts.iter().sum();
        let expected = row_total * col_total / total;
        stat += counts
            .iter()
            .map(|o| (o - expected).powi(2) / expected)
            .sum::<f64>();
    }
    let dof = ((n_blocks - 1) * (table.len() - 1)) as f64;
    Ok(TestReport::new(name, stat, chi_square_sf(stat, dof), alpha))
}

fn runs_test(x: &[f64], mean: f64, alpha: f64) -> TestReport {
    let name = "runs";
    let above: Vec<bool> = x.iter().map(|&v| v > mean).collect();
    let n1 = above.iter().filter(|&&a| a).count() as f64;
    let n2 = above.len() as f64 - n1;
    if n1 == 0.0 || n2 == 0.0 {
        return TestReport::degenerate(name, alpha);
    }
    let runs = 1.0 + above.windows(2).filter(|w| w[0] != w[1]).count() as f64;
    let n = n1 + n2;
    let mu = 2.0 * n1 * n2 / n + 1.0;
    let var = (mu - 1.0) * (mu - 2.0) / (n - 1.0);
    if var <= 0.0 {
        return TestReport::degenerate(name, alpha);
    }
    let z = (runs - mu) / var.sqrt();
    TestReport::new(name, z, normal_two_sided(z), alpha)
}

fn ljung_box(x: &[f64], mean: f64, alpha: f64) -> TestReport {
    let name = "ljung_box";
    let n = x.len();
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    if c0 == 0.0 {
        return TestReport::degenerate(name, alpha);
    }
    let nf = n as f64;
    let q = nf
        * (nf + 2.0)
        * (1..=MAX_LAG)
            .map(|k| {
                let ck: f64 = d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum();
                (ck / c0).powi(2) / (nf - k as f64)
            })
            .sum::<f64>();
    TestReport::new(name, q, chi_square_sf(q, MAX_LAG as f64), alpha)
}

fn drift_test(x: &[f64], alpha: f64) -> TestReport {
    let name = "drift";
    let m = x.len() / DRIFT_BLOCKS;
    let used = &x[..m * DRIFT_BLOCKS];
    let nf = used.len() as f64;
    let mean = used.iter().sum::<f64>() / nf;
    let var = used.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return TestReport::degenerate(name, alpha);
    }
    let means: Vec<f64> = used
        .chunks_exact(m)
        .map(|c| c.iter().sum::<f64>() / m as f64)
        .collect();
    let tbar = (DRIFT_BLOCKS as f64 - 1.0) / 2.0;
    let sxx: f64 = (0..DRIFT_BLOCKS).map(|t| (t as f64 - tbar).powi(2)).sum();
    let slope = means
        .iter()
        .enumerate()
        .map(|(t, y)| (t as f64 - tbar) * (y - mean))
        .sum::<f64>()
        / sxx;
    let se = (var / m as f64 / sxx).sqrt();
    let z = slope / se;
    TestReport::new(name, z, normal_two_sided(z), alpha)
}

/// Runs test about the mean, Ljung–Box test on lags 1 to 10 and a linear
/// drift test on block means.
pub fn fine_structure_tests(series: &TimeSeries, alpha: f64) -> Result<Vec<TestReport>> {
    let x = series.values();
    if x.len() < MIN_SERIES_LEN {
        return Err(Error::InsufficientData(format!(
            "series of length {} shorter than {MIN_SERIES_LEN}",
            x.len()
        )));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    Ok(vec![
        runs_test(x, mean, alpha),
        ljung_box(x, mean, alpha),
        drift_test(x, alpha),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{derive_stream, RngStream};

    fn bernoulli(rng: &mut RngStream, n: usize, p: f64) -> Vec<f64> {
        (0..n)
            .map(|_| if rng.uniform() < p { 1.0 } else { -1.0 })
            .collect()
    }

    fn ks_uniform(mut p: Vec<f64>) -> f64 {
        p.sort_by(f64::total_cmp);
        let n = p.len() as f64;
        p.iter()
            .enumerate()
            .map(|(i, &v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn alternating_series_fails_runs_test() {
        let x: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let r = fine_structure_tests(&TimeSeries::from_values(x), 0.01).unwrap();
        assert!(r[0].rejects() && r[0].p_value < 1e-100);
    }

    #[test]
    fn sticky_chain_fails_autocorrelation_test() {
        let mut rng = derive_stream(3, "sticky");
        let mut x = vec![1.0];
        for _ in 1..10_000 {
            let last = *x.last().unwrap();
            x.push(if rng.uniform() < 0.3 { -last } else { last });
        }
        let r = fine_structure_tests(&TimeSeries::from_values(x), 0.01).unwrap();
        assert!(r[1].rejects());
    }

    #[test]
    fn trend_fails_drift_test() {
        let mut rng = derive_stream(4, "trend");
        let x: Vec<f64> = (0..10_000)
            .map(|i| {
                if rng.uniform() < 0.4 + 0.2 * i as f64 / 1e4 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let r = fine_structure_tests(&TimeSeries::from_values(x), 0.01).unwrap();
        assert!(r[2].rejects());
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = TimeSeries::from_values(vec![1.0; 1000]);
        let p = purity_test(&s, 100, 0.01).unwrap();
        assert!(p.degenerate && !p.rejects());
        for r in fine_structure_tests(&s, 0.01).unwrap() {
            assert!(r.degenerate && !r.rejects());
        }
    }

    #[test]
    fn argument_errors() {
        let s = TimeSeries::from_values(vec![1.0; 99]);
        assert!(fine_structure_tests(&s, 0.01).is_err());
        assert!(purity_test(&s, 50, 0.01).is_err());
        assert!(purity_test(&s, 0, 0.01).is_err());
    }

    #[test]
    fn purity_uses_three_categories() {
        let x: Vec<f64> = (0..3000).map(|i| f64::from((i % 3) as i8 - 1)).collect();
        let r = purity_test(&TimeSeries::from_values(x), 300, 0.01).unwrap();
        assert!(r.statistic.abs() < 1e-9 && !r.rejects());
    }

    #[test]
    fn mixed_ensemble_is_detected() {
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = derive_stream(seed, "mixed");
            let x: Vec<f64> = (0..100)
                .flat_map(|b| bernoulli(&mut rng, 1000, if b % 2 == 0 { 0.4 } else { 0.6 }))
                .collect();
            if purity_test(&TimeSeries::from_values(x), 1000, 0.05)
                .unwrap()
                .rejects()
            {
                hits += 1;
            }
        }
        assert!(hits >= 90);
    }

    #[test]
    fn null_p_values_are_uniform() {
        let mut by_test: Vec<Vec<f64>> = vec![Vec::new(); 4];
        for seed in 0..500 {
            let mut rng = derive_stream(seed, "null");
            let s = TimeSeries::from_values(bernoulli(&mut rng, 2000, 0.5));
            by_test[0].push(purity_test(&s, 200, 0.05).unwrap().p_value);
            for (k, r) in fine_structure_tests(&s, 0.05)
                .unwrap()
                .into_iter()
                .enumerate()
            {
                by_test[k + 1].push(r.p_value);
            }
        }
        for p in by_test {
            let d = ks_uniform(p);
            assert!(d < 0.1, "KS distance {d}");
        }
    }
}
