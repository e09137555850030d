use crate::error::{Error, Result};

/// Hoeffding threshold for the CHSH statistic of a local model estimated
/// from `n_per_setting` products per setting pair: exceeded with probability
/// at most `delta`.
///
/// Each of the four means of `[-1, 1]` products deviates by more than
/// `t = √(2 ln(8/δ)/n)` with probability at most `δ/4`, so
/// `S ≤ 2 + 4t` except with probability `δ`.
pub fn finite_sample_bound(n_per_setting: u64, delta: f64) -> Result<f64> {
    if n_per_setting == 0 {
        return Err(Error::InvalidSpec("n must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidSpec(format!("delta {delta} not in (0, 1)")));
    }
    Ok(2.0 + 4.0 * (2.0 * (8.0 / delta).ln() / n_per_setting as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plug_in_value() {
        let b = finite_sample_bound(10_000, 0.01).unwrap();
        let expected = 2.0 + 4.0 * (2.0 * 800f64.ln() / 1e4).sqrt();
        assert_eq!(b, expected);
        assert!((b - 2.147).abs() < 1e-3);
    }

    #[test]
    fn tends_to_two() {
        assert!(finite_sample_bound(u64::MAX, 0.01).unwrap() - 2.0 < 1e-8);
        let bounds: Vec<f64> = [10, 100, 1000]
            .iter()
            .map(|&n| finite_sample_bound(n, 0.05).unwrap())
            .collect();
        assert!(bounds.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(finite_sample_bound(0, 0.1).is_err());
        assert!(finite_sample_bound(10, 0.0).is_err());
        assert!(finite_sample_bound(10, 1.0).is_err());
    }
}
