//! Stochastic hidden-variable model: a label `(λ₁, λ₂)` selects two
//! independent local random experiments, one per side.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hv::event::Outcome;
use crate::sampling::{par_blocks, DiscreteDistribution, RngStream};

pub type Kernel = DiscreteDistribution<Outcome>;

#[derive(Debug, Clone, PartialEq)]
pub struct ShvmSpec {
    labels: Vec<(u32, u32)>,
    label_dist: DiscreteDistribution<usize>,
    kernel_a: BTreeMap<(u8, u32), Kernel>,
    kernel_b: BTreeMap<(u8, u32), Kernel>,
}

impl ShvmSpec {
    /// `kernel_a` is keyed by `(setting x, λ₁)`, `kernel_b` by `(setting y, λ₂)`.
    pub fn new(
        labels: Vec<(u32, u32)>,
        weights: Vec<f64>,
        kernel_a: BTreeMap<(u8, u32), Kernel>,
        kernel_b: BTreeMap<(u8, u32), Kernel>,
    ) -> Result<Self> {
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidSpec(format!("duplicate label {l:?}")));
            }
        }
        let label_dist = DiscreteDistribution::new((0..labels.len()).collect(), weights)?;
        Ok(Self {
            labels,
            label_dist,
            kernel_a,
            kernel_b,
        })
    }

    /// Random spec with `n_labels` labels, settings `{1, 2}` on both sides and
    /// ±1 kernels.
    pub fn random(n_labels: usize, rng: &mut RngStream) -> Self {
        let labels: Vec<(u32, u32)> = (0..n_labels as u32).map(|l| (l, l)).collect();
        let w: Vec<f64> = labels.iter().map(|_| -(1.0 - rng.uniform()).ln()).collect();
        let total: f64 = w.iter().sum();
        let kernel = |rng: &mut RngStream| {
            let mut k = BTreeMap::new();
            for x in 1..=2u8 {
                for l in 0..n_labels as u32 {
                    k.insert((x, l), coin(rng.uniform()));
                }
            }
            k
        };
        let (ka, kb) = (kernel(rng), kernel(rng));
        let mut weights: Vec<f64> = w.iter().map(|x| x / total).collect();
        let head: f64 = weights[..n_labels - 1].iter().sum();
        weights[n_labels - 1] = 1.0 - head;
        Self::new(labels, weights, ka, kb).expect("valid random spec")
    }

    pub fn labels(&self) -> &[(u32, u32)] {
        &self.labels
    }

    pub fn label_weights(&self) -> &[f64] {
        self.label_dist.weights()
    }

    pub fn kernel_a(&self, x: u8, l1: u32) -> Result<&Kernel> {
        self.kernel_a.get(&(x, l1)).ok_or(Error::MissingKernel {
            setting: x,
            label: l1,
        })
    }

    pub fn kernel_b(&self, y: u8, l2: u32) -> Result<&Kernel> {
        self.kernel_b.get(&(y, l2)).ok_or(Error::MissingKernel {
            setting: y,
            label: l2,
        })
    }
}

/// ±1 kernel with `P(+1) = p_plus`.
pub fn coin(p_plus: f64) -> Kernel {
    DiscreteDistribution::new(
        vec![Outcome::Plus, Outcome::Minus],
        vec![p_plus, 1.0 - p_plus],
    )
    .expect("probability in [0, 1]")
}

fn kernel_mean(k: &Kernel) -> f64 {
    k.iter().map(|(o, p)| o.as_f64() * p).sum()
}

/// Exact `Σ P(λ₁,λ₂) E(A|x,λ₁) E(B|y,λ₂)`.
pub fn shvm_expectation_exact(spec: &ShvmSpec, x: u8, y: u8) -> Result<f64> {
    spec.labels
        .iter()
        .zip(spec.label_dist.weights())
        .map(|(&(l1, l2), &p)| {
            Ok(p * kernel_mean(spec.kernel_a(x, l1)?) * kernel_mean(spec.kernel_b(y, l2)?))
        })
        .sum()
}

/// Per-loop record: which label was drawn and the two local sample means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShvmRecord {
    pub label: usize,
    pub mean_a: f64,
    pub mean_b: f64,
}

impl ShvmRecord {
    pub fn product(&self) -> f64 {
        self.mean_a * self.mean_b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShvmEstimate {
    pub value: f64,
    pub se: f64,
    pub records: Vec<ShvmRecord>,
}

/// The five-step estimation loop: draw a label, repeat each local experiment
/// `k_repeats` times, multiply the two sample means, and average over
/// `n_pairs` labels.
pub fn shvm_run(
    spec: &ShvmSpec,
    settings: (u8, u8),
    n_pairs: u64,
    k_repeats: u32,
    rng: &RngStream,
) -> Result<ShvmEstimate> {
    if n_pairs == 0 || k_repeats == 0 {
        return Err(Error::InvalidSpec(
            "n_pairs and k_repeats must be at least 1".into(),
        ));
    }
    let (x, y) = settings;
    for (&(l1, l2), &p) in spec.labels.iter().zip(spec.label_dist.weights()) {
        if p > 0.0 {
            spec.kernel_a(x, l1)?;
            spec.kernel_b(y, l2)?;
        }
    }
    let k = f64::from(k_repeats);
    let records = par_blocks(n_pairs, rng, |range, s| {
        range
            .map(|_| {
                let label = *spec.label_dist.sample(s);
                let (l1, l2) = spec.labels[label];
                let ka = spec.kernel_a(x, l1).expect("checked");
                let kb = spec.kernel_b(y, l2).expect("checked");
                let sum_a: f64 = (0..k_repeats).map(|_| ka.sample(s).as_f64()).sum();
                let sum_b: f64 = (0..k_repeats).map(|_| kb.sample(s).as_f64()).sum();
                ShvmRecord {
                    label,
                    mean_a: sum_a / k,
                    mean_b: sum_b / k,
                }
            })
            .collect()
    });
    let n = records.len() as f64;
    let value = records.iter().map(ShvmRecord::product).sum::<f64>() / n;
    let var = if records.len() > 1 {
        records
            .iter()
            .map(|r| (r.product() - value).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    Ok(ShvmEstimate {
        value,
        se: (var / n).sqrt(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::derive_stream;

    fn single_label(pa: f64, pb: f64) -> ShvmSpec {
        ShvmSpec::new(
            vec![(0, 0)],
            vec![1.0],
            BTreeMap::from([((1, 0), coin(pa))]),
            BTreeMap::from([((1, 0), coin(pb))]),
        )
        .unwrap()
    }

    fn two_labels() -> ShvmSpec {
        // E(A|λ±) = E(B|λ±) = ±0.8
        ShvmSpec::new(
            vec![(0, 0), (1, 1)],
            vec![0.5, 0.5],
            BTreeMap::from([((1, 0), coin(0.9)), ((1, 1), coin(0.1))]),
            BTreeMap::from([((1, 0), coin(0.9)), ((1, 1), coin(0.1))]),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_kernels_are_exact() {
        let spec = ShvmSpec::new(
            vec![(0, 0), (1, 1)],
            vec![0.3, 0.7],
            BTreeMap::from([((1, 0), coin(1.0)), ((1, 1), coin(0.0))]),
            BTreeMap::from([((1, 0), coin(1.0)), ((1, 1), coin(1.0))]),
        )
        .unwrap();
        let exact = shvm_expectation_exact(&spec, 1, 1).unwrap();
        assert!((exact - (0.3 - 0.7)).abs() < 1e-15);
        for k in [1, 5] {
            let rng = derive_stream(k as u64, "shvm/det");
            let est = shvm_run(&spec, (1, 1), 50_000, k, &rng).unwrap();
            // every record is ±1 exactly; only label frequencies fluctuate
            assert!(est.records.iter().all(|r| r.product().abs() == 1.0));
            assert!((est.value - exact).abs() < 3.0 * est.se + 1e-12);
        }
    }

    #[test]
    fn fair_coins_average_to_zero() {
        let n = 40_000;
        let est = shvm_run(
            &single_label(0.5, 0.5),
            (1, 1),
            n,
            1,
            &derive_stream(1, "fair"),
        )
        .unwrap();
        let se = 1.0 / (n as f64).sqrt();
        assert!((est.se / se - 1.0).abs() < 0.01);
        assert!(est.value.abs() < 3.0 * se);
    }

    #[test]
    fn two_label_exact_value() {
        let exact = shvm_expectation_exact(&two_labels(), 1, 1).unwrap();
        assert!((exact - 0.64).abs() < 1e-12);
        let est = shvm_run(&two_labels(), (1, 1), 20_000, 50, &derive_stream(2, "two")).unwrap();
        assert!((est.value - 0.64).abs() < 3.0 * est.se);
    }

    #[test]
    fn zero_local_means_give_zero() {
        assert_eq!(
            shvm_expectation_exact(&single_label(0.5, 0.9), 1, 1).unwrap(),
            0.0
        );
    }

    #[test]
    fn missing_kernel_is_an_error() {
        let spec = single_label(0.5, 0.5);
        let rng = derive_stream(0, "missing");
        assert_eq!(
            shvm_run(&spec, (2, 1), 10, 1, &rng).unwrap_err(),
            Error::MissingKernel {
                setting: 2,
                label: 0
            }
        );
        assert!(shvm_expectation_exact(&spec, 1, 2).is_err());
    }

    #[test]
    fn random_specs_respect_chsh() {
        let mut rng = derive_stream(3, "shvm/random");
        for k in 0..200 {
            let spec = ShvmSpec::random(1 + k % 7, &mut rng);
            let e = |x, y| shvm_expectation_exact(&spec, x, y).unwrap();
            let s = (e(1, 1) - e(1, 2)).abs() + (e(2, 1) + e(2, 2)).abs();
            assert!(s <= 2.0 + 1e-12);
        }
    }
}
