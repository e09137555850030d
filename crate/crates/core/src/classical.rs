//! Pedagogical classical experiments: urn draws, Bertrand's chord protocols and
//! boxes of balls carrying two pre-existing attributes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{DiscreteDistribution, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrnSpec {
    pub red: u32,
    pub black: u32,
    pub draws: u32,
    pub with_replacement: bool,
}

impl UrnSpec {
    pub fn validate(&self) -> Result<()> {
        if self.red + self.black == 0 {
            return Err(Error::InvalidSpec("urn holds no balls".into()));
        }
        if !self.with_replacement && self.draws > self.red + self.black {
            return Err(Error::InvalidSpec(format!(
                "cannot draw {} of {} balls without replacement",
                self.draws,
                self.red + self.black
            )));
        }
        Ok(())
    }
}

fn choose(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Exact law of the number of red balls drawn: binomial with replacement,
/// hypergeometric without.
pub fn urn_distribution(spec: &UrnSpec) -> Result<DiscreteDistribution<u32>> {
    spec.validate()?;
    let UrnSpec {
        red: k,
        black: m,
        draws: n,
        ..
    } = *spec;
    let support: Vec<u32> = (0..=n).collect();
    let weights: Vec<f64> = if spec.with_replacement {
        let p = f64::from(k) / f64::from(k + m);
        support
            .iter()
            .map(|&x| choose(n, x) * p.powi(x as i32) * (1.0 - p).powi((n - x) as i32))
            .collect()
    } else {
        let total = choose(k + m, n);
        support
            .iter()
            .map(|&x| {
                if x > k || n - x > m {
                    0.0
                } else {
                    choose(k, x) * choose(m, n - x) / total
                }
            })
            .collect()
    };
    DiscreteDistribution::from_unnormalized(support, weights)
}

/// Empirical frequencies of the number of red balls.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    pub counts: Vec<u64>,
    pub trials: u64,
}

impl FrequencyTable {
    pub fn frequency(&self, value: usize) -> f64 {
        self.counts.get(value).copied().unwrap_or(0) as f64 / self.trials as f64
    }
}

/// Runs the draw protocol literally: a physical list of balls, one uniform
/// pick per draw, removed from the urn unless replaced.
pub fn urn_simulate(spec: &UrnSpec, trials: u64, rng: &mut RngStream) -> Result<FrequencyTable> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::InvalidSpec("trials must be at least 1".into()));
    }
    let urn: Vec<bool> = (0..spec.red)
        .map(|_| true)
        .chain((0..spec.black).map(|_| false))
        .collect();
    let mut counts = vec![0u64; spec.draws as usize + 1];
    let mut balls = urn.clone();
    for _ in 0..trials {
        let mut red = 0usize;
        if spec.with_replacement {
            for _ in 0..spec.draws {
                red += usize::from(urn[rng.index(urn.len())]);
            }
        } else {
            balls.clone_from(&urn);
            for _ in 0..spec.draws {
                let i = rng.index(balls.len());
                red += usize::from(balls.swap_remove(i));
            }
        }
        counts[red] += 1;
    }
    Ok(FrequencyTable { counts, trials })
}

/// Chord-sampling protocols for the large circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BertrandMethod {
    /// Two independent uniform endpoints on the circumference.
    RandomEndpoints,
    /// Uniform point on a random radius; chord perpendicular to that radius.
    RandomRadialPoint,
    /// Midpoint uniform over the disc.
    RandomMidpoint,
}

impl BertrandMethod {
    pub const ALL: [BertrandMethod; 3] = [
        BertrandMethod::RandomEndpoints,
        BertrandMethod::RandomRadialPoint,
        BertrandMethod::RandomMidpoint,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BertrandEstimate {
    pub method: BertrandMethod,
    pub probability: f64,
    pub se: f64,
    pub trials: u64,
}

const OUTER_RADIUS: f64 = 2.0;
const INNER_RADIUS: f64 = 1.0;

/// Distance from the centre to one random chord drawn by `method`.
fn chord_distance(method: BertrandMethod, rng: &mut RngStream) -> f64 {
    match method {
        BertrandMethod::RandomEndpoints => {
            let p = 2.0 * PI * rng.uniform();
            let q = 2.0 * PI * rng.uniform();
            OUTER_RADIUS * ((p - q) / 2.0).cos().abs()
        }
        BertrandMethod::RandomRadialPoint => {
            // the direction of the radius does not affect the distance
            let _direction = 2.0 * PI * rng.uniform();
            OUTER_RADIUS * rng.uniform()
        }
        BertrandMethod::RandomMidpoint => loop {
            let x = OUTER_RADIUS * (2.0 * rng.uniform() - 1.0);
            let y = OUTER_RADIUS * (2.0 * rng.uniform() - 1.0);
            let d2 = x * x + y * y;
            if d2 < OUTER_RADIUS * OUTER_RADIUS {
                break d2.sqrt();
            }
        },
    }
}

/// Monte Carlo probability that a chord of the outer circle (R = 2r) cuts the
/// inner circle.
pub fn bertrand_estimate(
    method: BertrandMethod,
    trials: u64,
    rng: &mut RngStream,
) -> Result<BertrandEstimate> {
    if trials == 0 {
        return Err(Error::InvalidSpec("trials must be at least 1".into()));
    }
    let hits = (0..trials)
        .filter(|_| chord_distance(method, rng) < INNER_RADIUS)
        .count();
    let p = hits as f64 / trials as f64;
    Ok(BertrandEstimate {
        method,
        probability: p,
        se: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// Pre-existing attributes of one ball: colour (1 = red) and size (1 = big).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attributes {
    pub color: u8,
    pub size: u8,
}

impl Attributes {
    pub fn new(color: u8, size: u8) -> Self {
        Self { color, size }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeBox {
    pub items: Vec<(Attributes, u32)>,
}

impl AttributeBox {
    /// Two red and two black balls, one big and one small of each colour.
    pub fn four_balls() -> Self {
        Self {
            items: vec![
                (Attributes::new(1, 1), 1),
                (Attributes::new(1, 0), 1),
                (Attributes::new(0, 1), 1),
                (Attributes::new(0, 0), 1),
            ],
        }
    }

    pub fn total(&self) -> u64 {
        self.items.iter().map(|(_, m)| u64::from(*m)).sum()
    }

    fn validate(&self) -> Result<()> {
        if self
            .items
            .iter()
            .any(|(a, m)| *m == 0 || a.color > 1 || a.size > 1)
        {
            return Err(Error::InvalidSpec(
                "attribute bits must be 0/1 and multiplicities positive".into(),
            ));
        }
        if self.total() == 0 {
            return Err(Error::InvalidSpec("box is empty".into()));
        }
        Ok(())
    }
}

/// Joint table `P(X₁ = i, X₂ = j)` indexed `[color][size]`, with marginals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeJoint {
    pub joint: [[f64; 2]; 2],
    pub color: [f64; 2],
    pub size: [f64; 2],
}

pub fn attribute_joint_distribution(b: &AttributeBox) -> Result<AttributeJoint> {
    b.validate()?;
    let total = b.total() as f64;
    let mut joint = [[0.0; 2]; 2];
    for (a, m) in &b.items {
        joint[a.color as usize][a.size as usize] += f64::from(*m) / total;
    }
    let color = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let size = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    Ok(AttributeJoint { joint, color, size })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::derive_stream;
    use proptest::prelude::*;

    fn pmf(spec: UrnSpec) -> Vec<f64> {
        urn_distribution(&spec).unwrap().weights().to_vec()
    }

    #[test]
    fn urn_with_replacement_binomial() {
        let p = pmf(UrnSpec {
            red: 2,
            black: 1,
            draws: 2,
            with_replacement: true,
        });
        assert!((p[0] - 1.0 / 9.0).abs() < 1e-15);
        assert!((p[1] - 4.0 / 9.0).abs() < 1e-15);
        assert!((p[2] - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn urn_without_replacement_hypergeometric() {
        let p = pmf(UrnSpec {
            red: 2,
            black: 1,
            draws: 2,
            with_replacement: false,
        });
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn all_red_urn() {
        let p = pmf(UrnSpec {
            red: 5,
            black: 0,
            draws: 3,
            with_replacement: true,
        });
        assert_eq!(p[3], 1.0);
    }

    #[test]
    fn overdraw_rejected() {
        let spec = UrnSpec {
            red: 1,
            black: 1,
            draws: 3,
            with_replacement: false,
        };
        assert!(matches!(
            urn_distribution(&spec),
            Err(Error::InvalidSpec(_))
        ));
        let mut rng = derive_stream(0, "urn");
        assert!(urn_simulate(&spec, 10, &mut rng).is_err());
    }

    #[test]
    fn urn_simulation_matches_exact() {
        let n = 100_000u64;
        let mut rng = derive_stream(11, "urn/with");
        let spec = UrnSpec {
            red: 2,
            black: 1,
            draws: 2,
            with_replacement: true,
        };
        let f = urn_simulate(&spec, n, &mut rng).unwrap();
        let p = 4.0 / 9.0;
        assert!((f.frequency(1) - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());

        let spec = UrnSpec {
            with_replacement: false,
            ..spec
        };
        let f = urn_simulate(&spec, n, &mut derive_stream(11, "urn/without")).unwrap();
        let p = 1.0 / 3.0;
        assert!((f.frequency(2) - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());

        let spec = UrnSpec {
            red: 1,
            black: 0,
            draws: 1,
            with_replacement: true,
        };
        let f = urn_simulate(&spec, 17, &mut rng).unwrap();
        assert_eq!(f.frequency(1), 1.0);
    }

    #[test]
    fn bertrand_protocols() {
        let expected = [
            (BertrandMethod::RandomRadialPoint, 0.5),
            (BertrandMethod::RandomEndpoints, 1.0 / 3.0),
            (BertrandMethod::RandomMidpoint, 0.25),
        ];
        for (method, p) in expected {
            let mut rng = derive_stream(5, &format!("bertrand/{method:?}"));
            let est = bertrand_estimate(method, 200_000, &mut rng).unwrap();
            assert!(
                (est.probability - p).abs() < 3.0 * est.se,
                "{method:?}: {est:?}"
            );
        }
    }

    #[test]
    fn four_ball_box_is_uniform() {
        let j = attribute_joint_distribution(&AttributeBox::four_balls()).unwrap();
        for row in j.joint {
            for p in row {
                assert_eq!(p, 0.25);
            }
        }
    }

    #[test]
    fn single_kind_box() {
        let b = AttributeBox {
            items: vec![(Attributes::new(1, 1), 3)],
        };
        let j = attribute_joint_distribution(&b).unwrap();
        assert_eq!(j.joint[1][1], 1.0);
        assert_eq!(j.color[1], 1.0);
        assert_eq!(j.size[1], 1.0);
    }

    #[test]
    fn counted_box() {
        let b = AttributeBox {
            items: vec![
                (Attributes::new(1, 1), 2),
                (Attributes::new(0, 0), 1),
                (Attributes::new(0, 1), 1),
            ],
        };
        let j = attribute_joint_distribution(&b).unwrap();
        assert_eq!(j.joint[1][1], 0.5);
        assert_eq!(j.joint[0][0], 0.25);
        assert_eq!(j.joint[0][1], 0.25);
        assert_eq!(j.size[1], 0.75);
    }

    #[test]
    fn empty_box_rejected() {
        assert!(attribute_joint_distribution(&AttributeBox { items: vec![] }).is_err());
    }

    proptest! {
        #[test]
        fn urn_pmf_normalized(red in 0u32..12, black in 0u32..12, draws in 0u32..12, with in any::<bool>()) {
            prop_assume!(red + black >= 1);
            prop_assume!(with || draws <= red + black);
            let spec = UrnSpec { red, black, draws, with_replacement: with };
            let total: f64 = urn_distribution(&spec).unwrap().weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn marginals_match_direct_counting(m in proptest::collection::vec(0u32..5, 4)) {
            prop_assume!(m.iter().sum::<u32>() > 0);
            let kinds = [(1, 1), (1, 0), (0, 1), (0, 0)];
            let items: Vec<_> = kinds.iter().zip(&m)
                .filter(|(_, &c)| c > 0)
                .map(|(&(c, s), &k)| (Attributes::new(c, s), k))
                .collect();
            let b = AttributeBox { items };
            let j = attribute_joint_distribution(&b).unwrap();
            let total = f64::from(m.iter().sum::<u32>());
            let red = f64::from(m[0] + m[1]) / total;
            let big = f64::from(m[0] + m[2]) / total;
            prop_assert!((j.color[1] - red).abs() < 1e-12);
            prop_assert!((j.size[1] - big).abs() < 1e-12);
            let s: f64 = j.joint.iter().flatten().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
