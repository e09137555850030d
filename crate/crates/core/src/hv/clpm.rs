//! Contextual local models: outcomes are produced locally and
//! deterministically from the signal parameters `λ₁`/`λ₂` and the intrinsic
//! parameters `λₓ`/`λ_y` of each measuring apparatus at the moment of
//! measurement.
//!
//! Locality is structural: [`ClpmModel::respond_a`] only receives Alice's
//! signal, her apparatus parameters and her setting.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hv::event::{Event, Outcome, SettingPair};
use crate::sampling::{par_blocks, sample_uniform_angle, DiscreteDistribution, RngStream};

/// Local response of one side: the outcome and, for time-tagging models, the
/// delay after emission at which the click is registered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub outcome: Outcome,
    pub delay: Option<f64>,
}

impl Detection {
    pub fn untimed(outcome: Outcome) -> Self {
        Self {
            outcome,
            delay: None,
        }
    }
}

pub trait ClpmModel: Sync {
    type Setting: Copy + Send + Sync;
    type SignalA: Send;
    type SignalB: Send;
    type ParamA: Send;
    type ParamB: Send;

    /// Draw `(λ₁, λ₂)` from the source.
    fn emit(&self, rng: &mut RngStream) -> (Self::SignalA, Self::SignalB);
    /// Draw `λₓ` for Alice's apparatus at setting `x`.
    fn apparatus_a(&self, x: Self::Setting, rng: &mut RngStream) -> Self::ParamA;
    /// Draw `λ_y` for Bob's apparatus at setting `y`.
    fn apparatus_b(&self, y: Self::Setting, rng: &mut RngStream) -> Self::ParamB;
    fn respond_a(
        &self,
        signal: &Self::SignalA,
        param: &Self::ParamA,
        x: Self::Setting,
    ) -> Detection;
    fn respond_b(
        &self,
        signal: &Self::SignalB,
        param: &Self::ParamB,
        y: Self::Setting,
    ) -> Detection;

    /// Time between consecutive emissions, in delay units.
    fn emission_spacing(&self) -> f64 {
        1.0
    }
}

/// Both sides' events for one setting pair, one event per emission and side
/// (outcome `NoClick` included).
#[derive(Debug, Clone, PartialEq)]
pub struct ClpmRun {
    pub alice: Vec<Event>,
    pub bob: Vec<Event>,
}

fn time_tag(trial: u64, spacing: f64, d: &Detection) -> f64 {
    match d.delay {
        Some(delay) => trial as f64 * spacing + delay,
        None => trial as f64,
    }
}

/// Event-by-event run: per emission draw `(λ₁, λ₂)`, then `(λₓ, λ_y)`, then
/// evaluate both responses.
pub fn clpm_simulate<M: ClpmModel>(
    model: &M,
    settings: SettingPair<M::Setting>,
    n_emissions: u64,
    rng: &RngStream,
) -> Result<ClpmRun> {
    if n_emissions == 0 {
        return Err(Error::InvalidSpec("n_emissions must be at least 1".into()));
    }
    let spacing = model.emission_spacing();
    let pairs = par_blocks(n_emissions, rng, |range, s| {
        range
            .map(|t| {
                let (sa, sb) = model.emit(s);
                let pa = model.apparatus_a(settings.a, s);
                let pb = model.apparatus_b(settings.b, s);
                let da = model.respond_a(&sa, &pa, settings.a);
                let db = model.respond_b(&sb, &pb, settings.b);
                (
                    Event {
                        trial: t,
                        time_tag: time_tag(t, spacing, &da),
                        setting: settings.label_a,
                        outcome: da.outcome,
                    },
                    Event {
                        trial: t,
                        time_tag: time_tag(t, spacing, &db),
                        setting: settings.label_b,
                        outcome: db.outcome,
                    },
                )
            })
            .collect()
    });
    let (alice, bob) = pairs.into_iter().unzip();
    Ok(ClpmRun { alice, bob })
}

/// Output of the marginalized protocol: one averaged product per source draw.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalizedRun {
    pub value: f64,
    pub se: f64,
    pub outputs: Vec<f64>,
}

/// The seven-step marginalized protocol: per source draw, `k` apparatus
/// draws on each side, averaged responses `Ā`, `B̄`, and their product as the
/// block output. With `k = 1` it consumes randomness exactly like
/// [`clpm_simulate`], so outputs coincide with per-emission products.
pub fn clpm_marginalized_run<M: ClpmModel>(
    model: &M,
    settings: SettingPair<M::Setting>,
    n: u64,
    k: u32,
    rng: &RngStream,
) -> Result<MarginalizedRun> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidSpec("N and k must be at least 1".into()));
    }
    let outputs = par_blocks(n, rng, |range, s| {
        range
            .map(|_| {
                let (sa, sb) = model.emit(s);
                let (mut sum_a, mut sum_b) = (0.0, 0.0);
                for _ in 0..k {
                    let pa = model.apparatus_a(settings.a, s);
                    let pb = model.apparatus_b(settings.b, s);
                    sum_a += model.respond_a(&sa, &pa, settings.a).outcome.as_f64();
                    sum_b += model.respond_b(&sb, &pb, settings.b).outcome.as_f64();
                }
                (sum_a / f64::from(k)) * (sum_b / f64::from(k))
            })
            .collect()
    });
    let m = outputs.len() as f64;
    let value = outputs.iter().sum::<f64>() / m;
    let var = if outputs.len() > 1 {
        outputs.iter().map(|o| (o - value).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(MarginalizedRun {
        value,
        se: (var / m).sqrt(),
        outputs,
    })
}

/// Parameters of the default photon kernel.
///
/// The source emits a shared polarization angle `θ` (Bob's photon at
/// `θ + bob_offset`) and a per-side jitter `u`. Each detector carries a
/// threshold variable `v`. A detector clicks unless
/// `cos² 2(θ − setting) < click_threshold · v`; the PBS port is the sign of
/// `cos 2(θ − setting)`. The click is registered
/// `u · max_delay · |sin 2(θ − setting)|^delay_exponent` after emission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhotonKernel {
    pub bob_offset: f64,
    pub delay_exponent: f64,
    pub max_delay: f64,
    pub click_threshold: f64,
    pub emission_spacing: f64,
}

impl Default for PhotonKernel {
    /// Committed fixture; with a coincidence window of width
    /// [`PhotonKernel::DEFAULT_WINDOW`] the coincident pairs follow
    /// `-cos 2(a - b)` to within about 0.01.
    fn default() -> Self {
        Self {
            bob_offset: FRAC_PI_2,
            delay_exponent: 4.0,
            max_delay: 1.0,
            click_threshold: 0.01,
            emission_spacing: 4.0,
        }
    }
}

impl PhotonKernel {
    /// Coincidence window width tuned together with the default kernel.
    pub const DEFAULT_WINDOW: f64 = 0.14;

    pub fn validate(&self) -> Result<()> {
        let ok = self.delay_exponent >= 0.0
            && self.max_delay >= 0.0
            && (0.0..=1.0).contains(&self.click_threshold)
            && self.emission_spacing > self.max_delay
            && self.bob_offset.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "invalid photon kernel {self:?}"
            )))
        }
    }

    fn detect(&self, angle: f64, jitter: f64, threshold_var: f64, setting: f64) -> Detection {
        let (s, c) = (2.0 * (angle - setting)).sin_cos();
        let outcome = if c * c < self.click_threshold * threshold_var {
            Outcome::NoClick
        } else {
            Outcome::from_sign(c)
        };
        Detection {
            outcome,
            delay: Some(jitter * self.max_delay * s.abs().powf(self.delay_exponent)),
        }
    }

    /// Grid version for exact sums: `resolution` midpoints for `θ` and for the
    /// threshold variable. Delays do not enter expectations and are dropped.
    pub fn discretize(&self, settings: &[(u8, f64)], resolution: usize) -> Result<FiniteClpm> {
        self.validate()?;
        if resolution == 0 {
            return Err(Error::InvalidSpec("resolution must be positive".into()));
        }
        let grid: Vec<f64> = (0..resolution)
            .map(|i| (i as f64 + 0.5) / resolution as f64)
            .collect();
        let source = DiscreteDistribution::uniform((0..resolution).map(|i| (i, i)).collect())?;
        let apparatus = DiscreteDistribution::uniform((0..resolution).collect())?;
        let mut resp_a = BTreeMap::new();
        let mut resp_b = BTreeMap::new();
        for &(label, angle) in settings {
            let table = |offset: f64| -> Vec<Vec<Outcome>> {
                grid.iter()
                    .map(|g| {
                        let theta = g * PI + offset;
                        grid.iter()
                            .map(|v| self.detect(theta, 0.0, *v, angle).outcome)
                            .collect()
                    })
                    .collect()
            };
            resp_a.insert(label, table(0.0));
            resp_b.insert(label, table(self.bob_offset));
        }
        let app: BTreeMap<u8, _> = settings
            .iter()
            .map(|&(l, _)| (l, apparatus.clone()))
            .collect();
        FiniteClpm::new(source, app.clone(), app, resp_a, resp_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonSignal {
    pub angle: f64,
    pub jitter: f64,
}

impl ClpmModel for PhotonKernel {
    type Setting = f64;
    type SignalA = PhotonSignal;
    type SignalB = PhotonSignal;
    type ParamA = f64;
    type ParamB = f64;

    fn emit(&self, rng: &mut RngStream) -> (PhotonSignal, PhotonSignal) {
        let theta = sample_uniform_angle(rng);
        let a = PhotonSignal {
            angle: theta,
            jitter: rng.uniform(),
        };
        let b = PhotonSignal {
            angle: theta + self.bob_offset,
            jitter: rng.uniform(),
        };
        (a, b)
    }

    fn apparatus_a(&self, _x: f64, rng: &mut RngStream) -> f64 {
        rng.uniform()
    }

    fn apparatus_b(&self, _y: f64, rng: &mut RngStream) -> f64 {
        rng.uniform()
    }

    fn respond_a(&self, s: &PhotonSignal, v: &f64, x: f64) -> Detection {
        self.detect(s.angle, s.jitter, *v, x)
    }

    fn respond_b(&self, s: &PhotonSignal, v: &f64, y: f64) -> Detection {
        self.detect(s.angle, s.jitter, *v, y)
    }

    fn emission_spacing(&self) -> f64 {
        self.emission_spacing
    }
}

/// A contextual model with finite supports, so expectations can be summed
/// exactly. Hidden variables are indices; settings are labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteClpm {
    source: DiscreteDistribution<(usize, usize)>,
    apparatus_a: BTreeMap<u8, DiscreteDistribution<usize>>,
    apparatus_b: BTreeMap<u8, DiscreteDistribution<usize>>,
    /// `[setting][λ₁][λₓ]`
    response_a: BTreeMap<u8, Vec<Vec<Outcome>>>,
    response_b: BTreeMap<u8, Vec<Vec<Outcome>>>,
}

impl FiniteClpm {
    /// Checks that responses are total over every reachable
    /// `(setting, λ, apparatus parameter)`.
    pub fn new(
        source: DiscreteDistribution<(usize, usize)>,
        apparatus_a: BTreeMap<u8, DiscreteDistribution<usize>>,
        apparatus_b: BTreeMap<u8, DiscreteDistribution<usize>>,
        response_a: BTreeMap<u8, Vec<Vec<Outcome>>>,
        response_b: BTreeMap<u8, Vec<Vec<Outcome>>>,
    ) -> Result<Self> {
        let check = |app: &BTreeMap<u8, DiscreteDistribution<usize>>,
                     resp: &BTreeMap<u8, Vec<Vec<Outcome>>>,
                     signals: Vec<usize>,
                     side: &str|
         -> Result<()> {
            for (x, dist) in app {
                let table = resp.get(x).ok_or_else(|| {
                    Error::InvalidSpec(format!("{side}: no response for setting {x}"))
                })?;
                for &l in &signals {
                    let row = table.get(l).ok_or_else(|| {
                        Error::InvalidSpec(format!("{side}: no response row for λ = {l}"))
                    })?;
                    if dist.support().iter().any(|&p| p >= row.len()) {
                        return Err(Error::InvalidSpec(format!(
                            "{side}: response not defined for every apparatus parameter"
                        )));
                    }
                }
            }
            Ok(())
        };
        check(
            &apparatus_a,
            &response_a,
            source.support().iter().map(|s| s.0).collect(),
            "alice",
        )?;
        check(
            &apparatus_b,
            &response_b,
            source.support().iter().map(|s| s.1).collect(),
            "bob",
        )?;
        Ok(Self {
            source,
            apparatus_a,
            apparatus_b,
            response_a,
            response_b,
        })
    }

    /// Random model with settings `{1, 2}`, `n_signal` values per side and
    /// `n_param` apparatus values; responses uniform over `{-1, 0, +1}`.
    pub fn random(n_signal: usize, n_param: usize, rng: &mut RngStream) -> Self {
        let pairs: Vec<(usize, usize)> = (0..n_signal)
            .flat_map(|i| (0..n_signal).map(move |j| (i, j)))
            .collect();
        let w = pairs.iter().map(|_| -(1.0 - rng.uniform()).ln()).collect();
        let source = DiscreteDistribution::from_unnormalized(pairs, w).expect("positive");
        let app = |rng: &mut RngStream| -> BTreeMap<u8, DiscreteDistribution<usize>> {
            (1..=2u8)
                .map(|x| {
                    let w = (0..n_param).map(|_| -(1.0 - rng.uniform()).ln()).collect();
                    (
                        x,
                        DiscreteDistribution::from_unnormalized((0..n_param).collect(), w).unwrap(),
                    )
                })
                .collect()
        };
        let (aa, ab) = (app(rng), app(rng));
        let resp = |rng: &mut RngStream| -> BTreeMap<u8, Vec<Vec<Outcome>>> {
            (1..=2u8)
                .map(|x| {
                    let t = (0..n_signal)
                        .map(|_| {
                            (0..n_param)
                                .map(|_| {
                                    [Outcome::Minus, Outcome::NoClick, Outcome::Plus][rng.index(3)]
                                })
                                .collect()
                        })
                        .collect();
                    (x, t)
                })
                .collect()
        };
        let (ra, rb) = (resp(rng), resp(rng));
        Self::new(source, aa, ab, ra, rb).expect("total by construction")
    }

    pub fn source(&self) -> &DiscreteDistribution<(usize, usize)> {
        &self.source
    }

    fn local_law(
        app: &BTreeMap<u8, DiscreteDistribution<usize>>,
        resp: &BTreeMap<u8, Vec<Vec<Outcome>>>,
        x: u8,
        signal: usize,
    ) -> Result<[f64; 3]> {
        let dist = app
            .get(&x)
            .ok_or_else(|| Error::InvalidSpec(format!("no apparatus for setting {x}")))?;
        let row = &resp[&x][signal];
        let mut p = [0.0; 3];
        for (&param, w) in dist.iter() {
            p[(row[param].value() + 1) as usize] += w;
        }
        Ok(p)
    }

    /// The 9-point outcome law `P(a, b | x, y)`, indexed `[a + 1][b + 1]`.
    pub fn joint_outcome_distribution(&self, x: u8, y: u8) -> Result<[[f64; 3]; 3]> {
        let mut table = [[0.0; 3]; 3];
        for (&(l1, l2), p) in self.source.iter() {
            let pa = Self::local_law(&self.apparatus_a, &self.response_a, x, l1)?;
            let pb = Self::local_law(&self.apparatus_b, &self.response_b, y, l2)?;
            for (ia, qa) in pa.iter().enumerate() {
                for (ib, qb) in pb.iter().enumerate() {
                    table[ia][ib] += p * qa * qb;
                }
            }
        }
        Ok(table)
    }

    /// Exact `E(A | x)`; it has no argument for Bob's setting.
    pub fn alice_marginal_exact(&self, x: u8) -> Result<f64> {
        self.source
            .iter()
            .map(|(&(l1, _), p)| {
                let q = Self::local_law(&self.apparatus_a, &self.response_a, x, l1)?;
                Ok(p * (q[2] - q[0]))
            })
            .sum()
    }
}

impl ClpmModel for FiniteClpm {
    type Setting = u8;
    type SignalA = usize;
    type SignalB = usize;
    type ParamA = usize;
    type ParamB = usize;

    fn emit(&self, rng: &mut RngStream) -> (usize, usize) {
        *self.source.sample(rng)
    }

    fn apparatus_a(&self, x: u8, rng: &mut RngStream) -> usize {
        *self.apparatus_a[&x].sample(rng)
    }

    fn apparatus_b(&self, y: u8, rng: &mut RngStream) -> usize {
        *self.apparatus_b[&y].sample(rng)
    }

    fn respond_a(&self, l1: &usize, lx: &usize, x: u8) -> Detection {
        Detection::untimed(self.response_a[&x][*l1][*lx])
    }

    fn respond_b(&self, l2: &usize, ly: &usize, y: u8) -> Detection {
        Detection::untimed(self.response_b[&y][*l2][*ly])
    }
}

/// Exact `E(AB | i, j) = Σ aᵢ b_j P(aᵢ, b_j)` over the 9-point outcome space.
pub fn clpm_expectation_exact(model: &FiniteClpm, i: u8, j: u8) -> Result<f64> {
    let t = model.joint_outcome_distribution(i, j)?;
    let mut e = 0.0;
    for (ia, row) in t.iter().enumerate() {
        for (ib, p) in row.iter().enumerate() {
            e += (ia as f64 - 1.0) * (ib as f64 - 1.0) * p;
        }
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::derive_stream;

    fn products(run: &ClpmRun) -> Vec<f64> {
        run.alice
            .iter()
            .zip(&run.bob)
            .map(|(a, b)| a.outcome.as_f64() * b.outcome.as_f64())
            .collect()
    }

    fn mean_se(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    /// Brute-force sum over every `(λ₁, λ₂, λₓ, λ_y)`.
    fn brute_force(m: &FiniteClpm, x: u8, y: u8) -> f64 {
        let mut e = 0.0;
        for (&(l1, l2), p) in m.source.iter() {
            for (&lx, px) in m.apparatus_a[&x].iter() {
                for (&ly, py) in m.apparatus_b[&y].iter() {
                    let a = m.respond_a(&l1, &lx, x).outcome.as_f64();
                    let b = m.respond_b(&l2, &ly, y).outcome.as_f64();
                    e += p * px * py * a * b;
                }
            }
        }
        e
    }

    fn constant(o: Outcome) -> FiniteClpm {
        let src = DiscreteDistribution::point_mass((0, 0));
        let app = BTreeMap::from([(1, DiscreteDistribution::uniform(vec![0, 1]).unwrap())]);
        let resp = BTreeMap::from([(1, vec![vec![o, o]])]);
        FiniteClpm::new(src, app.clone(), app, resp.clone(), resp).unwrap()
    }

    #[test]
    fn constant_responses() {
        let m = constant(Outcome::Plus);
        let run = clpm_simulate(&m, SettingPair::new(1, 1), 500, &derive_stream(0, "c")).unwrap();
        assert!(run
            .alice
            .iter()
            .chain(&run.bob)
            .all(|e| e.outcome == Outcome::Plus));
        assert_eq!(run.alice[17].time_tag, 17.0);
        assert_eq!(
            clpm_expectation_exact(&constant(Outcome::NoClick), 1, 1).unwrap(),
            0.0
        );
    }

    #[test]
    fn two_point_lambda() {
        let p = 0.3;
        let src = DiscreteDistribution::new(vec![(0, 0), (1, 1)], vec![p, 1.0 - p]).unwrap();
        let app = BTreeMap::from([(1, DiscreteDistribution::point_mass(0))]);
        let ra = BTreeMap::from([(1, vec![vec![Outcome::Plus], vec![Outcome::Plus]])]);
        let rb = BTreeMap::from([(1, vec![vec![Outcome::Plus], vec![Outcome::Minus]])]);
        let m = FiniteClpm::new(src, app.clone(), app, ra, rb).unwrap();
        let e = clpm_expectation_exact(&m, 1, 1).unwrap();
        assert!((e - (2.0 * p - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn exact_matches_brute_force_and_simulation() {
        let mut r = derive_stream(4, "clpm/random");
        for case in 0..50 {
            let m = FiniteClpm::random(2 + case % 3, 1 + case % 4, &mut r);
            for (x, y) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
                let exact = clpm_expectation_exact(&m, x, y).unwrap();
                assert!((exact - brute_force(&m, x, y)).abs() < 1e-12);
            }
            let rng = derive_stream(case as u64, "clpm/sim");
            let run = clpm_simulate(&m, SettingPair::new(2, 1), 20_000, &rng).unwrap();
            let (mean, se) = mean_se(&products(&run));
            let exact = clpm_expectation_exact(&m, 2, 1).unwrap();
            assert!(
                (mean - exact).abs() <= 3.0 * se + 1e-9,
                "case {case}: {mean} vs {exact}"
            );
        }
    }

    #[test]
    fn incomplete_responses_rejected() {
        let src = DiscreteDistribution::point_mass((0, 1));
        let app = BTreeMap::from([(1, DiscreteDistribution::uniform(vec![0, 1]).unwrap())]);
        let short = BTreeMap::from([(1, vec![vec![Outcome::Plus]])]);
        assert!(FiniteClpm::new(src, app.clone(), app, short.clone(), short).is_err());
    }

    #[test]
    fn photon_kernel_singles_are_balanced() {
        let k = PhotonKernel::default();
        let n = 100_000;
        let run = clpm_simulate(&k, SettingPair::new(0.3, 1.1), n, &derive_stream(5, "p")).unwrap();
        let a: Vec<f64> = run.alice.iter().map(|e| e.outcome.as_f64()).collect();
        let (m, se) = mean_se(&a);
        assert!(m.abs() < 3.0 * se, "E(A|x) = {m}");
        // time tags increase and stay inside their emission slot
        assert!(run.alice.windows(2).all(|w| w[0].time_tag < w[1].time_tag));
    }

    #[test]
    fn photon_kernel_exact_grid_agrees_with_simulation() {
        let k = PhotonKernel::default();
        let (a, b) = (0.0, PI / 8.0);
        let grid = k.discretize(&[(1, a), (2, b)], 360).unwrap();
        let exact = clpm_expectation_exact(&grid, 1, 2).unwrap();
        let run =
            clpm_simulate(&k, SettingPair::new(a, b), 100_000, &derive_stream(6, "p")).unwrap();
        let (mean, se) = mean_se(&products(&run));
        assert!((mean - exact).abs() < 3.0 * se + 2e-3, "{mean} vs {exact}");
    }

    #[test]
    fn marginalized_k1_coincides_with_event_products() {
        let k = PhotonKernel::default();
        let rng = derive_stream(7, "clpm");
        let s = SettingPair::new(0.2, 0.9);
        let run = clpm_simulate(&k, s, 5_000, &rng).unwrap();
        let marg = clpm_marginalized_run(&k, s, 5_000, 1, &rng).unwrap();
        assert_eq!(marg.outputs, products(&run));
    }

    #[test]
    fn marginalized_constant_responses() {
        let m = constant(Outcome::Minus);
        let marg =
            clpm_marginalized_run(&m, SettingPair::new(1, 1), 100, 17, &derive_stream(8, "m"))
                .unwrap();
        assert!(marg.outputs.iter().all(|&o| o == 1.0));
    }

    #[test]
    fn marginalized_matches_exact_with_fractional_outputs() {
        let k = PhotonKernel::default();
        let grid = k.discretize(&[(1, 0.0), (2, PI / 8.0)], 360).unwrap();
        let exact = clpm_expectation_exact(&grid, 1, 2).unwrap();
        let marg = clpm_marginalized_run(
            &k,
            SettingPair::new(0.0, PI / 8.0),
            10_000,
            100,
            &derive_stream(9, "m"),
        )
        .unwrap();
        assert!((marg.value - exact).abs() < 3.0 * marg.se + 2e-3);
        assert!(marg.outputs.iter().any(|o| ![-1.0, 0.0, 1.0].contains(o)));
        assert!(marg.outputs.iter().all(|o| (-1.0..=1.0).contains(o)));
    }
}
