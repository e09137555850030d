//! Executes a validated configuration and collects everything that gets
//! written out.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use spce_core::classical::{bertrand_estimate, urn_distribution, urn_simulate, BertrandMethod};
use spce_core::hv::{
    clpm_expectation_exact, clpm_marginalized_run, clpm_simulate, lrhvm_expectation,
    lrhvm_simulate, shvm_expectation_exact, shvm_run, JointOutcomeTable, ShvmSpec,
};
use spce_core::inference::{
    chsh_statistic, correlation_estimate, fine_structure_tests, finite_sample_bound,
    no_signalling_test, purity_test, LocalRun,
};
use spce_core::pairing::{
    charlie_generate, pair_by_emission, pair_random, pair_shift, pair_window,
};
use spce_core::quantum::{quantum_simulate, smeared_singlet_correlation};
use spce_core::switching::{
    conditional_embedding, empirical_conditional_tables, switching_conditional_expectation,
    switching_local_runs, switching_simulate,
};
use spce_core::{
    ChshAngles, CorrelationEstimate, DensityMatrix, DiscreteDistribution, Event, Outcome,
    PairTable, PairedSample, PairingPolicy, RngStream, SettingPair, Side, SwitchingTargets,
    TestReport, TimeSeries, ZeroPolicy,
};

use crate::config::{
    ExperimentConfig, LrhvmTable, ModelKind, ModelParams, OutputFormat, Settings,
    SwitchingTargetKind, TestName, ValidConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{context}: {source}")]
    Model {
        context: String,
        source: spce_core::Error,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, RunError>;
}

impl<T> Context<T> for spce_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, RunError> {
        self.map_err(|source| RunError::Model {
            context: what(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub label: String,
    pub setting_a: Option<u8>,
    pub setting_b: Option<u8>,
    pub angle_a: Option<f64>,
    pub angle_b: Option<f64>,
    pub value: f64,
    pub se: f64,
    pub n: usize,
    /// Model expectation over all emissions, when it is available in closed
    /// form or as an exact sum.
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshRow {
    pub s: f64,
    pub se: f64,
    pub exact: Option<f64>,
    pub max_over_roles: f64,
    /// Threshold a local model exceeds with probability at most 0.01.
    pub local_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRow {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub alpha: Option<f64>,
    pub decision: String,
    pub degenerate: bool,
}

impl TestRow {
    fn from_report(r: TestReport, suffix: &str) -> Self {
        Self {
            name: format!("{}{suffix}", r.test_name),
            statistic: r.statistic,
            p_value: Some(r.p_value),
            alpha: Some(r.alpha),
            decision: if r.rejects() {
                "reject"
            } else {
                "fail_to_reject"
            }
            .into(),
            degenerate: r.degenerate,
        }
    }

    pub fn rejects(&self) -> bool {
        self.decision == "reject"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub seed: u64,
    pub model: String,
    pub estimates: Vec<EstimateRow>,
    pub chsh: Option<ChshRow>,
    pub tests: Vec<TestRow>,
}

/// A CSV body without its metadata line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: String,
    pub rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub events: Option<Table>,
    pub pairs: Option<Table>,
    pub records: Option<Table>,
}

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float")
}

pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{}", sig12(x))
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// SHA-256 of the canonical JSON form of the configuration. Output location
/// and formats do not enter the hash.
pub fn config_hash(raw: &ExperimentConfig) -> String {
    let mut c = raw.clone();
    c.output_dir = None;
    c.formats = vec![OutputFormat::Csv, OutputFormat::Json];
    let canonical = serde_json::to_string(&c).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Per-side setting labels: distinct angles numbered from 1 in order of
/// first appearance, or the indices themselves.
fn setting_labels(settings: &[Settings]) -> Vec<(u8, u8)> {
    let mut seen_a: Vec<f64> = Vec::new();
    let mut seen_b: Vec<f64> = Vec::new();
    let label = |seen: &mut Vec<f64>, x: f64| -> u8 {
        let pos = seen.iter().position(|&y| y == x).unwrap_or_else(|| {
            seen.push(x);
            seen.len() - 1
        });
        (pos + 1) as u8
    };
    settings
        .iter()
        .map(|s| match *s {
            Settings::Angles(a, b) => (label(&mut seen_a, a), label(&mut seen_b, b)),
            Settings::Indices(i, j) => (i, j),
        })
        .collect()
}

fn angles(s: Settings) -> (Option<f64>, Option<f64>) {
    match s {
        Settings::Angles(a, b) => (Some(a), Some(b)),
        Settings::Indices(..) => (None, None),
    }
}

fn outcome_code(o: Outcome) -> i8 {
    o.value()
}

fn event_rows(
    alice: &[Event],
    bob: &[Event],
    offset: u64,
    time_offset: f64,
    rows: &mut Vec<String>,
) {
    for (ea, eb) in alice.iter().zip(bob) {
        for (side, e) in [(Side::Alice, ea), (Side::Bob, eb)] {
            rows.push(format!(
                "{},{},{},{},{}",
                e.trial + offset,
                side.as_str(),
                e.setting,
                fmt_num(e.time_tag + time_offset),
                outcome_code(e.outcome)
            ));
        }
    }
}

fn pair_rows(sample: &PairedSample, la: u8, lb: u8, rows: &mut Vec<String>) {
    for p in &sample.pairs {
        rows.push(format!(
            "{la},{lb},{},{},{},{},{},{}",
            p.index_a,
            p.index_b,
            fmt_opt(p.t_a),
            fmt_opt(p.t_b),
            fmt_num(p.a),
            fmt_num(p.b)
        ));
    }
}

fn series_of(events: &[Event]) -> spce_core::Result<TimeSeries> {
    TimeSeries::new(
        events.iter().map(|e| e.outcome.as_f64()).collect(),
        Some(events.iter().map(|e| e.time_tag).collect()),
    )
}

fn pair_events(
    alice: &[Event],
    bob: &[Event],
    policy: PairingPolicy,
    rng: &RngStream,
) -> spce_core::Result<PairedSample> {
    match policy {
        PairingPolicy::Emission => Ok(pair_by_emission(alice, bob)),
        PairingPolicy::Window(w) => pair_window(alice, bob, w),
        PairingPolicy::Shift { k } => pair_shift(&series_of(alice)?, &series_of(bob)?, k),
        PairingPolicy::Random { n_pairs } => pair_random(
            &series_of(alice)?,
            &series_of(bob)?,
            n_pairs,
            &mut rng.fork("pairing"),
        ),
    }
}

/// Everything one setting pair contributes.
struct SettingOutcome {
    estimates: Vec<EstimateRow>,
    events: Option<(Vec<Event>, Vec<Event>)>,
    pairs: Option<PairedSample>,
    records: Vec<String>,
    local: Vec<LocalRun>,
}

struct Shared {
    rho: DensityMatrix,
    lrhvm: Option<JointOutcomeTable>,
    shvm: Option<ShvmSpec>,
}

fn local_runs_from_events(alice: &[Event], bob: &[Event], la: u8, lb: u8) -> Vec<LocalRun> {
    let values = |ev: &[Event]| ev.iter().map(|e| e.outcome.as_f64()).collect();
    vec![
        LocalRun {
            side: Side::Alice,
            local_setting: la,
            remote_setting: lb,
            values: values(alice),
        },
        LocalRun {
            side: Side::Bob,
            local_setting: lb,
            remote_setting: la,
            values: values(bob),
        },
    ]
}

fn run_setting(
    cfg: &ValidConfig,
    shared: &Shared,
    index: usize,
    setting: Settings,
    (la, lb): (u8, u8),
    rng: &RngStream,
) -> Result<SettingOutcome, RunError> {
    let n = cfg.emissions;
    let ctx = || format!("setting pair {} {:?}", index + 1, setting);
    let (angle_a, angle_b) = angles(setting);
    let row = |label: &str, est: CorrelationEstimate, exact: Option<f64>| EstimateRow {
        label: label.to_string(),
        setting_a: Some(la),
        setting_b: Some(lb),
        angle_a,
        angle_b,
        value: est.value,
        se: est.se,
        n: est.n,
        exact,
    };
    let pair_ab = |s: Settings| match s {
        Settings::Angles(a, b) => (a, b),
        Settings::Indices(i, j) => (f64::from(i), f64::from(j)),
    };
    let (a, b) = pair_ab(setting);
    let (events, exact) = match &cfg.params {
        ModelParams::QuantumOracle { smearing } => {
            let ev = quantum_simulate(
                &shared.rho,
                SettingPair::new(a, b).labeled(la, lb),
                n,
                *smearing,
                rng,
            )
            .context(ctx)?;
            (ev, Some(smeared_singlet_correlation(a, b, *smearing)))
        }
        ModelParams::Lrhvm { .. } => {
            let table = shared.lrhvm.as_ref().expect("table built");
            let ev = lrhvm_simulate(table, (la, lb), n, rng).context(ctx)?;
            (ev, Some(lrhvm_expectation(table, la, lb).context(ctx)?))
        }
        ModelParams::Clpm { kernel } => {
            let run = clpm_simulate(kernel, SettingPair::new(a, b).labeled(la, lb), n, rng)
                .context(ctx)?;
            ((run.alice, run.bob), None)
        }
        ModelParams::Shvm { k_repeats, .. } => {
            let spec = shared.shvm.as_ref().expect("spec built");
            let est = shvm_run(spec, (la, lb), n, *k_repeats, rng).context(ctx)?;
            let exact = shvm_expectation_exact(spec, la, lb).context(ctx)?;
            let records = est
                .records
                .iter()
                .enumerate()
                .map(|(t, r)| {
                    format!(
                        "{la},{lb},{t},{},{},{}",
                        r.label,
                        fmt_num(r.mean_a),
                        fmt_num(r.mean_b)
                    )
                })
                .collect();
            let local = vec![
                LocalRun {
                    side: Side::Alice,
                    local_setting: la,
                    remote_setting: lb,
                    values: est.records.iter().map(|r| r.mean_a).collect(),
                },
                LocalRun {
                    side: Side::Bob,
                    local_setting: lb,
                    remote_setting: la,
                    values: est.records.iter().map(|r| r.mean_b).collect(),
                },
            ];
            let ce = CorrelationEstimate {
                value: est.value,
                n: est.records.len(),
                se: est.se,
            };
            return Ok(SettingOutcome {
                estimates: vec![row("shvm", ce, Some(exact))],
                events: None,
                pairs: None,
                records,
                local,
            });
        }
        ModelParams::ClpmMarginalized {
            kernel,
            resolution,
            k,
        } => {
            let pair = SettingPair::new(a, b).labeled(la, lb);
            let marg = clpm_marginalized_run(kernel, pair, n, *k, rng).context(ctx)?;
            let grid = kernel
                .discretize(&[(1, a), (2, b)], *resolution)
                .context(ctx)?;
            let exact = clpm_expectation_exact(&grid, 1, 2).context(ctx)?;
            let run = clpm_simulate(kernel, pair, n, &rng.fork("event-by-event")).context(ctx)?;
            let direct =
                correlation_estimate(&pair_by_emission(&run.alice, &run.bob), ZeroPolicy::Include)
                    .context(ctx)?;
            let records = marg
                .outputs
                .iter()
                .enumerate()
                .map(|(t, o)| format!("{la},{lb},{t},{}", fmt_num(*o)))
                .collect();
            let ce = CorrelationEstimate {
                value: marg.value,
                n: marg.outputs.len(),
                se: marg.se,
            };
            return Ok(SettingOutcome {
                estimates: vec![
                    row("marginalized", ce, Some(exact)),
                    row("event_by_event", direct, Some(exact)),
                ],
                events: None,
                pairs: None,
                records,
                local: Vec::new(),
            });
        }
        _ => unreachable!("handled by the model-level runners"),
    };
    let (alice, bob) = events;
    let policy = cfg.pairing.expect("event models have a pairing policy");
    let pairs = pair_events(&alice, &bob, policy, rng).context(ctx)?;
    let est = correlation_estimate(&pairs, cfg.raw.estimator_zero_policy).context(ctx)?;
    Ok(SettingOutcome {
        estimates: vec![row("correlation", est, exact)],
        local: local_runs_from_events(&alice, &bob, la, lb),
        events: Some((alice, bob)),
        pairs: Some(pairs),
        records: Vec::new(),
    })
}

fn series_tests(
    cfg: &ValidConfig,
    series: &[(String, TimeSeries)],
    tests: &mut Vec<TestRow>,
) -> Result<(), RunError> {
    for (suffix, s) in series {
        if cfg.raw.tests.contains(&TestName::Purity) {
            let r = purity_test(s, cfg.purity_block_size, cfg.alpha)
                .context(|| "purity test".into())?;
            tests.push(TestRow::from_report(r, suffix));
        }
        if cfg.raw.tests.contains(&TestName::FineStructure) {
            for r in fine_structure_tests(s, cfg.alpha).context(|| "fine-structure tests".into())? {
                tests.push(TestRow::from_report(r, suffix));
            }
        }
    }
    Ok(())
}

fn no_signalling_rows(
    cfg: &ValidConfig,
    local: &[LocalRun],
    tests: &mut Vec<TestRow>,
) -> Result<(), RunError> {
    if cfg.raw.tests.contains(&TestName::NoSignalling) {
        for r in no_signalling_test(local, cfg.alpha).context(|| "no-signalling test".into())? {
            tests.push(TestRow::from_report(r, ""));
        }
    }
    Ok(())
}

fn chsh_row(estimates: &[EstimateRow], n_per_setting: Option<u64>) -> Option<ChshRow> {
    if estimates.len() < 4 {
        return None;
    }
    let e: Vec<CorrelationEstimate> = estimates[..4]
        .iter()
        .map(|r| CorrelationEstimate {
            value: r.value,
            n: r.n,
            se: r.se,
        })
        .collect();
    let report = chsh_statistic(e[0], e[1], e[2], e[3]);
    let exact = estimates[..4]
        .iter()
        .map(|r| r.exact)
        .collect::<Option<Vec<f64>>>()
        .map(|x| (x[0] - x[1]).abs() + (x[2] + x[3]).abs());
    Some(ChshRow {
        s: report.s_value,
        se: report.s_se,
        exact,
        max_over_roles: report.max_over_roles(),
        local_bound: n_per_setting.and_then(|n| finite_sample_bound(n, 0.01).ok()),
    })
}

fn root_stream(cfg: &ValidConfig) -> RngStream {
    RngStream::new(cfg.raw.seed, cfg.model.name())
}

fn run_per_setting(cfg: &ValidConfig, hash: &str) -> Result<RunOutput, RunError> {
    let root = root_stream(cfg);
    let shared = Shared {
        rho: DensityMatrix::singlet(),
        lrhvm: match &cfg.params {
            ModelParams::Lrhvm { alphabet, table } => Some(match table {
                LrhvmTable::Random => JointOutcomeTable::random(*alphabet, &mut root.fork("table")),
                LrhvmTable::Uniform => JointOutcomeTable::uniform(*alphabet),
                LrhvmTable::Explicit { entries } => {
                    let mut map = BTreeMap::new();
                    for e in entries {
                        let key = [e[0] as i8, e[1] as i8, e[2] as i8, e[3] as i8];
                        *map.entry(key).or_insert(0.0) += e[4];
                    }
                    JointOutcomeTable::new(*alphabet, &map)
                        .context(|| "model_params.table".into())?
                }
            }),
            _ => None,
        },
        shvm: match &cfg.params {
            ModelParams::Shvm { labels, .. } => {
                Some(ShvmSpec::random(*labels, &mut root.fork("spec")))
            }
            _ => None,
        },
    };
    let labels = setting_labels(&cfg.settings);
    let outcomes: Vec<SettingOutcome> = cfg
        .settings
        .par_iter()
        .enumerate()
        .map(|(k, &s)| {
            run_setting(
                cfg,
                &shared,
                k,
                s,
                labels[k],
                &root.fork(&format!("setting-{k}")),
            )
        })
        .collect::<Result<_, _>>()?;

    let mut estimates = Vec::new();
    let mut local = Vec::new();
    let mut events = Table {
        header: "trial,side,setting,time_tag,outcome".into(),
        rows: Vec::new(),
    };
    let mut pairs = Table {
        header: "setting_a,setting_b,index_a,index_b,t_a,t_b,a,b".into(),
        rows: Vec::new(),
    };
    let mut records = Table {
        header: match cfg.model {
            ModelKind::Shvm => "setting_a,setting_b,pair,label,mean_a,mean_b".into(),
            _ => "setting_a,setting_b,emission,output".into(),
        },
        rows: Vec::new(),
    };
    let spacing = match &cfg.params {
        ModelParams::Clpm { kernel } => kernel.emission_spacing,
        _ => 1.0,
    };
    let mut series = Vec::new();
    for (k, o) in outcomes.into_iter().enumerate() {
        let offset = k as u64 * cfg.emissions;
        if let Some((alice, bob)) = &o.events {
            event_rows(
                alice,
                bob,
                offset,
                offset as f64 * spacing,
                &mut events.rows,
            );
            if k == 0 {
                let values = |ev: &[Event]| {
                    TimeSeries::from_values(ev.iter().map(|e| e.outcome.as_f64()).collect())
                };
                series.push(("[A]".to_string(), values(alice)));
                series.push(("[B]".to_string(), values(bob)));
            }
        }
        if let Some(p) = &o.pairs {
            let (la, lb) = labels[k];
            pair_rows(p, la, lb, &mut pairs.rows);
        }
        records.rows.extend(o.records);
        local.extend(o.local);
        estimates.extend(o.estimates);
    }
    let mut tests = Vec::new();
    no_signalling_rows(cfg, &local, &mut tests)?;
    series_tests(cfg, &series, &mut tests)?;
    let primary: Vec<EstimateRow> = estimates
        .iter()
        .filter(|e| e.label != "event_by_event")
        .cloned()
        .collect();
    let bound_n = matches!(cfg.model, ModelKind::Lrhvm | ModelKind::Shvm).then_some(cfg.emissions);
    let has_events = cfg.model.produces_events();
    Ok(RunOutput {
        report: Report {
            config_hash: hash.to_string(),
            seed: cfg.raw.seed,
            model: cfg.model.name().into(),
            chsh: chsh_row(&primary, bound_n),
            estimates,
            tests,
        },
        events: has_events.then_some(events),
        pairs: has_events.then_some(pairs),
        records: (!records.rows.is_empty()).then_some(records),
    })
}

fn run_switching(cfg: &ValidConfig, hash: &str) -> Result<RunOutput, RunError> {
    let ModelParams::Switching {
        targets,
        angles,
        setting_weights,
    } = &cfg.params
    else {
        unreachable!()
    };
    let targets = match targets {
        SwitchingTargetKind::Singlet => {
            SwitchingTargets::singlet(ChshAngles::new(angles[0], angles[1], angles[2], angles[3]))
                .context(|| "switching targets".into())?
        }
        SwitchingTargetKind::AntiCorrelated => SwitchingTargets::anti_correlated(),
    };
    let dist = DiscreteDistribution::new(
        vec![(1, 1), (1, 2), (2, 1), (2, 2)],
        setting_weights.to_vec(),
    )
    .context(|| "model_params.setting_weights".into())?;
    let recs = switching_simulate(&targets, &dist, cfg.emissions, &root_stream(cfg))
        .context(|| "switching simulation".into())?;
    let mut estimates = Vec::new();
    for s in &cfg.settings {
        let Settings::Indices(i, j) = *s else {
            unreachable!()
        };
        let est = switching_conditional_expectation(&recs, i, j)
            .context(|| format!("settings ({i}, {j})"))?;
        estimates.push(EstimateRow {
            label: "conditional".into(),
            setting_a: Some(i),
            setting_b: Some(j),
            angle_a: None,
            angle_b: None,
            value: est.value,
            se: est.se,
            n: est.n,
            exact: Some(targets.table(i, j).correlation()),
        });
    }
    let rows = recs
        .iter()
        .enumerate()
        .map(|(t, r)| {
            let (a, b) = r.outcomes();
            format!("{t},{},{},{a},{b}", r.setting_a, r.setting_b)
        })
        .collect();
    let mut tests = Vec::new();
    no_signalling_rows(cfg, &switching_local_runs(&recs), &mut tests)?;
    let alice = TimeSeries::from_values(recs.iter().map(|r| f64::from(r.outcomes().0)).collect());
    let bob = TimeSeries::from_values(recs.iter().map(|r| f64::from(r.outcomes().1)).collect());
    series_tests(
        cfg,
        &[("[A]".into(), alice), ("[B]".into(), bob)],
        &mut tests,
    )?;
    if cfg.raw.tests.contains(&TestName::Embedding) {
        let mut embed = |name: &str, tables: &[[PairTable; 2]; 2]| -> Result<(), RunError> {
            let e = conditional_embedding(tables).context(|| name.to_string())?;
            tests.push(TestRow {
                name: name.into(),
                statistic: e.infeasibility,
                p_value: None,
                alpha: None,
                decision: if e.exists() {
                    "fail_to_reject"
                } else {
                    "reject"
                }
                .into(),
                degenerate: false,
            });
            Ok(())
        };
        embed("embedding[targets]", targets.tables())?;
        let empirical =
            empirical_conditional_tables(&recs).context(|| "conditional tables".into())?;
        embed("embedding[empirical]", &empirical)?;
    }
    Ok(RunOutput {
        report: Report {
            config_hash: hash.to_string(),
            seed: cfg.raw.seed,
            model: cfg.model.name().into(),
            chsh: chsh_row(&estimates, None),
            estimates,
            tests,
        },
        events: None,
        pairs: None,
        records: Some(Table {
            header: "trial,i,j,a,b".into(),
            rows,
        }),
    })
}

fn run_charlie(cfg: &ValidConfig, hash: &str) -> Result<RunOutput, RunError> {
    let root = root_stream(cfg);
    let (s1, s2) = charlie_generate(cfg.emissions as usize, &mut root.fork("source"))
        .context(|| "charlie source".into())?;
    let policy = cfg.pairing.expect("charlie pairing");
    let pairs = match policy {
        PairingPolicy::Shift { k } => pair_shift(&s1, &s2, k),
        PairingPolicy::Random { n_pairs } => {
            pair_random(&s1, &s2, n_pairs, &mut root.fork("pairing"))
        }
        _ => unreachable!("rejected by validation"),
    }
    .context(|| "pairing".into())?;
    let est = correlation_estimate(&pairs, cfg.raw.estimator_zero_policy)
        .context(|| "estimate".into())?;
    let exact = match policy {
        PairingPolicy::Shift { k: 1 } => Some(-1.0),
        PairingPolicy::Shift { .. } | PairingPolicy::Random { .. } => Some(0.0),
        _ => None,
    };
    let mut events = Vec::with_capacity(2 * s1.len());
    for (t, (a, b)) in s1.values().iter().zip(s2.values()).enumerate() {
        for (side, v) in [("A", a), ("B", b)] {
            events.push(format!("{t},{side},1,{t},{v}"));
        }
    }
    let mut pair_table = Vec::new();
    pair_rows(&pairs, 1, 1, &mut pair_table);
    let mut tests = Vec::new();
    series_tests(
        cfg,
        &[("[A]".into(), s1.clone()), ("[B]".into(), s2.clone())],
        &mut tests,
    )?;
    Ok(RunOutput {
        report: Report {
            config_hash: hash.to_string(),
            seed: cfg.raw.seed,
            model: cfg.model.name().into(),
            estimates: vec![EstimateRow {
                label: "correlation".into(),
                setting_a: Some(1),
                setting_b: Some(1),
                angle_a: None,
                angle_b: None,
                value: est.value,
                se: est.se,
                n: est.n,
                exact,
            }],
            chsh: None,
            tests,
        },
        events: Some(Table {
            header: "trial,side,setting,time_tag,outcome".into(),
            rows: events,
        }),
        pairs: Some(Table {
            header: "setting_a,setting_b,index_a,index_b,t_a,t_b,a,b".into(),
            rows: pair_table,
        }),
        records: None,
    })
}

fn bertrand_exact(m: BertrandMethod) -> f64 {
    match m {
        BertrandMethod::RandomEndpoints => 1.0 / 3.0,
        BertrandMethod::RandomRadialPoint => 1.0 / 2.0,
        BertrandMethod::RandomMidpoint => 1.0 / 4.0,
    }
}

fn run_classical(cfg: &ValidConfig, hash: &str) -> Result<RunOutput, RunError> {
    let root = root_stream(cfg);
    let estimates = match &cfg.params {
        ModelParams::Bertrand { methods } => methods
            .par_iter()
            .map(|&m| {
                let name = serde_json::to_value(m).expect("method name");
                let name = name.as_str().expect("string").to_string();
                let est = bertrand_estimate(m, cfg.emissions, &mut root.fork(&name))
                    .context(|| name.clone())?;
                Ok(EstimateRow {
                    label: name,
                    setting_a: None,
                    setting_b: None,
                    angle_a: None,
                    angle_b: None,
                    value: est.probability,
                    se: est.se,
                    n: est.trials as usize,
                    exact: Some(bertrand_exact(m)),
                })
            })
            .collect::<Result<Vec<_>, RunError>>()?,
        ModelParams::Urn { spec } => {
            let law = urn_distribution(spec).context(|| "urn".into())?;
            let freq = urn_simulate(spec, cfg.emissions, &mut root.fork("draws"))
                .context(|| "urn".into())?;
            law.iter()
                .map(|(&k, p)| {
                    let f = freq.frequency(k as usize);
                    EstimateRow {
                        label: format!("P(red={k})"),
                        setting_a: None,
                        setting_b: None,
                        angle_a: None,
                        angle_b: None,
                        value: f,
                        se: (f * (1.0 - f) / cfg.emissions as f64).sqrt(),
                        n: cfg.emissions as usize,
                        exact: Some(p),
                    }
                })
                .collect()
        }
        _ => unreachable!(),
    };
    Ok(RunOutput {
        report: Report {
            config_hash: hash.to_string(),
            seed: cfg.raw.seed,
            model: cfg.model.name().into(),
            estimates,
            chsh: None,
            tests: Vec::new(),
        },
        events: None,
        pairs: None,
        records: None,
    })
}

/// Runs the experiment in memory. Identical configurations give identical
/// outputs regardless of the number of worker threads.
pub fn run_experiment(cfg: &ValidConfig) -> Result<RunOutput, RunError> {
    let hash = config_hash(&cfg.raw);
    match cfg.model {
        ModelKind::Switching => run_switching(cfg, &hash),
        ModelKind::Charlie => run_charlie(cfg, &hash),
        ModelKind::Bertrand | ModelKind::Urn => run_classical(cfg, &hash),
        _ => run_per_setting(cfg, &hash),
    }
}
