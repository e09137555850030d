//! Experiment description read from TOML and its validation.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use spce_core::classical::{BertrandMethod, UrnSpec};
use spce_core::hv::{OutcomeAlphabet, PhotonKernel};
use spce_core::{PairingPolicy, ZeroPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    QuantumOracle,
    Lrhvm,
    Shvm,
    Clpm,
    ClpmMarginalized,
    Switching,
    Charlie,
    Bertrand,
    Urn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::QuantumOracle,
        ModelKind::Lrhvm,
        ModelKind::Shvm,
        ModelKind::Clpm,
        ModelKind::ClpmMarginalized,
        ModelKind::Switching,
        ModelKind::Charlie,
        ModelKind::Bertrand,
        ModelKind::Urn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::QuantumOracle => "quantum_oracle",
            ModelKind::Lrhvm => "lrhvm",
            ModelKind::Shvm => "shvm",
            ModelKind::Clpm => "clpm",
            ModelKind::ClpmMarginalized => "clpm_marginalized",
            ModelKind::Switching => "switching",
            ModelKind::Charlie => "charlie",
            ModelKind::Bertrand => "bertrand",
            ModelKind::Urn => "urn",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Whether `settings` holds angles rather than setting indices.
    pub fn uses_angles(self) -> bool {
        matches!(
            self,
            ModelKind::QuantumOracle | ModelKind::Clpm | ModelKind::ClpmMarginalized
        )
    }

    /// Whether the run produces two event streams that go through pairing.
    pub fn produces_events(self) -> bool {
        matches!(
            self,
            ModelKind::QuantumOracle | ModelKind::Lrhvm | ModelKind::Clpm | ModelKind::Charlie
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    NoSignalling,
    Purity,
    FineStructure,
    Embedding,
}

/// The document as written. `model` stays a string so that an unknown name
/// is reported as a validation error rather than a parse failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    #[serde(default)]
    pub model_params: toml::Table,
    #[serde(default)]
    pub settings: Vec<[f64; 2]>,
    pub emissions: i64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pairing: Option<PairingPolicy>,
    #[serde(default)]
    pub estimator_zero_policy: ZeroPolicy,
    #[serde(default)]
    pub tests: Vec<TestName>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub purity_block_size: Option<i64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigErrors> {
        toml::from_str(text).map_err(|e| ConfigErrors(vec![FieldError::new("", e.message())]))
    }

    /// A runnable configuration with model defaults for a quick run.
    pub fn quick(model: &str, emissions: i64, seed: u64) -> Self {
        Self {
            model: model.to_string(),
            model_params: toml::Table::new(),
            settings: Vec::new(),
            emissions,
            seed,
            pairing: None,
            estimator_zero_policy: ZeroPolicy::Include,
            tests: Vec::new(),
            alpha: None,
            purity_block_size: None,
            output_dir: None,
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|e| e.path == path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LrhvmTable {
    Random,
    Uniform,
    /// Rows `[a1, a2, b1, b2, weight]`.
    Explicit {
        entries: Vec<[f64; 5]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SwitchingTargetKind {
    Singlet,
    AntiCorrelated,
}

/// Model parameters after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    QuantumOracle {
        smearing: f64,
    },
    Lrhvm {
        alphabet: OutcomeAlphabet,
        table: LrhvmTable,
    },
    Shvm {
        labels: usize,
        k_repeats: u32,
    },
    Clpm {
        kernel: PhotonKernel,
    },
    ClpmMarginalized {
        kernel: PhotonKernel,
        resolution: usize,
        k: u32,
    },
    Switching {
        targets: SwitchingTargetKind,
        angles: [f64; 4],
        setting_weights: [f64; 4],
    },
    Charlie,
    Bertrand {
        methods: Vec<BertrandMethod>,
    },
    Urn {
        spec: UrnSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Settings {
    Angles(f64, f64),
    Indices(u8, u8),
}

/// A configuration whose every field has been checked and defaulted.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidConfig {
    pub raw: ExperimentConfig,
    pub model: ModelKind,
    pub params: ModelParams,
    pub settings: Vec<Settings>,
    pub emissions: u64,
    pub pairing: Option<PairingPolicy>,
    pub alpha: f64,
    pub purity_block_size: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantumParams {
    #[serde(default)]
    smearing: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LrhvmParams {
    #[serde(default = "binary")]
    alphabet: OutcomeAlphabet,
    #[serde(default = "random_table")]
    table: LrhvmTable,
}

fn binary() -> OutcomeAlphabet {
    OutcomeAlphabet::Binary
}

fn random_table() -> LrhvmTable {
    LrhvmTable::Random
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShvmParams {
    #[serde(default = "four")]
    labels: i64,
    #[serde(default = "one")]
    k_repeats: i64,
}

fn four() -> i64 {
    4
}

fn one() -> i64 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClpmParams {
    source: Option<PhotonKernel>,
    #[serde(default = "hundred")]
    k: i64,
    #[serde(default = "hundred")]
    resolution: i64,
}

fn hundred() -> i64 {
    100
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchingParams {
    #[serde(default = "singlet")]
    targets: SwitchingTargetKind,
    angles: Option<[f64; 4]>,
    #[serde(default = "quarter")]
    setting_weights: [f64; 4],
}

fn singlet() -> SwitchingTargetKind {
    SwitchingTargetKind::Singlet
}

fn quarter() -> [f64; 4] {
    [0.25; 4]
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BertrandParams {
    methods: Option<Vec<BertrandMethod>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UrnParams {
    red: i64,
    black: i64,
    draws: i64,
    #[serde(default)]
    with_replacement: bool,
}

fn parse_params<T: for<'de> Deserialize<'de>>(
    table: &toml::Table,
    errors: &mut Vec<FieldError>,
) -> Option<T> {
    match toml::Value::Table(table.clone()).try_into::<T>() {
        Ok(p) => Some(p),
        Err(e) => {
            errors.push(FieldError::new("model_params", e.message()));
            None
        }
    }
}

fn positive(value: i64, path: &str, errors: &mut Vec<FieldError>) -> Option<u64> {
    if value >= 1 {
        Some(value as u64)
    } else {
        errors.push(FieldError::new(path, format!("{path} must be ≥ 1")));
        None
    }
}

fn tsirelson() -> [f64; 4] {
    let a = spce_core::ChshAngles::tsirelson();
    [a.a, a.a2, a.b, a.b2]
}

/// Default settings: the four CHSH pairs at the optimal singlet angles, or
/// the four index pairs.
pub fn default_settings(model: ModelKind) -> Vec<[f64; 2]> {
    if model.uses_angles() {
        let [a, a2, b, b2] = tsirelson();
        vec![[a, b], [a, b2], [a2, b], [a2, b2]]
    } else {
        vec![[1.0, 1.0], [1.0, 2.0], [2.0, 1.0], [2.0, 2.0]]
    }
}

fn validate_params(
    model: ModelKind,
    table: &toml::Table,
    errors: &mut Vec<FieldError>,
) -> Option<ModelParams> {
    let before = errors.len();
    let params = match model {
        ModelKind::QuantumOracle => {
            let p: QuantumParams = parse_params(table, errors)?;
            if !(p.smearing >= 0.0 && p.smearing.is_finite()) {
                errors.push(FieldError::new(
                    "model_params.smearing",
                    "must be non-negative",
                ));
            }
            ModelParams::QuantumOracle {
                smearing: p.smearing,
            }
        }
        ModelKind::Lrhvm => {
            let p: LrhvmParams = parse_params(table, errors)?;
            if let LrhvmTable::Explicit { entries } = &p.table {
                if entries.is_empty() {
                    errors.push(FieldError::new(
                        "model_params.table.entries",
                        "must not be empty",
                    ));
                }
            }
            ModelParams::Lrhvm {
                alphabet: p.alphabet,
                table: p.table,
            }
        }
        ModelKind::Shvm => {
            let p: ShvmParams = parse_params(table, errors)?;
            let labels = positive(p.labels, "model_params.labels", errors);
            let k = positive(p.k_repeats, "model_params.k_repeats", errors);
            ModelParams::Shvm {
                labels: labels.unwrap_or(1) as usize,
                k_repeats: k.unwrap_or(1).min(u64::from(u32::MAX)) as u32,
            }
        }
        ModelKind::Clpm | ModelKind::ClpmMarginalized => {
            let p: ClpmParams = parse_params(table, errors)?;
            let Some(kernel) = p.source else {
                errors.push(FieldError::new(
                    "model_params.source",
                    "missing source kernel parameters (an empty table selects the defaults)",
                ));
                return None;
            };
            if let Err(e) = kernel.validate() {
                errors.push(FieldError::new("model_params.source", e.to_string()));
            }
            if model == ModelKind::Clpm {
                ModelParams::Clpm { kernel }
            } else {
                let k = positive(p.k, "model_params.k", errors);
                let r = positive(p.resolution, "model_params.resolution", errors);
                ModelParams::ClpmMarginalized {
                    kernel,
                    resolution: r.unwrap_or(1) as usize,
                    k: k.unwrap_or(1).min(u64::from(u32::MAX)) as u32,
                }
            }
        }
        ModelKind::Switching => {
            let p: SwitchingParams = parse_params(table, errors)?;
            let w = p.setting_weights;
            if w.iter().any(|x| !(*x >= 0.0)) || !((w.iter().sum::<f64>() - 1.0).abs() < 1e-9) {
                errors.push(FieldError::new(
                    "model_params.setting_weights",
                    "must be four non-negative weights summing to 1",
                ));
            }
            ModelParams::Switching {
                targets: p.targets,
                angles: p.angles.unwrap_or_else(tsirelson),
                setting_weights: w,
            }
        }
        ModelKind::Charlie => {
            if !table.is_empty() {
                errors.push(FieldError::new(
                    "model_params",
                    "charlie takes no parameters",
                ));
            }
            ModelParams::Charlie
        }
        ModelKind::Bertrand => {
            let p: BertrandParams = parse_params(table, errors)?;
            let methods = p.methods.unwrap_or_else(|| BertrandMethod::ALL.to_vec());
            if methods.is_empty() {
                errors.push(FieldError::new("model_params.methods", "must not be empty"));
            }
            ModelParams::Bertrand { methods }
        }
        ModelKind::Urn => {
            let p: UrnParams = parse_params(table, errors)?;
            let mut count = |v: i64, path: &str| {
                if v < 0 || v > i64::from(u32::MAX) {
                    errors.push(FieldError::new(path, "must be a non-negative count"));
                    0
                } else {
                    v as u32
                }
            };
            let spec = UrnSpec {
                red: count(p.red, "model_params.red"),
                black: count(p.black, "model_params.black"),
                draws: count(p.draws, "model_params.draws"),
                with_replacement: p.with_replacement,
            };
            if let Err(e) = spec.validate() {
                errors.push(FieldError::new("model_params", e.to_string()));
            }
            ModelParams::Urn { spec }
        }
    };
    (errors.len() == before).then_some(params)
}

fn validate_settings(
    model: ModelKind,
    raw: &[[f64; 2]],
    errors: &mut Vec<FieldError>,
) -> Vec<Settings> {
    let given = if raw.is_empty() {
        default_settings(model)
    } else {
        raw.to_vec()
    };
    let mut out = Vec::with_capacity(given.len());
    for (k, [x, y]) in given.into_iter().enumerate() {
        let path = format!("settings[{k}]");
        if model.uses_angles() {
            if x.is_finite() && y.is_finite() {
                out.push(Settings::Angles(x, y));
            } else {
                errors.push(FieldError::new(path, "angles must be finite"));
            }
        } else {
            let ok = |v: f64| v == 1.0 || v == 2.0;
            if ok(x) && ok(y) {
                out.push(Settings::Indices(x as u8, y as u8));
            } else {
                errors.push(FieldError::new(path, "setting indices must be 1 or 2"));
            }
        }
    }
    out
}

fn validate_pairing(
    model: ModelKind,
    pairing: Option<PairingPolicy>,
    emissions: u64,
    errors: &mut Vec<FieldError>,
) -> Option<PairingPolicy> {
    if !model.produces_events() {
        if pairing.is_some() {
            errors.push(FieldError::new(
                "pairing",
                format!("model {} does not produce event streams", model.name()),
            ));
        }
        return None;
    }
    let policy = pairing.unwrap_or(match model {
        ModelKind::Clpm => PairingPolicy::Window(
            spce_core::WindowPolicy::new(PhotonKernel::DEFAULT_WINDOW, Default::default())
                .expect("positive width"),
        ),
        ModelKind::Charlie => PairingPolicy::Shift { k: 1 },
        _ => PairingPolicy::Emission,
    });
    match policy {
        PairingPolicy::Window(w) => {
            if !(w.width > 0.0 && w.width.is_finite()) {
                errors.push(FieldError::new("pairing.width", "must be positive"));
            }
            if model == ModelKind::Charlie {
                errors.push(FieldError::new(
                    "pairing",
                    "charlie streams carry no time tags",
                ));
            }
        }
        PairingPolicy::Shift { k } => {
            if k == 0 {
                errors.push(FieldError::new("pairing.k", "shift offset k must be ≥ 1"));
            } else if k as u64 > emissions {
                errors.push(FieldError::new(
                    "pairing.k",
                    "shift offset exceeds the stream length",
                ));
            }
        }
        PairingPolicy::Random { n_pairs } => {
            if n_pairs == 0 {
                errors.push(FieldError::new("pairing.n_pairs", "n_pairs must be ≥ 1"));
            }
        }
        PairingPolicy::Emission => {
            if model == ModelKind::Charlie {
                errors.push(FieldError::new(
                    "pairing",
                    "charlie streams carry no emission index",
                ));
            }
        }
    }
    Some(policy)
}

pub fn validate_config(raw: ExperimentConfig) -> Result<ValidConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let model = ModelKind::parse(&raw.model);
    if model.is_none() {
        let known: Vec<&str> = ModelKind::ALL.iter().map(|m| m.name()).collect();
        errors.push(FieldError::new(
            "model",
            format!(
                "unknown model {:?}; expected one of {}",
                raw.model,
                known.join(", ")
            ),
        ));
    }
    let emissions = positive(raw.emissions, "emissions", &mut errors);
    let alpha = raw.alpha.unwrap_or(spce_core::inference::DEFAULT_ALPHA);
    if !(alpha > 0.0 && alpha < 1.0) {
        errors.push(FieldError::new("alpha", "must lie in (0, 1)"));
    }
    let block = positive(
        raw.purity_block_size.unwrap_or(1000),
        "purity_block_size",
        &mut errors,
    );
    if raw.formats.is_empty() {
        errors.push(FieldError::new(
            "formats",
            "at least one output format is required",
        ));
    }
    let Some(model) = model else {
        return Err(ConfigErrors(errors));
    };
    let params = validate_params(model, &raw.model_params, &mut errors);
    let settings = validate_settings(model, &raw.settings, &mut errors);
    let pairing = validate_pairing(model, raw.pairing, emissions.unwrap_or(1), &mut errors);
    for (k, t) in raw.tests.iter().enumerate() {
        let path = format!("tests[{k}]");
        let applicable = match t {
            TestName::NoSignalling => !matches!(
                model,
                ModelKind::Charlie
                    | ModelKind::Bertrand
                    | ModelKind::Urn
                    | ModelKind::ClpmMarginalized
            ),
            TestName::Purity | TestName::FineStructure => {
                model.produces_events() || model == ModelKind::Switching
            }
            TestName::Embedding => model == ModelKind::Switching,
        };
        if !applicable {
            errors.push(FieldError::new(
                path,
                format!("test not available for model {}", model.name()),
            ));
        }
    }
    if let (Some(n), Some(b)) = (emissions, block) {
        let needs_series = raw.tests.iter().any(|t| matches!(t, TestName::Purity));
        if needs_series && n < 2 * b {
            errors.push(FieldError::new(
                "purity_block_size",
                "purity test needs emissions ≥ 2 · purity_block_size",
            ));
        }
        if raw.tests.contains(&TestName::FineStructure) && n < 100 {
            errors.push(FieldError::new(
                "tests",
                "fine-structure tests need emissions ≥ 100",
            ));
        }
    }
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    Ok(ValidConfig {
        model,
        params: params.expect("no errors"),
        settings,
        emissions: emissions.expect("no errors"),
        pairing,
        alpha,
        purity_block_size: block.expect("no errors") as usize,
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ValidConfig, ConfigErrors> {
        validate_config(ExperimentConfig::from_toml(text)?)
    }

    #[test]
    fn minimal_quantum_config() {
        let c = parse("model = \"quantum_oracle\"\nemissions = 1000\n").unwrap();
        assert_eq!(c.model, ModelKind::QuantumOracle);
        assert_eq!(c.settings.len(), 4);
        assert_eq!(c.pairing, Some(PairingPolicy::Emission));
    }

    #[test]
    fn clpm_without_source() {
        let e = parse("model = \"clpm\"\nemissions = 10\n").unwrap_err();
        assert!(e.mentions("model_params.source"), "{e}");
        let ok = parse("model = \"clpm\"\nemissions = 10\n[model_params.source]\n").unwrap();
        assert_eq!(
            ok.params,
            ModelParams::Clpm {
                kernel: PhotonKernel::default()
            }
        );
    }

    #[test]
    fn zero_emissions() {
        let e = parse("model = \"quantum_oracle\"\nemissions = 0\n").unwrap_err();
        assert!(
            e.0.iter().any(|f| f.message == "emissions must be ≥ 1"),
            "{e}"
        );
    }

    #[test]
    fn each_error_is_named() {
        let e = parse(
            "model = \"lrhvm\"\nemissions = -3\nsettings = [[1, 3]]\ntests = [\"embedding\"]\n[pairing]\nkind = \"shift\"\nk = 0\n",
        )
        .unwrap_err();
        for path in ["emissions", "settings[0]", "tests[0]", "pairing.k"] {
            assert!(e.mentions(path), "missing {path} in {e}");
        }
        let e = parse("model = \"magic\"\nemissions = 1\n").unwrap_err();
        assert!(e.mentions("model"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse("model = \"urn\"\nemissions = 1\ncolour = 3\n").is_err());
        let e = parse("model = \"urn\"\nemissions = 1\n[model_params]\nred = 1\nblack = 2\ndraws = 2\nblue = 1\n").unwrap_err();
        assert!(e.mentions("model_params"));
    }

    #[test]
    fn window_pairing_parses() {
        let c = parse(
            "model = \"clpm\"\nemissions = 10\n[pairing]\nkind = \"window\"\nwidth = 0.2\nrule = \"nearest_neighbor\"\n[model_params.source]\nmax_delay = 0.5\n",
        )
        .unwrap();
        match c.pairing {
            Some(PairingPolicy::Window(w)) => assert_eq!(w.width, 0.2),
            other => panic!("{other:?}"),
        }
    }
}
