use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use spce_cli::{
    run_experiment, validate_config, write_outputs, ConfigErrors, ExperimentConfig, OutputFormat,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

/// Run a spin-polarization correlation experiment described by a TOML file
/// or by a model name with defaults.
#[derive(Debug, Parser)]
#[command(name = "spce", version)]
struct Args {
    /// Experiment description.
    #[arg(long, conflicts_with = "model")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Quick run of a model with its defaults.
    #[arg(long)]
    model: Option<String>,
    /// Emissions per setting pair.
    #[arg(long)]
    trials: Option<i64>,
    /// Four angles in radians: a, a', b, b'.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Option<Vec<f64>>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn load(args: &Args) -> Result<ExperimentConfig, ConfigErrors> {
    let mut cfg = match (&args.config, &args.model) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigErrors(vec![spce_cli::config::FieldError {
                    path: String::new(),
                    message: format!("reading {}: {e}", path.display()),
                }])
            })?;
            ExperimentConfig::from_toml(&text)?
        }
        (None, Some(model)) => {
            let mut c = ExperimentConfig::quick(model, 10_000, 0);
            if ["clpm", "clpm_marginalized"].contains(&model.as_str()) {
                c.model_params
                    .insert("source".into(), toml::Value::Table(Default::default()));
            }
            if model == "urn" {
                for (k, v) in [("red", 1), ("black", 2), ("draws", 2)] {
                    c.model_params.insert(k.into(), toml::Value::Integer(v));
                }
            }
            c
        }
        (None, None) => {
            return Err(ConfigErrors(vec![spce_cli::config::FieldError {
                path: String::new(),
                message: "either --config or --model is required".into(),
            }]))
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.trials {
        cfg.emissions = n;
    }
    if let Some(a) = &args.angles {
        if a.len() != 4 {
            return Err(ConfigErrors(vec![spce_cli::config::FieldError {
                path: "angles".into(),
                message: format!("expected 4 angles, got {}", a.len()),
            }]));
        }
        cfg.settings = vec![[a[0], a[2]], [a[0], a[3]], [a[1], a[2]], [a[1], a[3]]];
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(f) = args.format {
        cfg.formats = match f {
            Format::Csv => vec![OutputFormat::Csv],
            Format::Json => vec![OutputFormat::Json],
            Format::Both => vec![OutputFormat::Csv, OutputFormat::Json],
        };
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let valid = match load(&args).and_then(validate_config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("configuration error:\n{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = match run_experiment(&valid) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let dir = valid
        .raw
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("spce-out"));
    match write_outputs(&out, &dir, &valid.raw.formats) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            if let Some(c) = &out.report.chsh {
                println!("S = {:.4} ± {:.4}", c.s, c.se);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
