use std::fs;
use std::path::Path;
use std::process::Command;

use spce_cli::{render, run_experiment, validate_config, ExperimentConfig, ValidConfig};

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    fs::read_to_string(path).unwrap()
}

fn valid(text: &str) -> ValidConfig {
    validate_config(ExperimentConfig::from_toml(text).unwrap()).unwrap()
}

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn quantum_oracle_reaches_tsirelson() {
    let mut c = valid(&fixture("quantum_tsirelson.toml"));
    c.emissions = 50_000;
    let out = run_experiment(&c).unwrap();
    let chsh = out.report.chsh.unwrap();
    assert!((chsh.exact.unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((chsh.s - 2.8284).abs() < 4.0 * chsh.se, "{chsh:?}");
}

#[test]
fn lrhvm_stays_below_finite_sample_bound() {
    let out = run_experiment(&valid(&fixture("lrhvm_random.toml"))).unwrap();
    let chsh = out.report.chsh.unwrap();
    assert!(chsh.s <= chsh.local_bound.unwrap());
    assert!(chsh.exact.unwrap() <= 2.0 + 1e-12);
}

#[test]
fn charlie_shift_pairing_is_perfectly_anticorrelated() {
    let out = run_experiment(&valid(&fixture("charlie_shift.toml"))).unwrap();
    assert_eq!(out.report.estimates[0].value, -1.0);
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let mut c = valid(&fixture("clpm_coincidence.toml"));
    c.emissions = 70_000;
    let formats = c.raw.formats.clone();
    let one = with_threads(1, || render(&run_experiment(&c).unwrap(), &formats));
    let many = with_threads(4, || render(&run_experiment(&c).unwrap(), &formats));
    assert_eq!(one, many);
}

#[test]
fn every_csv_declares_hash_and_seed() {
    let c = valid("model = \"quantum_oracle\"\nemissions = 100\nseed = 42\n");
    let out = run_experiment(&c).unwrap();
    let files = render(&out, &c.raw.formats);
    assert!(files.len() >= 4);
    for (name, body) in files {
        if name.ends_with(".csv") {
            let first = body.lines().next().unwrap();
            assert!(first.starts_with("# config_hash="), "{name}");
            assert!(first.contains(&out.report.config_hash) && first.contains("seed=42"));
        } else {
            let v: serde_json::Value = serde_json::from_str(&body).unwrap();
            for key in ["config_hash", "seed", "model", "estimates", "chsh", "tests"] {
                assert!(v.get(key).is_some(), "missing {key}");
            }
        }
    }
    let events = render(&out, &c.raw.formats)
        .into_iter()
        .find(|(n, _)| *n == "events.csv")
        .unwrap()
        .1;
    assert_eq!(
        events.lines().nth(1),
        Some("trial,side,setting,time_tag,outcome")
    );
    assert_eq!(events.lines().count(), 2 + 2 * 4 * 100);
}

#[test]
fn seed_changes_hash_and_data() {
    let a = valid("model = \"lrhvm\"\nemissions = 100\nseed = 1\n");
    let b = valid("model = \"lrhvm\"\nemissions = 100\nseed = 2\n");
    let (ra, rb) = (run_experiment(&a).unwrap(), run_experiment(&b).unwrap());
    assert_ne!(ra.report.config_hash, rb.report.config_hash);
    assert_ne!(ra.events, rb.events);
}

#[test]
fn json_numbers_have_at_most_twelve_significant_digits() {
    let c = valid("model = \"bertrand\"\nemissions = 1000\n");
    let json = spce_cli::output::report_json(&run_experiment(&c).unwrap().report);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for e in v["estimates"].as_array().unwrap() {
        let exact = e["exact"].as_f64().unwrap();
        let digits: String = format!("{exact}")
            .chars()
            .filter(char::is_ascii_digit)
            .collect();
        assert!(digits.trim_start_matches('0').len() <= 12, "{exact}");
    }
}

fn spce(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_spce"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes_and_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "model = \"switching\"\nemissions = 5000\nseed = 3\ntests = [\"embedding\"]\n",
    )
    .unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let r = spce(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--format",
            "both",
        ]);
        assert_eq!(
            r.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&r.stderr)
        );
    }
    for name in ["records.csv", "report.csv", "report.json"] {
        assert_eq!(
            fs::read(out1.join(name)).unwrap(),
            fs::read(out2.join(name)).unwrap()
        );
    }

    fs::write(&cfg, "model = \"clpm\"\nemissions = 0\n").unwrap();
    let r = spce(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("model_params.source") && stderr.contains("emissions must be ≥ 1"));

    // a single setting pair leaves no remote setting to compare against
    fs::write(
        &cfg,
        "model = \"quantum_oracle\"\nemissions = 100\nsettings = [[0.0, 0.1]]\ntests = [\"no_signalling\"]\n",
    )
    .unwrap();
    let r = spce(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("c").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(3));

    let quick = dir.path().join("quick");
    let r = spce(&[
        "--model",
        "quantum_oracle",
        "--trials",
        "2000",
        "--seed",
        "9",
        "--angles",
        "0,0.7853981633974483,0.39269908169872414,1.1780972450961724",
        "--out",
        quick.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(r.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(quick.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
    assert!(!quick.join("events.csv").exists());
}
