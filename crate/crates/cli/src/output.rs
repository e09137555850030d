//! Serialization of a run to CSV and JSON files.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::OutputFormat;
use crate::run::{fmt_num, sig12, Report, RunError, RunOutput, Table};

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                let x = sig12(n.as_f64().expect("f64"));
                *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// The JSON report with every float at 12 significant digits.
pub fn report_json(report: &Report) -> String {
    let mut v = serde_json::to_value(report).expect("report serializes");
    round_numbers(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("json");
    s.push('\n');
    s
}

fn metadata(report: &Report) -> String {
    format!(
        "# config_hash={} seed={} model={}",
        report.config_hash, report.seed, report.model
    )
}

fn csv(report: &Report, table: &Table) -> String {
    let mut s = String::with_capacity(table.rows.iter().map(|r| r.len() + 1).sum::<usize>() + 128);
    s.push_str(&metadata(report));
    s.push('\n');
    s.push_str(&table.header);
    s.push('\n');
    for r in &table.rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// One row per estimate, CHSH value and test.
pub fn report_csv(report: &Report) -> String {
    let mut t = Table {
        header: "kind,name,setting_a,setting_b,value,se,n,exact,p_value,decision".into(),
        rows: Vec::new(),
    };
    let label = |x: Option<u8>| x.map(|v| v.to_string()).unwrap_or_default();
    for e in &report.estimates {
        t.rows.push(format!(
            "estimate,{},{},{},{},{},{},{},,",
            e.label,
            label(e.setting_a),
            label(e.setting_b),
            fmt_num(e.value),
            fmt_num(e.se),
            e.n,
            opt(e.exact)
        ));
    }
    if let Some(c) = &report.chsh {
        t.rows.push(format!(
            "chsh,S,,,{},{},,{},,",
            fmt_num(c.s),
            fmt_num(c.se),
            opt(c.exact)
        ));
    }
    for r in &report.tests {
        t.rows.push(format!(
            "test,{},,,{},,,,{},{}",
            r.name,
            fmt_num(r.statistic),
            opt(r.p_value),
            r.decision
        ));
    }
    csv(report, &t)
}

/// File name and contents of every artifact requested by `formats`.
pub fn render(out: &RunOutput, formats: &[OutputFormat]) -> Vec<(&'static str, String)> {
    let mut files = Vec::new();
    if formats.contains(&OutputFormat::Csv) {
        for (name, table) in [
            ("events.csv", &out.events),
            ("pairs.csv", &out.pairs),
            ("records.csv", &out.records),
        ] {
            if let Some(t) = table {
                files.push((name, csv(&out.report, t)));
            }
        }
        files.push(("report.csv", report_csv(&out.report)));
    }
    if formats.contains(&OutputFormat::Json) {
        files.push(("report.json", report_json(&out.report)));
    }
    files
}

/// Writes all artifacts into `dir`, creating it when needed; returns the
/// written paths in order.
pub fn write_outputs(
    out: &RunOutput,
    dir: &Path,
    formats: &[OutputFormat],
) -> Result<Vec<PathBuf>, RunError> {
    let io = |path: &Path, source| RunError::Io {
        path: path.display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    for (name, contents) in render(out, formats) {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
