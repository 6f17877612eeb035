use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{json, Map, Value};
use std::path::Path;
use urboot::{Result, SequentialOutcome, TestOutcome, UNION_LABELS};

/// A JSON number rounded to ten significant digits, so that serialized
/// output is stable across platforms.
pub fn sig(v: f64) -> Value {
    if !v.is_finite() {
        return Value::String(v.to_string());
    }
    let rounded: f64 = format!("{v:.9e}").parse().expect("round-tripped float");
    json!(rounded)
}

fn timestamp() -> String {
    let now = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => match s.parse::<i64>().ok().and_then(|t| DateTime::from_timestamp(t, 0)) {
            Some(t) => t,
            None => Utc::now(),
        },
        Err(_) => Utc::now(),
    };
    now.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Everything needed to reproduce a run: subcommand, input, resolved
/// options, seed, tool version and timestamp.
pub fn manifest(subcommand: &str, input: &Path, options: Map<String, Value>, seed: u64) -> Value {
    json!({
        "subcommand": subcommand,
        "input": input.display().to_string(),
        "options": options,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": timestamp(),
    })
}

/// Prints the table to stdout, warnings to stderr, and optionally writes
/// the full JSON document.
pub fn emit(
    table: &str,
    manifest: Value,
    results: Value,
    diagnostics: &[String],
    json_path: Option<&Path>,
) -> Result<()> {
    print!("{table}");
    for w in diagnostics {
        eprintln!("warning: {w}");
    }
    if let Some(path) = json_path {
        let doc = json!({
            "manifest": manifest,
            "results": results,
            "diagnostics": diagnostics,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(())
}

pub fn outcome_json(o: &TestOutcome) -> Value {
    let mut m = Map::new();
    m.insert("series".into(), json!(o.series));
    m.insert("test".into(), json!(o.label));
    m.insert("lags".into(), json!(o.lags));
    m.insert("statistic".into(), sig(o.statistic));
    m.insert("p_value".into(), sig(o.p_value));
    m.insert("reject".into(), json!(o.reject));
    if let Some(parts) = &o.union {
        let components: Vec<Value> = (0..4)
            .map(|k| {
                json!({
                    "component": UNION_LABELS[k],
                    "statistic": sig(parts.stats[k]),
                    "quantile": sig(parts.quantiles[k]),
                })
            })
            .collect();
        m.insert("components".into(), Value::Array(components));
    }
    Value::Object(m)
}

pub fn sequential_json(out: &SequentialOutcome, names: &[String], test: &str) -> Value {
    let steps: Vec<Value> = out
        .steps
        .iter()
        .map(|s| {
            let mut m = Map::new();
            m.insert("under_h0".into(), json!(s.h0_count));
            m.insert("under_h1".into(), json!(s.h1_count));
            if let Some(name) = &s.series {
                m.insert("series".into(), json!(name));
            }
            m.insert("statistic".into(), sig(s.statistic));
            if let Some(p) = s.p_value {
                m.insert("p_value".into(), sig(p));
            }
            if let Some(c) = s.critical_value {
                m.insert("critical_value".into(), sig(c));
            }
            m.insert("reject".into(), json!(s.reject));
            Value::Object(m)
        })
        .collect();
    let stationary: Vec<&String> = names
        .iter()
        .zip(&out.rej_h0)
        .filter_map(|(n, &r)| r.then_some(n))
        .collect();
    let ranking: Vec<&String> = out.ranking.iter().map(|&i| &names[i]).collect();
    json!([{
        "test": test,
        "steps": steps,
        "stationary": stationary,
        "ranking": ranking,
    }])
}

/// Left-aligned plain-text table; the first row is the header.
pub fn render_table(rows: &[Vec<String>]) -> String {
    let columns = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut widths = vec![0usize; columns];
    for row in rows {
        for (c, cell) in row.iter().enumerate() {
            widths[c] = widths[c].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::from(" ");
        for (c, cell) in row.iter().enumerate() {
            line.push(' ');
            line.push_str(cell);
            if c + 1 < row.len() {
                line.push_str(&" ".repeat(widths[c] - cell.len() + 1));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn fmt_stat(v: f64) -> String {
    format!("{v:.7}")
}

pub fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}
