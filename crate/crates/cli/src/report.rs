//! Plain-text summary of a run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::manifest::{self, Manifest};

pub fn render(manifest_path: &Path) -> Result<String, String> {
    let m = manifest::read(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut out = String::new();
    header(&mut out, &m);
    if m.artifacts.is_empty() {
        out.push_str("no artifacts\n");
        return Ok(out);
    }
    for entry in &m.artifacts {
        let path = dir.join(&entry.path);
        let bytes = fs::read(&path).map_err(|e| format!("missing artifact {}: {e}", path.display()))?;
        let digest = manifest::sha256_hex(&bytes);
        if digest != entry.sha256 {
            return Err(format!("artifact {} does not match its recorded sha256", entry.path));
        }
        let text = String::from_utf8_lossy(&bytes);
        let _ = writeln!(out, "\n== {} ==", entry.path);
        if entry.path.ends_with(".csv") {
            sweep_table(&mut out, &text)?;
        } else {
            let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", entry.path))?;
            checks_table(&mut out, &v);
            association(&mut out, &v);
        }
    }
    Ok(out)
}

fn header(out: &mut String, m: &Manifest) {
    let _ = writeln!(out, "run      {} ({})", m.name, m.kind);
    let _ = writeln!(out, "config   sha256 {}", m.config_sha256);
    let _ = writeln!(out, "seed     {}", m.seed);
    let _ = writeln!(out, "complete {}", m.complete);
    let _ = writeln!(out, "wall     {:.3} s", m.wall_time_s);
    if let Some(e) = &m.error {
        let _ = writeln!(out, "error    {e}");
    }
    for v in &m.violations {
        let _ = writeln!(out, "VIOLATION {v}");
    }
}

fn fmt_num(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map(|x| format!("{x:.6e}")).unwrap_or_else(|| n.to_string()),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn checks_table(out: &mut String, v: &Value) {
    let Some(checks) = v.get("checks").and_then(Value::as_array) else {
        return;
    };
    if checks.is_empty() {
        out.push_str("(no checks)\n");
        return;
    }
    let width = checks.iter().filter_map(|c| c["name"].as_str()).map(str::len).max().unwrap_or(5).max(5);
    let _ = writeln!(out, "{:<width$}  {:>14}  {:<4}  {:<24}  status", "check", "value", "op", "limit");
    for c in checks {
        let status = match (c["op"].as_str(), c["pass"].as_bool()) {
            (Some("info"), _) => "info",
            (_, Some(true)) => "ok",
            _ => "VIOLATION",
        };
        let limit = match &c["limit"] {
            Value::Array(a) => format!("[{}]", a.iter().map(fmt_num).collect::<Vec<_>>().join(", ")),
            other => fmt_num(other),
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:>14}  {:<4}  {:<24}  {status}",
            c["name"].as_str().unwrap_or("?"),
            fmt_num(&c["value"]),
            c["op"].as_str().unwrap_or("?"),
            limit
        );
    }
}

fn association(out: &mut String, v: &Value) {
    if let Some(e) = v.get("association_error").and_then(Value::as_str) {
        let _ = writeln!(out, "association: not available ({e})");
    }
    let Some(reports) = v.pointer("/association/reports").and_then(Value::as_array) else {
        return;
    };
    for r in reports {
        let label = r["label"].as_str().unwrap_or("?");
        let limit = r["limit"].as_f64().map(|l| format!("{l:.6}")).unwrap_or_else(|| "none".into());
        let _ = writeln!(
            out,
            "association {label}: limit {limit}, window [{}, {}]",
            fmt_num(&r["liminf"]),
            fmt_num(&r["limsup"])
        );
    }
    if let Some(s) = v.pointer("/association/spread") {
        let _ = writeln!(out, "association spread across mollifiers: {}", fmt_num(s));
    }
}

fn sweep_table(out: &mut String, csv: &str) -> Result<(), String> {
    let mut lines = csv.lines();
    let head: Vec<&str> = lines.next().ok_or("empty CSV artifact")?.split(',').collect();
    let col = |name: &str| head.iter().position(|h| *h == name).ok_or(format!("CSV lacks column {name}"));
    let (ce, cj, cm, cv) = (col("eps")?, col("J")?, col("mollifier")?, col("value")?);
    let _ = writeln!(out, "{:>14}  {:>5}  {:<10}  {:>14}", "eps", "J", "mollifier", "|amplitude|");
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != head.len() {
            return Err(format!("malformed CSV row: {line}"));
        }
        let num = |s: &str| s.parse::<f64>().map(|x| format!("{x:.6e}")).unwrap_or_else(|_| s.to_string());
        let _ = writeln!(out, "{:>14}  {:>5}  {:<10}  {:>14}", num(f[ce]), f[cj], f[cm], num(f[cv]));
    }
    Ok(())
}
