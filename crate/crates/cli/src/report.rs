//! CSV and JSON report rendering.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use confheat_core::Verdict;
use serde_json::{Map, Value};

use crate::params::real_value;

/// Tabular rows plus a summary object and a verdict.
#[derive(Debug, Clone)]
pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Map<String, Value>,
    pub verdict: Verdict,
    /// Extra tables written to `<prefix>.<name>.csv`.
    pub attachments: Vec<Attachment>,
}

#[derive(Debug, Clone)]
pub struct Attachment {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Rendered report files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub csv: Vec<u8>,
    pub json: Vec<u8>,
    /// `(name, csv bytes)`
    pub attachments: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: Map::new(),
            verdict: Verdict::Pass,
            attachments: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }

    pub fn put_real(&mut self, key: &str, value: f64) {
        self.summary.insert(key.into(), real_value(value));
    }

    /// Adds a serializable value; non-finite floats inside it become null,
    /// so callers put those through `put_real` instead.
    pub fn put_ser<T: serde::Serialize>(&mut self, key: &str, value: &T) {
        self.summary.insert(
            key.into(),
            serde_json::to_value(value).expect("report values serialize"),
        );
    }
}

/// A real number as a CSV cell.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn render_csv(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().context("flushing CSV")
}

pub fn render_json(report: &Report, config: Value) -> Result<Vec<u8>> {
    let mut m = Map::new();
    m.insert("config".into(), config);
    m.insert("summary".into(), Value::Object(report.summary.clone()));
    m.insert("verdict".into(), Value::String(report.verdict.as_str().into()));
    m.insert("rows".into(), Value::from(report.rows.len() as u64));
    if !report.attachments.is_empty() {
        let names = report
            .attachments
            .iter()
            .map(|a| Value::String(a.name.clone()))
            .collect();
        m.insert("attachments".into(), Value::Array(names));
    }
    m.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    let mut out = serde_json::to_vec_pretty(&Value::Object(m))?;
    out.push(b'\n');
    Ok(out)
}

pub fn render(report: &Report, config: Value) -> Result<Rendered> {
    let attachments = report
        .attachments
        .iter()
        .map(|a| Ok((a.name.clone(), render_csv(&a.header, &a.rows)?)))
        .collect::<Result<_>>()?;
    Ok(Rendered {
        csv: render_csv(&report.header, &report.rows)?,
        json: render_json(report, config)?,
        attachments,
    })
}

/// Writes `<prefix>.csv`, `<prefix>.json` and `<prefix>.<name>.csv` for
/// each attachment, creating parent directories.
pub fn write_outputs(prefix: &str, out: &Rendered) -> Result<()> {
    if let Some(parent) = Path::new(&format!("{prefix}.csv")).parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let mut files = vec![
        (format!("{prefix}.csv"), &out.csv),
        (format!("{prefix}.json"), &out.json),
    ];
    for (name, bytes) in &out.attachments {
        files.push((format!("{prefix}.{name}.csv"), bytes));
    }
    for (path, bytes) in files {
        fs::write(&path, bytes).with_context(|| format!("writing {path}"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_only_where_needed() {
        let header = vec!["name".to_string(), "note".to_string()];
        let rows = vec![
            vec!["a,b".to_string(), "say \"hi\"".to_string()],
            vec!["plain".into(), "x\ny".into()],
        ];
        let out = String::from_utf8(render_csv(&header, &rows).unwrap()).unwrap();
        assert_eq!(out, "name,note\r\n\"a,b\",\"say \"\"hi\"\"\"\r\nplain,\"x\ny\"\r\n");
    }

    #[test]
    fn cells_spell_out_non_finite_values() {
        assert_eq!(cell(0.5), "0.5");
        assert_eq!(cell(f64::INFINITY), "inf");
        assert_eq!(cell(f64::NEG_INFINITY), "-inf");
        assert_eq!(cell(f64::NAN), "nan");
    }

    #[test]
    fn json_lists_attachments_and_verdict() {
        let mut r = Report::new(&["k"]);
        r.row(vec!["1".into()]);
        r.put("b", 2);
        r.put("a", 1);
        r.verdict = Verdict::Inconclusive;
        r.attachments.push(Attachment {
            name: "paths".into(),
            header: vec!["x".into()],
            rows: vec![],
        });
        let out = render(&r, Value::Null).unwrap();
        let text = String::from_utf8(out.json.clone()).unwrap();
        assert!(text.ends_with("}\n"));
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["verdict"], "inconclusive");
        assert_eq!(v["rows"], 1);
        assert_eq!(v["attachments"][0], "paths");
        assert_eq!(out.attachments, vec![("paths".to_string(), b"x\r\n".to_vec())]);
    }
}
