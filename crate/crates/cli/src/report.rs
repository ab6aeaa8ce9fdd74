//! Run reports and their JSON, CSV and text renderings.
//!
//! Every float leaving the program is rounded to 15 significant digits
//! (ties to even) first, so the three formats carry the same numbers and a
//! rerun with the same seed is byte-identical.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SIGNIFICANT_DIGITS: usize = 15;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let text = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let rounded: f64 = text.parse().expect("formatted float parses");
    // Avoid printing "-0".
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Rounds every float inside a JSON value.
pub fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report data serializes")
}

/// Outcome of a command that checks claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Violation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Map<String, Value>,
    /// Full detail; only the JSON rendering shows all of it.
    pub results: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    /// Headline numbers shown under the table in text output.
    pub summary: Vec<(String, Value)>,
    pub verdict: Verdict,
}

impl Report {
    pub fn new(command: &'static str, config: Map<String, Value>, columns: Vec<&'static str>) -> Self {
        Self {
            command,
            config,
            results: Value::Null,
            columns,
            rows: Vec::new(),
            summary: Vec::new(),
            verdict: Verdict::Pass,
        }
    }

    pub fn row(&mut self, cells: Vec<Value>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn summarize(&mut self, key: impl Into<String>, value: Value) {
        self.summary.push((key.into(), value));
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.render_json(),
            Format::Csv => self.render_csv(),
            Format::Text => self.render_text(),
        }
    }

    fn config_value(&self) -> Value {
        round_value(Value::Object(self.config.clone()))
    }

    fn render_json(&self) -> String {
        let doc = json!({
            "command": self.command,
            "config": self.config_value(),
            "results": round_value(self.results.clone()),
            "verdict": match self.verdict { Verdict::Pass => "pass", Verdict::Violation => "violation" },
        });
        let mut out = serde_json::to_string_pretty(&doc).expect("json renders");
        out.push('\n');
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# pairent {} config {}", self.command, self.config_value()).unwrap();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_escape(&cell_text(c))).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "pairent {}", self.command).unwrap();
        for (k, v) in &self.config {
            writeln!(out, "  {k}: {}", cell_text(&round_value(v.clone()))).unwrap();
        }
        if !self.rows.is_empty() {
            let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(cell_text).collect()).collect();
            let widths: Vec<usize> = (0..self.columns.len())
                .map(|c| {
                    cells
                        .iter()
                        .map(|r| r[c].len())
                        .chain([self.columns[c].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            out.push('\n');
            let line = |out: &mut String, items: Vec<&str>| {
                let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
                writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
            };
            line(&mut out, self.columns.clone());
            for row in &cells {
                line(&mut out, row.iter().map(String::as_str).collect());
            }
        }
        if !self.summary.is_empty() {
            out.push('\n');
            for (k, v) in &self.summary {
                writeln!(out, "{k}: {}", cell_text(&round_value(v.clone()))).unwrap();
            }
        }
        out
    }
}

/// A table cell as text; floats are rounded first.
pub fn cell_text(v: &Value) -> String {
    match round_value(v.clone()) {
        Value::Null => String::new(),
        Value::String(s) => s,
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_fifteen_digits() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333333);
        assert_eq!(round_sig(2.0 / 3.0), 0.666666666666667);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-1e-300 * 1e-30), 0.0);
        assert_eq!(round_sig(1.0), 1.0);
    }

    #[test]
    fn rounding_ties_to_even() {
        // 0.125 and 0.375 are exact binary fractions, so these are true ties;
        // round_sig goes through the same formatter.
        assert_eq!(format!("{:.2}", 0.125), "0.12");
        assert_eq!(format!("{:.2}", 0.375), "0.38");
    }

    #[test]
    fn csv_and_json_agree() {
        let mut r = Report::new("t", Map::new(), vec!["x"]);
        r.row(vec![json!(2.0 / 3.0)]);
        r.results = json!({ "x": 2.0 / 3.0 });
        assert!(r.render(Format::Csv).contains("\n0.666666666666667\n"));
        assert!(r.render(Format::Json).contains("0.666666666666667"));
    }
}
