//! Report rows, tables and their CSV/JSON serialization.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// How a row's estimate is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    /// `|estimate - reference| <= k * se`.
    WithinSe { k: f64 },
    /// `|estimate - reference| <= tol`.
    AbsTol { tol: f64 },
    /// `|estimate / reference - 1| <= tol`.
    RelTol { tol: f64 },
    /// `lo <= estimate <= hi`.
    Range { lo: f64, hi: f64 },
    /// `estimate <= reference`.
    AtMost,
    /// `estimate >= reference`.
    AtLeast,
    /// `estimate == reference`.
    Exact,
    /// Reported only.
    Info,
}

impl Rule {
    pub fn check(&self, estimate: f64, reference: f64, se: f64) -> bool {
        let ok = match *self {
            Rule::WithinSe { k } => (estimate - reference).abs() <= k * se,
            Rule::AbsTol { tol } => (estimate - reference).abs() <= tol,
            Rule::RelTol { tol } => (estimate / reference - 1.0).abs() <= tol,
            Rule::Range { lo, hi } => lo <= estimate && estimate <= hi,
            Rule::AtMost => estimate <= reference,
            Rule::AtLeast => estimate >= reference,
            Rule::Exact => estimate == reference,
            Rule::Info => true,
        };
        ok && (matches!(self, Rule::Info) || !estimate.is_nan())
    }

    /// The numeric tolerance, for the CSV column.
    pub fn tolerance(&self) -> f64 {
        match *self {
            Rule::WithinSe { k } => k,
            Rule::AbsTol { tol } | Rule::RelTol { tol } => tol,
            Rule::Range { lo, hi } => hi - lo,
            Rule::AtMost | Rule::AtLeast | Rule::Exact => 0.0,
            Rule::Info => f64::NAN,
        }
    }

    fn name(&self) -> String {
        match *self {
            Rule::WithinSe { .. } => "within_se".into(),
            Rule::AbsTol { .. } => "abs_tol".into(),
            Rule::RelTol { .. } => "rel_tol".into(),
            Rule::Range { lo, hi } => format!("range[{}:{}]", fmt_f64(lo), fmt_f64(hi)),
            Rule::AtMost => "at_most".into(),
            Rule::AtLeast => "at_least".into(),
            Rule::Exact => "exact".into(),
            Rule::Info => "info".into(),
        }
    }
}

/// One checked quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub id: String,
    pub estimate: f64,
    pub reference: f64,
    pub se: f64,
    pub rule: Rule,
    pub required: bool,
    pub pass: bool,
}

impl Row {
    pub fn new(id: impl Into<String>, estimate: f64, reference: f64, se: f64, rule: Rule) -> Self {
        let pass = rule.check(estimate, reference, se);
        Self { id: id.into(), estimate, reference, se, rule, required: !matches!(rule, Rule::Info), pass }
    }

    pub fn info(id: impl Into<String>, estimate: f64) -> Self {
        Self::new(id, estimate, f64::NAN, f64::NAN, Rule::Info)
    }

    /// Keeps the verdict but excludes it from the exit status.
    pub fn optional(mut self) -> Self {
        self.required = false;
        self
    }
}

/// A cell of a raw-data table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Raw per-trial or per-cell data written as its own CSV.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub trials: u64,
    /// Echo of the effective configuration.
    pub config: Value,
    pub rows: Vec<Row>,
    /// Constants fitted during the run.
    pub fitted: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64, trials: u64, config: Value) -> Self {
        Self { experiment: experiment.into(), seed, trials, config, ..Self::default() }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// True iff every required row passed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass || !r.required)
    }

    pub fn failures(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.required && !r.pass).collect()
    }
}

/// Floats as 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_cell(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Float(f) => fmt_f64(*f),
        Cell::Text(t) => csv_field(t),
    }
}

pub const ROWS_HEADER: &str = "id,estimate,reference,se,rule,tolerance,required,pass";

/// The report rows as CSV text.
pub fn rows_csv(report: &Report) -> String {
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for r in &report.rows {
        let fields = [
            csv_field(&r.id),
            fmt_f64(r.estimate),
            fmt_f64(r.reference),
            fmt_f64(r.se),
            csv_field(&r.rule.name()),
            fmt_f64(r.rule.tolerance()),
            r.required.to_string(),
            r.pass.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn table_csv(table: &Table) -> String {
    let mut out = table.header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.iter().map(fmt_cell).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Writes JSON numbers with 17 significant digits.
struct DigitsFormatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for DigitsFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format!("{value:.16e}").as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// The JSON summary: config echo, seed, rows with verdicts, fitted
/// constants. Non-finite floats become `null`.
pub fn summary_json(report: &Report) -> Result<String> {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "id": r.id,
                "estimate": r.estimate,
                "reference": r.reference,
                "se": r.se,
                "rule": r.rule,
                "required": r.required,
                "pass": r.pass,
            })
        })
        .collect();
    let value = serde_json::json!({
        "experiment": report.experiment,
        "seed": report.seed,
        "trials": report.trials,
        "config": report.config,
        "passed": report.passed(),
        "rows": rows,
        "fitted": report.fitted,
        "tables": report.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
        "notes": report.notes,
    });
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, DigitsFormatter(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("utf-8"))
}

/// Writes `rows.csv`, one CSV per table and `summary.json` into `dir`.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    put("rows.csv".into(), rows_csv(report))?;
    for t in &report.tables {
        put(format!("{}.csv", t.name), table_csv(t))?;
    }
    put("summary.json".into(), summary_json(report)?)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert!(Rule::WithinSe { k: 3.0 }.check(1.0, 1.2, 0.1));
        assert!(!Rule::WithinSe { k: 3.0 }.check(1.0, 1.4, 0.1));
        assert!(Rule::RelTol { tol: 0.02 }.check(4.05, 4.0, 0.0));
        assert!(!Rule::Range { lo: 6.0, hi: 10.0 }.check(f64::NAN, 0.0, 0.0));
        assert!(Rule::Info.check(f64::NAN, f64::NAN, f64::NAN));
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(4.0), "4.0000000000000000e0");
        let back: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = Report::new("x", 1, 0, Value::Null);
        assert_eq!(rows_csv(&r), format!("{ROWS_HEADER}\n"));
        let j: Value = serde_json::from_str(&summary_json(&r).unwrap()).unwrap();
        assert_eq!(j["rows"].as_array().unwrap().len(), 0);
        assert_eq!(j["passed"], Value::Bool(true));
    }

    #[test]
    fn json_floats_keep_17_digits() {
        let mut r = Report::new("x", 1, 0, Value::Null);
        r.push(Row::new("a", 0.1, f64::NAN, 0.0, Rule::Info));
        let s = summary_json(&r).unwrap();
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("\"reference\": null"));
    }
}
