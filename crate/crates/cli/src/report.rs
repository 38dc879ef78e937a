//! Report rows, pass/fail flags and their CSV/JSON serialization.
//!
//! Floats are written with 17 significant digits so reruns diff cleanly.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A cell of a report table.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    List(Vec<f64>),
    Missing,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::List(v)
    }
}

impl From<&[f64]> for Value {
    fn from(v: &[f64]) -> Self {
        Value::List(v.to_vec())
    }
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Missing, Value::Num)
    }
}

/// `{:.16e}`, or the IEEE special names.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Value {
    fn csv_text(&self) -> String {
        match self {
            Value::Num(v) => fmt_f64(*v),
            Value::Int(v) => v.to_string(),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::List(v) => v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";"),
            Value::Missing => String::new(),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Num(v) if v.is_finite() => RawValue::from_string(fmt_f64(*v))
                .map_err(serde::ser::Error::custom)?
                .serialize(s),
            Value::Num(v) => s.serialize_str(&fmt_f64(*v)),
            Value::Int(v) => s.serialize_i64(*v),
            Value::Text(t) => s.serialize_str(t),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::List(v) => {
                use serde::ser::SerializeSeq;
                let mut seq = s.serialize_seq(Some(v.len()))?;
                for x in v {
                    seq.serialize_element(&Value::Num(*x))?;
                }
                seq.end()
            }
            Value::Missing => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    fn holds(self, v: f64, tol: f64) -> bool {
        match self {
            Relation::Below => v < tol,
            Relation::AtMost => v <= tol,
            Relation::Above => v > tol,
            Relation::AtLeast => v >= tol,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::AtMost => "<=",
            Relation::Above => ">",
            Relation::AtLeast => ">=",
        }
    }
}

/// `value relation tolerance`, evaluated once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
}

impl Flag {
    pub fn new(name: &str, value: f64, relation: Relation, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation,
            tolerance,
            pass: relation.holds(value, tolerance),
        }
    }

    pub fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::Below, tolerance)
    }

    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::AtMost, tolerance)
    }

    pub fn above(name: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::Above, tolerance)
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, tolerance)
    }

    /// `name: value rel tol -> PASS|FAIL`
    pub fn describe(&self) -> String {
        format!(
            "{}: {} {} {} -> {}",
            self.name,
            fmt_f64(self.value),
            self.relation.symbol(),
            fmt_f64(self.tolerance),
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

impl Serialize for Flag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Flag", 5)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("value", &Value::Num(self.value))?;
        st.serialize_field("relation", &self.relation)?;
        st.serialize_field("tolerance", &Value::Num(self.tolerance))?;
        st.serialize_field("pass", &self.pass)?;
        st.end()
    }
}

/// Ordered name/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fields(pub Vec<(String, Value)>);

impl Fields {
    pub fn push(&mut self, name: &str, v: impl Into<Value>) -> &mut Self {
        self.0.push((name.to_string(), v.into()));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn num(&self, name: &str) -> Option<f64> {
        match self.get(name) {
            Some(Value::Num(v)) => Some(*v),
            Some(Value::Int(v)) => Some(*v as f64),
            _ => None,
        }
    }
}

impl Serialize for Fields {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub id: String,
    pub params: Fields,
    pub values: Fields,
    pub flags: Vec<Flag>,
}

impl ReportRow {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..Self::default()
        }
    }

    pub fn param(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.params.push(name, v);
        self
    }

    pub fn value(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.values.push(name, v);
        self
    }

    pub fn flag(mut self, f: Flag) -> Self {
        self.flags.push(f);
        self
    }

    pub fn passed(&self) -> bool {
        self.flags.iter().all(|f| f.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    /// Top-level named values, written next to `experiment`.
    #[serde(flatten)]
    pub summary: Fields,
    /// Parameter snapshot of the run.
    pub config: serde_json::Value,
    pub all_pass: bool,
    /// Flags that summarize the whole run.
    pub flags: Vec<Flag>,
    pub rows: Vec<ReportRow>,
    /// Restricts the CSV output to these columns, in this order.
    #[serde(skip)]
    pub csv_columns: Option<Vec<String>>,
}

impl Report {
    pub fn new(experiment: &str, config: serde_json::Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            summary: Fields::default(),
            config,
            all_pass: true,
            flags: Vec::new(),
            rows: Vec::new(),
            csv_columns: None,
        }
    }

    pub fn push(&mut self, row: ReportRow) {
        self.all_pass &= row.passed();
        self.rows.push(row);
    }

    pub fn flag(&mut self, f: Flag) {
        self.all_pass &= f.pass;
        self.flags.push(f);
    }

    /// Every flag of the report, summary flags first.
    pub fn all_flags(&self) -> impl Iterator<Item = (&str, &Flag)> {
        self.flags.iter().map(|f| ("", f)).chain(
            self.rows
                .iter()
                .flat_map(|r| r.flags.iter().map(move |f| (r.id.as_str(), f))),
        )
    }

    fn csv_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec!["id".to_string()];
        let mut seen: BTreeSet<String> = header.iter().cloned().collect();
        let mut add = |name: String, header: &mut Vec<String>| {
            if seen.insert(name.clone()) {
                header.push(name);
            }
        };
        for r in &self.rows {
            for (k, _) in r.params.0.iter().chain(&r.values.0) {
                add(k.clone(), &mut header);
            }
            for f in &r.flags {
                for suffix in ["value", "tol", "pass"] {
                    add(format!("{}_{suffix}", f.name), &mut header);
                }
            }
        }
        if let Some(cols) = &self.csv_columns {
            header = cols.clone();
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                header
                    .iter()
                    .map(|h| {
                        if h == "id" {
                            return r.id.clone();
                        }
                        if let Some(v) = r.params.get(h).or_else(|| r.values.get(h)) {
                            return v.csv_text();
                        }
                        for f in &r.flags {
                            if *h == format!("{}_value", f.name) {
                                return fmt_f64(f.value);
                            }
                            if *h == format!("{}_tol", f.name) {
                                return fmt_f64(f.tolerance);
                            }
                            if *h == format!("{}_pass", f.name) {
                                return f.pass.to_string();
                            }
                        }
                        String::new()
                    })
                    .collect()
            })
            .collect();
        (header, rows)
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(self)?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let (header, rows) = self.csv_table();
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&header)?;
                for r in rows {
                    w.write_record(&r)?;
                }
                Ok(w.into_inner()
                    .map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?)
            }
        }
    }
}

/// Write `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming the report into {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        let v: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn flags_record_their_tolerance() {
        let f = Flag::below("mass", 1e-12, 1e-9);
        assert!(f.pass);
        assert!(!Flag::above("margin", 0.0, 0.0).pass);
        assert!(
            f.describe().contains("< 1.0000000000000001e-9"),
            "{}",
            f.describe()
        );
    }

    #[test]
    fn csv_unions_columns_in_order() {
        let mut r = Report::new("t", serde_json::Value::Null);
        r.push(
            ReportRow::new("a")
                .param("k", 1.0)
                .value("x", 2.0)
                .flag(Flag::below("e", 0.5, 1.0)),
        );
        r.push(
            ReportRow::new("b")
                .param("k", 2.0)
                .value("y", 3)
                .flag(Flag::below("e", 2.0, 1.0)),
        );
        assert!(!r.all_pass);
        let text = String::from_utf8(r.render(Format::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id,k,x,e_value,e_tol,e_pass,y");
        assert!(lines[2].ends_with(",false,3"), "{}", lines[2]);
    }

    #[test]
    fn json_numbers_are_raw() {
        let mut r = Report::new("t", serde_json::json!({"d": 1}));
        r.push(ReportRow::new("a").value("x", 0.1).value("n", f64::NAN));
        let text = String::from_utf8(r.render(Format::Json).unwrap()).unwrap();
        assert!(text.contains("\"x\": 1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"n\": \"nan\""));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["rows"][0]["values"]["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
