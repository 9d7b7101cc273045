//! Flat records rendered as CSV or JSON.

use std::fmt::Write as _;

use serde_json::{Map, Value};

/// Rounds to 12 significant digits so every printed number parses back to
/// the value that was printed.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Plain decimal for ordinary magnitudes, exponent form for tiny or huge ones.
pub fn format_num(x: f64) -> String {
    let r = round12(x);
    if r != 0.0 && (r.abs() < 1e-4 || r.abs() >= 1e15) {
        format!("{r:e}")
    } else {
        r.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Nums(Vec<f64>),
    Ints(Vec<usize>),
    Missing,
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Num(x) => format_num(*x),
            Field::Int(v) => v.to_string(),
            Field::Bool(b) => b.to_string(),
            Field::Text(s) => s.clone(),
            Field::Nums(xs) => xs.iter().map(|x| format_num(*x)).collect::<Vec<_>>().join(";"),
            Field::Ints(vs) => vs.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
            Field::Missing => "n/a".into(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Num(x) => Value::from(round12(*x)),
            Field::Int(v) => Value::from(*v),
            Field::Bool(b) => Value::from(*b),
            Field::Text(s) => Value::from(s.as_str()),
            Field::Nums(xs) => xs.iter().map(|x| Value::from(round12(*x))).collect(),
            Field::Ints(vs) => vs.iter().map(|&v| Value::from(v)).collect(),
            Field::Missing => Value::Null,
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as u64)
    }
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Int(v)
    }
}

impl From<bool> for Field {
    fn from(b: bool) -> Self {
        Field::Bool(b)
    }
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Text(s.to_owned())
    }
}

impl From<String> for Field {
    fn from(s: String) -> Self {
        Field::Text(s)
    }
}

impl From<Vec<f64>> for Field {
    fn from(xs: Vec<f64>) -> Self {
        Field::Nums(xs)
    }
}

impl From<Vec<usize>> for Field {
    fn from(vs: Vec<usize>) -> Self {
        Field::Ints(vs)
    }
}

impl From<Option<f64>> for Field {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Field::Missing, Field::Num)
    }
}

/// Ordered key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record(Vec<(String, Field)>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<Field>) -> Self {
        self.0.push((key.into(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Field> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.clone(), v.json())).collect::<Map<_, _>>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A single object or a table of rows sharing the first row's columns.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    One(Record),
    Rows(Vec<Record>),
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let rows: &[Record] = match self {
                    Report::One(r) => std::slice::from_ref(r),
                    Report::Rows(rows) => rows,
                };
                let mut out = String::new();
                if let Some(first) = rows.first() {
                    let header: Vec<&str> = first.0.iter().map(|(k, _)| k.as_str()).collect();
                    writeln!(out, "{}", header.join(",")).unwrap();
                }
                for row in rows {
                    let cells: Vec<String> = row.0.iter().map(|(_, v)| v.csv()).collect();
                    writeln!(out, "{}", cells.join(",")).unwrap();
                }
                out
            }
            Format::Json => {
                let value = match self {
                    Report::One(r) => r.json(),
                    Report::Rows(rows) => rows.iter().map(Record::json).collect(),
                };
                let mut out = serde_json::to_string_pretty(&value).expect("values are finite");
                out.push('\n');
                out
            }
        }
    }
}
