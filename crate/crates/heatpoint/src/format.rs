//! Deterministic tabular output.
//!
//! Floats are written as the shortest decimal that parses back to the same `f64`
//! (plain notation for `1e-4 ≤ |x| < 1e16`, exponent notation otherwise), with `.`
//! as the decimal separator and `\n` line endings. Non-finite values become `NaN`,
//! `inf` and `-inf` in CSV and `null` in JSON.

use serde_json::{Map, Value};

use crate::scenario::Format;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Float.
    F(f64),
    /// Integer.
    I(i64),
    /// Boolean.
    B(bool),
    /// Text without commas, quotes or newlines.
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

/// Shortest round-trip decimal of `x`.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        // `{}` never uses exponents and is shortest round-trip; force a decimal point
        let s = format!("{x}");
        if s.contains('.') {
            s
        } else {
            s + ".0"
        }
    } else {
        format!("{x:e}")
    }
}

fn json_value(c: &Cell) -> Value {
    match c {
        Cell::F(x) => serde_json::Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null),
        Cell::I(i) => Value::from(*i),
        Cell::B(b) => Value::from(*b),
        Cell::S(s) => Value::from(s.as_str()),
    }
}

/// Float as a JSON value (`null` if non-finite).
pub fn json_float(x: f64) -> Value {
    json_value(&Cell::F(x))
}

/// A rectangular table with named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    /// Column names.
    pub columns: Vec<String>,
    /// Rows, each as long as `columns`.
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Empty table with the given header.
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Appends a row.
    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV text with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::F(x) => float(*x),
                    Cell::I(i) => i.to_string(),
                    Cell::B(b) => b.to_string(),
                    Cell::S(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Array of row objects, keys in column order.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (k, c) in self.columns.iter().zip(row) {
                        obj.insert(k.clone(), json_value(c));
                    }
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// Rendered text in `format`.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => json_text(&self.to_json()),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// File extension of tabular artifacts.
pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_examples() {
        assert_eq!(float(1.0), "1.0");
        assert_eq!(float(-0.5), "-0.5");
        assert_eq!(float(0.0), "0.0");
        assert_eq!(float(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(float(1e-7), "1e-7");
        assert_eq!(float(-2.5e20), "-2.5e20");
        assert_eq!(float(f64::NAN), "NaN");
        assert_eq!(float(std::f64::consts::PI), "3.141592653589793");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(["a", "b", "c"]);
        t.push(vec![1usize.into(), 0.25.into(), true.into()]);
        assert_eq!(t.to_csv(), "a,b,c\n1,0.25,true\n");
        assert_eq!(json_text(&t.to_json()), "[\n  {\n    \"a\": 1,\n    \"b\": 0.25,\n    \"c\": true\n  }\n]\n");
    }

    proptest! {
        #[test]
        fn float_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let s = float(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            prop_assert!(s.len() <= 24);
        }
    }
}
