//! Report rows and their CSV/JSON rendering.

use std::fmt::Write as _;

use num_rational::BigRational;
use polybell_core::bellexpr::exact_to_f64;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    pub value: f64,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    /// `None` for informational rows.
    pub pass: Option<bool>,
    pub extra: Vec<(String, f64)>,
    exact: bool,
}

impl Row {
    pub fn info(label: impl Into<String>, value: f64) -> Self {
        Row {
            label: label.into(),
            value,
            expected: None,
            tolerance: None,
            pass: None,
            extra: vec![],
            exact: false,
        }
    }

    /// Passes iff `|value − expected| ≤ tolerance`.
    pub fn check(label: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (value - expected).abs() <= tolerance;
        Row {
            label: label.into(),
            value,
            expected: Some(expected),
            tolerance: Some(tolerance),
            pass: Some(pass),
            extra: vec![],
            exact: false,
        }
    }

    /// Passes iff the rationals are equal.
    pub fn exact(label: impl Into<String>, value: &BigRational, expected: &BigRational) -> Self {
        Row {
            label: label.into(),
            value: exact_to_f64(value),
            expected: Some(exact_to_f64(expected)),
            tolerance: Some(0.0),
            pass: Some(value == expected),
            extra: vec![],
            exact: true,
        }
    }

    /// Passes iff `value ≥ minimum`.
    pub fn at_least(label: impl Into<String>, value: f64, minimum: f64) -> Self {
        Row {
            label: label.into(),
            value,
            expected: Some(minimum),
            tolerance: None,
            pass: Some(value >= minimum),
            extra: vec![],
            exact: false,
        }
    }

    /// Passes iff `value ≤ maximum`.
    pub fn at_most(label: impl Into<String>, value: f64, maximum: f64) -> Self {
        Row {
            label: label.into(),
            value,
            expected: Some(maximum),
            tolerance: None,
            pass: Some(value <= maximum),
            extra: vec![],
            exact: false,
        }
    }

    pub fn with(mut self, column: &str, value: f64) -> Self {
        self.extra.push((column.to_string(), value));
        self
    }

    /// Replaces a nonzero tolerance and re-evaluates the row.
    fn retolerate(&mut self, tol: f64) {
        if self.exact {
            return;
        }
        if let (Some(expected), Some(t)) = (self.expected, self.tolerance) {
            if t > 0.0 {
                self.tolerance = Some(tol);
                self.pass = Some((self.value - expected).abs() <= tol);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<(String, String)>,
    pub rows: Vec<Row>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            inputs: vec![],
            rows: vec![],
        }
    }

    pub fn input(&mut self, name: &str, value: impl ToString) {
        self.inputs.push((name.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn override_tolerance(&mut self, tol: f64) {
        for r in &mut self.rows {
            r.retolerate(tol);
        }
    }

    fn extra_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for r in &self.rows {
            for (k, _) in &r.extra {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        cols
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> String {
        let extras = self.extra_columns();
        let mut out = String::from("label,value,expected,tolerance,pass");
        for c in &extras {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
            let pass = r.pass.map(|p| p.to_string()).unwrap_or_default();
            let _ = write!(
                out,
                "{},{},{},{},{}",
                csv_field(&r.label),
                fmt_num(r.value),
                opt(r.expected),
                opt(r.tolerance),
                pass
            );
            for c in &extras {
                out.push(',');
                if let Some((_, v)) = r.extra.iter().find(|(k, _)| k == c) {
                    out.push_str(&fmt_num(*v));
                }
            }
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("label".into(), Value::String(r.label.clone()));
                m.insert("value".into(), json_num(r.value));
                m.insert("expected".into(), r.expected.map_or(Value::Null, json_num));
                m.insert(
                    "tolerance".into(),
                    r.tolerance.map_or(Value::Null, json_num),
                );
                m.insert("pass".into(), r.pass.map_or(Value::Null, Value::Bool));
                for (k, v) in &r.extra {
                    m.insert(k.clone(), json_num(*v));
                }
                Value::Object(m)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&Value::Array(rows)).expect("serializable");
        s.push('\n');
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `x` with 12 significant digits, shortest form, like C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn json_num(x: f64) -> Value {
    fmt_num(x)
        .parse::<f64>()
        .ok()
        .and_then(Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_num(-4.0 / 99.0), "-0.040404040404");
        assert_eq!(fmt_num(6.0), "6");
        assert_eq!(fmt_num(1.0e-9), "1e-9");
        assert_eq!(fmt_num(1.5e13), "1.5e13");
        assert_eq!(fmt_num(123456.0), "123456");
    }

    #[test]
    fn pass_logic_and_tolerance_override() {
        let mut r = RunReport::new("t");
        r.push(Row::check("a", 1.0005, 1.0, 1e-3));
        r.push(Row::info("b", 3.0));
        assert!(r.passed());
        r.override_tolerance(1e-4);
        assert!(!r.passed());
    }

    #[test]
    fn csv_shape() {
        let mut r = RunReport::new("t");
        r.push(Row::check("x, y", 2.0, 2.0, 0.0).with("theta", 0.5));
        r.push(Row::info("z", 1.0));
        assert_eq!(
            r.render(Format::Csv),
            "label,value,expected,tolerance,pass,theta\n\"x, y\",2,2,0,true,0.5\nz,1,,,,\n"
        );
    }
}
