//! Reports and their text, JSON and CSV renderings.

use std::fmt::Write;

use serde_json::{json, Map, Value};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Real(x) => sig7(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn csv(&self) -> String {
        match self {
            // shortest string that round-trips, exponent form when tiny or huge
            Cell::Real(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) => real(*x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

/// A finite real as a JSON number; infinities and NaN as strings, since
/// JSON has no literal for them.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| real(x)).collect())
}

pub fn matrix(rows: &[Vec<f64>]) -> Value {
    Value::Array(rows.iter().map(|r| reals(r)).collect())
}

/// Seven significant digits, switching to exponent notation for very large
/// or very small magnitudes.
pub fn sig7(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..7).contains(&mag) {
        return format!("{x:.6e}");
    }
    let decimals = (6 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Clone)]
pub enum Body {
    /// Named scalars, one per line in text.
    Scalars(Vec<(&'static str, Cell)>),
    Table {
        columns: Vec<String>,
        rows: Vec<Vec<Cell>>,
    },
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub inputs: Map<String, Value>,
    pub result: Body,
    pub error_estimate: Option<f64>,
    pub diagnostics: Map<String, Value>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text(),
            Format::Json => self.json(),
            Format::Csv => self.csv(),
        }
    }

    /// Scalars with the error estimate after the headline value, as shown in
    /// text and CSV.
    fn scalars(&self) -> Option<Vec<(&'static str, Cell)>> {
        match &self.result {
            Body::Scalars(s) => {
                let mut s = s.clone();
                if let Some(e) = self.error_estimate {
                    s.insert(s.len().min(1), ("error", Cell::Real(e)));
                }
                Some(s)
            }
            Body::Table { .. } => None,
        }
    }

    fn text(&self) -> String {
        let mut out = String::new();
        if let Some(s) = self.scalars() {
            let width = s.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in s {
                writeln!(out, "{k:<width$}  {}", v.text()).unwrap();
            }
            return out;
        }
        let Body::Table { columns, rows } = &self.result else {
            unreachable!()
        };
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| r.iter().map(Cell::text).collect())
            .collect();
        let widths: Vec<usize> = (0..columns.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].len())
                    .chain([columns[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |out: &mut String, items: &[String]| {
            let joined: Vec<String> = items
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            writeln!(out, "{}", joined.join("  ")).unwrap();
        };
        line(&mut out, columns);
        for r in &cells {
            line(&mut out, r);
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        let (header, rows): (Vec<String>, Vec<Vec<String>>) = match self.scalars() {
            Some(s) => (
                s.iter().map(|(k, _)| k.to_string()).collect(),
                vec![s.iter().map(|(_, v)| v.csv()).collect()],
            ),
            None => {
                let Body::Table { columns, rows } = &self.result else {
                    unreachable!()
                };
                (
                    columns.clone(),
                    rows.iter().map(|r| r.iter().map(Cell::csv).collect()).collect(),
                )
            }
        };
        writeln!(out, "{}", header.join(",")).unwrap();
        for r in rows {
            writeln!(out, "{}", r.join(",")).unwrap();
        }
        out
    }

    fn json(&self) -> String {
        let result = match &self.result {
            Body::Scalars(s) => Value::Object(
                s.iter()
                    .map(|(k, v)| (k.to_string(), v.json()))
                    .collect(),
            ),
            Body::Table { columns, rows } => json!({
                "columns": columns,
                "rows": rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect::<Vec<_>>(),
            }),
        };
        let doc = json!({
            "command": self.command,
            "inputs": self.inputs,
            "result": result,
            "error_estimate": self.error_estimate.map(real),
            "diagnostics": self.diagnostics,
        });
        let mut s = serde_json::to_string_pretty(&doc).unwrap();
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_significant_digits() {
        assert_eq!(sig7(0.15915494309189535), "0.1591549");
        assert_eq!(sig7(2.0621), "2.062100");
        assert_eq!(sig7(-1234.5), "-1234.500");
        assert_eq!(sig7(1.5e-5), "1.500000e-5");
        assert_eq!(sig7(0.0), "0");
        assert_eq!(sig7(f64::INFINITY), "inf");
    }

    #[test]
    fn json_infinities_are_strings() {
        assert_eq!(reals(&[1.0, f64::INFINITY, f64::NEG_INFINITY]), json!([1.0, "inf", "-inf"]));
    }

    fn report() -> Report {
        Report {
            command: "pmvnormal",
            inputs: Map::new(),
            result: Body::Scalars(vec![("value", Cell::Real(0.25))]),
            error_estimate: Some(1e-5),
            diagnostics: Map::new(),
        }
    }

    #[test]
    fn renderings() {
        let r = report();
        assert_eq!(r.render(Format::Text), "value  0.2500000\nerror  1.000000e-5\n");
        assert_eq!(r.render(Format::Csv), "value,error\n0.25,1e-5\n");
        let v: Value = serde_json::from_str(&r.render(Format::Json)).unwrap();
        assert_eq!(v["result"]["value"], json!(0.25));
        assert_eq!(v["error_estimate"], json!(1e-5));
    }

    #[test]
    fn table_csv() {
        let r = Report {
            result: Body::Table {
                columns: vec!["t".into(), "p".into()],
                rows: vec![vec![Cell::Real(-1.0), Cell::Real(0.5)]],
            },
            error_estimate: None,
            ..report()
        };
        assert_eq!(r.render(Format::Csv), "t,p\n-1.0,0.5\n");
    }
}
