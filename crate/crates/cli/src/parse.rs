//! Value parsers for vector and matrix flags.
//!
//! Vectors are comma-separated reals. `inf`, `+inf` and `-inf` are accepted
//! everywhere; `.` means "unbounded" and takes its sign from the flag, so it
//! is only valid for lower limits (`-inf`) and upper limits (`+inf`).
//! Matrices are row-major with `;` between rows.

use std::fmt;

/// A parsed comma-separated vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Reals(pub Vec<f64>);

/// A parsed `;`-separated matrix, one `Vec` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix(pub Vec<Vec<f64>>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dot {
    Reject,
    NegInf,
    PosInf,
}

#[derive(Debug)]
pub struct ParseError(String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

fn real(token: &str, dot: Dot) -> Result<f64, ParseError> {
    let t = token.trim();
    if t.is_empty() {
        return Err(ParseError("empty entry".into()));
    }
    if t == "." {
        return match dot {
            Dot::NegInf => Ok(f64::NEG_INFINITY),
            Dot::PosInf => Ok(f64::INFINITY),
            Dot::Reject => Err(ParseError(
                "`.` (unbounded) is only allowed in limit vectors".into(),
            )),
        };
    }
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => return Ok(f64::INFINITY),
        "-inf" | "-infinity" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    t.parse::<f64>()
        .map_err(|_| ParseError(format!("`{t}` is not a real number")))
}

fn vector(s: &str, dot: Dot) -> Result<Reals, ParseError> {
    s.split(',').map(|t| real(t, dot)).collect::<Result<_, _>>().map(Reals)
}

/// Vector where `.` is not allowed (points, locations).
pub fn reals(s: &str) -> Result<Reals, ParseError> {
    vector(s, Dot::Reject)
}

/// Lower limits: `.` is `-inf`.
pub fn lower_limits(s: &str) -> Result<Reals, ParseError> {
    vector(s, Dot::NegInf)
}

/// Upper limits: `.` is `+inf`.
pub fn upper_limits(s: &str) -> Result<Reals, ParseError> {
    vector(s, Dot::PosInf)
}

pub fn matrix(s: &str) -> Result<Matrix, ParseError> {
    s.trim()
        .trim_end_matches(';')
        .split(';')
        .map(|row| reals(row).map(|r| r.0))
        .collect::<Result<_, _>>()
        .map(Matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn vectors() {
        assert_eq!(reals("1, -2.5,3e-1").unwrap().0, vec![1.0, -2.5, 0.3]);
        assert_eq!(reals("inf,-inf,+inf").unwrap().0, vec![INF, -INF, INF]);
        assert!(reals("1,,2").is_err());
        assert!(reals("1,x").is_err());
        assert!(reals(".").is_err());
    }

    #[test]
    fn dot_takes_sign_from_flag() {
        assert_eq!(lower_limits("0,.").unwrap().0, vec![0.0, -INF]);
        assert_eq!(upper_limits(".,1").unwrap().0, vec![INF, 1.0]);
    }

    #[test]
    fn matrices() {
        let m = matrix("1,0.5;0.5,1").unwrap();
        assert_eq!(m.0, vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        assert_eq!(matrix("2;").unwrap().0, vec![vec![2.0]]);
        assert!(matrix("1,2;3").is_ok()); // ragged rows are rejected downstream
        assert!(matrix("1,.;0,1").is_err());
    }
}
