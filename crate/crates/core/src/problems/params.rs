//! `NAME = value` parameter extraction for builtin-problem candidates.
//!
//! Candidates for the builtin problems are small recipes: one assignment per
//! line, `#` or `//` comments, numbers, booleans or quoted strings. A later
//! assignment overrides an earlier one.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Bool(bool),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(x) => write!(f, "{x}"),
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params {
    values: BTreeMap<String, ParamValue>,
}

fn strip_comment(line: &str) -> &str {
    let cut = [line.find('#'), line.find("//")].into_iter().flatten().min();
    match cut {
        Some(i) => &line[..i],
        None => line,
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_value(raw: &str) -> Option<ParamValue> {
    let raw = raw.trim().trim_end_matches(';').trim();
    match raw {
        "true" | "True" => return Some(ParamValue::Bool(true)),
        "false" | "False" => return Some(ParamValue::Bool(false)),
        _ => {}
    }
    if raw.len() >= 2 && (raw.starts_with('"') && raw.ends_with('"') || raw.starts_with('\'') && raw.ends_with('\'')) {
        return Some(ParamValue::Text(raw[1..raw.len() - 1].to_string()));
    }
    raw.parse::<f64>().ok().map(ParamValue::Number)
}

impl Params {
    pub fn parse(source: &str) -> Params {
        let mut values = BTreeMap::new();
        for line in source.lines() {
            let line = strip_comment(line);
            let Some((name, value)) = line.split_once('=') else {
                continue;
            };
            let name = name.trim();
            let name = name.strip_prefix("let ").map(str::trim).unwrap_or(name);
            if !is_identifier(name) {
                continue;
            }
            if let Some(v) = parse_value(value) {
                values.insert(name.to_string(), v);
            }
        }
        Params { values }
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn number(&self, name: &str) -> Result<f64, String> {
        match self.values.get(name) {
            Some(ParamValue::Number(x)) => Ok(*x),
            Some(other) => Err(format!("parameter {name} must be a number, found {other}")),
            None => Err(format!("parameter {name} not found")),
        }
    }

    pub fn number_or(&self, name: &str, default: f64) -> Result<f64, String> {
        if self.values.contains_key(name) {
            self.number(name)
        } else {
            Ok(default)
        }
    }

    pub fn flag(&self, name: &str) -> Result<bool, String> {
        match self.values.get(name) {
            Some(ParamValue::Bool(b)) => Ok(*b),
            Some(ParamValue::Number(x)) if *x == 0.0 || *x == 1.0 => Ok(*x == 1.0),
            Some(other) => Err(format!("parameter {name} must be a boolean, found {other}")),
            None => Err(format!("parameter {name} not found")),
        }
    }

    pub fn flag_or(&self, name: &str, default: bool) -> Result<bool, String> {
        if self.values.contains_key(name) {
            self.flag(name)
        } else {
            Ok(default)
        }
    }

    /// A non-negative whole number.
    pub fn count(&self, name: &str) -> Result<usize, String> {
        let x = self.number(name)?;
        if x < 0.0 || x.fract() != 0.0 || !x.is_finite() {
            return Err(format!("parameter {name} must be a non-negative integer, found {x}"));
        }
        Ok(x as usize)
    }

    pub fn count_or(&self, name: &str, default: usize) -> Result<usize, String> {
        if self.values.contains_key(name) {
            self.count(name)
        } else {
            Ok(default)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_assignments_and_comments() {
        let p = Params::parse(
            "# header = 3\nalpha = 1.0\ns_bnd=1.5 // trailing\nuse_residual = true\nname = \"x\"\nnot an assignment\nalpha = 2\n",
        );
        assert_eq!(p.number("alpha"), Ok(2.0));
        assert_eq!(p.number("s_bnd"), Ok(1.5));
        assert_eq!(p.flag("use_residual"), Ok(true));
        assert_eq!(p.get("name"), Some(&ParamValue::Text("x".into())));
        assert!(p.get("header").is_none());
    }

    #[test]
    fn missing_parameter_message() {
        assert_eq!(Params::parse("").number("s_obs"), Err("parameter s_obs not found".into()));
    }

    #[test]
    fn infinity_parses() {
        assert_eq!(Params::parse("tau = inf").number("tau"), Ok(f64::INFINITY));
    }

    #[test]
    fn counts_must_be_whole() {
        let p = Params::parse("steps = 12.5\nn = 3");
        assert!(p.count("steps").is_err());
        assert_eq!(p.count("n"), Ok(3));
    }
}
