//! Helpers shared by the line-delimited text formats.

use std::fmt::Display;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FormatError {
    pub fn malformed(line: usize, message: impl Into<String>) -> Self {
        FormatError::Malformed { line, message: message.into() }
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
pub fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_field<T>(line: usize, name: &str, raw: Option<&str>) -> Result<T, FormatError>
where
    T: FromStr,
    T::Err: Display,
{
    let raw = raw.ok_or_else(|| FormatError::malformed(line, format!("missing field `{name}`")))?;
    raw.parse::<T>()
        .map_err(|e| FormatError::malformed(line, format!("bad `{name}` value `{raw}`: {e}")))
}

/// Optional value written as `-` when absent.
pub fn parse_opt<T>(line: usize, name: &str, raw: Option<&str>) -> Result<Option<T>, FormatError>
where
    T: FromStr,
    T::Err: Display,
{
    match raw {
        Some("-") => Ok(None),
        other => parse_field(line, name, other).map(Some),
    }
}

pub fn parse_bool01(line: usize, name: &str, raw: Option<&str>) -> Result<bool, FormatError> {
    match raw {
        Some("0") => Ok(false),
        Some("1") => Ok(true),
        Some(other) => Err(FormatError::malformed(line, format!("bad `{name}` flag `{other}`"))),
        None => Err(FormatError::malformed(line, format!("missing field `{name}`"))),
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}
