//! Line-oriented text helpers shared by the witness, behavior and settings
//! file formats.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Non-blank, non-comment lines with their 1-based line numbers, split on
/// whitespace.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((i + 1, trimmed.split_whitespace().collect()))
        }
    })
}

pub(crate) fn parse_error<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, message: message.into() })
}

pub(crate) fn parse_index(line: usize, token: &str, what: &str) -> Result<usize> {
    match token.parse::<usize>() {
        Ok(v) => Ok(v),
        Err(_) => parse_error(line, format!("expected {what} as a non-negative integer, found `{token}`")),
    }
}

pub(crate) fn parse_scalar<T: Scalar>(line: usize, token: &str, what: &str) -> Result<T> {
    match T::parse_decimal(token) {
        Some(v) => Ok(v),
        None => parse_error(line, format!("expected {what} as a decimal number, found `{token}`")),
    }
}

pub(crate) fn expect_arity(line: usize, tokens: &[&str], n: usize, shape: &str) -> Result<()> {
    if tokens.len() == n {
        Ok(())
    } else {
        parse_error(line, format!("expected `{shape}`, found {} fields", tokens.len()))
    }
}

/// Parses a `scenario N m` line.
pub(crate) fn parse_scenario_line(line: usize, tokens: &[&str]) -> Result<(usize, usize)> {
    if tokens.first() != Some(&"scenario") {
        return parse_error(line, "expected `scenario N m`");
    }
    expect_arity(line, tokens, 3, "scenario N m")?;
    let n = parse_index(line, tokens[1], "N")?;
    let m = parse_index(line, tokens[2], "m")?;
    Ok((n, m))
}

/// Reads a dense `(x, y)`-indexed table where every line is
/// `x y a b`. Rejects missing and duplicate pairs. Indices are 1-based.
pub(crate) fn parse_pair_table<'a, T: Scalar>(
    lines: impl Iterator<Item = (usize, Vec<&'a str>)>,
    n: usize,
    m: usize,
    shape: &str,
) -> Result<Vec<(T, T)>> {
    let mut table: Vec<Option<(T, T)>> = vec![None; n * m];
    let mut last_line = 0;
    for (line, tokens) in lines {
        last_line = line;
        expect_arity(line, &tokens, 4, shape)?;
        let x = parse_index(line, tokens[0], "x")?;
        let y = parse_index(line, tokens[1], "y")?;
        if x == 0 || x > n || y == 0 || y > m {
            return parse_error(line, format!("pair ({x}, {y}) outside scenario {n}x{m}"));
        }
        let a = parse_scalar(line, tokens[2], "first value")?;
        let b = parse_scalar(line, tokens[3], "second value")?;
        let slot = &mut table[(x - 1) * m + (y - 1)];
        if slot.is_some() {
            return parse_error(line, format!("duplicate entry for ({x}, {y})"));
        }
        *slot = Some((a, b));
    }
    if let Some(missing) = table.iter().position(Option::is_none) {
        return parse_error(last_line, format!("missing entry for ({}, {})", missing / m + 1, missing % m + 1));
    }
    Ok(table.into_iter().flatten().collect())
}
