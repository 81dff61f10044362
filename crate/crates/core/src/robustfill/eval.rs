//! Interpreter for RobustFill programs.
//!
//! Strings are handled as `char` vectors. Positions and match indices are
//! 1-based, with negative values counting from the end (`-1` is the last).
//! Token matches are maximal and non-overlapping, scanned left to right.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::{
    Boundary, Case, Compose, ComposeInner, Expression, Index, Modification, Position, Program,
    Regex, Substring, TokenType,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalFailure {
    #[error("match {index} requested but only {available} found")]
    MissingMatch { index: i32, available: usize },
    #[error("position {position} outside a string of length {len}")]
    PositionOutOfBounds { position: i32, len: usize },
    #[error("no match")]
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expression {expression} failed: {failure}")]
pub struct ProgramFailure {
    pub expression: usize,
    pub failure: EvalFailure,
}

/// One input/output pair of a specification.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IoExample {
    pub input: String,
    pub output: String,
}

impl IoExample {
    pub fn new(input: impl Into<String>, output: impl Into<String>) -> Self {
        IoExample {
            input: input.into(),
            output: output.into(),
        }
    }
}

fn starts_class(t: TokenType, c: char) -> bool {
    match t {
        TokenType::Number | TokenType::Digit => c.is_ascii_digit(),
        TokenType::Word => c.is_ascii_alphabetic(),
        TokenType::Alphanum => c.is_ascii_alphanumeric(),
        TokenType::AllCaps | TokenType::PropCase => c.is_ascii_uppercase(),
        TokenType::Lower => c.is_ascii_lowercase(),
        TokenType::Char => !c.is_whitespace(),
    }
}

fn continues_class(t: TokenType, c: char) -> bool {
    match t {
        TokenType::Number => c.is_ascii_digit(),
        TokenType::Word => c.is_ascii_alphabetic(),
        TokenType::Alphanum => c.is_ascii_alphanumeric(),
        TokenType::AllCaps => c.is_ascii_uppercase(),
        TokenType::PropCase | TokenType::Lower => c.is_ascii_lowercase(),
        TokenType::Digit | TokenType::Char => false,
    }
}

/// Match ranges of a token class.
pub fn token_matches(t: TokenType, s: &[char]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < s.len() {
        if !starts_class(t, s[i]) {
            i += 1;
            continue;
        }
        let mut end = i + 1;
        while end < s.len() && continues_class(t, s[end]) {
            end += 1;
        }
        // PROP_CASE needs at least one lowercase letter after the capital.
        if t == TokenType::PropCase && end == i + 1 {
            i += 1;
            continue;
        }
        out.push(i..end);
        i = end;
    }
    out
}

pub fn regex_matches(r: Regex, s: &[char]) -> Vec<Range<usize>> {
    match r {
        Regex::Type(t) => token_matches(t, s),
        Regex::Delim(d) => s
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == d.get())
            .map(|(i, _)| i..i + 1)
            .collect(),
    }
}

/// Resolves a 1-based, possibly negative match index to a 0-based one.
fn resolve_index(index: Index, available: usize) -> Result<usize, EvalFailure> {
    let i = index.get();
    let resolved = if i > 0 {
        i as i64 - 1
    } else {
        available as i64 + i as i64
    };
    if resolved < 0 || resolved >= available as i64 {
        return Err(EvalFailure::MissingMatch { index: i, available });
    }
    Ok(resolved as usize)
}

fn nth_match(r: Regex, index: Index, s: &[char]) -> Result<Range<usize>, EvalFailure> {
    let matches = regex_matches(r, s);
    let i = resolve_index(index, matches.len())?;
    Ok(matches[i].clone())
}

fn first_match(r: Regex, s: &[char]) -> Result<Range<usize>, EvalFailure> {
    regex_matches(r, s).into_iter().next().ok_or(EvalFailure::NoMatch)
}

/// Resolves a position to a 0-based char offset in `[0, len)`.
fn resolve_position(k: Position, len: usize) -> Result<usize, EvalFailure> {
    let p = k.get() as i64;
    let one_based = if p > 0 { p } else { len as i64 + 1 + p };
    if one_based < 1 || one_based > len as i64 {
        return Err(EvalFailure::PositionOutOfBounds {
            position: k.get(),
            len,
        });
    }
    Ok(one_based as usize - 1)
}

fn collect(s: &[char]) -> String {
    s.iter().collect()
}

fn boundary_offset(m: &Range<usize>, b: Boundary) -> usize {
    match b {
        Boundary::Start => m.start,
        Boundary::End => m.end,
    }
}

impl Substring {
    pub fn apply(&self, s: &[char]) -> Result<Vec<char>, EvalFailure> {
        match *self {
            Substring::SubStr(k1, k2) => {
                let a = resolve_position(k1, s.len())?;
                let b = resolve_position(k2, s.len())?;
                Ok(if a <= b { s[a..=b].to_vec() } else { Vec::new() })
            }
            Substring::GetSpan(r1, i1, b1, r2, i2, b2) => {
                let from = boundary_offset(&nth_match(r1, i1, s)?, b1);
                let to = boundary_offset(&nth_match(r2, i2, s)?, b2);
                Ok(if from <= to { s[from..to].to_vec() } else { Vec::new() })
            }
            Substring::GetToken(t, i) => Ok(s[nth_match(Regex::Type(t), i, s)?].to_vec()),
            Substring::GetUpto(r) => Ok(s[..first_match(r, s)?.end].to_vec()),
            Substring::GetFrom(r) => Ok(s[first_match(r, s)?.end..].to_vec()),
        }
    }
}

fn replace_ranges(s: &[char], ranges: &[Range<usize>], with: &[char]) -> Vec<char> {
    let mut out = Vec::with_capacity(s.len());
    let mut last = 0;
    for r in ranges {
        out.extend_from_slice(&s[last..r.start]);
        out.extend_from_slice(with);
        last = r.end;
    }
    out.extend_from_slice(&s[last..]);
    out
}

impl Modification {
    pub fn apply(&self, s: &[char]) -> Result<Vec<char>, EvalFailure> {
        match *self {
            Modification::ToCase(Case::AllCaps) => {
                Ok(s.iter().map(|c| c.to_ascii_uppercase()).collect())
            }
            Modification::ToCase(Case::Lower) => {
                Ok(s.iter().map(|c| c.to_ascii_lowercase()).collect())
            }
            Modification::ToCase(Case::Proper) => {
                let mut out = s.to_vec();
                for m in token_matches(TokenType::Word, s) {
                    out[m.start] = out[m.start].to_ascii_uppercase();
                    for c in &mut out[m.start + 1..m.end] {
                        *c = c.to_ascii_lowercase();
                    }
                }
                Ok(out)
            }
            Modification::Replace(from, to) => Ok(s
                .iter()
                .map(|&c| if c == from.get() { to.get() } else { c })
                .collect()),
            Modification::Trim => {
                let start = s.iter().position(|c| !c.is_whitespace()).unwrap_or(s.len());
                let end = s.iter().rposition(|c| !c.is_whitespace()).map_or(start, |e| e + 1);
                Ok(s[start..end].to_vec())
            }
            Modification::GetFirst(t, i) => {
                let matches = token_matches(t, s);
                let want = i.get().unsigned_abs() as usize;
                if matches.len() < want {
                    return Err(EvalFailure::MissingMatch {
                        index: i.get(),
                        available: matches.len(),
                    });
                }
                let chosen = if i.get() > 0 {
                    &matches[..want]
                } else {
                    &matches[matches.len() - want..]
                };
                Ok(chosen.iter().flat_map(|m| s[m.clone()].iter().copied()).collect())
            }
            Modification::GetAll(t) => {
                let matches = token_matches(t, s);
                if matches.is_empty() {
                    return Err(EvalFailure::NoMatch);
                }
                let mut out = Vec::new();
                for (n, m) in matches.iter().enumerate() {
                    if n > 0 {
                        out.push(' ');
                    }
                    out.extend_from_slice(&s[m.clone()]);
                }
                Ok(out)
            }
            Modification::Substitute(t, i, c) => {
                let m = nth_match(Regex::Type(t), i, s)?;
                Ok(replace_ranges(s, &[m], &[c.get()]))
            }
            Modification::SubstituteAll(t, c) => {
                Ok(replace_ranges(s, &token_matches(t, s), &[c.get()]))
            }
            Modification::Remove(t, i) => {
                let m = nth_match(Regex::Type(t), i, s)?;
                Ok(replace_ranges(s, &[m], &[]))
            }
            Modification::RemoveAll(t) => Ok(replace_ranges(s, &token_matches(t, s), &[])),
        }
    }
}

impl Compose {
    pub fn apply(&self, s: &[char]) -> Result<Vec<char>, EvalFailure> {
        let inner = match &self.inner {
            ComposeInner::Modification(m) => m.apply(s)?,
            ComposeInner::Substring(sub) => sub.apply(s)?,
        };
        self.outer.apply(&inner)
    }
}

impl Expression {
    pub fn apply(&self, s: &[char]) -> Result<Vec<char>, EvalFailure> {
        match self {
            Expression::Substring(sub) => sub.apply(s),
            Expression::Modification(m) => m.apply(s),
            Expression::Compose(c) => c.apply(s),
            Expression::ConstStr(c) => Ok(vec![c.get()]),
        }
    }

    pub fn eval(&self, input: &str) -> Result<String, EvalFailure> {
        let chars: Vec<char> = input.chars().collect();
        self.apply(&chars).map(|out| collect(&out))
    }
}

impl Program {
    pub fn eval(&self, input: &str) -> Result<String, ProgramFailure> {
        let chars: Vec<char> = input.chars().collect();
        let mut out = String::new();
        for (expression, e) in self.expressions().iter().enumerate() {
            let piece = e
                .apply(&chars)
                .map_err(|failure| ProgramFailure { expression, failure })?;
            out.extend(piece);
        }
        Ok(out)
    }

    /// True iff the program reproduces every output; failures count as false.
    pub fn satisfies(&self, spec: &[IoExample]) -> bool {
        spec.iter()
            .all(|ex| self.eval(&ex.input).is_ok_and(|out| out == ex.output))
    }
}

pub fn eval_expression(e: &Expression, input: &str) -> Result<String, EvalFailure> {
    e.eval(input)
}

pub fn eval_program(p: &Program, input: &str) -> Result<String, ProgramFailure> {
    p.eval(input)
}

pub fn satisfies(p: &Program, spec: &[IoExample]) -> bool {
    p.satisfies(spec)
}
