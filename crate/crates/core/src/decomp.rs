//! Separator tokens, decompositional decoder self-attention masks and
//! relative-position bucketing.
//!
//! A target sequence starts with the begin marker, which doubles as the
//! first separator, and carries one separator after each program part:
//! `SEP p1 SEP p2 ... SEP pn SEP`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Token used as both begin marker and part separator.
pub const SEP: &str = "SEP";

pub fn is_sep(token: &str) -> bool {
    token == SEP
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompError {
    #[error("part spans do not tile {len} tokens: {reason}")]
    SpanTiling { len: usize, reason: String },
    #[error("malformed separator sequence: {0}")]
    Malformed(String),
    #[error("unknown mask variant {0:?}")]
    UnknownVariant(String),
}

/// Checks that `spans` are non-empty, contiguous and cover `0..len`.
pub fn check_tiling(len: usize, spans: &[Range<usize>]) -> Result<(), DecompError> {
    let fail = |reason: String| Err(DecompError::SpanTiling { len, reason });
    if spans.is_empty() {
        return fail("no spans".into());
    }
    let mut expect = 0;
    for (i, s) in spans.iter().enumerate() {
        if s.start != expect {
            return fail(format!("span {i} starts at {} instead of {expect}", s.start));
        }
        if s.end <= s.start {
            return fail(format!("span {i} is empty"));
        }
        expect = s.end;
    }
    if expect != len {
        return fail(format!("spans end at {expect}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SepSequence {
    tokens: Vec<String>,
    sep_positions: Vec<usize>,
}

impl SepSequence {
    /// Validates a token list carrying separators.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, DecompError> {
        let sep_positions: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| is_sep(t))
            .map(|(i, _)| i)
            .collect();
        if sep_positions.first() != Some(&0) {
            return Err(DecompError::Malformed("must start with a separator".into()));
        }
        if sep_positions.last() != Some(&(tokens.len() - 1)) {
            return Err(DecompError::Malformed("must end with a separator".into()));
        }
        if sep_positions.len() < 2 || sep_positions.windows(2).any(|w| w[1] == w[0] + 1) {
            return Err(DecompError::Malformed("empty program part".into()));
        }
        Ok(SepSequence {
            tokens,
            sep_positions,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn sep_positions(&self) -> &[usize] {
        &self.sep_positions
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn part_count(&self) -> usize {
        self.sep_positions.len() - 1
    }

    /// Part spans over the separator-free token list.
    pub fn part_spans(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.sep_positions
            .windows(2)
            .map(|w| {
                let len = w[1] - w[0] - 1;
                let span = start..start + len;
                start += len;
                span
            })
            .collect()
    }

    pub fn sep_flags(&self) -> Vec<bool> {
        self.tokens.iter().map(|t| is_sep(t)).collect()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

pub fn insert_separators<S: AsRef<str>>(
    program_tokens: &[S],
    part_spans: &[Range<usize>],
) -> Result<SepSequence, DecompError> {
    check_tiling(program_tokens.len(), part_spans)?;
    if let Some(t) = program_tokens.iter().find(|t| is_sep(t.as_ref())) {
        return Err(DecompError::Malformed(format!(
            "program already contains {:?}",
            t.as_ref()
        )));
    }
    let mut tokens = Vec::with_capacity(program_tokens.len() + part_spans.len() + 1);
    let mut sep_positions = Vec::with_capacity(part_spans.len() + 1);
    sep_positions.push(0);
    tokens.push(SEP.to_string());
    for span in part_spans {
        tokens.extend(program_tokens[span.clone()].iter().map(|t| t.as_ref().to_string()));
        sep_positions.push(tokens.len());
        tokens.push(SEP.to_string());
    }
    Ok(SepSequence {
        tokens,
        sep_positions,
    })
}

/// Removes every separator; accepts malformed predictions.
pub fn strip_separators<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !is_sep(t))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskVariant {
    SepFull,
    SepToSepAndLast,
    SepToLast,
}

impl MaskVariant {
    pub const ALL: [MaskVariant; 3] = [
        MaskVariant::SepFull,
        MaskVariant::SepToSepAndLast,
        MaskVariant::SepToLast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MaskVariant::SepFull => "sep-full",
            MaskVariant::SepToSepAndLast => "sep-to-sep-and-last",
            MaskVariant::SepToLast => "sep-to-last",
        }
    }
}

impl fmt::Display for MaskVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaskVariant {
    type Err = DecompError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaskVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| DecompError::UnknownVariant(s.to_string()))
    }
}

/// Square boolean mask; `allowed(q, k)` means query `q` may attend key `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    variant: MaskVariant,
    len: usize,
    allow: Vec<bool>,
}

impl MaskMatrix {
    pub fn variant(&self) -> MaskVariant {
        self.variant
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn allowed(&self, q: usize, k: usize) -> bool {
        self.allow[q * self.len + k]
    }

    pub fn row(&self, q: usize) -> &[bool] {
        &self.allow[q * self.len..(q + 1) * self.len]
    }

    /// Allowed key positions of row `q`, ascending.
    pub fn row_keys(&self, q: usize) -> Vec<usize> {
        self.row(q)
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(k, _)| k)
            .collect()
    }

    /// One line per row of `0`/`1` characters.
    pub fn to_dense(&self) -> String {
        let mut out = String::with_capacity(self.len * (self.len + 1));
        for q in 0..self.len {
            out.extend(self.row(q).iter().map(|&a| if a { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    /// One line per row: `q: k1 k2 ...`.
    pub fn to_sparse(&self) -> String {
        let mut out = String::new();
        for q in 0..self.len {
            let keys: Vec<String> = self.row_keys(q).iter().map(usize::to_string).collect();
            out.push_str(&format!("{q}: {}\n", keys.join(" ")));
        }
        out
    }
}

pub fn build_mask(seq: &SepSequence, variant: MaskVariant) -> MaskMatrix {
    mask_from_flags(&seq.sep_flags(), variant)
}

/// Builds a mask from per-position separator flags. Also accepts sequences
/// that do not satisfy the [`SepSequence`] invariants: a non-separator with
/// no preceding separator attends back to position 0.
pub fn mask_from_flags(is_sep: &[bool], variant: MaskVariant) -> MaskMatrix {
    let len = is_sep.len();
    let mut allow = vec![false; len * len];
    let mut part_start = 0;
    let mut seps: Vec<usize> = Vec::new();
    let mut lasts: Vec<usize> = Vec::new();
    for q in 0..len {
        let row = &mut allow[q * len..(q + 1) * len];
        if !is_sep[q] {
            row[part_start..=q].fill(true);
            continue;
        }
        if q > 0 && !is_sep[q - 1] {
            lasts.push(q - 1);
        }
        match variant {
            MaskVariant::SepFull => row[..=q].fill(true),
            MaskVariant::SepToSepAndLast => {
                for &k in seps.iter().chain(&lasts) {
                    row[k] = true;
                }
            }
            MaskVariant::SepToLast => {
                for &k in &lasts {
                    row[k] = true;
                }
            }
        }
        row[q] = true;
        seps.push(q);
        part_start = q;
    }
    MaskMatrix {
        variant,
        len,
        allow,
    }
}

/// Signed-distance bucketing: exact buckets for small distances, then
/// logarithmically widening buckets up to `max_distance`, saturating beyond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelposBuckets {
    pub num_buckets: u32,
    pub max_distance: u32,
}

impl Default for RelposBuckets {
    fn default() -> Self {
        RelposBuckets {
            num_buckets: 32,
            max_distance: 128,
        }
    }
}

impl RelposBuckets {
    /// Buckets a non-negative distance into `0..buckets`; the first half
    /// are exact.
    fn magnitude_bucket(&self, n: u64, buckets: u32) -> u32 {
        let exact = buckets / 2;
        if n < exact as u64 {
            return n as u32;
        }
        let scaled = (n as f64 / exact as f64).ln()
            / (self.max_distance as f64 / exact as f64).ln()
            * (buckets - exact) as f64;
        (exact + scaled as u32).min(buckets - 1)
    }

    /// `distance` is key position minus query position.
    ///
    /// Bidirectional: non-positive distances use ids `0..n/2`, positive
    /// distances `n/2..n` (distance 1 maps to `n/2`). Unidirectional
    /// (decoder): future keys share bucket 0 and past keys use all `n` ids.
    pub fn bucket(&self, distance: i64, bidirectional: bool) -> u32 {
        if bidirectional {
            let half = self.num_buckets / 2;
            if distance <= 0 {
                self.magnitude_bucket(distance.unsigned_abs(), half)
            } else {
                half + self.magnitude_bucket(distance as u64 - 1, half)
            }
        } else if distance > 0 {
            0
        } else {
            self.magnitude_bucket(distance.unsigned_abs(), self.num_buckets)
        }
    }
}

pub fn relpos_bucket(distance: i64, bidirectional: bool) -> u32 {
    RelposBuckets::default().bucket(distance, bidirectional)
}
