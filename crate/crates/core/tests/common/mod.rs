//! Reference implementations used as test oracles. None of them share code
//! with the library beyond its public entry points.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use regex::Regex;

// ---------------------------------------------------------------- SCAN

fn action_word(v: &str) -> Option<&'static str> {
    match v {
        "walk" => Some("WALK"),
        "look" => Some("LOOK"),
        "run" => Some("RUN"),
        "jump" => Some("JUMP"),
        _ => None,
    }
}

/// Every single-part phrase, spelled out by hand.
pub fn scan_phrases() -> Vec<String> {
    let mut out = Vec::new();
    let dirs = [
        "left",
        "right",
        "opposite left",
        "opposite right",
        "around left",
        "around right",
    ];
    for rep in ["", " twice", " thrice"] {
        for a in ["walk", "look", "run", "jump"] {
            out.push(format!("{a}{rep}"));
        }
        for v in ["turn", "walk", "look", "run", "jump"] {
            for d in dirs {
                out.push(format!("{v} {d}{rep}"));
            }
        }
    }
    out
}

/// Rewrite-table translation of one phrase.
pub fn scan_phrase_oracle(phrase: &str) -> Vec<String> {
    let (body, times) = if let Some(b) = phrase.strip_suffix(" thrice") {
        (b, 3)
    } else if let Some(b) = phrase.strip_suffix(" twice") {
        (b, 2)
    } else {
        (phrase, 1)
    };
    let words: Vec<&str> = body.split(' ').collect();
    let act: Vec<&str> = action_word(words[0]).into_iter().collect();
    let once: Vec<&str> = match &words[1..] {
        [] => act.clone(),
        [side] | ["opposite", side] | ["around", side] => {
            let turn = if *side == "left" { "LTURN" } else { "RTURN" };
            match words[1] {
                "opposite" => [vec![turn, turn], act.clone()].concat(),
                "around" => [vec![turn], act.clone()].concat().repeat(4),
                _ => [vec![turn], act.clone()].concat(),
            }
        }
        _ => panic!("bad phrase {phrase}"),
    };
    once.repeat(times).into_iter().map(String::from).collect()
}

/// Translation of a whole command: `after` groups run right to left, `and`
/// parts left to right. Returns tokens and the part boundaries.
pub fn scan_oracle(command: &str) -> (Vec<String>, Vec<(usize, usize)>) {
    let mut tokens = Vec::new();
    let mut spans = Vec::new();
    for group in command.split(" after ").collect::<Vec<_>>().into_iter().rev() {
        for phrase in group.split(" and ") {
            let start = tokens.len();
            tokens.extend(scan_phrase_oracle(phrase));
            spans.push((start, tokens.len()));
        }
    }
    (tokens, spans)
}

// ---------------------------------------------------------------- RobustFill

pub const DELIMS: &[char] = &[
    '&', ',', '.', '?', '@', '(', ')', '[', ']', '%', '{', '}', '/', ':', ';', '$', '#', '"', '\'',
    ' ',
];
pub const TYPES: &[&str] = &[
    "NUMBER",
    "WORD",
    "ALPHANUM",
    "ALL_CAPS",
    "PROP_CASE",
    "LOWER",
    "DIGIT",
    "CHAR",
];

fn type_regex(name: &str) -> Regex {
    let pat = match name {
        "NUMBER" => "[0-9]+",
        "WORD" => "[A-Za-z]+",
        "ALPHANUM" => "[A-Za-z0-9]+",
        "ALL_CAPS" => "[A-Z]+",
        "PROP_CASE" => "[A-Z][a-z]+",
        "LOWER" => "[a-z]+",
        "DIGIT" => "[0-9]",
        "CHAR" => r"\S",
        _ => panic!("unknown type {name}"),
    };
    Regex::new(pat).unwrap()
}

fn lit(tok: &str) -> char {
    if tok == "SPACE" {
        ' '
    } else {
        tok.chars().next().unwrap()
    }
}

fn regex_of(tok: &str) -> Regex {
    if TYPES.contains(&tok) {
        type_regex(tok)
    } else {
        Regex::new(&regex::escape(&lit(tok).to_string())).unwrap()
    }
}

fn spans(re: &Regex, s: &str) -> Vec<(usize, usize)> {
    re.find_iter(s).map(|m| (m.start(), m.end())).collect()
}

fn pick(n: usize, i: i64) -> Option<usize> {
    let r = if i > 0 { i - 1 } else { n as i64 + i };
    (0..n as i64).contains(&r).then_some(r as usize)
}

type Op = Box<dyn Fn(&str) -> Option<String>>;

struct Reader<'a> {
    toks: &'a [String],
    at: usize,
}

impl Reader<'_> {
    fn next(&mut self) -> &str {
        self.at += 1;
        &self.toks[self.at - 1]
    }

    fn int(&mut self) -> i64 {
        self.next().parse().unwrap()
    }

    fn substring(&mut self, op: &str) -> Op {
        match op {
            "SubStr" => {
                let (k1, k2) = (self.int(), self.int());
                Box::new(move |s| {
                    let a = pick(s.len(), k1)?;
                    let b = pick(s.len(), k2)?;
                    Some(if a <= b { s[a..=b].to_string() } else { String::new() })
                })
            }
            "GetSpan" => {
                let r1 = regex_of(self.next());
                let i1 = self.int();
                let b1 = self.next() == "START";
                let r2 = regex_of(self.next());
                let i2 = self.int();
                let b2 = self.next() == "START";
                Box::new(move |s| {
                    let m1 = spans(&r1, s);
                    let m2 = spans(&r2, s);
                    let x = m1[pick(m1.len(), i1)?];
                    let y = m2[pick(m2.len(), i2)?];
                    let from = if b1 { x.0 } else { x.1 };
                    let to = if b2 { y.0 } else { y.1 };
                    Some(s.get(from..to).unwrap_or("").to_string())
                })
            }
            "GetToken" => {
                let r = type_regex(self.next());
                let i = self.int();
                Box::new(move |s| {
                    let m = spans(&r, s);
                    let (a, b) = m[pick(m.len(), i)?];
                    Some(s[a..b].to_string())
                })
            }
            "GetUpto" => {
                let r = regex_of(self.next());
                Box::new(move |s| r.find(s).map(|m| s[..m.end()].to_string()))
            }
            "GetFrom" => {
                let r = regex_of(self.next());
                Box::new(move |s| r.find(s).map(|m| s[m.end()..].to_string()))
            }
            _ => panic!("not a substring op {op}"),
        }
    }

    fn modification(&mut self, op: &str) -> Op {
        match op {
            "ToCase" => match self.next() {
                "ALL_CAPS" => Box::new(|s| Some(s.to_uppercase())),
                "LOWER" => Box::new(|s| Some(s.to_lowercase())),
                _ => {
                    let w = type_regex("WORD");
                    Box::new(move |s| {
                        Some(
                            w.replace_all(s, |c: &regex::Captures| {
                                let m = &c[0];
                                m[..1].to_uppercase() + &m[1..].to_lowercase()
                            })
                            .into_owned(),
                        )
                    })
                }
            },
            "Replace" => {
                let (a, b) = (lit(self.next()), lit(self.next()));
                Box::new(move |s| Some(s.replace(a, &b.to_string())))
            }
            "Trim" => Box::new(|s| Some(s.trim().to_string())),
            "GetFirst" => {
                let r = type_regex(self.next());
                let i = self.int();
                Box::new(move |s| {
                    let all: Vec<&str> = r.find_iter(s).map(|m| m.as_str()).collect();
                    let n = i.unsigned_abs() as usize;
                    if all.len() < n {
                        return None;
                    }
                    let chosen = if i > 0 { &all[..n] } else { &all[all.len() - n..] };
                    Some(chosen.concat())
                })
            }
            "GetAll" => {
                let r = type_regex(self.next());
                Box::new(move |s| {
                    let all: Vec<&str> = r.find_iter(s).map(|m| m.as_str()).collect();
                    (!all.is_empty()).then(|| all.join(" "))
                })
            }
            "Substitute" | "Remove" => {
                let r = type_regex(self.next());
                let i = self.int();
                let with = if op == "Substitute" {
                    lit(self.next()).to_string()
                } else {
                    String::new()
                };
                Box::new(move |s| {
                    let m = spans(&r, s);
                    let (a, b) = m[pick(m.len(), i)?];
                    Some(format!("{}{}{}", &s[..a], with, &s[b..]))
                })
            }
            "SubstituteAll" => {
                let r = type_regex(self.next());
                let c = lit(self.next()).to_string();
                Box::new(move |s| Some(r.replace_all(s, regex::NoExpand(&c)).into_owned()))
            }
            "RemoveAll" => {
                let r = type_regex(self.next());
                Box::new(move |s| Some(r.replace_all(s, "").into_owned()))
            }
            _ => panic!("not a modification op {op}"),
        }
    }

    fn any_op(&mut self) -> Op {
        let op = self.next().to_string();
        match op.as_str() {
            "SubStr" | "GetSpan" | "GetToken" | "GetUpto" | "GetFrom" => self.substring(&op),
            _ => self.modification(&op),
        }
    }

    fn expression(&mut self) -> Op {
        match self.toks[self.at].as_str() {
            "Compose" => {
                self.at += 1;
                let outer = self.any_op();
                let inner = self.any_op();
                Box::new(move |s| outer(&inner(s)?))
            }
            "ConstStr" => {
                self.at += 1;
                let c = lit(self.next()).to_string();
                Box::new(move |_| Some(c.clone()))
            }
            _ => self.any_op(),
        }
    }
}

/// Straight-line evaluation of well-formed program tokens over ASCII input.
pub fn rf_oracle(tokens: &[String], input: &str) -> Option<String> {
    let mut r = Reader { toks: tokens, at: 0 };
    let mut ops = Vec::new();
    while r.at < tokens.len() {
        ops.push(r.expression());
    }
    let mut out = String::new();
    for op in ops {
        out.push_str(&op(input)?);
    }
    Some(out)
}

pub const OPERATORS: &[&str] = &[
    "SubStr",
    "GetSpan",
    "GetToken",
    "GetUpto",
    "GetFrom",
    "ToCase",
    "Replace",
    "Trim",
    "GetFirst",
    "GetAll",
    "Substitute",
    "SubstituteAll",
    "Remove",
    "RemoveAll",
    "Compose",
    "ConstStr",
];

fn char_tok(c: char) -> String {
    if c == ' ' {
        "SPACE".into()
    } else {
        c.to_string()
    }
}

fn nonzero<R: Rng>(rng: &mut R, m: i64) -> i64 {
    let v = rng.gen_range(1..=m);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

fn alphabet_char<R: Rng>(rng: &mut R) -> char {
    if rng.gen_bool(0.3) {
        *DELIMS.choose(rng).unwrap()
    } else {
        let set = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
        *set.choose(rng).unwrap() as char
    }
}

fn regex_tok<R: Rng>(rng: &mut R) -> String {
    if rng.gen_bool(0.6) {
        TYPES.choose(rng).unwrap().to_string()
    } else {
        char_tok(*[' ', ',', '.', '(', ')', '@', '/'].choose(rng).unwrap())
    }
}

fn op_tokens<R: Rng>(rng: &mut R, op: &str) -> Vec<String> {
    let ty = |rng: &mut R| TYPES.choose(rng).unwrap().to_string();
    let mut t = vec![op.to_string()];
    match op {
        "SubStr" => t.extend([nonzero(rng, 22).to_string(), nonzero(rng, 22).to_string()]),
        "GetSpan" => {
            for _ in 0..2 {
                t.push(regex_tok(rng));
                t.push(nonzero(rng, 2).to_string());
                t.push(if rng.gen() { "START" } else { "END" }.into());
            }
        }
        "GetToken" | "GetFirst" | "Remove" => {
            t.push(ty(rng));
            t.push(nonzero(rng, if op == "GetFirst" { 5 } else { 4 }).to_string());
        }
        "GetUpto" | "GetFrom" => t.push(regex_tok(rng)),
        "ToCase" => t.push(["PROPER", "ALL_CAPS", "LOWER"].choose(rng).unwrap().to_string()),
        "Replace" => t.extend([char_tok(*DELIMS.choose(rng).unwrap()), char_tok(*DELIMS.choose(rng).unwrap())]),
        "Trim" => {}
        "GetAll" | "RemoveAll" => t.push(ty(rng)),
        "Substitute" => {
            t.push(ty(rng));
            t.push(nonzero(rng, 4).to_string());
            t.push(char_tok(alphabet_char(rng)));
        }
        "SubstituteAll" => {
            t.push(ty(rng));
            t.push(char_tok(alphabet_char(rng)));
        }
        "ConstStr" => t.push(char_tok(alphabet_char(rng))),
        "Compose" => {
            let mods = &OPERATORS[5..14];
            let outer = *mods.choose(rng).unwrap();
            t.extend(op_tokens(rng, outer));
            let inner = *OPERATORS[..14].choose(rng).unwrap();
            t.extend(op_tokens(rng, inner));
        }
        _ => panic!("{op}"),
    }
    t
}

/// A random well-formed expression whose top-level operator is `op`.
pub fn random_expression<R: Rng>(rng: &mut R, op: &str) -> Vec<String> {
    op_tokens(rng, op)
}

/// Random input made of words, numbers and delimiters, up to 20 chars.
pub fn random_input<R: Rng>(rng: &mut R) -> String {
    let mut s = String::new();
    let target = rng.gen_range(0..=20);
    while s.len() < target {
        let chunk = match rng.gen_range(0..6) {
            0 => (0..rng.gen_range(1..5)).map(|_| rng.gen_range(b'0'..=b'9') as char).collect(),
            1 => (0..rng.gen_range(1..6)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect(),
            2 => (0..rng.gen_range(1..5)).map(|_| rng.gen_range(b'A'..=b'Z') as char).collect(),
            3 => {
                let mut w = String::from(rng.gen_range(b'A'..=b'Z') as char);
                w.extend((0..rng.gen_range(1..5)).map(|_| rng.gen_range(b'a'..=b'z') as char));
                w
            }
            4 => " ".to_string(),
            _ => DELIMS.choose(rng).unwrap().to_string(),
        };
        s.push_str(&chunk);
    }
    s.truncate(20);
    s
}

// ---------------------------------------------------------------- masks

pub const VARIANTS: [&str; 3] = ["sep-full", "sep-to-sep-and-last", "sep-to-last"];

/// Mask rows written directly from the prose rules.
pub fn mask_oracle(is_sep: &[bool], variant: &str) -> Vec<Vec<bool>> {
    let n = is_sep.len();
    let mut rows = vec![vec![false; n]; n];
    for q in 0..n {
        for k in 0..=q {
            let last_of_part = !is_sep[k] && k < q && is_sep[k + 1];
            rows[q][k] = if !is_sep[q] {
                // From the most recent separator through the token itself.
                let last_sep = (0..=q).rev().find(|&j| is_sep[j]).unwrap_or(0);
                k >= last_sep
            } else {
                match variant {
                    "sep-full" => true,
                    "sep-to-sep-and-last" => k == q || is_sep[k] || last_of_part,
                    "sep-to-last" => k == q || last_of_part,
                    _ => panic!("{variant}"),
                }
            };
        }
    }
    rows
}

/// Every separator layout of exactly `len` tokens that forms a valid
/// sequence: separators at both ends, no empty parts, at least one part.
pub fn valid_layouts(len: usize) -> Vec<Vec<bool>> {
    if len < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for bits in 0u32..(1 << (len - 2)) {
        let mut flags = vec![true];
        flags.extend((0..len - 2).map(|i| bits >> i & 1 == 1));
        flags.push(true);
        if flags.windows(2).all(|w| !(w[0] && w[1])) {
            out.push(flags);
        }
    }
    out
}
