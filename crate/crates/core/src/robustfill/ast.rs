use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

/// Token classes matched by the DSL's regexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenType {
    Number,
    Word,
    Alphanum,
    AllCaps,
    PropCase,
    Lower,
    Digit,
    Char,
}

impl TokenType {
    pub const ALL: [TokenType; 8] = [
        TokenType::Number,
        TokenType::Word,
        TokenType::Alphanum,
        TokenType::AllCaps,
        TokenType::PropCase,
        TokenType::Lower,
        TokenType::Digit,
        TokenType::Char,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TokenType::Number => "NUMBER",
            TokenType::Word => "WORD",
            TokenType::Alphanum => "ALPHANUM",
            TokenType::AllCaps => "ALL_CAPS",
            TokenType::PropCase => "PROP_CASE",
            TokenType::Lower => "LOWER",
            TokenType::Digit => "DIGIT",
            TokenType::Char => "CHAR",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        TokenType::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    Proper,
    AllCaps,
    Lower,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Proper, Case::AllCaps, Case::Lower];

    pub fn name(self) -> &'static str {
        match self {
            Case::Proper => "PROPER",
            Case::AllCaps => "ALL_CAPS",
            Case::Lower => "LOWER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Boundary {
    Start,
    End,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Start => "START",
            Boundary::End => "END",
        }
    }
}

/// The delimiter characters. Space is spelled `SPACE` in program text.
pub const DELIMITERS: &[char] = &[
    '&', ',', '.', '?', '@', '(', ')', '[', ']', '%', '{', '}', '/', ':', ';', '$', '#', '"', '\'',
    ' ',
];

pub fn is_delimiter(c: char) -> bool {
    DELIMITERS.contains(&c)
}

/// Characters admitted in inputs, outputs and character literals.
pub fn in_alphabet(c: char) -> bool {
    c.is_ascii_alphanumeric() || is_delimiter(c)
}

fn char_token(c: char) -> String {
    if c == ' ' {
        "SPACE".to_string()
    } else {
        c.to_string()
    }
}

fn char_from_token(s: &str) -> Option<char> {
    if s == "SPACE" {
        return Some(' ');
    }
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

/// A string position in `[-100, 100]` excluding zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(i8);

impl Position {
    pub const MAX: i32 = 100;

    pub fn new(value: i32) -> Option<Self> {
        (value != 0 && value.abs() <= Self::MAX).then_some(Position(value as i8))
    }

    pub fn get(self) -> i32 {
        self.0 as i32
    }
}

/// A match index in `[-5, 5]` excluding zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Index(i8);

impl Index {
    pub const MAX: i32 = 5;

    pub fn new(value: i32) -> Option<Self> {
        (value != 0 && value.abs() <= Self::MAX).then_some(Index(value as i8))
    }

    pub fn get(self) -> i32 {
        self.0 as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Delimiter(char);

impl Delimiter {
    pub fn new(c: char) -> Option<Self> {
        is_delimiter(c).then_some(Delimiter(c))
    }

    pub fn get(self) -> char {
        self.0
    }
}

/// A single character literal from the DSL alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character(char);

impl Character {
    pub fn new(c: char) -> Option<Self> {
        in_alphabet(c).then_some(Character(c))
    }

    pub fn get(self) -> char {
        self.0
    }
}

/// A regex is either a token class or a literal delimiter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regex {
    Type(TokenType),
    Delim(Delimiter),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Substring {
    SubStr(Position, Position),
    GetSpan(Regex, Index, Boundary, Regex, Index, Boundary),
    GetToken(TokenType, Index),
    GetUpto(Regex),
    GetFrom(Regex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modification {
    ToCase(Case),
    Replace(Delimiter, Delimiter),
    Trim,
    GetFirst(TokenType, Index),
    GetAll(TokenType),
    Substitute(TokenType, Index, Character),
    SubstituteAll(TokenType, Character),
    Remove(TokenType, Index),
    RemoveAll(TokenType),
}

/// What a compose applies its outer modification to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComposeInner {
    Modification(Modification),
    Substring(Substring),
}

/// `outer(inner)`: either `m1(m2)` or `m(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Compose {
    pub outer: Modification,
    pub inner: ComposeInner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expression {
    Substring(Substring),
    Modification(Modification),
    Compose(Compose),
    ConstStr(Character),
}

/// Operator names, used by tokens, constraints and concept grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    SubStr,
    GetSpan,
    GetToken,
    GetUpto,
    GetFrom,
    ToCase,
    Replace,
    Trim,
    GetFirst,
    GetAll,
    Substitute,
    SubstituteAll,
    Remove,
    RemoveAll,
    Compose,
    ConstStr,
}

impl OpKind {
    pub const ALL: [OpKind; 16] = [
        OpKind::SubStr,
        OpKind::GetSpan,
        OpKind::GetToken,
        OpKind::GetUpto,
        OpKind::GetFrom,
        OpKind::ToCase,
        OpKind::Replace,
        OpKind::Trim,
        OpKind::GetFirst,
        OpKind::GetAll,
        OpKind::Substitute,
        OpKind::SubstituteAll,
        OpKind::Remove,
        OpKind::RemoveAll,
        OpKind::Compose,
        OpKind::ConstStr,
    ];
    pub const SUBSTRING: [OpKind; 5] = [
        OpKind::SubStr,
        OpKind::GetSpan,
        OpKind::GetToken,
        OpKind::GetUpto,
        OpKind::GetFrom,
    ];
    pub const MODIFICATION: [OpKind; 9] = [
        OpKind::ToCase,
        OpKind::Replace,
        OpKind::Trim,
        OpKind::GetFirst,
        OpKind::GetAll,
        OpKind::Substitute,
        OpKind::SubstituteAll,
        OpKind::Remove,
        OpKind::RemoveAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::SubStr => "SubStr",
            OpKind::GetSpan => "GetSpan",
            OpKind::GetToken => "GetToken",
            OpKind::GetUpto => "GetUpto",
            OpKind::GetFrom => "GetFrom",
            OpKind::ToCase => "ToCase",
            OpKind::Replace => "Replace",
            OpKind::Trim => "Trim",
            OpKind::GetFirst => "GetFirst",
            OpKind::GetAll => "GetAll",
            OpKind::Substitute => "Substitute",
            OpKind::SubstituteAll => "SubstituteAll",
            OpKind::Remove => "Remove",
            OpKind::RemoveAll => "RemoveAll",
            OpKind::Compose => "Compose",
            OpKind::ConstStr => "ConstStr",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        OpKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_substring(self) -> bool {
        OpKind::SUBSTRING.contains(&self)
    }

    pub fn is_modification(self) -> bool {
        OpKind::MODIFICATION.contains(&self)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Substring {
    pub fn kind(&self) -> OpKind {
        match self {
            Substring::SubStr(..) => OpKind::SubStr,
            Substring::GetSpan(..) => OpKind::GetSpan,
            Substring::GetToken(..) => OpKind::GetToken,
            Substring::GetUpto(..) => OpKind::GetUpto,
            Substring::GetFrom(..) => OpKind::GetFrom,
        }
    }
}

impl Modification {
    pub fn kind(&self) -> OpKind {
        match self {
            Modification::ToCase(..) => OpKind::ToCase,
            Modification::Replace(..) => OpKind::Replace,
            Modification::Trim => OpKind::Trim,
            Modification::GetFirst(..) => OpKind::GetFirst,
            Modification::GetAll(..) => OpKind::GetAll,
            Modification::Substitute(..) => OpKind::Substitute,
            Modification::SubstituteAll(..) => OpKind::SubstituteAll,
            Modification::Remove(..) => OpKind::Remove,
            Modification::RemoveAll(..) => OpKind::RemoveAll,
        }
    }
}

impl Expression {
    pub fn kind(&self) -> OpKind {
        match self {
            Expression::Substring(s) => s.kind(),
            Expression::Modification(m) => m.kind(),
            Expression::Compose(_) => OpKind::Compose,
            Expression::ConstStr(_) => OpKind::ConstStr,
        }
    }

    /// Every operator mentioned by the expression, outermost first.
    pub fn op_kinds(&self) -> Vec<OpKind> {
        match self {
            Expression::Compose(c) => {
                let inner = match c.inner {
                    ComposeInner::Modification(m) => m.kind(),
                    ComposeInner::Substring(s) => s.kind(),
                };
                vec![OpKind::Compose, c.outer.kind(), inner]
            }
            other => vec![other.kind()],
        }
    }

    pub fn has_substring_in_compose(&self) -> bool {
        matches!(
            self,
            Expression::Compose(Compose {
                inner: ComposeInner::Substring(_),
                ..
            })
        )
    }

    pub fn tokens(&self) -> Vec<String> {
        let mut out = Vec::new();
        write_expression(self, &mut out);
        out
    }
}

/// A RobustFill program: the concatenation of one or more expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    expressions: Vec<Expression>,
}

impl Program {
    /// Returns `None` for an empty expression list.
    pub fn new(expressions: Vec<Expression>) -> Option<Self> {
        (!expressions.is_empty()).then_some(Program { expressions })
    }

    pub fn expressions(&self) -> &[Expression] {
        &self.expressions
    }

    /// Number of program parts.
    pub fn len(&self) -> usize {
        self.expressions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> Vec<String> {
        self.tokens_with_spans().0
    }

    /// Prefix tokens plus the token range of each expression.
    pub fn tokens_with_spans(&self) -> (Vec<String>, Vec<Range<usize>>) {
        let mut out = Vec::new();
        let mut spans = Vec::with_capacity(self.expressions.len());
        for e in &self.expressions {
            let start = out.len();
            write_expression(e, &mut out);
            spans.push(start..out.len());
        }
        (out, spans)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens().join(" "))
    }
}

impl FromStr for Program {
    type Err = ProgramParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        parse_program(&tokens)
    }
}

pub fn tokenize_program(p: &Program) -> Vec<String> {
    p.tokens()
}

fn write_regex(r: &Regex, out: &mut Vec<String>) {
    match r {
        Regex::Type(t) => out.push(t.name().to_string()),
        Regex::Delim(d) => out.push(char_token(d.get())),
    }
}

fn write_substring(s: &Substring, out: &mut Vec<String>) {
    out.push(s.kind().name().to_string());
    match *s {
        Substring::SubStr(k1, k2) => out.extend([k1.get().to_string(), k2.get().to_string()]),
        Substring::GetSpan(r1, i1, b1, r2, i2, b2) => {
            write_regex(&r1, out);
            out.extend([i1.get().to_string(), b1.name().to_string()]);
            write_regex(&r2, out);
            out.extend([i2.get().to_string(), b2.name().to_string()]);
        }
        Substring::GetToken(t, i) => out.extend([t.name().to_string(), i.get().to_string()]),
        Substring::GetUpto(r) | Substring::GetFrom(r) => write_regex(&r, out),
    }
}

fn write_modification(m: &Modification, out: &mut Vec<String>) {
    out.push(m.kind().name().to_string());
    match *m {
        Modification::ToCase(c) => out.push(c.name().to_string()),
        Modification::Replace(d1, d2) => out.extend([char_token(d1.get()), char_token(d2.get())]),
        Modification::Trim => {}
        Modification::GetFirst(t, i) | Modification::Remove(t, i) => {
            out.extend([t.name().to_string(), i.get().to_string()])
        }
        Modification::GetAll(t) | Modification::RemoveAll(t) => out.push(t.name().to_string()),
        Modification::Substitute(t, i, c) => out.extend([
            t.name().to_string(),
            i.get().to_string(),
            char_token(c.get()),
        ]),
        Modification::SubstituteAll(t, c) => {
            out.extend([t.name().to_string(), char_token(c.get())])
        }
    }
}

fn write_expression(e: &Expression, out: &mut Vec<String>) {
    match e {
        Expression::Substring(s) => write_substring(s, out),
        Expression::Modification(m) => write_modification(m, out),
        Expression::Compose(c) => {
            out.push(OpKind::Compose.name().to_string());
            write_modification(&c.outer, out);
            match &c.inner {
                ComposeInner::Modification(m) => write_modification(m, out),
                ComposeInner::Substring(s) => write_substring(s, out),
            }
        }
        Expression::ConstStr(c) => {
            out.push(OpKind::ConstStr.name().to_string());
            out.push(char_token(c.get()));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramParseError {
    #[error("empty program")]
    Empty,
    #[error("token {index}: unknown operator {token:?}")]
    UnknownOperator { index: usize, token: String },
    #[error("token {index}: {op} is missing arguments")]
    Arity { index: usize, op: OpKind },
    #[error("token {index}: expected {expected}, found {token:?}")]
    BadLiteral {
        index: usize,
        token: String,
        expected: &'static str,
    },
    #[error("token {index}: {kind} {literal} outside {range}")]
    OutOfRange {
        index: usize,
        literal: String,
        kind: &'static str,
        range: &'static str,
    },
    #[error("token {index}: {token} cannot appear inside Compose")]
    NotComposable { index: usize, token: String },
}

/// Parses prefix tokens back into a program.
pub fn parse_program<S: AsRef<str>>(tokens: &[S]) -> Result<Program, ProgramParseError> {
    if tokens.is_empty() {
        return Err(ProgramParseError::Empty);
    }
    let mut cur = Cursor {
        tokens,
        pos: 0,
        op: OpKind::ConstStr,
    };
    let mut expressions = Vec::new();
    while cur.pos < tokens.len() {
        expressions.push(cur.expression()?);
    }
    Ok(Program { expressions })
}

struct Cursor<'a, S> {
    tokens: &'a [S],
    pos: usize,
    /// Operator whose arguments are being read, for arity errors.
    op: OpKind,
}

impl<S: AsRef<str>> Cursor<'_, S> {
    fn next(&mut self) -> Result<(usize, &str), ProgramParseError> {
        let index = self.pos;
        match self.tokens.get(index) {
            Some(t) => {
                self.pos += 1;
                Ok((index, t.as_ref()))
            }
            None => Err(ProgramParseError::Arity { index, op: self.op }),
        }
    }

    fn op_name(&mut self) -> Result<(usize, OpKind), ProgramParseError> {
        let (index, tok) = self.next()?;
        let kind = OpKind::from_name(tok).ok_or_else(|| ProgramParseError::UnknownOperator {
            index,
            token: tok.to_string(),
        })?;
        self.op = kind;
        Ok((index, kind))
    }

    fn bad(index: usize, token: &str, expected: &'static str) -> ProgramParseError {
        ProgramParseError::BadLiteral {
            index,
            token: token.to_string(),
            expected,
        }
    }

    fn integer(&mut self, expected: &'static str) -> Result<(usize, i32, String), ProgramParseError> {
        let (index, tok) = self.next()?;
        let value = tok.parse::<i32>().map_err(|_| Self::bad(index, tok, expected))?;
        Ok((index, value, tok.to_string()))
    }

    fn position(&mut self) -> Result<Position, ProgramParseError> {
        let (index, value, literal) = self.integer("a position")?;
        Position::new(value).ok_or(ProgramParseError::OutOfRange {
            index,
            literal,
            kind: "position",
            range: "[-100, 100] excluding 0",
        })
    }

    fn index(&mut self) -> Result<Index, ProgramParseError> {
        let (index, value, literal) = self.integer("an index")?;
        Index::new(value).ok_or(ProgramParseError::OutOfRange {
            index,
            literal,
            kind: "index",
            range: "[-5, 5] excluding 0",
        })
    }

    fn token_type(&mut self) -> Result<TokenType, ProgramParseError> {
        let (index, tok) = self.next()?;
        TokenType::from_name(tok).ok_or_else(|| Self::bad(index, tok, "a token type"))
    }

    fn case(&mut self) -> Result<Case, ProgramParseError> {
        let (index, tok) = self.next()?;
        Case::ALL
            .into_iter()
            .find(|c| c.name() == tok)
            .ok_or_else(|| Self::bad(index, tok, "a case"))
    }

    fn boundary(&mut self) -> Result<Boundary, ProgramParseError> {
        let (index, tok) = self.next()?;
        match tok {
            "START" => Ok(Boundary::Start),
            "END" => Ok(Boundary::End),
            _ => Err(Self::bad(index, tok, "START or END")),
        }
    }

    fn delimiter(&mut self) -> Result<Delimiter, ProgramParseError> {
        let (index, tok) = self.next()?;
        char_from_token(tok)
            .and_then(Delimiter::new)
            .ok_or_else(|| Self::bad(index, tok, "a delimiter"))
    }

    fn character(&mut self) -> Result<Character, ProgramParseError> {
        let (index, tok) = self.next()?;
        char_from_token(tok)
            .and_then(Character::new)
            .ok_or_else(|| Self::bad(index, tok, "a character"))
    }

    fn regex(&mut self) -> Result<Regex, ProgramParseError> {
        let (index, tok) = self.next()?;
        if let Some(t) = TokenType::from_name(tok) {
            return Ok(Regex::Type(t));
        }
        char_from_token(tok)
            .and_then(Delimiter::new)
            .map(Regex::Delim)
            .ok_or_else(|| Self::bad(index, tok, "a token type or delimiter"))
    }

    fn substring_args(&mut self, kind: OpKind) -> Result<Substring, ProgramParseError> {
        Ok(match kind {
            OpKind::SubStr => Substring::SubStr(self.position()?, self.position()?),
            OpKind::GetSpan => Substring::GetSpan(
                self.regex()?,
                self.index()?,
                self.boundary()?,
                self.regex()?,
                self.index()?,
                self.boundary()?,
            ),
            OpKind::GetToken => Substring::GetToken(self.token_type()?, self.index()?),
            OpKind::GetUpto => Substring::GetUpto(self.regex()?),
            OpKind::GetFrom => Substring::GetFrom(self.regex()?),
            _ => unreachable!("not a substring operator"),
        })
    }

    fn modification_args(&mut self, kind: OpKind) -> Result<Modification, ProgramParseError> {
        Ok(match kind {
            OpKind::ToCase => Modification::ToCase(self.case()?),
            OpKind::Replace => Modification::Replace(self.delimiter()?, self.delimiter()?),
            OpKind::Trim => Modification::Trim,
            OpKind::GetFirst => Modification::GetFirst(self.token_type()?, self.index()?),
            OpKind::GetAll => Modification::GetAll(self.token_type()?),
            OpKind::Substitute => {
                Modification::Substitute(self.token_type()?, self.index()?, self.character()?)
            }
            OpKind::SubstituteAll => {
                Modification::SubstituteAll(self.token_type()?, self.character()?)
            }
            OpKind::Remove => Modification::Remove(self.token_type()?, self.index()?),
            OpKind::RemoveAll => Modification::RemoveAll(self.token_type()?),
            _ => unreachable!("not a modification operator"),
        })
    }

    fn modification(&mut self) -> Result<Modification, ProgramParseError> {
        let (index, kind) = self.op_name()?;
        if !kind.is_modification() {
            return Err(ProgramParseError::NotComposable {
                index,
                token: kind.name().to_string(),
            });
        }
        self.modification_args(kind)
    }

    fn expression(&mut self) -> Result<Expression, ProgramParseError> {
        let (_, kind) = self.op_name()?;
        if kind.is_substring() {
            return Ok(Expression::Substring(self.substring_args(kind)?));
        }
        if kind.is_modification() {
            return Ok(Expression::Modification(self.modification_args(kind)?));
        }
        match kind {
            OpKind::ConstStr => Ok(Expression::ConstStr(self.character()?)),
            OpKind::Compose => {
                let outer = self.modification()?;
                let (index, inner_kind) = self.op_name()?;
                let inner = if inner_kind.is_substring() {
                    ComposeInner::Substring(self.substring_args(inner_kind)?)
                } else if inner_kind.is_modification() {
                    ComposeInner::Modification(self.modification_args(inner_kind)?)
                } else {
                    return Err(ProgramParseError::NotComposable {
                        index,
                        token: inner_kind.name().to_string(),
                    });
                };
                Ok(Expression::Compose(Compose { outer, inner }))
            }
            _ => unreachable!("all operator kinds covered"),
        }
    }
}
