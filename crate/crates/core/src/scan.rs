//! The generalized SCAN command language: AST, parser, printer and the
//! rewrite-rule translation from commands to action programs.
//!
//! Commands are built from parts joined by `and` / `after`, where `and`
//! binds tighter than `after`:
//!
//! ```text
//! C := C after C | D
//! D := D and D | P
//! P := Q | Q twice | Q thrice
//! Q := v left | v opposite left | v around left | (same for right) | a
//! v := turn | a
//! a := walk | look | run | jump
//! ```
//!
//! Both conjunctions are parsed right-associatively, so a [`ScanCommand`]
//! built by the parser never has an `After` as the left child of an
//! `After`, nor an `And` as the left child of an `And`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("syntax error at token {index} ({found}): expected {expected}")]
    Syntax {
        index: usize,
        found: String,
        expected: &'static str,
    },
    #[error("`turn` requires a direction")]
    BareTurn,
    #[error("`after` may not appear inside an `and` conjunction")]
    AfterInsideAnd,
    #[error("unknown action token {token:?} at index {index}")]
    UnknownAction { index: usize, token: String },
    #[error("{parts} parts need {} conjunctions, got {conjunctions}", parts.saturating_sub(1))]
    ConjunctionCount { parts: usize, conjunctions: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Walk,
    Look,
    Run,
    Jump,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Walk, Action::Look, Action::Run, Action::Jump];

    pub fn word(self) -> &'static str {
        match self {
            Action::Walk => "walk",
            Action::Look => "look",
            Action::Run => "run",
            Action::Jump => "jump",
        }
    }

    fn token(self) -> ActionToken {
        match self {
            Action::Walk => ActionToken::Walk,
            Action::Look => ActionToken::Look,
            Action::Run => ActionToken::Run,
            Action::Jump => ActionToken::Jump,
        }
    }
}

/// `turn` or one of the four actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verb {
    Turn,
    Act(Action),
}

impl Verb {
    pub const ALL: [Verb; 5] = [
        Verb::Turn,
        Verb::Act(Action::Walk),
        Verb::Act(Action::Look),
        Verb::Act(Action::Run),
        Verb::Act(Action::Jump),
    ];

    pub fn word(self) -> &'static str {
        match self {
            Verb::Turn => "turn",
            Verb::Act(a) => a.word(),
        }
    }

    fn from_word(word: &str) -> Option<Verb> {
        match word {
            "turn" => Some(Verb::Turn),
            "walk" => Some(Verb::Act(Action::Walk)),
            "look" => Some(Verb::Act(Action::Look)),
            "run" => Some(Verb::Act(Action::Run)),
            "jump" => Some(Verb::Act(Action::Jump)),
            _ => None,
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const ALL: [Side; 2] = [Side::Left, Side::Right];

    pub fn word(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    fn turn_token(self) -> ActionToken {
        match self {
            Side::Left => ActionToken::LTurn,
            Side::Right => ActionToken::RTurn,
        }
    }
}

/// How a direction is applied: `left`, `opposite left`, `around left`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modifier {
    Plain,
    Opposite,
    Around,
}

impl Modifier {
    pub const ALL: [Modifier; 3] = [Modifier::Plain, Modifier::Opposite, Modifier::Around];

    /// Number of turns emitted by the phrase.
    fn turns(self) -> usize {
        match self {
            Modifier::Plain => 1,
            Modifier::Opposite => 2,
            Modifier::Around => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Direction {
    pub modifier: Modifier,
    pub side: Side,
}

impl Direction {
    pub const fn new(modifier: Modifier, side: Side) -> Self {
        Direction { modifier, side }
    }

    pub fn all() -> impl Iterator<Item = Direction> {
        Modifier::ALL
            .into_iter()
            .flat_map(|m| Side::ALL.into_iter().map(move |s| Direction::new(m, s)))
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.modifier {
            Modifier::Plain => f.write_str(self.side.word()),
            Modifier::Opposite => write!(f, "opposite {}", self.side.word()),
            Modifier::Around => write!(f, "around {}", self.side.word()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Repeat {
    Once,
    Twice,
    Thrice,
}

impl Repeat {
    pub const ALL: [Repeat; 3] = [Repeat::Once, Repeat::Twice, Repeat::Thrice];

    pub fn count(self) -> usize {
        match self {
            Repeat::Once => 1,
            Repeat::Twice => 2,
            Repeat::Thrice => 3,
        }
    }
}

/// One conjunction-free phrase such as `jump around left twice`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScanPart {
    verb: Verb,
    direction: Option<Direction>,
    repeat: Repeat,
}

impl ScanPart {
    /// Fails with [`ScanError::BareTurn`] for `turn` without a direction.
    pub fn new(verb: Verb, direction: Option<Direction>, repeat: Repeat) -> Result<Self, ScanError> {
        if verb == Verb::Turn && direction.is_none() {
            return Err(ScanError::BareTurn);
        }
        Ok(ScanPart {
            verb,
            direction,
            repeat,
        })
    }

    pub fn action(action: Action) -> Self {
        ScanPart {
            verb: Verb::Act(action),
            direction: None,
            repeat: Repeat::Once,
        }
    }

    pub fn verb(&self) -> Verb {
        self.verb
    }

    pub fn direction(&self) -> Option<Direction> {
        self.direction
    }

    pub fn repeat(&self) -> Repeat {
        self.repeat
    }

    /// Every part the grammar admits (34 phrases x 3 repetitions).
    pub fn enumerate_all() -> Vec<ScanPart> {
        let mut out = Vec::new();
        for verb in Verb::ALL {
            let mut dirs: Vec<Option<Direction>> = Direction::all().map(Some).collect();
            if verb != Verb::Turn {
                dirs.insert(0, None);
            }
            for direction in dirs {
                for repeat in Repeat::ALL {
                    out.push(ScanPart {
                        verb,
                        direction,
                        repeat,
                    });
                }
            }
        }
        out
    }

    /// Action tokens for one occurrence of the phrase, before repetition.
    fn unit_tokens(&self, out: &mut Vec<ActionToken>) {
        match (self.verb, self.direction) {
            (Verb::Act(a), None) => out.push(a.token()),
            (Verb::Turn, Some(d)) => {
                out.extend(std::iter::repeat_n(d.side.turn_token(), d.modifier.turns()))
            }
            (Verb::Act(a), Some(d)) => match d.modifier {
                Modifier::Plain => out.extend([d.side.turn_token(), a.token()]),
                Modifier::Opposite => {
                    out.extend([d.side.turn_token(), d.side.turn_token(), a.token()])
                }
                Modifier::Around => {
                    for _ in 0..4 {
                        out.extend([d.side.turn_token(), a.token()]);
                    }
                }
            },
            (Verb::Turn, None) => unreachable!("bare turn rejected at construction"),
        }
    }

    fn translate_into(&self, out: &mut Vec<ActionToken>) {
        let start = out.len();
        self.unit_tokens(out);
        let unit = out[start..].to_vec();
        for _ in 1..self.repeat.count() {
            out.extend_from_slice(&unit);
        }
    }

    pub fn translate(&self) -> Vec<ActionToken> {
        let mut out = Vec::new();
        self.translate_into(&mut out);
        out
    }
}

impl fmt::Display for ScanPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb.word())?;
        if let Some(d) = self.direction {
            write!(f, " {d}")?;
        }
        match self.repeat {
            Repeat::Once => Ok(()),
            Repeat::Twice => f.write_str(" twice"),
            Repeat::Thrice => f.write_str(" thrice"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Conjunction {
    And,
    After,
}

impl Conjunction {
    pub fn word(self) -> &'static str {
        match self {
            Conjunction::And => "and",
            Conjunction::After => "after",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ScanCommand {
    After(Box<ScanCommand>, Box<ScanCommand>),
    And(Box<ScanCommand>, Box<ScanCommand>),
    Part(ScanPart),
}

impl ScanCommand {
    /// Builds the canonical tree for `parts[0] c[0] parts[1] c[1] ...`.
    pub fn from_flat(parts: &[ScanPart], conjunctions: &[Conjunction]) -> Result<Self, ScanError> {
        if parts.is_empty() || conjunctions.len() + 1 != parts.len() {
            return Err(ScanError::ConjunctionCount {
                parts: parts.len(),
                conjunctions: conjunctions.len(),
            });
        }
        // Split on `after` into and-groups, then right-fold each level.
        let mut groups: Vec<Vec<ScanPart>> = vec![vec![parts[0]]];
        for (conj, part) in conjunctions.iter().zip(&parts[1..]) {
            match conj {
                Conjunction::And => groups.last_mut().expect("non-empty").push(*part),
                Conjunction::After => groups.push(vec![*part]),
            }
        }
        let and_chain = |group: Vec<ScanPart>| {
            group
                .into_iter()
                .rev()
                .map(ScanCommand::Part)
                .reduce(|right, left| ScanCommand::And(Box::new(left), Box::new(right)))
                .expect("non-empty group")
        };
        Ok(groups
            .into_iter()
            .rev()
            .map(and_chain)
            .reduce(|right, left| ScanCommand::After(Box::new(left), Box::new(right)))
            .expect("non-empty"))
    }

    /// Parts and conjunctions in command (reading) order.
    pub fn to_flat(&self) -> (Vec<ScanPart>, Vec<Conjunction>) {
        fn walk(cmd: &ScanCommand, parts: &mut Vec<ScanPart>, conjs: &mut Vec<Conjunction>) {
            match cmd {
                ScanCommand::Part(p) => parts.push(*p),
                ScanCommand::After(l, r) | ScanCommand::And(l, r) => {
                    walk(l, parts, conjs);
                    conjs.push(match cmd {
                        ScanCommand::After(..) => Conjunction::After,
                        _ => Conjunction::And,
                    });
                    walk(r, parts, conjs);
                }
            }
        }
        let mut parts = Vec::new();
        let mut conjs = Vec::new();
        walk(self, &mut parts, &mut conjs);
        (parts, conjs)
    }

    /// Checks the precedence invariant: no `After` below an `And`.
    pub fn validate(&self) -> Result<(), ScanError> {
        fn check(cmd: &ScanCommand, under_and: bool) -> Result<(), ScanError> {
            match cmd {
                ScanCommand::Part(_) => Ok(()),
                ScanCommand::After(l, r) => {
                    if under_and {
                        return Err(ScanError::AfterInsideAnd);
                    }
                    check(l, false)?;
                    check(r, false)
                }
                ScanCommand::And(l, r) => {
                    check(l, true)?;
                    check(r, true)
                }
            }
        }
        check(self, false)
    }

    pub fn part_count(&self) -> usize {
        match self {
            ScanCommand::Part(_) => 1,
            ScanCommand::After(l, r) | ScanCommand::And(l, r) => l.part_count() + r.part_count(),
        }
    }

    pub fn conjunction_count(&self) -> usize {
        self.part_count() - 1
    }

    /// Leaf parts in the order their actions are executed.
    pub fn part_phrases(&self) -> Vec<ScanPart> {
        fn walk(cmd: &ScanCommand, out: &mut Vec<ScanPart>) {
            match cmd {
                ScanCommand::Part(p) => out.push(*p),
                ScanCommand::After(first_said, then_done) => {
                    walk(then_done, out);
                    walk(first_said, out);
                }
                ScanCommand::And(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::with_capacity(self.part_count());
        walk(self, &mut out);
        out
    }

    /// Permutation from execution position to command position.
    pub fn execution_order(&self) -> Vec<usize> {
        fn walk(cmd: &ScanCommand, offset: usize, out: &mut Vec<usize>) {
            match cmd {
                ScanCommand::Part(_) => out.push(offset),
                ScanCommand::After(l, r) => {
                    walk(r, offset + l.part_count(), out);
                    walk(l, offset, out);
                }
                ScanCommand::And(l, r) => {
                    walk(l, offset, out);
                    walk(r, offset + l.part_count(), out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, 0, &mut out);
        out
    }

    pub fn translate(&self) -> ActionProgram {
        let mut tokens = Vec::new();
        let mut part_spans = Vec::new();
        for part in self.part_phrases() {
            let start = tokens.len();
            part.translate_into(&mut tokens);
            part_spans.push(start..tokens.len());
        }
        ActionProgram { tokens, part_spans }
    }
}

impl fmt::Display for ScanCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScanCommand::Part(p) => write!(f, "{p}"),
            ScanCommand::After(l, r) => write!(f, "{l} after {r}"),
            ScanCommand::And(l, r) => write!(f, "{l} and {r}"),
        }
    }
}

impl FromStr for ScanCommand {
    type Err = ScanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_command(s)
    }
}

pub fn parse_command(text: &str) -> Result<ScanCommand, ScanError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut parser = CommandParser { words: &words, pos: 0 };
    let mut parts = vec![parser.part()?];
    let mut conjs = Vec::new();
    while let Some(word) = parser.peek() {
        let conj = match word {
            "and" => Conjunction::And,
            "after" => Conjunction::After,
            _ => return Err(parser.error("`and`, `after` or end of command")),
        };
        parser.pos += 1;
        conjs.push(conj);
        parts.push(parser.part()?);
    }
    ScanCommand::from_flat(&parts, &conjs)
}

pub fn print_command(cmd: &ScanCommand) -> String {
    cmd.to_string()
}

struct CommandParser<'a> {
    words: &'a [&'a str],
    pos: usize,
}

impl CommandParser<'_> {
    fn peek(&self) -> Option<&str> {
        self.words.get(self.pos).copied()
    }

    fn error(&self, expected: &'static str) -> ScanError {
        ScanError::Syntax {
            index: self.pos,
            found: self
                .peek()
                .map_or_else(|| "end of input".to_string(), |w| format!("{w:?}")),
            expected,
        }
    }

    fn part(&mut self) -> Result<ScanPart, ScanError> {
        let verb = self
            .peek()
            .and_then(Verb::from_word)
            .ok_or_else(|| self.error("an action or `turn`"))?;
        self.pos += 1;

        let modifier = match self.peek() {
            Some("opposite") => Some(Modifier::Opposite),
            Some("around") => Some(Modifier::Around),
            Some("left" | "right") => Some(Modifier::Plain),
            _ => None,
        };
        let direction = match modifier {
            None => None,
            Some(modifier) => {
                if modifier != Modifier::Plain {
                    self.pos += 1;
                }
                let side = match self.peek() {
                    Some("left") => Side::Left,
                    Some("right") => Side::Right,
                    _ => return Err(self.error("`left` or `right`")),
                };
                self.pos += 1;
                Some(Direction::new(modifier, side))
            }
        };
        if verb == Verb::Turn && direction.is_none() {
            return Err(self.error("a direction after `turn`"));
        }

        let repeat = match self.peek() {
            Some("twice") => Repeat::Twice,
            Some("thrice") => Repeat::Thrice,
            _ => Repeat::Once,
        };
        if repeat != Repeat::Once {
            self.pos += 1;
        }
        Ok(ScanPart {
            verb,
            direction,
            repeat,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionToken {
    Walk,
    Look,
    Run,
    Jump,
    LTurn,
    RTurn,
}

impl ActionToken {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionToken::Walk => "WALK",
            ActionToken::Look => "LOOK",
            ActionToken::Run => "RUN",
            ActionToken::Jump => "JUMP",
            ActionToken::LTurn => "LTURN",
            ActionToken::RTurn => "RTURN",
        }
    }
}

impl fmt::Display for ActionToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionToken {
    type Err = ScanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "WALK" => ActionToken::Walk,
            "LOOK" => ActionToken::Look,
            "RUN" => ActionToken::Run,
            "JUMP" => ActionToken::Jump,
            "LTURN" => ActionToken::LTurn,
            "RTURN" => ActionToken::RTurn,
            _ => {
                return Err(ScanError::UnknownAction {
                    index: 0,
                    token: s.to_string(),
                })
            }
        })
    }
}

/// Parses single-space separated uppercase action text.
pub fn parse_actions(text: &str) -> Result<Vec<ActionToken>, ScanError> {
    text.split_whitespace()
        .enumerate()
        .map(|(index, w)| {
            w.parse().map_err(|_| ScanError::UnknownAction {
                index,
                token: w.to_string(),
            })
        })
        .collect()
}

/// An action sequence together with the token range produced by each part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionProgram {
    pub tokens: Vec<ActionToken>,
    /// Half-open ranges in execution order; they tile `tokens`.
    pub part_spans: Vec<Range<usize>>,
}

impl ActionProgram {
    pub fn token_strings(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.as_str().to_string()).collect()
    }
}

impl fmt::Display for ActionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<&str> = self.tokens.iter().map(|t| t.as_str()).collect();
        f.write_str(&words.join(" "))
    }
}

pub fn translate(cmd: &ScanCommand) -> ActionProgram {
    cmd.translate()
}
