//! Seeded, constraint-guided sampling of SCAN commands and RobustFill
//! (program, examples) pairs.
//!
//! Every choice is uniform over what the constraints permit. Each
//! [`Sampler`] owns a private ChaCha stream, so equal configs give equal
//! sample streams.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::robustfill::{
    in_alphabet, Boundary, Case, Character, Compose, ComposeInner, Delimiter, Expression, Index,
    IoExample, Modification, OpKind, Position, Program, Regex, Substring, TokenType, DELIMITERS,
};
use crate::scan::{
    Action, Conjunction, Direction, Modifier, Repeat, ScanCommand, ScanPart, Side, Verb,
};

/// Attempts per sample before giving up.
pub const REJECTION_BUDGET: usize = 1000;
/// Input draws per example before the current program is abandoned.
const INPUT_TRIES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Scan,
    Robustfill,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Scan => "scan",
            Domain::Robustfill => "robustfill",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scan" => Ok(Domain::Scan),
            "robustfill" => Ok(Domain::Robustfill),
            _ => Err(SamplingError::InvalidConfig(format!("unknown domain {s:?}"))),
        }
    }
}

/// Concept tag of one program part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Concept {
    Left,
    Right,
    None,
    Substring,
    Nonsubstring,
    Compose,
}

impl Concept {
    pub fn name(self) -> &'static str {
        match self {
            Concept::Left => "LEFT",
            Concept::Right => "RIGHT",
            Concept::None => "NONE",
            Concept::Substring => "SUBSTRING",
            Concept::Nonsubstring => "NONSUBSTRING",
            Concept::Compose => "COMPOSE",
        }
    }

    /// The two concepts that concept patterns choose between.
    pub fn pair(domain: Domain) -> (Concept, Concept) {
        match domain {
            Domain::Scan => (Concept::Left, Concept::Right),
            Domain::Robustfill => (Concept::Substring, Concept::Nonsubstring),
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Concept {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Concept::Left,
            Concept::Right,
            Concept::None,
            Concept::Substring,
            Concept::Nonsubstring,
            Concept::Compose,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| SamplingError::InvalidConfig(format!("unknown concept {s:?}")))
    }
}

pub fn concept_of_scan_part(p: &ScanPart) -> Concept {
    match p.direction() {
        Some(d) if d.side == Side::Left => Concept::Left,
        Some(_) => Concept::Right,
        None => Concept::None,
    }
}

pub fn concept_of_rf_expression(e: &Expression) -> Concept {
    match e {
        Expression::Substring(_) => Concept::Substring,
        Expression::Modification(_) | Expression::ConstStr(_) => Concept::Nonsubstring,
        Expression::Compose(_) => Concept::Compose,
    }
}

/// Concept labels in execution order.
pub fn scan_concepts(cmd: &ScanCommand) -> Vec<Concept> {
    cmd.part_phrases().iter().map(concept_of_scan_part).collect()
}

pub fn rf_concepts(p: &Program) -> Vec<Concept> {
    p.expressions().iter().map(concept_of_rf_expression).collect()
}

/// How concepts are arranged over a program's parts, with `A`/`B` the
/// domain's concept pair. Parts are taken in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConceptPattern {
    #[default]
    Any,
    AllA,
    AllB,
    /// All parts share one concept, `A` or `B`.
    OneConcept,
    /// At least one part of each concept.
    Mixed,
    /// The first `ceil(n/2)` parts are `A`, the rest `B`.
    AThenB,
    BThenA,
}

impl ConceptPattern {
    pub fn matches(self, labels: &[Concept], pair: (Concept, Concept)) -> bool {
        let (a, b) = pair;
        let all = |c: Concept| labels.iter().all(|&l| l == c);
        let split = |first: Concept, second: Concept| {
            let head = labels.len().div_ceil(2);
            labels[..head].iter().all(|&l| l == first)
                && labels[head..].iter().all(|&l| l == second)
        };
        match self {
            ConceptPattern::Any => true,
            ConceptPattern::AllA => all(a),
            ConceptPattern::AllB => all(b),
            ConceptPattern::OneConcept => all(a) || all(b),
            ConceptPattern::Mixed => {
                labels.iter().all(|&l| l == a || l == b)
                    && labels.contains(&a)
                    && labels.contains(&b)
            }
            ConceptPattern::AThenB => split(a, b),
            ConceptPattern::BThenA => split(b, a),
        }
    }

    /// Draws one concept per part, or `None` when unconstrained.
    fn draw(
        self,
        n: usize,
        pair: (Concept, Concept),
        rng: &mut impl Rng,
    ) -> Option<Vec<Option<Concept>>> {
        let (a, b) = pair;
        let head = n.div_ceil(2);
        Some(match self {
            ConceptPattern::Any => vec![None; n],
            ConceptPattern::AllA => vec![Some(a); n],
            ConceptPattern::AllB => vec![Some(b); n],
            ConceptPattern::OneConcept => vec![Some(if rng.gen() { a } else { b }); n],
            ConceptPattern::Mixed => {
                if n < 2 {
                    return None;
                }
                loop {
                    let v: Vec<Concept> = (0..n).map(|_| if rng.gen() { a } else { b }).collect();
                    if v.contains(&a) && v.contains(&b) {
                        break v.into_iter().map(Some).collect();
                    }
                }
            }
            ConceptPattern::AThenB => (0..n).map(|i| Some(if i < head { a } else { b })).collect(),
            ConceptPattern::BThenA => (0..n).map(|i| Some(if i < head { b } else { a })).collect(),
        })
    }
}

/// A property of a program part that constraints can require or forbid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    /// A SCAN verb, e.g. `jump` or `turn`.
    Verb(Verb),
    /// A SCAN direction phrase, e.g. `around right`.
    Phrase(Direction),
    /// A RobustFill operator anywhere in an expression.
    Op(OpKind),
    /// A substring operator used inside a Compose.
    SubstringInCompose,
}

impl Feature {
    pub fn domain(self) -> Domain {
        match self {
            Feature::Verb(_) | Feature::Phrase(_) => Domain::Scan,
            Feature::Op(_) | Feature::SubstringInCompose => Domain::Robustfill,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Verb(v) => write!(f, "{v}"),
            Feature::Phrase(d) => write!(f, "{d}"),
            Feature::Op(k) => write!(f, "{k}"),
            Feature::SubstringInCompose => f.write_str("SubstringInCompose"),
        }
    }
}

impl FromStr for Feature {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(v) = Verb::ALL.into_iter().find(|v| v.word() == s) {
            return Ok(Feature::Verb(v));
        }
        if let Some(d) = Direction::all().find(|d| d.to_string() == s) {
            return Ok(Feature::Phrase(d));
        }
        if let Some(k) = OpKind::from_name(s) {
            return Ok(Feature::Op(k));
        }
        if s == "SubstringInCompose" {
            return Ok(Feature::SubstringInCompose);
        }
        Err(SamplingError::InvalidConfig(format!("unknown feature {s:?}")))
    }
}

impl Serialize for Feature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn scan_part_features(p: &ScanPart) -> Vec<Feature> {
    let mut out = vec![Feature::Verb(p.verb())];
    if let Some(d) = p.direction() {
        out.push(Feature::Phrase(d));
    }
    out
}

pub fn rf_expression_features(e: &Expression) -> Vec<Feature> {
    let mut out: Vec<Feature> = e.op_kinds().into_iter().map(Feature::Op).collect();
    if e.has_substring_in_compose() {
        out.push(Feature::SubstringInCompose);
    }
    out
}

/// Fixed-form samples injected at a given rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialForm {
    /// Exactly this SCAN command.
    ScanCommand(String),
    /// A length-1 RobustFill program whose only expression has the feature.
    RfSingle(Feature),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialInjection {
    pub ratio: f64,
    pub form: SpecialForm,
}

impl SpecialInjection {
    /// Whether the `i`-th record of a stream is special. Spreads exactly
    /// `floor(n * ratio)` specials evenly over any prefix of length `n`.
    pub fn is_special_slot(&self, i: usize) -> bool {
        let before = (i as f64 * self.ratio + 1e-9).floor();
        let after = ((i + 1) as f64 * self.ratio + 1e-9).floor();
        after > before
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintSet {
    pub required: BTreeSet<Feature>,
    pub forbidden: BTreeSet<Feature>,
    pub concept_pattern: ConceptPattern,
    pub special: Option<SpecialInjection>,
}

impl ConstraintSet {
    pub fn validate(&self, domain: Domain) -> Result<(), SamplingError> {
        if let Some(f) = self.required.intersection(&self.forbidden).next() {
            return Err(SamplingError::InvalidConfig(format!(
                "feature {f} is both required and forbidden"
            )));
        }
        if let Some(f) = self
            .required
            .iter()
            .chain(&self.forbidden)
            .find(|f| f.domain() != domain)
        {
            return Err(SamplingError::InvalidConfig(format!(
                "feature {f} does not apply to {domain}"
            )));
        }
        if let Some(s) = &self.special {
            if !(0.0..=1.0).contains(&s.ratio) {
                return Err(SamplingError::InvalidConfig(format!(
                    "special ratio {} outside [0, 1]",
                    s.ratio
                )));
            }
        }
        Ok(())
    }

    fn admits_features(&self, present: &BTreeSet<Feature>) -> bool {
        self.required.is_subset(present) && self.forbidden.is_disjoint(present)
    }

    /// Checks a command against required/forbidden features and the
    /// concept pattern. Special injections are not considered.
    pub fn admits_scan(&self, cmd: &ScanCommand) -> bool {
        let present: BTreeSet<Feature> = cmd.part_phrases().iter().flat_map(scan_part_features).collect();
        self.admits_features(&present)
            && self
                .concept_pattern
                .matches(&scan_concepts(cmd), Concept::pair(Domain::Scan))
    }

    pub fn admits_rf(&self, p: &Program) -> bool {
        let present: BTreeSet<Feature> =
            p.expressions().iter().flat_map(rf_expression_features).collect();
        self.admits_features(&present)
            && self
                .concept_pattern
                .matches(&rf_concepts(p), Concept::pair(Domain::Robustfill))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub seed: u64,
    pub domain: Domain,
    /// Inclusive part-count bounds.
    pub length_range: (usize, usize),
    pub constraints: ConstraintSet,
    pub examples_per_task: usize,
    /// Inclusive input length bounds, in characters.
    pub input_length_range: (usize, usize),
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            domain: Domain::Scan,
            length_range: (1, 6),
            constraints: ConstraintSet::default(),
            examples_per_task: 4,
            input_length_range: (4, 20),
        }
    }
}

impl SamplerConfig {
    pub fn new(domain: Domain, seed: u64) -> Self {
        SamplerConfig {
            seed,
            domain,
            ..Default::default()
        }
    }

    pub fn with_lengths(mut self, lo: usize, hi: usize) -> Self {
        self.length_range = (lo, hi);
        self
    }

    pub fn with_input_lengths(mut self, lo: usize, hi: usize) -> Self {
        self.input_length_range = (lo, hi);
        self
    }

    pub fn with_constraints(mut self, constraints: ConstraintSet) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        let (lo, hi) = self.length_range;
        if lo < 1 || lo > hi || hi > 10 {
            return Err(SamplingError::InvalidConfig(format!(
                "length range [{lo}, {hi}] not within [1, 10]"
            )));
        }
        if self.examples_per_task < 1 {
            return Err(SamplingError::InvalidConfig("examples_per_task must be >= 1".into()));
        }
        let (ilo, ihi) = self.input_length_range;
        if ilo < 1 || ilo > ihi {
            return Err(SamplingError::InvalidConfig(format!(
                "input length range [{ilo}, {ihi}] is empty"
            )));
        }
        self.constraints.validate(self.domain)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    #[error("constraints unsatisfiable after {attempts} attempts")]
    Unsatisfiable { attempts: usize },
    #[error("generation budget exhausted after {attempts} attempts (last program: {})",
        partial.as_ref().map_or_else(|| "none".to_string(), |p| p.to_string()))]
    BudgetExhausted {
        attempts: usize,
        partial: Option<Program>,
    },
    #[error("wrong domain: sampler is configured for {0}")]
    WrongDomain(Domain),
}

/// A RobustFill task: ground-truth program and its I/O specification.
#[derive(Debug, Clone, PartialEq)]
pub struct RfSample {
    pub program: Program,
    pub examples: Vec<IoExample>,
}

pub struct Sampler {
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(cfg: SamplerConfig) -> Result<Self, SamplingError> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Sampler { cfg, rng })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    fn draw_length(&mut self) -> usize {
        let (lo, hi) = self.cfg.length_range;
        self.rng.gen_range(lo..=hi)
    }

    /// Random slot (part index) for each required feature.
    fn slot_requirements(&mut self, n: usize) -> Vec<Vec<Feature>> {
        let mut slots = vec![Vec::new(); n];
        let required: Vec<Feature> = self.cfg.constraints.required.iter().copied().collect();
        for f in required {
            let i = self.rng.gen_range(0..n);
            slots[i].push(f);
        }
        slots
    }

    pub fn sample_scan(&mut self) -> Result<ScanCommand, SamplingError> {
        if self.cfg.domain != Domain::Scan {
            return Err(SamplingError::WrongDomain(self.cfg.domain));
        }
        let pair = Concept::pair(Domain::Scan);
        // The length is kept across rejections so that hard lengths are not
        // under-represented; it is redrawn only when the pattern cannot fit.
        let mut n = self.draw_length();
        for _ in 0..REJECTION_BUDGET {
            let conjs: Vec<Conjunction> = (0..n - 1)
                .map(|_| {
                    if self.rng.gen() {
                        Conjunction::And
                    } else {
                        Conjunction::After
                    }
                })
                .collect();
            let Some(exec_concepts) = self.cfg.constraints.concept_pattern.draw(n, pair, &mut self.rng)
            else {
                n = self.draw_length();
                continue;
            };
            // Concepts are assigned in execution order; map them back to
            // command positions.
            let placeholder = vec![ScanPart::action(Action::Walk); n];
            let order = ScanCommand::from_flat(&placeholder, &conjs)
                .expect("n parts, n-1 conjunctions")
                .execution_order();
            let mut concepts = vec![None; n];
            for (exec_pos, &cmd_pos) in order.iter().enumerate() {
                concepts[cmd_pos] = exec_concepts[exec_pos];
            }
            let slots = self.slot_requirements(n);
            let parts: Option<Vec<ScanPart>> = (0..n)
                .map(|i| self.sample_scan_part(concepts[i], &slots[i]))
                .collect();
            let Some(parts) = parts else { continue };
            let cmd = ScanCommand::from_flat(&parts, &conjs).expect("shape checked");
            if self.cfg.constraints.admits_scan(&cmd) {
                return Ok(cmd);
            }
        }
        Err(SamplingError::Unsatisfiable {
            attempts: REJECTION_BUDGET,
        })
    }

    /// Draws template, verb, modifier, side and repetition uniformly, then
    /// rejects parts that break the slot's constraints.
    fn sample_scan_part(&mut self, concept: Option<Concept>, required: &[Feature]) -> Option<ScanPart> {
        for _ in 0..REJECTION_BUDGET {
            let directional = concept.is_some() || self.rng.gen::<bool>();
            let repeat = *Repeat::ALL.choose(&mut self.rng).expect("non-empty");
            let part = if directional {
                let verb = *Verb::ALL.choose(&mut self.rng).expect("non-empty");
                let modifier = *Modifier::ALL.choose(&mut self.rng).expect("non-empty");
                let side = match concept {
                    Some(Concept::Left) => Side::Left,
                    Some(Concept::Right) => Side::Right,
                    _ => *Side::ALL.choose(&mut self.rng).expect("non-empty"),
                };
                ScanPart::new(verb, Some(Direction::new(modifier, side)), repeat)
            } else {
                let action = *Action::ALL.choose(&mut self.rng).expect("non-empty");
                ScanPart::new(Verb::Act(action), None, repeat)
            }
            .expect("directional or action");
            let features = scan_part_features(&part);
            if required.iter().all(|f| features.contains(f))
                && !features.iter().any(|f| self.cfg.constraints.forbidden.contains(f))
            {
                return Some(part);
            }
        }
        None
    }

    pub fn sample_rf(&mut self) -> Result<RfSample, SamplingError> {
        if self.cfg.domain != Domain::Robustfill {
            return Err(SamplingError::WrongDomain(self.cfg.domain));
        }
        let pair = Concept::pair(Domain::Robustfill);
        let mut partial = None;
        let mut n = self.draw_length();
        for _ in 0..REJECTION_BUDGET {
            let Some(concepts) = self.cfg.constraints.concept_pattern.draw(n, pair, &mut self.rng)
            else {
                n = self.draw_length();
                continue;
            };
            let slots = self.slot_requirements(n);
            let exprs: Option<Vec<Expression>> = (0..n)
                .map(|i| self.sample_expression(concepts[i], &slots[i]))
                .collect();
            let Some(exprs) = exprs else { continue };
            let program = Program::new(exprs).expect("n >= 1");
            if !self.cfg.constraints.admits_rf(&program) {
                continue;
            }
            if let Some(examples) = self.sample_examples(&program) {
                return Ok(RfSample { program, examples });
            }
            partial = Some(program);
        }
        Err(SamplingError::BudgetExhausted {
            attempts: REJECTION_BUDGET,
            partial,
        })
    }

    /// A length-1 RobustFill sample whose expression carries `feature`.
    pub fn sample_rf_single(&mut self, feature: Feature) -> Result<RfSample, SamplingError> {
        let mut partial = None;
        for _ in 0..REJECTION_BUDGET {
            let Some(e) = self.sample_expression(None, &[feature]) else { continue };
            let program = Program::new(vec![e]).expect("one expression");
            if let Some(examples) = self.sample_examples(&program) {
                return Ok(RfSample { program, examples });
            }
            partial = Some(program);
        }
        Err(SamplingError::BudgetExhausted {
            attempts: REJECTION_BUDGET,
            partial,
        })
    }

    fn sample_expression(&mut self, concept: Option<Concept>, required: &[Feature]) -> Option<Expression> {
        let forbidden = &self.cfg.constraints.forbidden;
        let kinds: Vec<OpKind> = OpKind::ALL
            .into_iter()
            .filter(|k| match concept {
                Some(Concept::Substring) => k.is_substring(),
                Some(Concept::Nonsubstring) => k.is_modification() || *k == OpKind::ConstStr,
                Some(Concept::Compose) => *k == OpKind::Compose,
                _ => true,
            })
            .filter(|k| !forbidden.contains(&Feature::Op(*k)))
            .collect();
        if kinds.is_empty() {
            return None;
        }
        for _ in 0..REJECTION_BUDGET {
            let kind = *kinds.choose(&mut self.rng).expect("non-empty");
            let e = self.expression_of_kind(kind);
            let features = rf_expression_features(&e);
            if required.iter().all(|f| features.contains(f))
                && !features.iter().any(|f| self.cfg.constraints.forbidden.contains(f))
            {
                return Some(e);
            }
        }
        None
    }

    fn expression_of_kind(&mut self, kind: OpKind) -> Expression {
        if kind.is_substring() {
            Expression::Substring(self.substring_of_kind(kind))
        } else if kind.is_modification() {
            Expression::Modification(self.modification_of_kind(kind))
        } else if kind == OpKind::ConstStr {
            Expression::ConstStr(self.character())
        } else {
            let outer_kind = *OpKind::MODIFICATION.choose(&mut self.rng).expect("non-empty");
            let outer = self.modification_of_kind(outer_kind);
            let inner = if self.rng.gen() {
                let k = *OpKind::MODIFICATION.choose(&mut self.rng).expect("non-empty");
                ComposeInner::Modification(self.modification_of_kind(k))
            } else {
                let k = *OpKind::SUBSTRING.choose(&mut self.rng).expect("non-empty");
                ComposeInner::Substring(self.substring_of_kind(k))
            };
            Expression::Compose(Compose { outer, inner })
        }
    }

    /// Positions are drawn from the part of the range that can address an
    /// input of the configured maximum length.
    fn position(&mut self) -> Position {
        let max = (self.cfg.input_length_range.1 as i32).min(Position::MAX);
        loop {
            if let Some(p) = Position::new(self.rng.gen_range(-max..=max)) {
                return p;
            }
        }
    }

    fn index(&mut self) -> Index {
        loop {
            if let Some(i) = Index::new(self.rng.gen_range(-Index::MAX..=Index::MAX)) {
                return i;
            }
        }
    }

    fn token_type(&mut self) -> TokenType {
        *TokenType::ALL.choose(&mut self.rng).expect("non-empty")
    }

    fn delimiter(&mut self) -> Delimiter {
        Delimiter::new(*DELIMITERS.choose(&mut self.rng).expect("non-empty")).expect("delimiter")
    }

    fn character(&mut self) -> Character {
        let c = *alphabet().choose(&mut self.rng).expect("non-empty");
        Character::new(c).expect("alphabet")
    }

    fn regex(&mut self) -> Regex {
        // Uniform over the 8 types and the delimiters.
        let total = TokenType::ALL.len() + DELIMITERS.len();
        let i = self.rng.gen_range(0..total);
        if i < TokenType::ALL.len() {
            Regex::Type(TokenType::ALL[i])
        } else {
            Regex::Delim(Delimiter::new(DELIMITERS[i - TokenType::ALL.len()]).expect("delimiter"))
        }
    }

    fn boundary(&mut self) -> Boundary {
        if self.rng.gen() {
            Boundary::Start
        } else {
            Boundary::End
        }
    }

    fn substring_of_kind(&mut self, kind: OpKind) -> Substring {
        match kind {
            OpKind::SubStr => Substring::SubStr(self.position(), self.position()),
            OpKind::GetSpan => Substring::GetSpan(
                self.regex(),
                self.index(),
                self.boundary(),
                self.regex(),
                self.index(),
                self.boundary(),
            ),
            OpKind::GetToken => Substring::GetToken(self.token_type(), self.index()),
            OpKind::GetUpto => Substring::GetUpto(self.regex()),
            OpKind::GetFrom => Substring::GetFrom(self.regex()),
            _ => unreachable!("not a substring kind"),
        }
    }

    fn modification_of_kind(&mut self, kind: OpKind) -> Modification {
        match kind {
            OpKind::ToCase => Modification::ToCase(*Case::ALL.choose(&mut self.rng).expect("non-empty")),
            OpKind::Replace => Modification::Replace(self.delimiter(), self.delimiter()),
            OpKind::Trim => Modification::Trim,
            OpKind::GetFirst => Modification::GetFirst(self.token_type(), self.index()),
            OpKind::GetAll => Modification::GetAll(self.token_type()),
            OpKind::Substitute => {
                Modification::Substitute(self.token_type(), self.index(), self.character())
            }
            OpKind::SubstituteAll => Modification::SubstituteAll(self.token_type(), self.character()),
            OpKind::Remove => Modification::Remove(self.token_type(), self.index()),
            OpKind::RemoveAll => Modification::RemoveAll(self.token_type()),
            _ => unreachable!("not a modification kind"),
        }
    }

    /// Draws `examples_per_task` inputs on which every expression succeeds
    /// and the program output is non-empty.
    fn sample_examples(&mut self, program: &Program) -> Option<Vec<IoExample>> {
        let demands = input_demands(program);
        let mut out = Vec::with_capacity(self.cfg.examples_per_task);
        for _ in 0..self.cfg.examples_per_task {
            let example = (0..INPUT_TRIES).find_map(|_| {
                let input = self.seeded_input(&demands)?;
                match program.eval(&input) {
                    Ok(output) if !output.is_empty() => Some(IoExample { input, output }),
                    _ => None,
                }
            })?;
            out.push(example);
        }
        Some(out)
    }

    /// Plants the matches the program refers to, pads with random chunks,
    /// and joins everything with single separators.
    fn seeded_input(&mut self, demands: &InputDemands) -> Option<String> {
        let (lo, hi) = self.cfg.input_length_range;
        let min_len = lo.max(demands.min_len);
        if min_len > hi {
            return None;
        }
        let target = self.rng.gen_range(min_len..=hi);

        let mut chunks: Vec<String> = Vec::new();
        for &(regex, count) in &demands.matches {
            for _ in 0..count {
                chunks.push(match regex {
                    Regex::Type(t) => self.chunk_of(t),
                    Regex::Delim(d) => d.get().to_string(),
                });
            }
        }
        let joined_len = |chunks: &[String]| {
            chunks.iter().map(String::len).sum::<usize>() + chunks.len().saturating_sub(1)
        };
        while joined_len(&chunks) < target {
            let t = self.token_type();
            chunks.push(self.chunk_of(t));
        }
        chunks.shuffle(&mut self.rng);

        let mut input = String::new();
        if self.rng.gen_bool(0.1) {
            input.push(' ');
        }
        for (i, chunk) in chunks.iter().enumerate() {
            if i > 0 {
                let sep = if self.rng.gen_bool(0.6) {
                    ' '
                } else {
                    *DELIMITERS.choose(&mut self.rng).expect("non-empty")
                };
                input.push(sep);
            }
            input.push_str(chunk);
        }
        if self.rng.gen_bool(0.1) {
            input.push(' ');
        }
        if input.len() > hi {
            input.truncate(hi);
        }
        if input.len() < lo || input.trim().is_empty() {
            return None;
        }
        Some(input)
    }

    /// A short string that is one match of `t`.
    fn chunk_of(&mut self, t: TokenType) -> String {
        const UPPER: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
        const LOWER: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
        const DIGITS: &[u8] = b"0123456789";
        const LETTERS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
        const ALNUM: &[u8] =
            b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
        let rng = &mut self.rng;
        let mut pick = |set: &[u8], max_len: usize| -> String {
            let len = rng.gen_range(1..=max_len);
            (0..len).map(|_| *set.choose(rng).expect("non-empty") as char).collect()
        };
        match t {
            TokenType::Number => pick(DIGITS, 3),
            TokenType::Digit => pick(DIGITS, 1),
            TokenType::Lower => pick(LOWER, 4),
            TokenType::AllCaps => pick(UPPER, 3),
            TokenType::PropCase => format!("{}{}", pick(UPPER, 1), pick(LOWER, 4)),
            TokenType::Word => pick(LETTERS, 5),
            TokenType::Alphanum => pick(ALNUM, 5),
            TokenType::Char => {
                let c = loop {
                    let c = *alphabet().choose(&mut self.rng).expect("non-empty");
                    if c != ' ' {
                        break c;
                    }
                };
                c.to_string()
            }
        }
    }

    /// Samples according to the configured domain.
    pub fn sample(&mut self) -> Result<Sample, SamplingError> {
        match self.cfg.domain {
            Domain::Scan => self.sample_scan().map(Sample::Scan),
            Domain::Robustfill => self.sample_rf().map(Sample::Robustfill),
        }
    }

    /// Draws the configured special form, if any.
    pub fn sample_special(&mut self) -> Result<Option<Sample>, SamplingError> {
        let Some(special) = self.cfg.constraints.special.clone() else {
            return Ok(None);
        };
        match special.form {
            SpecialForm::ScanCommand(text) => {
                let cmd = text.parse().map_err(|e| {
                    SamplingError::InvalidConfig(format!("special command {text:?}: {e}"))
                })?;
                Ok(Some(Sample::Scan(cmd)))
            }
            SpecialForm::RfSingle(feature) => {
                Ok(Some(Sample::Robustfill(self.sample_rf_single(feature)?)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Scan(ScanCommand),
    Robustfill(RfSample),
}

pub fn sample_scan(cfg: &SamplerConfig) -> Result<ScanCommand, SamplingError> {
    Sampler::new(cfg.clone())?.sample_scan()
}

pub fn sample_rf(cfg: &SamplerConfig) -> Result<(Program, Vec<IoExample>), SamplingError> {
    let s = Sampler::new(cfg.clone())?.sample_rf()?;
    Ok((s.program, s.examples))
}

fn alphabet() -> &'static [char] {
    use std::sync::OnceLock;
    static ALPHABET: OnceLock<Vec<char>> = OnceLock::new();
    ALPHABET.get_or_init(|| (0u8..128).map(char::from).filter(|&c| in_alphabet(c)).collect())
}

/// What an input must contain for a program to have a chance to succeed.
#[derive(Debug, Default)]
struct InputDemands {
    /// Minimum match count per regex.
    matches: Vec<(Regex, usize)>,
    min_len: usize,
}

impl InputDemands {
    fn need(&mut self, r: Regex, count: usize) {
        match self.matches.iter_mut().find(|(x, _)| *x == r) {
            Some((_, c)) => *c = (*c).max(count),
            None => self.matches.push((r, count)),
        }
    }

    fn substring(&mut self, s: &Substring) {
        match *s {
            Substring::SubStr(k1, k2) => {
                self.min_len = self
                    .min_len
                    .max(k1.get().unsigned_abs() as usize)
                    .max(k2.get().unsigned_abs() as usize)
            }
            Substring::GetSpan(r1, i1, _, r2, i2, _) => {
                self.need(r1, i1.get().unsigned_abs() as usize);
                self.need(r2, i2.get().unsigned_abs() as usize);
            }
            Substring::GetToken(t, i) => self.need(Regex::Type(t), i.get().unsigned_abs() as usize),
            Substring::GetUpto(r) | Substring::GetFrom(r) => self.need(r, 1),
        }
    }

    fn modification(&mut self, m: &Modification) {
        match *m {
            Modification::GetFirst(t, i)
            | Modification::Substitute(t, i, _)
            | Modification::Remove(t, i) => self.need(Regex::Type(t), i.get().unsigned_abs() as usize),
            Modification::GetAll(t) => self.need(Regex::Type(t), 1),
            _ => {}
        }
    }
}

fn input_demands(p: &Program) -> InputDemands {
    let mut d = InputDemands::default();
    for e in p.expressions() {
        match e {
            Expression::Substring(s) => d.substring(s),
            Expression::Modification(m) => d.modification(m),
            Expression::Compose(c) => {
                d.modification(&c.outer);
                match &c.inner {
                    ComposeInner::Modification(m) => d.modification(m),
                    ComposeInner::Substring(s) => d.substring(s),
                }
            }
            Expression::ConstStr(_) => {}
        }
    }
    d
}
