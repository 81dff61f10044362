//! The seven compositional-generalization splits, few-shot fine-tune sets
//! and split audits.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decomp::{insert_separators, strip_separators};
use crate::robustfill::{parse_program, IoExample, OpKind, Program};
use crate::sampling::{
    rf_concepts, scan_concepts, Concept, ConceptPattern, ConstraintSet, Domain, Feature, RfSample,
    Sample, Sampler, SamplerConfig, SamplingError, SpecialForm, SpecialInjection,
    REJECTION_BUDGET,
};
use crate::scan::{parse_command, Action, Direction, Modifier, ScanCommand, Side, Verb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Length,
    LengthHard,
    LengthHardest,
    ComposeDifferentConcepts,
    SwitchConceptOrder,
    ComposeNewOperation,
    AddOperationFunctionality,
}

impl Task {
    pub const ALL: [Task; 7] = [
        Task::Length,
        Task::LengthHard,
        Task::LengthHardest,
        Task::ComposeDifferentConcepts,
        Task::SwitchConceptOrder,
        Task::ComposeNewOperation,
        Task::AddOperationFunctionality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Length => "length",
            Task::LengthHard => "length-hard",
            Task::LengthHardest => "length-hardest",
            Task::ComposeDifferentConcepts => "compose-different-concepts",
            Task::SwitchConceptOrder => "switch-concept-order",
            Task::ComposeNewOperation => "compose-new-operation",
            Task::AddOperationFunctionality => "add-operation-functionality",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| TaskError::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
    Finetune,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Test => "test",
            Role::Finetune => "finetune",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which distribution a record was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    TrainDist,
    TestDist,
}

impl Origin {
    pub fn name(self) -> &'static str {
        match self {
            Origin::TrainDist => "train_dist",
            Origin::TestDist => "test_dist",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("{task}/{domain} {role}: predicate unsatisfiable ({reason})")]
    Unsatisfiable {
        domain: Domain,
        task: Task,
        role: String,
        reason: String,
    },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Records per fine-tune origin.
pub const FINETUNE_PER_ORIGIN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sizes {
    pub train: usize,
    pub test: usize,
}

impl Default for Sizes {
    fn default() -> Self {
        Sizes {
            train: 10_000,
            test: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub domain: Domain,
    pub task: Task,
    pub role: Role,
    pub sizes: Sizes,
    pub seed: u64,
    /// Upper test length for `length-hardest`.
    pub hardest_test_max: usize,
    pub examples_per_task: usize,
    pub input_length_range: (usize, usize),
}

impl SplitSpec {
    pub fn new(domain: Domain, task: Task, role: Role, seed: u64) -> Self {
        SplitSpec {
            domain,
            task,
            role,
            sizes: Sizes::default(),
            seed,
            hardest_test_max: 6,
            examples_per_task: 4,
            input_length_range: (4, 20),
        }
    }

    pub fn with_sizes(mut self, train: usize, test: usize) -> Self {
        self.sizes = Sizes { train, test };
        self
    }

    pub fn with_role(&self, role: Role) -> Self {
        SplitSpec {
            role,
            ..self.clone()
        }
    }

    pub fn predicates(&self) -> SplitPredicates {
        SplitPredicates {
            domain: self.domain,
            task: self.task,
            hardest_test_max: self.hardest_test_max,
        }
    }
}

/// Derives a stream seed from the root seed and a label path.
pub fn derive_seed(root: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(b"compgen-seed");
    h.update(root.to_le_bytes());
    for l in labels {
        h.update((l.len() as u64).to_le_bytes());
        h.update(l.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// The problem specification of a record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spec {
    Command(String),
    Examples(Vec<IoExample>),
}

impl Spec {
    /// Identity used for deduplication and overlap checks.
    pub fn key(&self) -> String {
        match self {
            Spec::Command(c) => format!("scan:{c}"),
            Spec::Examples(ex) => format!(
                "robustfill:{}",
                serde_json::to_string(ex).expect("examples serialize")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub domain: Domain,
    pub spec: Spec,
    /// Program tokens with separators.
    pub target_tokens: Vec<String>,
    /// Part spans over the separator-free program tokens.
    pub part_spans: Vec<Range<usize>>,
    pub length: usize,
    pub concept_labels: Vec<Concept>,
    pub origin: Origin,
}

impl TaskInstance {
    pub fn from_scan(cmd: &ScanCommand, origin: Origin) -> Self {
        let prog = cmd.translate();
        let tokens = prog.token_strings();
        let seq = insert_separators(&tokens, &prog.part_spans).expect("translation spans tile");
        TaskInstance {
            domain: Domain::Scan,
            spec: Spec::Command(cmd.to_string()),
            target_tokens: seq.into_tokens(),
            length: prog.part_spans.len(),
            part_spans: prog.part_spans,
            concept_labels: scan_concepts(cmd),
            origin,
        }
    }

    pub fn from_rf(sample: &RfSample, origin: Origin) -> Self {
        let (tokens, spans) = sample.program.tokens_with_spans();
        let seq = insert_separators(&tokens, &spans).expect("expression spans tile");
        TaskInstance {
            domain: Domain::Robustfill,
            spec: Spec::Examples(sample.examples.clone()),
            target_tokens: seq.into_tokens(),
            length: spans.len(),
            part_spans: spans,
            concept_labels: rf_concepts(&sample.program),
            origin,
        }
    }

    fn from_sample(sample: &Sample, origin: Origin) -> Self {
        match sample {
            Sample::Scan(cmd) => Self::from_scan(cmd, origin),
            Sample::Robustfill(rf) => Self::from_rf(rf, origin),
        }
    }

    pub fn program_tokens(&self) -> Vec<String> {
        strip_separators(&self.target_tokens)
    }

    pub fn key(&self) -> String {
        self.spec.key()
    }
}

/// The parsed content a predicate inspects.
enum Parsed {
    Scan(ScanCommand),
    Rf(Program),
}

fn parse_instance(inst: &TaskInstance) -> Option<Parsed> {
    match (&inst.spec, inst.domain) {
        (Spec::Command(c), Domain::Scan) => parse_command(c).ok().map(Parsed::Scan),
        (Spec::Examples(_), Domain::Robustfill) => {
            parse_program(&inst.program_tokens()).ok().map(Parsed::Rf)
        }
        _ => None,
    }
}

/// Train/test membership tests for one task, written directly against the
/// AST rather than through the sampler's constraint machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitPredicates {
    pub domain: Domain,
    pub task: Task,
    pub hardest_test_max: usize,
}

impl SplitPredicates {
    pub fn admits(&self, origin: Origin, inst: &TaskInstance) -> bool {
        if inst.domain != self.domain {
            return false;
        }
        match parse_instance(inst) {
            Some(p) => self.admits_parsed(origin, &p),
            None => false,
        }
    }

    fn admits_parsed(&self, origin: Origin, parsed: &Parsed) -> bool {
        let train = origin == Origin::TrainDist;
        let (n, concepts) = match parsed {
            Parsed::Scan(c) => (c.part_count(), scan_concepts(c)),
            Parsed::Rf(p) => (p.len(), rf_concepts(p)),
        };
        let (a, b) = Concept::pair(self.domain);
        let all_in_pair = concepts.iter().all(|&c| c == a || c == b);
        let half = n.div_ceil(2);
        let ordered = |first: Concept, second: Concept| {
            concepts[..half].iter().all(|&c| c == first) && concepts[half..].iter().all(|&c| c == second)
        };
        match self.task {
            Task::Length => {
                if train {
                    (1..=6).contains(&n)
                } else {
                    (7..=10).contains(&n)
                }
            }
            Task::LengthHard => {
                if train {
                    n == 6
                } else {
                    (1..=10).contains(&n) && n != 6
                }
            }
            Task::LengthHardest => {
                if train {
                    n == 1
                } else {
                    (2..=self.hardest_test_max).contains(&n)
                }
            }
            Task::ComposeDifferentConcepts => {
                let one = concepts.iter().all(|&c| c == a) || concepts.iter().all(|&c| c == b);
                let both = concepts.contains(&a) && concepts.contains(&b);
                (2..=6).contains(&n) && all_in_pair && if train { one } else { both }
            }
            Task::SwitchConceptOrder => {
                (2..=6).contains(&n) && if train { ordered(a, b) } else { ordered(b, a) }
            }
            Task::ComposeNewOperation => match parsed {
                Parsed::Scan(cmd) => {
                    let is_jump = cmd.to_string() == "jump";
                    let has_jump = cmd
                        .part_phrases()
                        .iter()
                        .any(|p| p.verb() == Verb::Act(Action::Jump));
                    if train {
                        is_jump || ((1..=6).contains(&n) && !has_jump)
                    } else {
                        (1..=6).contains(&n) && has_jump && !is_jump
                    }
                }
                Parsed::Rf(p) => {
                    let has_compose = p
                        .expressions()
                        .iter()
                        .any(|e| e.op_kinds().contains(&OpKind::Compose));
                    if train {
                        let compose_only = n == 1 && has_compose;
                        compose_only || ((2..=6).contains(&n) && !has_compose)
                    } else {
                        (2..=6).contains(&n) && has_compose
                    }
                }
            },
            Task::AddOperationFunctionality => {
                let has = match parsed {
                    Parsed::Scan(cmd) => cmd.part_phrases().iter().any(|p| {
                        p.direction() == Some(Direction::new(Modifier::Around, Side::Right))
                    }),
                    Parsed::Rf(p) => p.expressions().iter().any(|e| e.has_substring_in_compose()),
                };
                (1..=6).contains(&n) && has != train
            }
        }
    }

    /// Whether a train record is the task's injected fixed form.
    pub fn is_special(&self, inst: &TaskInstance) -> bool {
        if self.task != Task::ComposeNewOperation {
            return false;
        }
        match parse_instance(inst) {
            Some(Parsed::Scan(cmd)) => cmd.to_string() == "jump",
            Some(Parsed::Rf(p)) => p.len() == 1 && p.expressions()[0].kind() == OpKind::Compose,
            None => false,
        }
    }
}

/// Sampling recipe for one origin of one task.
#[derive(Debug, Clone)]
struct Distribution {
    lengths: Vec<usize>,
    constraints: ConstraintSet,
    special: Option<SpecialInjection>,
    /// Specifications this origin must never emit.
    banned: Vec<Spec>,
}

fn features(names: &[&str]) -> std::collections::BTreeSet<Feature> {
    names.iter().map(|s| s.parse().expect("known feature")).collect()
}

fn distribution(spec: &SplitSpec, origin: Origin) -> Distribution {
    let train = origin == Origin::TrainDist;
    let scan = spec.domain == Domain::Scan;
    let range = |lo: usize, hi: usize| (lo..=hi).collect::<Vec<_>>();
    let with = |lengths: Vec<usize>, constraints: ConstraintSet| Distribution {
        lengths,
        constraints,
        special: None,
        banned: Vec::new(),
    };
    let pattern = |p: ConceptPattern| ConstraintSet {
        concept_pattern: p,
        ..Default::default()
    };
    let req = |names: &[&str]| ConstraintSet {
        required: features(names),
        ..Default::default()
    };
    let forbid = |names: &[&str]| ConstraintSet {
        forbidden: features(names),
        ..Default::default()
    };
    match (spec.task, train) {
        (Task::Length, true) => with(range(1, 6), ConstraintSet::default()),
        (Task::Length, false) => with(range(7, 10), ConstraintSet::default()),
        (Task::LengthHard, true) => with(vec![6], ConstraintSet::default()),
        (Task::LengthHard, false) => with(
            range(1, 10).into_iter().filter(|&n| n != 6).collect(),
            ConstraintSet::default(),
        ),
        (Task::LengthHardest, true) => with(vec![1], ConstraintSet::default()),
        (Task::LengthHardest, false) => {
            with(range(2, spec.hardest_test_max), ConstraintSet::default())
        }
        (Task::ComposeDifferentConcepts, true) => {
            with(range(2, 6), pattern(ConceptPattern::OneConcept))
        }
        (Task::ComposeDifferentConcepts, false) => with(range(2, 6), pattern(ConceptPattern::Mixed)),
        (Task::SwitchConceptOrder, true) => with(range(2, 6), pattern(ConceptPattern::AThenB)),
        (Task::SwitchConceptOrder, false) => with(range(2, 6), pattern(ConceptPattern::BThenA)),
        (Task::ComposeNewOperation, true) if scan => Distribution {
            lengths: range(1, 6),
            constraints: forbid(&["jump"]),
            special: Some(SpecialInjection {
                ratio: 0.10,
                form: SpecialForm::ScanCommand("jump".into()),
            }),
            banned: Vec::new(),
        },
        (Task::ComposeNewOperation, false) if scan => Distribution {
            banned: vec![Spec::Command("jump".into())],
            ..with(range(1, 6), req(&["jump"]))
        },
        (Task::ComposeNewOperation, true) => Distribution {
            lengths: range(2, 6),
            constraints: forbid(&["Compose"]),
            special: Some(SpecialInjection {
                ratio: 0.25,
                form: SpecialForm::RfSingle(Feature::Op(OpKind::Compose)),
            }),
            banned: Vec::new(),
        },
        (Task::ComposeNewOperation, false) => with(range(2, 6), req(&["Compose"])),
        (Task::AddOperationFunctionality, true) if scan => {
            with(range(1, 6), forbid(&["around right"]))
        }
        (Task::AddOperationFunctionality, false) if scan => {
            with(range(1, 6), req(&["around right"]))
        }
        (Task::AddOperationFunctionality, true) => {
            with(range(1, 6), forbid(&["SubstringInCompose"]))
        }
        (Task::AddOperationFunctionality, false) => {
            with(range(1, 6), req(&["SubstringInCompose"]))
        }
    }
}

/// Generates unique records from one distribution, one sampler per length
/// stratum. A stratum whose unseen records run out (for example the 102
/// single-part SCAN commands) is retired and the remaining strata share its
/// draws; when every stratum is retired, duplicates are admitted if the
/// stream allows them.
struct Stream<'a> {
    spec: &'a SplitSpec,
    origin: Origin,
    dist: Distribution,
    strata: Vec<(usize, Sampler)>,
    special: Option<Sampler>,
    picker: ChaCha8Rng,
    allow_duplicates: bool,
    label: String,
}

impl<'a> Stream<'a> {
    fn new(
        spec: &'a SplitSpec,
        origin: Origin,
        label: &str,
        allow_duplicates: bool,
    ) -> Result<Self, TaskError> {
        let dist = distribution(spec, origin);
        let domain = spec.domain.name();
        let task = spec.task.name();
        let config = |seed: u64, lo: usize, hi: usize, constraints: ConstraintSet| SamplerConfig {
            seed,
            domain: spec.domain,
            length_range: (lo, hi),
            constraints,
            examples_per_task: spec.examples_per_task,
            input_length_range: spec.input_length_range,
        };
        let mut strata = Vec::with_capacity(dist.lengths.len());
        for &n in &dist.lengths {
            let seed = derive_seed(spec.seed, &[domain, task, label, &n.to_string()]);
            strata.push((n, Sampler::new(config(seed, n, n, dist.constraints.clone()))?));
        }
        let special = match &dist.special {
            Some(inj) => {
                let seed = derive_seed(spec.seed, &[domain, task, label, "special"]);
                let constraints = ConstraintSet {
                    special: Some(inj.clone()),
                    ..Default::default()
                };
                Some(Sampler::new(config(seed, 1, 1, constraints))?)
            }
            None => None,
        };
        let picker = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[domain, task, label, "strata"]));
        Ok(Stream {
            spec,
            origin,
            dist,
            strata,
            special,
            picker,
            allow_duplicates,
            label: label.to_string(),
        })
    }

    fn unsatisfiable(&self, reason: &str) -> TaskError {
        TaskError::Unsatisfiable {
            domain: self.spec.domain,
            task: self.spec.task,
            role: self.label.clone(),
            reason: reason.to_string(),
        }
    }

    /// Generates `count` records, skipping any key in `exclude` and adding
    /// emitted keys to it.
    fn generate(
        &mut self,
        count: usize,
        exclude: &mut HashSet<String>,
    ) -> Result<Vec<TaskInstance>, TaskError> {
        let mut out = Vec::with_capacity(count);
        let mut live: Vec<usize> = (0..self.strata.len()).collect();
        for i in 0..count {
            let special_slot = self
                .dist
                .special
                .as_ref()
                .is_some_and(|inj| inj.is_special_slot(i));
            if special_slot {
                out.push(self.next_special(exclude)?);
                continue;
            }
            loop {
                if live.is_empty() {
                    if !self.allow_duplicates {
                        return Err(self.unsatisfiable("every length stratum is exhausted"));
                    }
                    let s = self.strata.choose_mut(&mut self.picker).expect("non-empty");
                    let sample = s.1.sample()?;
                    out.push(TaskInstance::from_sample(&sample, self.origin));
                    break;
                }
                let pick = *live.choose(&mut self.picker).expect("non-empty");
                match self.next_unique(pick, exclude)? {
                    Some(inst) => {
                        out.push(inst);
                        break;
                    }
                    None => live.retain(|&s| s != pick),
                }
            }
        }
        Ok(out)
    }

    fn next_unique(
        &mut self,
        stratum: usize,
        exclude: &mut HashSet<String>,
    ) -> Result<Option<TaskInstance>, TaskError> {
        for _ in 0..REJECTION_BUDGET {
            let sample = self.strata[stratum].1.sample()?;
            let inst = TaskInstance::from_sample(&sample, self.origin);
            if self.dist.banned.contains(&inst.spec) {
                continue;
            }
            if exclude.insert(inst.key()) {
                return Ok(Some(inst));
            }
        }
        Ok(None)
    }

    fn next_special(&mut self, exclude: &mut HashSet<String>) -> Result<TaskInstance, TaskError> {
        let sampler = self.special.as_mut().expect("special slots imply a special sampler");
        for _ in 0..REJECTION_BUDGET {
            let sample = sampler.sample_special()?.expect("special form configured");
            let inst = TaskInstance::from_sample(&sample, self.origin);
            // The fixed SCAN command repeats by design.
            if matches!(sample, Sample::Scan(_)) {
                exclude.insert(inst.key());
                return Ok(inst);
            }
            if exclude.insert(inst.key()) {
                return Ok(inst);
            }
        }
        Err(self.unsatisfiable("special form exhausted"))
    }
}

/// Builds the records of `spec.role` (train or test).
pub fn build_split(spec: &SplitSpec) -> Result<Vec<TaskInstance>, TaskError> {
    let mut seen = HashSet::new();
    build_split_excluding(spec, &mut seen)
}

/// Like [`build_split`], but never emits a key in `exclude`; emitted keys
/// are added to it.
pub fn build_split_excluding(
    spec: &SplitSpec,
    exclude: &mut HashSet<String>,
) -> Result<Vec<TaskInstance>, TaskError> {
    match spec.role {
        Role::Train => Stream::new(spec, Origin::TrainDist, "train", true)?
            .generate(spec.sizes.train, exclude),
        Role::Test => {
            Stream::new(spec, Origin::TestDist, "test", false)?.generate(spec.sizes.test, exclude)
        }
        Role::Finetune => build_finetune_set(spec),
    }
}

/// 20 train-distribution plus 20 test-distribution records, disjoint from
/// the test set built from the same spec.
pub fn build_finetune_set(spec: &SplitSpec) -> Result<Vec<TaskInstance>, TaskError> {
    let test = build_split(&spec.with_role(Role::Test))?;
    let keys: HashSet<String> = test.iter().map(TaskInstance::key).collect();
    build_finetune_set_excluding(spec, &keys)
}

pub fn build_finetune_set_excluding(
    spec: &SplitSpec,
    test_keys: &HashSet<String>,
) -> Result<Vec<TaskInstance>, TaskError> {
    let mut exclude = test_keys.clone();
    let mut out = Stream::new(spec, Origin::TrainDist, "finetune-train", false)?
        .generate(FINETUNE_PER_ORIGIN, &mut exclude)?;
    out.extend(
        Stream::new(spec, Origin::TestDist, "finetune-test", false)?
            .generate(FINETUNE_PER_ORIGIN, &mut exclude)?,
    );
    Ok(out)
}

/// Train, test and fine-tune records of one task, built consistently.
#[derive(Debug, Clone)]
pub struct BuiltSplit {
    pub train: Vec<TaskInstance>,
    pub test: Vec<TaskInstance>,
    pub finetune: Vec<TaskInstance>,
}

pub fn build_all(spec: &SplitSpec) -> Result<BuiltSplit, TaskError> {
    let test = build_split(&spec.with_role(Role::Test))?;
    let test_keys: HashSet<String> = test.iter().map(TaskInstance::key).collect();
    let mut exclude = test_keys.clone();
    let train = build_split_excluding(&spec.with_role(Role::Train), &mut exclude)?;
    let finetune = build_finetune_set_excluding(spec, &test_keys)?;
    Ok(BuiltSplit {
        train,
        test,
        finetune,
    })
}

/// Label for how a record's concepts are arranged.
pub fn concept_pattern_label(labels: &[Concept], domain: Domain) -> &'static str {
    let (a, b) = Concept::pair(domain);
    if labels.is_empty() || !labels.iter().all(|&c| c == a || c == b) {
        return "other";
    }
    let pair = (a, b);
    if ConceptPattern::AllA.matches(labels, pair) {
        "all-A"
    } else if ConceptPattern::AllB.matches(labels, pair) {
        "all-B"
    } else if ConceptPattern::AThenB.matches(labels, pair) {
        "A-then-B"
    } else if ConceptPattern::BThenA.matches(labels, pair) {
        "B-then-A"
    } else {
        "mixed"
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleAudit {
    pub total: usize,
    pub violations: usize,
    /// Records that are the task's injected fixed form.
    pub special: usize,
    /// Records whose specification already appeared in the same stream.
    pub duplicates: usize,
    pub length_histogram: BTreeMap<usize, usize>,
    pub concept_histogram: BTreeMap<String, usize>,
}

impl RoleAudit {
    fn of(records: &[TaskInstance], origin: Origin, preds: &SplitPredicates) -> Self {
        let mut audit = RoleAudit {
            total: records.len(),
            ..Default::default()
        };
        let mut seen = HashSet::new();
        for r in records {
            if !preds.admits(origin, r) {
                audit.violations += 1;
            }
            if origin == Origin::TrainDist && preds.is_special(r) {
                audit.special += 1;
            }
            if !seen.insert(r.key()) {
                audit.duplicates += 1;
            }
            *audit.length_histogram.entry(r.length).or_default() += 1;
            *audit
                .concept_histogram
                .entry(concept_pattern_label(&r.concept_labels, preds.domain).to_string())
                .or_default() += 1;
        }
        audit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub domain: Domain,
    pub task: Task,
    pub train: RoleAudit,
    pub test: RoleAudit,
    /// Distinct specifications present in both streams.
    pub overlap: usize,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.train.violations == 0 && self.test.violations == 0 && self.overlap == 0
    }
}

pub fn audit_split(
    preds: &SplitPredicates,
    train: &[TaskInstance],
    test: &[TaskInstance],
) -> AuditReport {
    let train_keys: HashSet<String> = train.iter().map(TaskInstance::key).collect();
    let test_keys: HashSet<String> = test.iter().map(TaskInstance::key).collect();
    AuditReport {
        domain: preds.domain,
        task: preds.task,
        train: RoleAudit::of(train, Origin::TrainDist, preds),
        test: RoleAudit::of(test, Origin::TestDist, preds),
        overlap: train_keys.intersection(&test_keys).count(),
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "audit {} / {}", self.domain, self.task)?;
        writeln!(f, "{:<12}{:>10}{:>10}", "", "train", "test")?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, a: usize, b: usize| {
            writeln!(f, "{name:<12}{a:>10}{b:>10}")
        };
        row(f, "records", self.train.total, self.test.total)?;
        row(f, "violations", self.train.violations, self.test.violations)?;
        row(f, "special", self.train.special, self.test.special)?;
        row(f, "duplicates", self.train.duplicates, self.test.duplicates)?;
        writeln!(f, "overlap     {:>10}", self.overlap)?;
        let lengths: std::collections::BTreeSet<usize> = self
            .train
            .length_histogram
            .keys()
            .chain(self.test.length_histogram.keys())
            .copied()
            .collect();
        for n in lengths {
            let get = |h: &BTreeMap<usize, usize>| h.get(&n).copied().unwrap_or(0);
            row(
                f,
                &format!("length {n}"),
                get(&self.train.length_histogram),
                get(&self.test.length_histogram),
            )?;
        }
        let patterns: std::collections::BTreeSet<&String> = self
            .train
            .concept_histogram
            .keys()
            .chain(self.test.concept_histogram.keys())
            .collect();
        for p in patterns {
            let get = |h: &BTreeMap<String, usize>| h.get(p).copied().unwrap_or(0);
            row(f, p, get(&self.train.concept_histogram), get(&self.test.concept_histogram))?;
        }
        write!(f, "status      {}", if self.is_clean() { "clean" } else { "VIOLATIONS" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(domain: Domain, task: Task, train: usize, test: usize) -> SplitSpec {
        SplitSpec::new(domain, task, Role::Train, 7).with_sizes(train, test)
    }

    #[test]
    fn length_train_range() {
        let s = spec(Domain::Scan, Task::Length, 500, 0);
        for inst in build_split(&s).unwrap() {
            assert!((1..=6).contains(&inst.length));
            assert_eq!(inst.origin, Origin::TrainDist);
        }
    }

    #[test]
    fn length_hard_test_skips_six() {
        for domain in [Domain::Scan, Domain::Robustfill] {
            let s = spec(domain, Task::LengthHard, 0, 300).with_role(Role::Test);
            let recs = build_split(&s).unwrap();
            assert_eq!(recs.len(), 300);
            assert!(recs.iter().all(|r| r.length != 6 && r.length <= 10));
        }
    }

    #[test]
    fn compose_new_operation_scan_ratio() {
        let s = spec(Domain::Scan, Task::ComposeNewOperation, 10_000, 0);
        let recs = build_split(&s).unwrap();
        let jumps = recs
            .iter()
            .filter(|r| r.spec == Spec::Command("jump".into()))
            .count();
        assert_eq!(jumps, 1000);
    }

    #[test]
    fn audit_counts_injected_violation() {
        let s = spec(Domain::Scan, Task::LengthHard, 200, 200);
        let built = build_all(&s).unwrap();
        let preds = s.predicates();
        let report = audit_split(&preds, &built.train, &built.test);
        assert!(report.is_clean(), "{report}");
        let mut bad = built.test.clone();
        bad.push(built.train[0].clone());
        let report = audit_split(&preds, &built.train, &bad);
        assert_eq!(report.test.violations, 1);
        assert_eq!(report.overlap, 1);
        assert_eq!(report.test.length_histogram.values().sum::<usize>(), 201);
        assert_eq!(report.train.concept_histogram.values().sum::<usize>(), 200);
    }

    #[test]
    fn finetune_shape() {
        let s = spec(Domain::Robustfill, Task::SwitchConceptOrder, 0, 200);
        let ft = build_finetune_set(&s).unwrap();
        assert_eq!(ft.len(), 40);
        assert_eq!(ft.iter().filter(|r| r.origin == Origin::TrainDist).count(), 20);
        let again = build_finetune_set(&s).unwrap();
        assert_eq!(ft, again);
    }

    #[test]
    fn hardest_train_repeats_once_exhausted() {
        let s = spec(Domain::Scan, Task::LengthHardest, 300, 0);
        let recs = build_split(&s).unwrap();
        assert_eq!(recs.len(), 300);
        let unique: HashSet<String> = recs.iter().map(TaskInstance::key).collect();
        assert_eq!(unique.len(), 102);
        assert!(recs[..102].iter().all(|r| r.length == 1));
    }

    #[test]
    fn compose_new_operation_test_excludes_bare_jump() {
        let s = spec(Domain::Scan, Task::ComposeNewOperation, 0, 1000).with_role(Role::Test);
        let recs = build_split(&s).unwrap();
        assert!(recs.iter().all(|r| r.spec != Spec::Command("jump".into())));
        assert!(recs.iter().any(|r| r.length == 1));
    }

    #[test]
    fn seeds_are_label_sensitive() {
        assert_ne!(derive_seed(1, &["a", "b"]), derive_seed(1, &["ab"]));
        assert_ne!(derive_seed(1, &["a"]), derive_seed(2, &["a"]));
        assert_eq!(derive_seed(3, &["x"]), derive_seed(3, &["x"]));
    }

    #[test]
    fn task_names() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
        }
        assert!("bogus".parse::<Task>().is_err());
    }
}
