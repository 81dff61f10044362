//! JSONL dataset records and their validation.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decomp::{check_tiling, insert_separators, is_sep, strip_separators, SepSequence};
use crate::robustfill::parse_program;
use crate::sampling::{rf_concepts, scan_concepts, Concept, Domain};
use crate::scan::parse_command;
use crate::tasks::{Origin, Role, Spec, SplitSpec, Task, TaskInstance};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub seed: u64,
    pub tool_version: String,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    pub domain: Domain,
    pub task: Task,
    pub role: Role,
    pub spec: Spec,
    pub target_tokens: Vec<String>,
    pub part_spans: Vec<[usize; 2]>,
    pub length: usize,
    pub concept_labels: Vec<Concept>,
    pub origin: Origin,
    pub generator_meta: GeneratorMeta,
}

/// Content digest of a specification: 16 hex digits.
pub fn record_id(domain: Domain, spec: &Spec) -> String {
    let mut h = Sha256::new();
    h.update(domain.name().as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(spec).expect("spec serializes"));
    hex::encode(&h.finalize()[..8])
}

/// The digest part of an id, without any `.N` occurrence suffix.
pub fn base_id(id: &str) -> &str {
    id.split_once('.').map_or(id, |(b, _)| b)
}

/// Digest of the parameters that influence generated content. The role and
/// output location are excluded.
pub fn config_digest(spec: &SplitSpec) -> String {
    let relevant = serde_json::json!({
        "domain": spec.domain,
        "task": spec.task,
        "train_size": spec.sizes.train,
        "test_size": spec.sizes.test,
        "seed": spec.seed,
        "hardest_test_max": spec.hardest_test_max,
        "examples_per_task": spec.examples_per_task,
        "input_length_range": spec.input_length_range,
        "tool_version": TOOL_VERSION,
    });
    let mut h = Sha256::new();
    h.update(relevant.to_string().as_bytes());
    hex::encode(&h.finalize()[..16])
}

impl DatasetRecord {
    /// Record without the occurrence suffix; see [`to_records`].
    pub fn from_instance(inst: &TaskInstance, split: &SplitSpec, role: Role) -> Self {
        DatasetRecord {
            id: record_id(inst.domain, &inst.spec),
            domain: inst.domain,
            task: split.task,
            role,
            spec: inst.spec.clone(),
            target_tokens: inst.target_tokens.clone(),
            part_spans: inst.part_spans.iter().map(|r| [r.start, r.end]).collect(),
            length: inst.length,
            concept_labels: inst.concept_labels.clone(),
            origin: inst.origin,
            generator_meta: GeneratorMeta {
                seed: split.seed,
                tool_version: TOOL_VERSION.to_string(),
                config_digest: config_digest(split),
            },
        }
    }

    pub fn spans(&self) -> Vec<Range<usize>> {
        self.part_spans.iter().map(|&[s, e]| s..e).collect()
    }

    pub fn to_instance(&self) -> TaskInstance {
        TaskInstance {
            domain: self.domain,
            spec: self.spec.clone(),
            target_tokens: self.target_tokens.clone(),
            part_spans: self.spans(),
            length: self.length,
            concept_labels: self.concept_labels.clone(),
            origin: self.origin,
        }
    }

    /// Re-checks every record invariant; returns one message per problem.
    pub fn check(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if base_id(&self.id) != record_id(self.domain, &self.spec) {
            errs.push(format!("id {} is not the digest of the spec", self.id));
        }
        if self.length != self.part_spans.len() {
            errs.push(format!(
                "length {} but {} part spans",
                self.length,
                self.part_spans.len()
            ));
        }
        let program = strip_separators(&self.target_tokens);
        let spans = self.spans();
        if let Err(e) = check_tiling(program.len(), &spans) {
            errs.push(e.to_string());
        } else {
            match insert_separators(&program, &spans) {
                Ok(seq) if seq.tokens() == self.target_tokens.as_slice() => {}
                Ok(_) => errs.push("separators do not sit on part boundaries".into()),
                Err(e) => errs.push(e.to_string()),
            }
        }
        if let Err(e) = SepSequence::from_tokens(self.target_tokens.clone()) {
            errs.push(e.to_string());
        }
        match (&self.spec, self.domain) {
            (Spec::Command(text), Domain::Scan) => match parse_command(text) {
                Ok(cmd) => {
                    let prog = cmd.translate();
                    if prog.token_strings() != program {
                        errs.push("target does not match the translated command".into());
                    }
                    if prog.part_spans != spans {
                        errs.push("part spans do not match the translated command".into());
                    }
                    if scan_concepts(&cmd) != self.concept_labels {
                        errs.push("concept labels do not match the command".into());
                    }
                }
                Err(e) => errs.push(format!("command does not parse: {e}")),
            },
            (Spec::Examples(examples), Domain::Robustfill) => match parse_program(&program) {
                Ok(p) => {
                    if examples.is_empty() {
                        errs.push("specification has no examples".into());
                    }
                    if !p.satisfies(examples) {
                        errs.push("target program does not satisfy the examples".into());
                    }
                    if p.tokens_with_spans().1 != spans {
                        errs.push("part spans do not match the program's expressions".into());
                    }
                    if rf_concepts(&p) != self.concept_labels {
                        errs.push("concept labels do not match the program".into());
                    }
                }
                Err(e) => errs.push(format!("target does not parse: {e}")),
            },
            _ => errs.push(format!("spec kind does not match domain {}", self.domain)),
        }
        if self.target_tokens.iter().all(|t| is_sep(t)) {
            errs.push("target has no program tokens".into());
        }
        errs
    }
}

/// Converts instances to records, suffixing repeated ids within the batch
/// with `.1`, `.2`, ... so every record id is unique.
pub fn to_records(instances: &[TaskInstance], split: &SplitSpec, role: Role) -> Vec<DatasetRecord> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    instances
        .iter()
        .map(|inst| {
            let mut rec = DatasetRecord::from_instance(inst, split, role);
            let n = seen.entry(rec.id.clone()).or_insert(0);
            if *n > 0 {
                rec.id = format!("{}.{}", rec.id, n);
            }
            *n += 1;
            rec
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
}

/// Reads one JSON value per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let name = path.display().to_string();
    let io_err = |source| DatasetError::Io {
        path: name.clone(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| DatasetError::Schema {
            path: name.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for item in items {
        serde_json::to_writer(&mut w, item).expect("records serialize");
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Per-line validation problems of a record file.
pub fn validate_records(records: &[DatasetRecord]) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut ids = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        for e in r.check() {
            out.push((i + 1, e));
        }
        if let Some(first) = ids.insert(r.id.as_str(), i + 1) {
            out.push((i + 1, format!("duplicate id {} (first on line {first})", r.id)));
        }
    }
    out
}
