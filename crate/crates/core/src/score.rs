//! Scoring predicted programs against dataset records.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DatasetRecord;
use crate::decomp::strip_separators;
use crate::robustfill::parse_program;
use crate::tasks::{Spec, TaskInstance};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    /// May include separators; they are ignored.
    pub predicted_tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    ParseError,
    ExecFailure,
    WrongOutput,
    TokenMismatch,
}

/// Exact match of the separator-free action sequence.
pub fn score_scan<S: AsRef<str>>(inst: &TaskInstance, predicted: &[S]) -> Verdict {
    if strip_separators(predicted) == inst.program_tokens() {
        Verdict::Correct
    } else {
        Verdict::TokenMismatch
    }
}

/// Functional correctness: the predicted program must reproduce every
/// example output. It need not equal the reference program.
pub fn score_rf<S: AsRef<str>>(inst: &TaskInstance, predicted: &[S]) -> Verdict {
    let Spec::Examples(examples) = &inst.spec else {
        return Verdict::TokenMismatch;
    };
    let program = match parse_program(&strip_separators(predicted)) {
        Ok(p) => p,
        Err(_) => return Verdict::ParseError,
    };
    for ex in examples {
        match program.eval(&ex.input) {
            Ok(out) if out == ex.output => {}
            Ok(_) => return Verdict::WrongOutput,
            Err(_) => return Verdict::ExecFailure,
        }
    }
    Verdict::Correct
}

pub fn score_instance<S: AsRef<str>>(inst: &TaskInstance, predicted: &[S]) -> Verdict {
    match inst.spec {
        Spec::Command(_) => score_scan(inst, predicted),
        Spec::Examples(_) => score_rf(inst, predicted),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub parse_error: usize,
    pub exec_failure: usize,
    pub wrong_output: usize,
    pub token_mismatch: usize,
}

impl FailureCounts {
    pub fn total(&self) -> usize {
        self.parse_error + self.exec_failure + self.wrong_output + self.token_mismatch
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

impl Tally {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
        self.accuracy = self.correct as f64 / self.total as f64;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub per_length: BTreeMap<usize, Tally>,
    pub per_task: BTreeMap<String, Tally>,
    pub failures: FailureCounts,
}

impl ScoreReport {
    fn add(&mut self, rec: &DatasetRecord, verdict: Verdict) {
        let ok = verdict == Verdict::Correct;
        self.total += 1;
        self.correct += usize::from(ok);
        self.per_length.entry(rec.length).or_default().add(ok);
        self.per_task
            .entry(format!("{}/{}", rec.domain, rec.task))
            .or_default()
            .add(ok);
        match verdict {
            Verdict::Correct => {}
            Verdict::ParseError => self.failures.parse_error += 1,
            Verdict::ExecFailure => self.failures.exec_failure += 1,
            Verdict::WrongOutput => self.failures.wrong_output += 1,
            Verdict::TokenMismatch => self.failures.token_mismatch += 1,
        }
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |t: &Tally| 100.0 * t.accuracy;
        writeln!(
            f,
            "accuracy {:.1}% ({} / {})",
            100.0 * self.accuracy,
            self.correct,
            self.total
        )?;
        writeln!(f, "{:<40}{:>8}{:>8}{:>8}", "group", "total", "correct", "acc%")?;
        for (n, t) in &self.per_length {
            writeln!(f, "{:<40}{:>8}{:>8}{:>8.1}", format!("length {n}"), t.total, t.correct, pct(t))?;
        }
        for (name, t) in &self.per_task {
            writeln!(f, "{:<40}{:>8}{:>8}{:>8.1}", name, t.total, t.correct, pct(t))?;
        }
        let fc = &self.failures;
        write!(
            f,
            "failures parse_error={} exec_failure={} wrong_output={} token_mismatch={}",
            fc.parse_error, fc.exec_failure, fc.wrong_output, fc.token_mismatch
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("prediction line {line}: unknown instance id {id}")]
    UnknownId { id: String, line: usize },
    #[error("prediction line {line}: duplicate prediction for {id}")]
    DuplicateId { id: String, line: usize },
    #[error("no prediction for instance {id}")]
    MissingPrediction { id: String },
    #[error("dataset line {line}: id {id} is shared by records with different specs")]
    ConflictingRecord { id: String, line: usize },
}

/// Scores one prediction per instance id. Records may share an id only when
/// they share a spec (merged files); the prediction then scores each of them.
/// Prediction line numbers in errors count from 1 in the order given.
pub fn score_file(
    records: &[DatasetRecord],
    predictions: &[Prediction],
) -> Result<ScoreReport, ScoreError> {
    let mut specs: HashMap<&str, &Spec> = HashMap::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if let Some(prev) = specs.insert(r.id.as_str(), &r.spec) {
            if prev != &r.spec {
                return Err(ScoreError::ConflictingRecord {
                    id: r.id.clone(),
                    line: i + 1,
                });
            }
        }
    }
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    for (line, p) in predictions.iter().enumerate() {
        let line = line + 1;
        if !specs.contains_key(p.instance_id.as_str()) {
            return Err(ScoreError::UnknownId {
                id: p.instance_id.clone(),
                line,
            });
        }
        if by_id.insert(p.instance_id.as_str(), p).is_some() {
            return Err(ScoreError::DuplicateId {
                id: p.instance_id.clone(),
                line,
            });
        }
    }
    let mut report = ScoreReport::default();
    for rec in records {
        let Some(p) = by_id.get(rec.id.as_str()) else {
            return Err(ScoreError::MissingPrediction { id: rec.id.clone() });
        };
        let verdict = score_instance(&rec.to_instance(), &p.predicted_tokens);
        report.add(rec, verdict);
    }
    report.accuracy = if report.total == 0 {
        0.0
    } else {
        report.correct as f64 / report.total as f64
    };
    Ok(report)
}

/// Ground-truth predictions for a set of records.
pub fn echo_predictions(records: &[DatasetRecord]) -> Vec<Prediction> {
    records
        .iter()
        .map(|r| Prediction {
            instance_id: r.id.clone(),
            predicted_tokens: r.target_tokens.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::to_records;
    use crate::robustfill::IoExample;
    use crate::sampling::{Concept, Domain};
    use crate::tasks::{build_split, Origin, Role, SplitSpec, Task};

    fn records(domain: Domain, n: usize) -> Vec<DatasetRecord> {
        let split = SplitSpec::new(domain, Task::Length, Role::Train, 11).with_sizes(n, 0);
        to_records(&build_split(&split).unwrap(), &split, Role::Train)
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn scan_verdicts() {
        let cmd = crate::scan::parse_command("jump left twice").unwrap();
        let inst = TaskInstance::from_scan(&cmd, Origin::TrainDist);
        assert_eq!(score_scan(&inst, &inst.target_tokens), Verdict::Correct);
        assert_eq!(score_scan(&inst, &toks("LTURN JUMP LTURN JUMP")), Verdict::Correct);
        assert_eq!(score_scan(&inst, &toks("LTURN SEP JUMP LTURN JUMP")), Verdict::Correct);
        assert_eq!(score_scan(&inst, &toks("LTURN RUN LTURN JUMP")), Verdict::TokenMismatch);
        assert_eq!(score_scan::<String>(&inst, &[]), Verdict::TokenMismatch);
    }

    #[test]
    fn rf_functional_equivalence() {
        let examples: Vec<IoExample> = ["xab", "xcde", "xfghij"]
            .iter()
            .map(|i| IoExample::new(*i, "x"))
            .collect();
        let inst = TaskInstance {
            domain: Domain::Robustfill,
            spec: Spec::Examples(examples),
            target_tokens: toks("SEP SubStr 1 1 SEP"),
            part_spans: vec![0..3],
            length: 1,
            concept_labels: vec![Concept::Substring],
            origin: Origin::TrainDist,
        };
        assert_eq!(score_rf(&inst, &inst.target_tokens), Verdict::Correct);
        // Constant output, so a different program also solves the examples.
        assert_eq!(score_rf(&inst, &toks("SEP ConstStr x SEP")), Verdict::Correct);
        assert_eq!(score_rf(&inst, &toks("GetToken CHAR 1")), Verdict::Correct);
        assert_eq!(score_rf(&inst, &toks("SEP ConstStr x SEP ConstStr y SEP")), Verdict::WrongOutput);
        assert_eq!(score_rf(&inst, &toks("Foo Bar")), Verdict::ParseError);
        assert_eq!(score_rf(&inst, &toks("GetToken WORD 5")), Verdict::ExecFailure);
    }

    #[test]
    fn echo_and_half_corruption() {
        for domain in [Domain::Scan, Domain::Robustfill] {
            let recs = records(domain, 200);
            let report = score_file(&recs, &echo_predictions(&recs)).unwrap();
            assert_eq!(report.accuracy, 1.0);
            assert_eq!(report.per_length.values().map(|t| t.total).sum::<usize>(), 200);
            let mut preds = echo_predictions(&recs);
            for p in preds.iter_mut().step_by(2) {
                p.predicted_tokens = toks("Foo");
            }
            let report = score_file(&recs, &preds).unwrap();
            assert_eq!(report.accuracy, 0.5);
            assert_eq!(report.failures.total(), report.total - report.correct);
        }
    }

    #[test]
    fn id_errors() {
        let recs = records(Domain::Scan, 5);
        let mut preds = echo_predictions(&recs);
        preds[2].instance_id = "nope".into();
        assert_eq!(
            score_file(&recs, &preds),
            Err(ScoreError::UnknownId {
                id: "nope".into(),
                line: 3
            })
        );
        let mut preds = echo_predictions(&recs);
        preds[3] = preds[1].clone();
        assert!(matches!(score_file(&recs, &preds), Err(ScoreError::DuplicateId { line: 4, .. })));
        let mut preds = echo_predictions(&recs);
        let gone = preds.pop().unwrap().instance_id;
        assert_eq!(score_file(&recs, &preds), Err(ScoreError::MissingPrediction { id: gone }));

        // Merged files may repeat a record; one prediction covers both.
        let mut merged = recs.clone();
        merged.push(recs[0].clone());
        let report = score_file(&merged, &echo_predictions(&recs)).unwrap();
        assert_eq!((report.total, report.correct), (6, 6));
        merged[5].spec = recs[1].spec.clone();
        assert!(matches!(
            score_file(&merged, &echo_predictions(&recs)),
            Err(ScoreError::ConflictingRecord { line: 6, .. })
        ));
    }
}
