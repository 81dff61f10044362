//! The `compgen` command-line tool.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::dataset::{read_jsonl, to_records, validate_records, write_jsonl, DatasetRecord};
use crate::decomp::{is_sep, mask_from_flags, MaskVariant};
use crate::robustfill::Program;
use crate::sampling::Domain;
use crate::score::{score_file, Prediction};
use crate::scan::parse_command;
use crate::tasks::{audit_split, build_all, concept_pattern_label, Role, SplitSpec, Task};

#[derive(Debug, Parser)]
#[command(name = "compgen", version, about = "Compositional-generalization benchmark toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate train, test and fine-tune files for one task.
    Gen(GenArgs),
    /// Run a SCAN command or a RobustFill program.
    Exec(ExecArgs),
    /// Translate a SCAN command to actions.
    Translate(TranslateArgs),
    /// Print the decoder attention mask for a token sequence.
    Mask(MaskArgs),
    /// Score a predictions file against a dataset file.
    Score(ScoreArgs),
    /// Audit a train/test pair against its task predicates.
    Audit(AuditArgs),
    /// Summarize dataset files.
    Stats(StatsArgs),
    /// Re-check every record invariant of dataset files.
    Validate(ValidateArgs),
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenArgs {
    #[arg(long)]
    pub domain: Option<Domain>,
    #[arg(long)]
    pub task: Option<Task>,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "COMPGEN_OUT_DIR")]
    pub out: Option<PathBuf>,
    /// Largest test length for length-hardest.
    #[arg(long)]
    pub hardest_test_max: Option<usize>,
    #[arg(long)]
    pub examples_per_task: Option<usize>,
    #[arg(long)]
    pub input_min: Option<usize>,
    #[arg(long)]
    pub input_max: Option<usize>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl GenArgs {
    fn merged(self) -> Result<(SplitSpec, PathBuf)> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => GenArgs::default(),
        };
        let domain = self.domain.or(file.domain).context("--domain is required")?;
        let task = self.task.or(file.task).context("--task is required")?;
        let seed = self.seed.or(file.seed).unwrap_or(0);
        let mut spec = SplitSpec::new(domain, task, Role::Train, seed).with_sizes(
            self.train_size.or(file.train_size).unwrap_or(10_000),
            self.test_size.or(file.test_size).unwrap_or(10_000),
        );
        if let Some(n) = self.hardest_test_max.or(file.hardest_test_max) {
            spec.hardest_test_max = n;
        }
        if let Some(n) = self.examples_per_task.or(file.examples_per_task) {
            spec.examples_per_task = n;
        }
        let (lo, hi) = spec.input_length_range;
        spec.input_length_range = (
            self.input_min.or(file.input_min).unwrap_or(lo),
            self.input_max.or(file.input_max).unwrap_or(hi),
        );
        if !(2..=10).contains(&spec.hardest_test_max) {
            bail!("--hardest-test-max must be in 2..=10");
        }
        let out = self.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));
        Ok((spec, out))
    }
}

#[derive(Debug, Args)]
pub struct ExecArgs {
    #[arg(long)]
    pub domain: Domain,
    /// SCAN command or RobustFill program text.
    pub program: String,
    /// RobustFill input string.
    #[arg(long)]
    pub input: Option<String>,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    pub command: String,
    /// Show part separators.
    #[arg(long)]
    pub separators: bool,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Whitespace-separated tokens; `SEP` marks separators.
    #[arg(default_value = "")]
    pub tokens: String,
    #[arg(long, default_value = "sep-full")]
    pub variant: MaskVariant,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub dataset: PathBuf,
    pub predictions: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    pub train: PathBuf,
    pub test: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub hardest_test_max: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => gen(args, out),
        Command::Exec(args) => exec(args, out),
        Command::Translate(args) => {
            let cmd = parse_command(&args.command)?;
            let prog = cmd.translate();
            let tokens = prog.token_strings();
            if args.separators {
                let seq = crate::decomp::insert_separators(&tokens, &prog.part_spans)?;
                writeln!(out, "{}", seq.tokens().join(" "))?;
            } else {
                writeln!(out, "{}", tokens.join(" "))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Mask(args) => {
            let flags: Vec<bool> = args.tokens.split_whitespace().map(is_sep).collect();
            let m = mask_from_flags(&flags, args.variant);
            write!(out, "{}\n{}", m.to_dense(), m.to_sparse())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Score(args) => {
            let records: Vec<DatasetRecord> = read_jsonl(&args.dataset)?;
            let preds: Vec<Prediction> = read_jsonl(&args.predictions)?;
            let report = score_file(&records, &preds)?;
            writeln!(out, "{report}")?;
            if let Some(path) = args.json {
                fs::write(&path, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit(args) => {
            let train: Vec<DatasetRecord> = read_jsonl(&args.train)?;
            let test: Vec<DatasetRecord> = read_jsonl(&args.test)?;
            let Some(first) = train.first().or(test.first()) else {
                bail!("both files are empty");
            };
            let (domain, task) = (first.domain, first.task);
            if train.iter().chain(&test).any(|r| r.domain != domain || r.task != task) {
                bail!("files mix domains or tasks");
            }
            let mut spec = SplitSpec::new(domain, task, Role::Train, 0);
            spec.hardest_test_max = args.hardest_test_max;
            let inst = |rs: &[DatasetRecord]| rs.iter().map(DatasetRecord::to_instance).collect::<Vec<_>>();
            let report = audit_split(&spec.predicates(), &inst(&train), &inst(&test));
            writeln!(out, "{report}")?;
            Ok(if report.is_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Stats(args) => {
            for path in &args.files {
                let records: Vec<DatasetRecord> = read_jsonl(path)?;
                writeln!(out, "{}: {} records", path.display(), records.len())?;
                let mut groups: BTreeMap<String, usize> = BTreeMap::new();
                let mut lengths: BTreeMap<usize, usize> = BTreeMap::new();
                let mut patterns: BTreeMap<&str, usize> = BTreeMap::new();
                for r in &records {
                    *groups
                        .entry(format!("{}/{}/{}/{}", r.domain, r.task, r.role, r.origin.name()))
                        .or_default() += 1;
                    *lengths.entry(r.length).or_default() += 1;
                    *patterns
                        .entry(concept_pattern_label(&r.concept_labels, r.domain))
                        .or_default() += 1;
                }
                for (k, v) in &groups {
                    writeln!(out, "  {k:<56}{v:>8}")?;
                }
                for (k, v) in &lengths {
                    writeln!(out, "  length {k:<49}{v:>8}")?;
                }
                for (k, v) in &patterns {
                    writeln!(out, "  concepts {k:<47}{v:>8}")?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(args) => {
            let mut bad = 0;
            for path in &args.files {
                let records: Vec<DatasetRecord> = read_jsonl(path)?;
                let problems = validate_records(&records);
                for (line, msg) in &problems {
                    writeln!(out, "{}:{line}: {msg}", path.display())?;
                }
                writeln!(
                    out,
                    "{}: {} records, {} problems",
                    path.display(),
                    records.len(),
                    problems.len()
                )?;
                bad += problems.len();
            }
            Ok(if bad == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn exec(args: ExecArgs, out: &mut dyn Write) -> Result<ExitCode> {
    match args.domain {
        Domain::Scan => {
            let cmd = parse_command(&args.program)?;
            writeln!(out, "{}", cmd.translate().token_strings().join(" "))?;
        }
        Domain::Robustfill => {
            let program: Program = args.program.parse()?;
            let input = args.input.context("--input is required for robustfill")?;
            let result = program.eval(&input)?;
            writeln!(out, "{result}")?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Output file for one role of a split.
pub fn split_path(dir: &Path, domain: Domain, task: Task, part: &str) -> PathBuf {
    dir.join(format!("{domain}_{task}_{part}"))
}

fn gen(args: GenArgs, out: &mut dyn Write) -> Result<ExitCode> {
    let (spec, dir) = args.merged()?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let built = build_all(&spec)?;
    let path = |part: &str| split_path(&dir, spec.domain, spec.task, part);
    for (role, name, recs) in [
        (Role::Train, "train.jsonl", &built.train),
        (Role::Test, "test.jsonl", &built.test),
        (Role::Finetune, "finetune.jsonl", &built.finetune),
    ] {
        write_jsonl(&path(name), &to_records(recs, &spec, role))?;
    }
    let report = audit_split(&spec.predicates(), &built.train, &built.test);
    fs::write(path("audit.txt"), format!("{report}\n"))?;
    fs::write(path("audit.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    writeln!(out, "{report}")?;
    Ok(if report.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
