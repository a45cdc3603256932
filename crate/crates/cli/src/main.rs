use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use medalign_core::align::{AlignConfig, AlignedEntity, EntityCategory, DEFAULT_THRESHOLD};
use medalign_core::corpus::{self, Annotations, CategoryMap, IngestOptions, TranscriptPair};
use medalign_core::eval::{self, EvalError, GroupKey, SampleResult};
use medalign_core::fixtures::FixtureSet;
use medalign_core::metrics::aggregate;
use medalign_core::report::{self, Rate, Report, ReportFormat, SampleRecord};
use medalign_core::selfcheck::selfcheck;
use medalign_core::text::{Normalization, DEFAULT_MAX_NGRAM};

const EXIT_USAGE: u8 = 1;
const EXIT_INGEST: u8 = 2;
const EXIT_SELFCHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "medalign", version, about = "Medical-entity-aware evaluation of ASR transcripts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align entities and compute WER, M-WER, M-CER and recall.
    Evaluate(EvaluateArgs),
    /// Emit one JSON line per aligned entity.
    Align(InputArgs),
    /// Run the embedded golden fixtures and oracle spot-checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Line-delimited transcript manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Line-delimited entity annotations keyed by sample id.
    #[arg(long)]
    annotations: PathBuf,
    /// Similarity cut-off in (0, 1].
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Longest candidate n-gram.
    #[arg(long, default_value_t = DEFAULT_MAX_NGRAM)]
    max_ngram: usize,
    #[arg(long, default_value = "standard", value_parser = parse_normalization)]
    normalization: Normalization,
    /// Reject unknown ids and missing annotations instead of warning.
    #[arg(long)]
    strict: bool,
    /// Extra label-to-category mapping, a JSON object such as {"DRUG": "MED"}.
    #[arg(long)]
    category_map: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: ReportFormat,
    /// Comma-separated grouping keys: model, accent, domain.
    #[arg(long, value_delimiter = ',', value_parser = parse_group_key)]
    group_by: Vec<GroupKey>,
    /// Also write per-sample records, one JSON object per line, to this path.
    #[arg(long)]
    per_sample: Option<PathBuf>,
}

#[derive(Args)]
struct SelfcheckArgs {
    /// Fixture directory to check instead of the embedded set.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

fn parse_normalization(s: &str) -> Result<Normalization, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: report::ReportError| e.to_string())
}

fn parse_group_key(s: &str) -> Result<GroupKey, String> {
    s.parse()
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self { code: EXIT_USAGE, message: message.to_string() }
    }

    fn ingest(message: impl ToString) -> Self {
        Self { code: EXIT_INGEST, message: message.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Align(args) => cmd_align(args),
        Command::Selfcheck(args) => cmd_selfcheck(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn align_config(args: &InputArgs) -> Result<AlignConfig, Failure> {
    let config =
        AlignConfig { threshold: args.threshold, max_ngram: args.max_ngram, normalization: args.normalization };
    config.validate().map_err(Failure::usage)?;
    if args.workers == 0 {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    Ok(config)
}

fn load_inputs(args: &InputArgs) -> Result<(Vec<TranscriptPair>, Annotations), Failure> {
    let mut categories = CategoryMap::default();
    if let Some(path) = &args.category_map {
        categories.extend_from_file(path).map_err(Failure::ingest)?;
    }
    let options = IngestOptions { strict: args.strict, categories };
    let pairs = corpus::load_manifest(&args.manifest).map_err(Failure::ingest)?;
    let annotations = corpus::load_annotations(&args.annotations, &pairs, &options).map_err(Failure::ingest)?;
    for w in &annotations.warnings {
        eprintln!("warning: {w}");
    }
    Ok((pairs, annotations))
}

fn run(args: &InputArgs, config: &AlignConfig) -> Result<Vec<SampleResult>, Failure> {
    let (pairs, annotations) = load_inputs(args)?;
    eval::evaluate_corpus(&pairs, &annotations, config, args.workers).map_err(|e| match e {
        EvalError::Config(e) => Failure::usage(e),
        other => Failure::ingest(other),
    })
}

fn emit(path: Option<&Path>, body: &str) -> Result<(), Failure> {
    match path {
        Some(path) => {
            fs::write(path, body).map_err(|e| Failure::ingest(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::ingest(format!("cannot write to stdout: {e}")))
        }
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let config = align_config(&args.input)?;
    let results = run(&args.input, &config)?;
    let samples = results.iter().map(|r| &r.metrics);
    let corpus = aggregate(samples.clone());
    let groups = eval::group_metrics(samples.clone(), &args.group_by);
    let report = Report::build(&config, &corpus, &groups, samples.clone());

    let body = report::render(&report, args.format).map_err(Failure::ingest)?;
    emit(args.input.out.as_deref(), &body)?;

    if let Some(path) = &args.per_sample {
        let mut lines = String::new();
        for s in samples {
            lines.push_str(&serde_json::to_string(&SampleRecord::from(s)).expect("record serializes"));
            lines.push('\n');
        }
        emit(Some(path), &lines)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AlignRecord<'a> {
    id: &'a str,
    entity: &'a str,
    category: EntityCategory,
    begin: usize,
    end: usize,
    candidate: Option<&'a str>,
    start_token: Option<usize>,
    length_tokens: Option<usize>,
    score: Option<Rate>,
    exact: bool,
}

impl<'a> AlignRecord<'a> {
    fn new(id: &'a str, a: &'a AlignedEntity) -> Self {
        Self {
            id,
            entity: &a.entity.text,
            category: a.entity.category,
            begin: a.entity.begin,
            end: a.entity.end,
            candidate: a.candidate.as_ref().map(|c| c.normalized.as_str()),
            start_token: a.candidate.as_ref().map(|c| c.start_token),
            length_tokens: a.candidate.as_ref().map(|c| c.length_tokens),
            score: a.candidate.as_ref().map(|_| Rate(a.score.value())),
            exact: a.exact,
        }
    }
}

fn cmd_align(args: InputArgs) -> Result<(), Failure> {
    let config = align_config(&args)?;
    let mut results = run(&args, &config)?;
    results.sort_by(|a, b| a.metrics.id.cmp(&b.metrics.id));
    let mut body = String::new();
    for r in &results {
        for a in &r.aligned {
            body.push_str(&serde_json::to_string(&AlignRecord::new(&r.metrics.id, a)).expect("record serializes"));
            body.push('\n');
        }
    }
    emit(args.out.as_deref(), &body)
}

fn cmd_selfcheck(args: SelfcheckArgs) -> Result<(), Failure> {
    let loaded = match &args.fixtures {
        Some(dir) => FixtureSet::from_dir(dir),
        None => FixtureSet::embedded(),
    };
    let fixtures =
        loaded.map_err(|e| Failure { code: EXIT_SELFCHECK, message: format!("cannot load fixtures: {e}") })?;
    let outcome = selfcheck(&fixtures, &AlignConfig::default());
    for check in &outcome.checks {
        println!("{check}");
    }
    let failed = outcome.failed().count();
    if failed == 0 {
        println!("selfcheck passed: {} checks", outcome.checks.len());
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_SELFCHECK,
            message: format!("selfcheck failed: {failed} of {} checks", outcome.checks.len()),
        })
    }
}
