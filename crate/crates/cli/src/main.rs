//! `novelty` — citation-corpus novelty scoring and validation pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 fatal model
//! non-convergence. No output file is written on a nonzero exit; every run
//! leaves a JSON manifest next to its outputs.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use novelty_core::cocite::{CociteIndex, PairCountConfig};
use novelty_core::corpus::{
    ingest_tags, Corpus, CorpusConfig, IngestReport, RawPaper, Tag,
};
use novelty_core::glm::Family;
use novelty_core::scores::{score_corpus, KeywordNewness, ScoreOptions};
use novelty_core::stats::descriptive_stats;
use novelty_core::study::{
    generate_synthetic_corpus, join_scores_tags, run_named_model, run_study, Predictor,
    StudyConfig, SynthParams,
};
use novelty_core::Error as CoreError;

#[derive(Parser)]
#[command(name = "novelty", version, about = "Novelty scores from citation corpora, plus the regression harness that validates them")]
struct Cli {
    /// Cap on worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize a corpus file.
    Ingest(IngestArgs),
    /// Build and persist a per-year co-citation index.
    Index(IndexArgs),
    /// Compute U/W/K scores for a span of publication years.
    Score(ScoreArgs),
    /// Fit one regression of a tag on a predictor.
    Regress(RegressArgs),
    /// Run the full study pipeline from a config file.
    Study(StudyArgs),
    /// Generate a seeded synthetic corpus and tag table.
    Synth(SynthArgs),
    /// Per-year descriptive statistics of the scores.
    Stats(StatsArgs),
}

#[derive(Args)]
struct CorpusInput {
    /// Line-delimited JSON corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Publication-year coverage of the corpus, START:END inclusive
    /// (default: the span present in the data).
    #[arg(long, value_parser = parse_years)]
    corpus_years: Option<(i32, i32)>,
    /// Drop references published before this year.
    #[arg(long, default_value_t = 1980)]
    min_ref_year: i32,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: CorpusInput,
    /// Normalized corpus output (canonical JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    input: CorpusInput,
    /// Years to index, START:END inclusive.
    #[arg(long, value_parser = parse_years)]
    years: (i32, i32),
    /// Exclude same-journal reference pairs from the counts.
    #[arg(long)]
    no_self_pairs: bool,
    /// Count each journal pair at most once per citing paper.
    #[arg(long)]
    dedup_pairs: bool,
    /// Index snapshot output.
    #[arg(long)]
    out: PathBuf,
    /// Also dump the counts as year,journal_lo,journal_hi,count CSV.
    #[arg(long)]
    dump_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    input: CorpusInput,
    /// Publication years to score, START:END inclusive.
    #[arg(long, value_parser = parse_years)]
    years: (i32, i32),
    #[arg(long, value_enum, default_value_t = NewnessArg::AllPriorYears)]
    keyword_newness: NewnessArg,
    /// Score CSV output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RegressArgs {
    #[command(flatten)]
    input: CorpusInput,
    /// Line-delimited JSON tag table.
    #[arg(long)]
    tags: PathBuf,
    /// Publication years to score and model, START:END inclusive.
    #[arg(long, value_parser = parse_years)]
    years: (i32, i32),
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Outcome tag name (e.g. new_finding).
    #[arg(long)]
    outcome: String,
    /// Predictor name: u, w, w_categorical, k, citations, fm_recommendations.
    #[arg(long)]
    predictor: String,
    /// Model CSV output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    /// Study configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the report bundle.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Seed for all generator randomness (required: no wall-clock seeding).
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    papers: usize,
    #[arg(long, default_value_t = 50)]
    journals: usize,
    /// Number of publication years.
    #[arg(long, default_value_t = 10)]
    year_count: usize,
    #[arg(long, default_value_t = 2000)]
    start_year: i32,
    /// References per paper.
    #[arg(long, default_value_t = 8)]
    refs: usize,
    /// Share of papers that receive a tag record.
    #[arg(long, default_value_t = 1.0)]
    tag_fraction: f64,
    /// Corpus output (JSONL).
    #[arg(long)]
    out: PathBuf,
    /// Tag-table output (JSONL).
    #[arg(long)]
    tags_out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: CorpusInput,
    /// Publication years to summarize, START:END inclusive.
    #[arg(long, value_parser = parse_years)]
    years: (i32, i32),
    /// Descriptives CSV output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Poisson,
    Logistic,
    Probit,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Poisson => Family::Poisson,
            FamilyArg::Logistic => Family::Logistic,
            FamilyArg::Probit => Family::Probit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NewnessArg {
    AllPriorYears,
    SameYearExclusive,
}

impl From<NewnessArg> for KeywordNewness {
    fn from(n: NewnessArg) -> KeywordNewness {
        match n {
            NewnessArg::AllPriorYears => KeywordNewness::AllPriorYears,
            NewnessArg::SameYearExclusive => KeywordNewness::SameYearExclusive,
        }
    }
}

fn parse_years(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected START:END, got {s:?}"))?;
    let lo: i32 = a.trim().parse().map_err(|_| format!("bad year {a:?}"))?;
    let hi: i32 = b.trim().parse().map_err(|_| format!("bad year {b:?}"))?;
    if lo > hi {
        return Err(format!("start {lo} exceeds end {hi}"));
    }
    Ok((lo, hi))
}

enum CliError {
    Usage(String),
    Core(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(CoreError::NonConvergence(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => format!("usage error: {m}"),
            CliError::Core(e) => format!("error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Everything a subcommand produced, buffered until success.
#[derive(Default)]
struct RunOutput {
    /// Path → bytes; written only when the whole run succeeded.
    files: Vec<(PathBuf, Vec<u8>)>,
    corpus_digest: Option<String>,
    seed: Option<u64>,
    row_counts: BTreeMap<String, usize>,
    /// Where the manifest goes.
    manifest_path: PathBuf,
    /// Lines echoed to stderr for the operator.
    notes: Vec<String>,
}

#[derive(Serialize)]
struct RunManifest {
    tool_version: &'static str,
    subcommand: String,
    /// SHA-256 over the full invocation, stable across identical inputs.
    config_digest: String,
    corpus_digest: Option<String>,
    seed: Option<u64>,
    started_at: String,
    finished_at: String,
    row_counts: BTreeMap<String, usize>,
    outputs: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version itself; everything else is usage.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("usage error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        // Study builds its own pool; this caps everything else.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let started_at = chrono::Utc::now().to_rfc3339();
    let subcommand = match &cli.command {
        Command::Ingest(_) => "ingest",
        Command::Index(_) => "index",
        Command::Score(_) => "score",
        Command::Regress(_) => "regress",
        Command::Study(_) => "study",
        Command::Synth(_) => "synth",
        Command::Stats(_) => "stats",
    };

    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Index(args) => cmd_index(args),
        Command::Score(args) => cmd_score(args),
        Command::Regress(args) => cmd_regress(args),
        Command::Study(args) => cmd_study(args, cli.threads),
        Command::Synth(args) => cmd_synth(args),
        Command::Stats(args) => cmd_stats(args),
    };

    let output = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{}", e.message());
            return ExitCode::from(e.exit_code());
        }
    };

    // Success: flush the buffered outputs, then the manifest.
    for (path, bytes) in &output.files {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                if let Err(e) = std::fs::create_dir_all(parent) {
                    eprintln!("error: creating {}: {e}", parent.display());
                    return ExitCode::from(2);
                }
            }
        }
        if let Err(e) = std::fs::write(path, bytes) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    for note in &output.notes {
        eprintln!("{note}");
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand: subcommand.to_string(),
        config_digest: hex(&Sha256::digest(argv.join("\u{1f}").as_bytes())),
        corpus_digest: output.corpus_digest,
        seed: output.seed,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        row_counts: output.row_counts,
        outputs: output
            .files
            .iter()
            .map(|(p, _)| p.display().to_string())
            .collect(),
    };
    let manifest_json = match serde_json::to_vec_pretty(&manifest) {
        Ok(mut v) => {
            v.push(b'\n');
            v
        }
        Err(e) => {
            eprintln!("error: serializing manifest: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::write(&output.manifest_path, manifest_json) {
        eprintln!("error: writing {}: {e}", output.manifest_path.display());
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

fn manifest_sibling(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Parse a JSONL corpus with line-numbered errors, inferring the year span
/// when none was given.
fn load_corpus(input: &CorpusInput) -> CliResult<(Corpus, IngestReport)> {
    let file = std::fs::File::open(&input.corpus).map_err(CoreError::from)?;
    let reader = BufReader::new(file);
    let mut records: Vec<RawPaper> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(CoreError::from)?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPaper = serde_json::from_str(&line).map_err(|e| {
            CliError::Core(CoreError::Parse {
                path: input.corpus.clone(),
                line: lineno + 1,
                msg: e.to_string(),
            })
        })?;
        records.push(raw);
    }
    if records.is_empty() {
        return Err(CoreError::EmptyInput(format!(
            "{} has no records",
            input.corpus.display()
        ))
        .into());
    }
    let year_range = input.corpus_years.unwrap_or_else(|| {
        let lo = records.iter().map(|r| r.year).min().unwrap();
        let hi = records.iter().map(|r| r.year).max().unwrap();
        (lo, hi)
    });
    let mut config = CorpusConfig::new(year_range);
    config.min_ref_year = input.min_ref_year;
    Ok(Corpus::from_raw(records, config)?)
}

fn record_ingest(out: &mut RunOutput, corpus: &Corpus, report: &IngestReport) {
    out.corpus_digest = Some(corpus.digest());
    out.row_counts.insert("papers_read".into(), report.papers_read);
    out.row_counts.insert("papers_kept".into(), report.papers_kept);
    out.row_counts.insert("refs_read".into(), report.refs_read);
    out.row_counts.insert(
        "refs_dropped".into(),
        report.refs_dropped_before_floor + report.refs_dropped_no_journal,
    );
}

fn cmd_ingest(args: IngestArgs) -> CliResult<RunOutput> {
    let (corpus, report) = load_corpus(&args.input)?;
    let mut bytes = Vec::new();
    corpus.write_jsonl(&mut bytes)?;
    let mut out = RunOutput {
        manifest_path: manifest_sibling(&args.out),
        ..Default::default()
    };
    record_ingest(&mut out, &corpus, &report);
    out.notes.push(report.summary().trim_end().to_string());
    out.files.push((args.out, bytes));
    Ok(out)
}

fn cmd_index(args: IndexArgs) -> CliResult<RunOutput> {
    let (corpus, report) = load_corpus(&args.input)?;
    let cfg = PairCountConfig {
        count_self_pairs: !args.no_self_pairs,
        count_duplicate_pairs: !args.dedup_pairs,
    };
    let index = CociteIndex::build(&corpus, args.years.0, args.years.1, cfg)?;
    let mut snapshot = Vec::new();
    index.write(&mut snapshot)?;
    let mut out = RunOutput {
        manifest_path: manifest_sibling(&args.out),
        ..Default::default()
    };
    record_ingest(&mut out, &corpus, &report);
    out.row_counts.insert(
        "indexed_years".into(),
        (args.years.1 - args.years.0 + 1) as usize,
    );
    if let Some(csv_path) = args.dump_csv {
        let mut csv = Vec::new();
        index.dump_csv(&mut csv)?;
        out.files.push((csv_path, csv));
    }
    out.files.push((args.out, snapshot));
    Ok(out)
}

fn score_options(years: (i32, i32), newness: NewnessArg) -> ScoreOptions {
    let mut opts = ScoreOptions::new(years);
    opts.keyword_newness = newness.into();
    opts
}

fn cmd_score(args: ScoreArgs) -> CliResult<RunOutput> {
    let (corpus, report) = load_corpus(&args.input)?;
    let table = score_corpus(&corpus, &score_options(args.years, args.keyword_newness))?;
    let mut bytes = Vec::new();
    table.write_csv(&mut bytes)?;
    let mut out = RunOutput {
        manifest_path: manifest_sibling(&args.out),
        ..Default::default()
    };
    record_ingest(&mut out, &corpus, &report);
    out.row_counts.insert("scored".into(), table.rows.len());
    out.files.push((args.out, bytes));
    Ok(out)
}

fn cmd_regress(args: RegressArgs) -> CliResult<RunOutput> {
    let tag = Tag::from_name(&args.outcome)
        .ok_or_else(|| CliError::Usage(format!("unknown tag {:?}", args.outcome)))?;
    let predictor = Predictor::from_name(&args.predictor)
        .ok_or_else(|| CliError::Usage(format!("unknown predictor {:?}", args.predictor)))?;
    let (corpus, report) = load_corpus(&args.input)?;
    let tags = ingest_tags(&args.tags)?;
    let table = score_corpus(&corpus, &score_options(args.years, NewnessArg::AllPriorYears))?;
    let rows = join_scores_tags(&table, &tags);
    let model = run_named_model(&rows, predictor, tag, args.family.into())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "family", "predictor", "tag", "term", "coefficient", "robust_se", "predictor_sd",
        "percent_change", "stars", "p_value", "pseudo_r2", "n",
    ])
    .map_err(CoreError::from)?;
    let family_name = match model.family {
        Family::Poisson => "poisson",
        Family::Logistic => "logistic",
        Family::Probit => "probit",
    };
    for e in &model.effects {
        w.write_record([
            family_name,
            model.predictor.name(),
            model.tag.name(),
            &e.term,
            &format!("{}", e.coefficient),
            &format!("{}", e.robust_se),
            &format!("{}", e.predictor_sd),
            &format!("{}", e.percent_change),
            &e.stars,
            &format!("{}", e.p_value),
            &format!("{}", model.pseudo_r2),
            &model.n.to_string(),
        ])
        .map_err(CoreError::from)?;
    }
    w.flush().map_err(CoreError::from)?;
    let bytes = w
        .into_inner()
        .map_err(|e| CoreError::Invalid(e.to_string()))?;

    let mut out = RunOutput {
        manifest_path: manifest_sibling(&args.out),
        ..Default::default()
    };
    record_ingest(&mut out, &corpus, &report);
    out.row_counts.insert("model_rows".into(), model.n);
    out.files.push((args.out, bytes));
    Ok(out)
}

fn cmd_study(args: StudyArgs, threads: Option<usize>) -> CliResult<RunOutput> {
    let text = std::fs::read_to_string(&args.config).map_err(CoreError::from)?;
    let mut config: StudyConfig = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    // Paths in the config are relative to the config file.
    if let Some(base) = args.config.parent() {
        if config.corpus.is_relative() {
            config.corpus = base.join(&config.corpus);
        }
        if config.tags.is_relative() {
            config.tags = base.join(&config.tags);
        }
    }
    let threads = threads.unwrap_or_else(num_threads);
    let outputs = run_study(&config, threads)?;
    let mut out = RunOutput {
        manifest_path: args.out_dir.join("run_manifest.json"),
        seed: Some(config.seed),
        row_counts: outputs.row_counts,
        ..Default::default()
    };
    for (name, bytes) in outputs.files {
        out.files.push((args.out_dir.join(name), bytes));
    }
    Ok(out)
}

fn num_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn cmd_synth(args: SynthArgs) -> CliResult<RunOutput> {
    let mut params = SynthParams::new(args.papers, args.journals, args.year_count, args.refs);
    params.start_year = args.start_year;
    params.tag_fraction = args.tag_fraction;
    let (corpus, tags) = generate_synthetic_corpus(args.seed, &params)?;
    let mut corpus_bytes = Vec::new();
    corpus.write_jsonl(&mut corpus_bytes)?;
    let mut tag_bytes = Vec::new();
    tags.write_jsonl(&mut tag_bytes)?;
    let mut out = RunOutput {
        manifest_path: manifest_sibling(&args.out),
        seed: Some(args.seed),
        corpus_digest: Some(corpus.digest()),
        ..Default::default()
    };
    out.row_counts.insert("papers".into(), corpus.papers().len());
    out.row_counts.insert("tag_records".into(), tags.len());
    out.files.push((args.out, corpus_bytes));
    out.files.push((args.tags_out, tag_bytes));
    Ok(out)
}

fn cmd_stats(args: StatsArgs) -> CliResult<RunOutput> {
    let (corpus, report) = load_corpus(&args.input)?;
    let table = score_corpus(&corpus, &score_options(args.years, NewnessArg::AllPriorYears))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variable", "group", "n", "mean", "median", "sd", "min", "max"])
        .map_err(CoreError::from)?;
    let variables: [(&str, fn(&novelty_core::scores::PaperScores) -> Option<f64>); 3] = [
        ("u", |r| r.u.map(|u| u.value)),
        ("w", |r| r.w.map(|v| v.value)),
        ("k", |r| r.k.as_ref().map(|k| k.value)),
    ];
    for (name, get) in &variables {
        let mut values = Vec::new();
        let mut groups = Vec::new();
        for r in &table.rows {
            if let Some(v) = get(r) {
                values.push(v);
                groups.push(r.year.to_string());
            }
        }
        if values.is_empty() {
            continue;
        }
        let stats = descriptive_stats(&values, &groups)?;
        for row in stats.groups.iter().chain(std::iter::once(&stats.pooled)) {
            w.write_record([
                name.to_string(),
                row.group.clone(),
                row.n.to_string(),
                format!("{}", row.mean),
                format!("{}", row.median),
                format!("{}", row.sd),
                format!("{}", row.min),
                format!("{}", row.max),
            ])
            .map_err(CoreError::from)?;
        }
    }
    w.flush().map_err(CoreError::from)?;
    let bytes = w
        .into_inner()
        .map_err(|e| CoreError::Invalid(e.to_string()))?;
    let mut out = RunOutput {
        manifest_path: manifest_sibling(&args.out),
        ..Default::default()
    };
    record_ingest(&mut out, &corpus, &report);
    out.row_counts.insert("scored".into(), table.rows.len());
    out.files.push((args.out, bytes));
    Ok(out)
}
