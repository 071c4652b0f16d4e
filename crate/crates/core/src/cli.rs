//! Command-line front end.
//!
//! Settings resolve in the order flags, environment, config file, defaults.
//! Exit codes: 0 success, 1 runtime or partial failure, 2 bad configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use crate::analysis::{build_report, write_report, AnalysisOptions};
use crate::crawl::{collect_metadata, run_crawl, CrawlResult, RunOptions};
use crate::exec::Exec;
use crate::model::{BackendKind, CrawlConfig, CrawlFormat, Stagger, VideoKind, DEFAULT_BREADTH};
use crate::persist::{
    read_metadata_csv, read_records_csv, read_roots, read_scores_csv, write_csv_rows, write_metadata_csv,
    write_records_csv, write_roots, write_scores_csv, write_timing_json, TimingFile, METADATA_FILE, RECORDS_FILE,
    REPORT_DIR, SCORES_FILE, TIMING_FILE,
};
use crate::scoring::{score_videos, Lexicon, Scorer, ServiceClient, ServiceConfig, StubScorer, SCORER_URL_ENV};
use crate::session::{SessionConfig, SimBackendFactory};
use crate::sim::{Platform, SimParams};

const DEFAULT_BENCH_WORKERS: &str = "1,5,10,15,20,25,30,35,40";
pub const BENCH_FILE: &str = "bench.csv";

#[derive(Debug, Parser)]
#[command(
    name = "rec-audit",
    version,
    about = "Harvest recommendation graphs and audit depth-wise drift"
)]
pub struct Cli {
    /// TOML config file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Harvest recommendations into an output directory.
    Crawl(CrawlArgs),
    /// Score the text channels of every harvested video.
    Score(ScoreArgs),
    /// Aggregate by depth and write the report directory.
    Analyze(AnalyzeArgs),
    /// Repeat a crawl over several worker counts and tabulate wall time.
    Bench(BenchArgs),
    /// Write a roots file drawn from the simulated catalog.
    Roots(RootsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Shorts,
    Long,
}

impl From<FormatArg> for CrawlFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Shorts => CrawlFormat::Shorts,
            FormatArg::Long => CrawlFormat::LongForm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StaggerArg {
    Sync,
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Sim,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerArg {
    Stub,
    Service,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CrawlFlags {
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Roots file: one id or URL per line, or a one-column CSV.
    #[arg(long)]
    pub roots: Option<PathBuf>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub breadth: Option<usize>,
    /// Seconds to watch each short before advancing.
    #[arg(long)]
    pub dwell: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub stagger: Option<StaggerArg>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<usize>,
    /// Seconds to wait for a page's title before a load counts as failed.
    #[arg(long)]
    pub load_budget: Option<f64>,
    /// Pause after a long-form page loads, in seconds.
    #[arg(long)]
    pub grace: Option<f64>,
    /// Sim page-load latency in milliseconds.
    #[arg(long)]
    pub latency_ms: Option<f64>,
    /// Sim concurrent-load capacity.
    #[arg(long)]
    pub capacity: Option<usize>,
    /// Sim latency added per load beyond capacity, in milliseconds.
    #[arg(long)]
    pub penalty_ms: Option<f64>,
    /// Suppress per-root progress lines.
    #[arg(long)]
    pub no_progress: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CrawlArgs {
    #[command(flatten)]
    pub crawl: CrawlFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub scorer: Option<ScorerArg>,
    /// Service endpoint; defaults to the SCORER_URL environment variable.
    #[arg(long)]
    pub scorer_url: Option<String>,
    /// Emotion lexicon TSV for the stub scorer (needs --flags-file too).
    #[arg(long, requires = "flags_file")]
    pub lexicon: Option<PathBuf>,
    #[arg(long, requires = "lexicon")]
    pub flags_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Report directory; defaults to `<in>/report`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub tail_q: Option<f64>,
    /// Count ad records in the engagement aggregates.
    #[arg(long)]
    pub include_ads: bool,
    #[arg(long)]
    pub flat_threshold: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub crawl: CrawlFlags,
    /// Comma-separated worker counts.
    #[arg(long = "workers-list", default_value = DEFAULT_BENCH_WORKERS)]
    pub workers_list: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RootsArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, value_enum, default_value = "long")]
    pub format: FormatArg,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Config file layout. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub crawl: FileCrawl,
    pub sim: Option<SimParams>,
    #[serde(default)]
    pub score: FileScore,
    #[serde(default)]
    pub analyze: FileAnalyze,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileCrawl {
    pub format: Option<FormatArg>,
    pub roots: Option<PathBuf>,
    pub depth: Option<usize>,
    pub breadth: Option<usize>,
    pub dwell: Option<f64>,
    pub workers: Option<usize>,
    pub stagger: Option<StaggerArg>,
    pub backend: Option<BackendArg>,
    pub seed: Option<u64>,
    pub max_retries: Option<usize>,
    pub load_budget: Option<f64>,
    pub grace: Option<f64>,
    pub workers_list: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileScore {
    pub scorer: Option<ScorerArg>,
    pub url: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileAnalyze {
    pub tail_q: Option<f64>,
    pub include_ads: Option<bool>,
    pub flat_threshold: Option<f64>,
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    Partial(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) | Failure::Partial(_) => 1,
        }
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn runtime_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("error: {e:#}"),
                Failure::Runtime(e) => eprintln!("error: {e:#}"),
                Failure::Partial(msg) => eprintln!("warning: {msg}"),
            }
            f.code()
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => load_file_config(path).map_err(config_err)?,
        None => FileConfig::default(),
    };
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    match &cli.command {
        Command::Crawl(args) => cmd_crawl(args, &file, exec),
        Command::Score(args) => cmd_score(args, &file, exec),
        Command::Analyze(args) => cmd_analyze(args, &file, exec),
        Command::Bench(args) => cmd_bench(args, &file),
        Command::Roots(args) => cmd_roots(args, &file),
    }
}

pub fn load_file_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: FileConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(sim) = &cfg.sim {
        sim.validate()?;
    }
    Ok(cfg)
}

/// Everything a crawl needs after resolving flags, file and defaults.
struct CrawlSetup {
    config: CrawlConfig,
    sim: SimParams,
    session: SessionConfig,
    progress: bool,
}

fn resolve_crawl(flags: &CrawlFlags, file: &FileConfig) -> anyhow::Result<CrawlSetup> {
    let fc = &file.crawl;
    let format: CrawlFormat = flags
        .format
        .or(fc.format)
        .context("--format is required (shorts or long)")?
        .into();
    let roots_path = flags
        .roots
        .clone()
        .or_else(|| fc.roots.clone())
        .context("--roots is required")?;
    let backend = flags.backend.or(fc.backend).unwrap_or(BackendArg::Sim);
    if backend == BackendArg::Live {
        anyhow::bail!("no live browser adapter is built into this binary; use --backend sim");
    }
    let roots = read_roots(&roots_path)?;

    let mut sim = file.sim.clone().unwrap_or_default();
    if let Some(seed) = flags.seed.or(fc.seed) {
        sim.seed = seed;
    }
    if let Some(ms) = flags.latency_ms {
        sim.latency_base_ms = ms;
    }
    if let Some(c) = flags.capacity {
        sim.capacity = Some(c);
    }
    if let Some(ms) = flags.penalty_ms {
        sim.latency_penalty_ms = ms;
    }
    sim.validate()?;

    let depth = flags.depth.or(fc.depth).context("--depth is required")?;
    let workers = flags.workers.or(fc.workers).unwrap_or(1);
    let mut config = match format {
        CrawlFormat::Shorts => {
            let dwell = flags
                .dwell
                .or(fc.dwell)
                .context("--dwell is required for shorts crawls")?;
            CrawlConfig::shorts(roots, depth, dwell, workers)
        }
        CrawlFormat::LongForm => {
            let breadth = flags.breadth.or(fc.breadth).unwrap_or(DEFAULT_BREADTH);
            CrawlConfig::long_form(roots, depth, breadth, workers)
        }
    };
    if format == CrawlFormat::Shorts {
        if let Some(b) = flags.breadth.or(fc.breadth) {
            config.breadth = b;
        }
    }
    config.stagger = match flags.stagger.or(fc.stagger).unwrap_or(StaggerArg::Sync) {
        StaggerArg::Sync => Stagger::Synchronized,
        StaggerArg::Even => Stagger::EvenOffset,
    };
    config.backend = BackendKind::Sim;
    if let Some(r) = flags.max_retries.or(fc.max_retries) {
        config.max_retries = r;
    }
    config.validate()?;

    let mut session = SessionConfig {
        // A simulated page either renders within its latency or never does,
        // so the sim does not need the full live-browser budget.
        load_budget: Duration::from_secs(1),
        ..SessionConfig::default()
    };
    if let Some(s) = flags.load_budget.or(fc.load_budget) {
        session.load_budget = secs(s, "--load-budget")?;
    }
    if let Some(s) = flags.grace.or(fc.grace) {
        session.grace = secs(s, "--grace")?;
    }
    Ok(CrawlSetup {
        config,
        sim,
        session,
        progress: !flags.no_progress,
    })
}

fn secs(s: f64, flag: &str) -> anyhow::Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| anyhow::anyhow!("{flag} must be a non-negative number of seconds"))
}

fn crawl_once(setup: &CrawlSetup) -> anyhow::Result<(CrawlResult, Arc<Platform>)> {
    let platform = Arc::new(Platform::build(setup.sim.clone())?);
    let factory = SimBackendFactory::new(platform.clone());
    let opts = RunOptions {
        session: setup.session.clone(),
        progress: setup.progress,
    };
    Ok((run_crawl(&setup.config, &factory, &opts)?, platform))
}

fn timing_file(config: &CrawlConfig, result: &CrawlResult) -> TimingFile {
    TimingFile {
        format: config.format,
        roots: config.roots.len(),
        depth: config.depth,
        breadth: config.breadth,
        dwell_s: config.dwell_s,
        timing: result.timing.clone(),
        per_worker: result.per_worker.clone(),
        failed_roots: result.failed_roots.clone(),
    }
}

fn cmd_crawl(args: &CrawlArgs, file: &FileConfig, exec: Exec) -> Result<(), Failure> {
    let setup = resolve_crawl(&args.crawl, file).map_err(config_err)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(runtime_err)?;
    let (result, platform) = crawl_once(&setup).map_err(runtime_err)?;
    let out = &args.out;
    write_records_csv(&result.records, &out.join(RECORDS_FILE)).map_err(runtime_err)?;
    let metadata = collect_metadata(&platform, &result.records, exec).map_err(runtime_err)?;
    write_metadata_csv(&metadata, &out.join(METADATA_FILE)).map_err(runtime_err)?;
    write_timing_json(&timing_file(&setup.config, &result), &out.join(TIMING_FILE)).map_err(runtime_err)?;
    let t = &result.timing;
    println!(
        "{} records from {} roots; wall {:.3} s, theoretical {:.3} s, overhead {:.1}%",
        result.records.len(),
        setup.config.roots.len(),
        t.wall_s,
        t.theoretical_s,
        100.0 * t.overhead_ratio
    );
    if result.failed_roots.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(format!(
            "{} of {} roots failed",
            result.failed_roots.len(),
            setup.config.roots.len()
        )))
    }
}

fn cmd_score(args: &ScoreArgs, file: &FileConfig, exec: Exec) -> Result<(), Failure> {
    let kind = args.scorer.or(file.score.scorer).unwrap_or(ScorerArg::Stub);
    let scorer: Box<dyn Scorer> = match kind {
        ScorerArg::Stub => match (&args.lexicon, &args.flags_file) {
            (Some(lex), Some(flags)) => Box::new(StubScorer::new(Lexicon::load(lex, flags).map_err(config_err)?)),
            _ => Box::new(StubScorer::builtin()),
        },
        ScorerArg::Service => {
            let url = args
                .scorer_url
                .clone()
                .or_else(|| std::env::var(SCORER_URL_ENV).ok())
                .or_else(|| file.score.url.clone())
                .ok_or_else(|| config_err(anyhow::anyhow!("service scorer needs --scorer-url or {SCORER_URL_ENV}")))?;
            Box::new(ServiceClient::new(ServiceConfig::new(url)))
        }
    };
    let records = read_records_csv(&args.input.join(RECORDS_FILE)).map_err(config_err)?;
    let metadata = read_metadata_csv(&args.input.join(METADATA_FILE)).map_err(config_err)?;
    // A video seen in both crawl formats is scored for each.
    let mut formats: std::collections::BTreeMap<_, Vec<CrawlFormat>> = std::collections::BTreeMap::new();
    for r in &records {
        let f = formats.entry(r.video_id.clone()).or_default();
        if !f.contains(&r.crawl_type) {
            f.push(r.crawl_type);
        }
    }
    let videos: Vec<_> = metadata
        .iter()
        .flat_map(|m| formats.get(&m.id).into_iter().flatten().map(move |f| (m.clone(), *f)))
        .collect();
    let scores = score_videos(scorer.as_ref(), &videos, exec).map_err(runtime_err)?;
    let n = write_scores_csv(&scores, &args.input.join(SCORES_FILE)).map_err(runtime_err)?;
    println!("{n} channel scores for {} videos", videos.len());
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs, file: &FileConfig, exec: Exec) -> Result<(), Failure> {
    let fa = &file.analyze;
    let defaults = AnalysisOptions::default();
    let opts = AnalysisOptions {
        include_ads: args.include_ads || fa.include_ads.unwrap_or(false),
        tail_q: args.tail_q.or(fa.tail_q).unwrap_or(defaults.tail_q),
        flat_threshold: args
            .flat_threshold
            .or(fa.flat_threshold)
            .unwrap_or(defaults.flat_threshold),
    };
    if !(opts.tail_q > 0.0 && opts.tail_q < 1.0) {
        return Err(config_err(anyhow::anyhow!("--tail-q must be in (0, 1)")));
    }
    let records = read_records_csv(&args.input.join(RECORDS_FILE)).map_err(config_err)?;
    let metadata = read_metadata_csv(&args.input.join(METADATA_FILE)).map_err(config_err)?;
    let scores_path = args.input.join(SCORES_FILE);
    let scores = if scores_path.exists() {
        read_scores_csv(&scores_path).map_err(config_err)?
    } else {
        info!(
            "{} missing; emotion and toxicity tables will be empty",
            scores_path.display()
        );
        Vec::new()
    };
    let report = build_report(&records, &metadata, &scores, &opts, exec).map_err(runtime_err)?;
    let dir = args.report.clone().unwrap_or_else(|| args.input.join(REPORT_DIR));
    write_report(&dir, &report).map_err(runtime_err)?;
    println!("report written to {}", dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchRow {
    workers: usize,
    wall_s: f64,
    theoretical_s: f64,
    overhead_ratio: f64,
    speedup_vs_single: f64,
    records: usize,
}

fn parse_workers_list(s: &str) -> anyhow::Result<Vec<usize>> {
    let list = s
        .split(',')
        .map(|w| w.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("bad worker list {s:?}"))?;
    if list.is_empty() || list.contains(&0) {
        anyhow::bail!("worker counts must be positive");
    }
    Ok(list)
}

fn cmd_bench(args: &BenchArgs, file: &FileConfig) -> Result<(), Failure> {
    let list = file
        .crawl
        .workers_list
        .as_deref()
        .filter(|_| args.workers_list == DEFAULT_BENCH_WORKERS)
        .unwrap_or(&args.workers_list);
    let workers = parse_workers_list(list).map_err(config_err)?;
    let mut flags = args.crawl.clone();
    flags.no_progress = true;
    let mut setup = resolve_crawl(&flags, file).map_err(config_err)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(runtime_err)?;

    let mut rows = Vec::new();
    let mut table = String::from("workers  wall_s  theoretical_s  overhead  speedup\n");
    for &n in &workers {
        setup.config.workers = n;
        let (result, _) = crawl_once(&setup).map_err(runtime_err)?;
        let t = &result.timing;
        let _ = writeln!(
            table,
            "{n:>7}  {:>6.3}  {:>13.3}  {:>7.1}%  {:>7.2}",
            t.wall_s,
            t.theoretical_s,
            100.0 * t.overhead_ratio,
            t.speedup_vs_single
        );
        rows.push(BenchRow {
            workers: n,
            wall_s: t.wall_s,
            theoretical_s: t.theoretical_s,
            overhead_ratio: t.overhead_ratio,
            speedup_vs_single: t.speedup_vs_single,
            records: result.records.len(),
        });
    }
    write_csv_rows(
        &args.out.join(BENCH_FILE),
        &[
            "workers",
            "wall_s",
            "theoretical_s",
            "overhead_ratio",
            "speedup_vs_single",
            "records",
        ],
        &rows,
    )
    .map_err(runtime_err)?;
    print!("{table}");
    Ok(())
}

fn cmd_roots(args: &RootsArgs, file: &FileConfig) -> Result<(), Failure> {
    let mut sim = file.sim.clone().unwrap_or_default();
    if let Some(seed) = args.seed.or(file.crawl.seed) {
        sim.seed = seed;
    }
    let platform = Platform::build(sim).map_err(config_err)?;
    let kind = match args.format {
        FormatArg::Shorts => VideoKind::Short,
        FormatArg::Long => VideoKind::Regular,
    };
    let roots = platform.roots(args.count, kind).map_err(config_err)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(runtime_err)?;
    }
    write_roots(&roots, &args.out).map_err(runtime_err)?;
    println!("{} roots written to {}", roots.len(), args.out.display());
    Ok(())
}
