//! The `refaudit` command-line front end.
//!
//! Every subcommand that writes files also writes `manifest.json` into its
//! output directory. Exit codes: 0 success, 1 finished with validation
//! warnings, 2 error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detect::{self, Detection, KMeansParams, Role};
use crate::diagnostics::{self, BinningScheme, METRICS};
use crate::editor::{editor_papers, editor_profiles, EditorProfile, MetricsConfig};
use crate::entropy::LogBase;
use crate::ledger::{self, Corpus, LedgerError, DEFAULT_CUTOFF_YEAR, DEFAULT_WINDOW_YEARS};
use crate::par::Exec;
use crate::reviewer::{reviewer_papers, reviewer_profiles, ReviewerProfile};
use crate::synth::{self, GeneratorConfig, GroundTruth};
use crate::trend::{self, Classified, TrendParams, PROFILE_LENGTH};

#[derive(Debug, Parser)]
#[command(
    name = "refaudit",
    version,
    about = "Peer-review anomaly detection toolkit"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GlobalOpts {
    /// Last year (exclusive) counted by the eligibility filter [default: 2013,
    /// or the end of the generated time span for synthetic corpora]
    #[arg(long, global = true)]
    cutoff_year: Option<i32>,
    /// Citation window length in years after publication
    #[arg(long, global = true, default_value_t = DEFAULT_WINDOW_YEARS)]
    window_years: u32,
    /// Root directory for all outputs
    #[arg(long, global = true, default_value = ".")]
    #[serde(skip)]
    out_dir: PathBuf,
    /// Logarithm base for diversity indices: e, 2 or 10
    #[arg(long, global = true, default_value = "e")]
    log_base: LogBase,
    /// Count declined and unreported assignments in RDI and RADI
    #[arg(long, global = true)]
    count_declines_in_diversity: bool,
    /// Cluster raw feature values instead of z-scores
    #[arg(long, global = true)]
    no_standardize: bool,
    /// Worker threads for data-parallel steps
    #[arg(long, global = true)]
    #[serde(skip)]
    threads: Option<usize>,
    /// Run every step on the calling thread
    #[arg(long, global = true)]
    #[serde(skip)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and print a summary
    IngestCheck(CorpusArg),
    /// Per-editor metrics CSV
    EditorMetrics(MetricsArgs),
    /// Per-reviewer metrics CSV
    ReviewerMetrics(MetricsArgs),
    /// Binned median-average-citation table for one metric
    Figures(FiguresArgs),
    /// Declines by month, RDI against declines, dormant reviewers
    Diagnostics(DiagnosticsArgs),
    /// Cluster one role and label the anomalous cluster
    Detect(DetectArgs),
    /// Citation trends of reviewers flagged by `detect`
    Profile(ProfileArgs),
    /// Generate a synthetic corpus with ground truth
    Synth(SynthArgs),
    /// Corpus (generated or read) through metrics, detection and profiling
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args, Serialize)]
struct CorpusArg {
    corpus: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct MetricsArgs {
    corpus: PathBuf,
    /// Output CSV, relative to --out-dir
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FiguresArgs {
    corpus: PathBuf,
    /// One of meat, rdi, radi, sri, mrat, mrsd, tdi, edi, ar, mtd, dfi
    #[arg(long)]
    metric: String,
    /// equal-width:N, tenths or equal-count:N
    #[arg(long, default_value = "equal-width:10")]
    bins: String,
    /// Fixed range for equal-width bins, as LO,HI
    #[arg(long, value_parser = parse_range)]
    range: Option<(f64, f64)>,
}

#[derive(Debug, Args, Serialize)]
struct DiagnosticsArgs {
    corpus: PathBuf,
    /// Reference date for dormancy [default: latest event date]
    #[arg(long)]
    now: Option<NaiveDate>,
    #[arg(long, default_value_t = 2)]
    dormancy_years: u32,
}

#[derive(Debug, Args, Serialize)]
struct KMeansArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
}

#[derive(Debug, Args, Serialize)]
struct DetectArgs {
    corpus: PathBuf,
    #[arg(long)]
    role: Role,
    #[command(flatten)]
    kmeans: KMeansArgs,
    /// Output JSON, relative to --out-dir
    #[arg(long, default_value = "clusters.json")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ProfileArgs {
    corpus: PathBuf,
    /// Reviewer clusters written by `detect --role reviewer`
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long, default_value = "trends.csv")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    /// Generator config (TOML); defaults apply to anything left out
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "corpus.jsonl")]
    out: PathBuf,
    #[arg(long, default_value = "truth.csv")]
    truth: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[group(id = "source", required = true, multiple = false, args = ["synth_config", "corpus"])]
struct PipelineArgs {
    /// Generate the corpus from this config
    #[arg(long)]
    synth_config: Option<PathBuf>,
    /// Read an existing corpus
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Ground truth for an existing corpus, for precision/recall
    #[arg(long, requires = "corpus")]
    truth: Option<PathBuf>,
    #[command(flatten)]
    kmeans: KMeansArgs,
    /// Binning scheme for the figure tables
    #[arg(long, default_value = "equal-width:10")]
    bins: String,
    #[arg(long, default_value_t = 2)]
    dormancy_years: u32,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("range `{s}` is not LO,HI"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|e| format!("range lower bound: {e}"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|e| format!("range upper bound: {e}"))?;
    Ok((lo, hi))
}

/// Formats a number with 6 significant digits, like C's `%g`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    fn trim(s: &str) -> &str {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            s
        }
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct RunManifest {
    subcommand: String,
    tool_version: &'static str,
    seed: Option<u64>,
    config: BTreeMap<String, serde_json::Value>,
    /// Input path as given → SHA-256 of its bytes.
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

struct Run {
    subcommand: &'static str,
    dir: PathBuf,
    seed: Option<u64>,
    config: BTreeMap<String, serde_json::Value>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

impl Run {
    fn new(subcommand: &'static str, global: &GlobalOpts, args: &impl Serialize) -> Result<Run> {
        let mut config = BTreeMap::new();
        for v in [serde_json::to_value(global)?, serde_json::to_value(args)?] {
            if let serde_json::Value::Object(m) = v {
                config.extend(m);
            }
        }
        Ok(Run {
            subcommand,
            dir: global.out_dir.clone(),
            seed: None,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        })
    }

    fn digest(&mut self, path: &Path) -> Result<()> {
        let bytes = read_input(path)?;
        self.inputs.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        Ok(())
    }

    fn create(&mut self, name: &Path) -> Result<BufWriter<fs::File>> {
        let path = if name.is_absolute() {
            name.to_path_buf()
        } else {
            self.dir.join(name)
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
        let file =
            fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        self.outputs.push(name.display().to_string());
        Ok(BufWriter::new(file))
    }

    fn csv(
        &mut self,
        name: impl AsRef<Path>,
        header: &[&str],
        rows: Vec<Vec<String>>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.create(name.as_ref())?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn json(&mut self, name: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
        let mut w = self.create(name.as_ref())?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    fn finish(mut self) -> Result<i32> {
        let manifest = RunManifest {
            subcommand: self.subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            config: std::mem::take(&mut self.config),
            inputs: std::mem::take(&mut self.inputs),
            outputs: std::mem::take(&mut self.outputs),
        };
        self.json("manifest.json", &manifest)?;
        for w in &self.warnings {
            eprintln!("warning: {w}");
        }
        Ok(if self.warnings.is_empty() { 0 } else { 1 })
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => anyhow!("file not found: {}", path.display()),
        _ => anyhow!("cannot read {}: {e}", path.display()),
    })
}

fn load_corpus(path: &Path, g: &GlobalOpts) -> Result<Corpus> {
    let cutoff = g.cutoff_year.unwrap_or(DEFAULT_CUTOFF_YEAR);
    ledger::ingest(path, cutoff, g.window_years).map_err(|e| match e {
        LedgerError::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => {
            anyhow!("file not found: {}", path.display())
        }
        other => anyhow!(other).context(format!("invalid corpus {}", path.display())),
    })
}

fn metrics_config(g: &GlobalOpts) -> MetricsConfig {
    MetricsConfig {
        log_base: g.log_base,
        count_declines_in_diversity: g.count_declines_in_diversity,
    }
}

fn exec(g: &GlobalOpts) -> Exec {
    if g.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match with_threads(&cli.global, || dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

pub fn main_from_env() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("REFAUDIT_LOG", "warn"))
        .try_init();
    run(std::env::args_os())
}

#[cfg(feature = "parallel")]
fn with_threads(g: &GlobalOpts, f: impl FnOnce() -> Result<i32> + Send) -> Result<i32> {
    match g.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot build thread pool")?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads(g: &GlobalOpts, f: impl FnOnce() -> Result<i32>) -> Result<i32> {
    if g.threads.is_some() {
        warn!("--threads ignored: built without the `parallel` feature");
    }
    f()
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::IngestCheck(a) => ingest_check(g, a),
        Command::EditorMetrics(a) => {
            let mut run = Run::new("editor-metrics", g, a)?;
            run.digest(&a.corpus)?;
            let corpus = load_corpus(&a.corpus, g)?;
            let out = a.out.clone().unwrap_or_else(|| "editors.csv".into());
            write_editors(
                &mut run,
                &out,
                &editor_profiles(&corpus, &metrics_config(g), exec(g)),
            )?;
            run.finish()
        }
        Command::ReviewerMetrics(a) => {
            let mut run = Run::new("reviewer-metrics", g, a)?;
            run.digest(&a.corpus)?;
            let corpus = load_corpus(&a.corpus, g)?;
            let out = a.out.clone().unwrap_or_else(|| "reviewers.csv".into());
            write_reviewers(
                &mut run,
                &out,
                &reviewer_profiles(&corpus, &metrics_config(g), exec(g)),
            )?;
            run.finish()
        }
        Command::Figures(a) => {
            let mut run = Run::new("figures", g, a)?;
            run.digest(&a.corpus)?;
            let corpus = load_corpus(&a.corpus, g)?;
            let scheme = BinningScheme::parse(&a.bins, a.range)?;
            let (_, values, papers) =
                diagnostics::eligible_metric(&corpus, &metrics_config(g), exec(g), &a.metric)?;
            write_figure(&mut run, &values, &papers, &a.metric, &scheme)?;
            run.finish()
        }
        Command::Diagnostics(a) => {
            let mut run = Run::new("diagnostics", g, a)?;
            run.digest(&a.corpus)?;
            let corpus = load_corpus(&a.corpus, g)?;
            write_diagnostics(&mut run, &corpus, g, a.now, a.dormancy_years)?;
            run.finish()
        }
        Command::Detect(a) => {
            let mut run = Run::new("detect", g, a)?;
            run.digest(&a.corpus)?;
            run.seed = Some(a.kmeans.seed);
            let corpus = load_corpus(&a.corpus, g)?;
            let det = run_detect(&corpus, g, a.role, &a.kmeans)?;
            write_detection(&mut run, &a.out, &format!("cdf_{}.csv", a.role), &det)?;
            run.finish()
        }
        Command::Profile(a) => {
            let mut run = Run::new("profile", g, a)?;
            run.digest(&a.corpus)?;
            run.digest(&a.clusters)?;
            let corpus = load_corpus(&a.corpus, g)?;
            let det: Detection = serde_json::from_slice(&read_input(&a.clusters)?)
                .with_context(|| format!("cannot parse clusters file {}", a.clusters.display()))?;
            if det.role != Role::Reviewer {
                bail!(
                    "profile needs reviewer clusters, {} holds {} clusters",
                    a.clusters.display(),
                    det.role
                );
            }
            run.seed = Some(det.result.seed);
            write_profiles(
                &mut run,
                &a.out,
                Path::new("profiles.csv"),
                &corpus,
                &det,
                exec(g),
            )?;
            run.finish()
        }
        Command::Synth(a) => {
            let mut run = Run::new("synth", g, a)?;
            let cfg = synth_config(&mut run, a.config.as_deref(), a.seed)?;
            run.seed = Some(cfg.seed);
            let (corpus, truth) = synth::generate(&cfg)?;
            write_synth(&mut run, &a.out, &a.truth, &corpus, &truth)?;
            run.finish()
        }
        Command::Pipeline(a) => pipeline(g, a),
    }
}

fn synth_config(run: &mut Run, path: Option<&Path>, seed: Option<u64>) -> Result<GeneratorConfig> {
    let mut cfg = match path {
        Some(p) => {
            run.digest(p)?;
            let text = String::from_utf8(read_input(p)?)
                .with_context(|| format!("{} is not UTF-8", p.display()))?;
            GeneratorConfig::from_toml(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => GeneratorConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct IngestSummary {
    papers: usize,
    events: usize,
    episodes: usize,
    editors: usize,
    reviewers: usize,
    accepted: usize,
    rejected: usize,
    undecided: usize,
}

fn ingest_check(g: &GlobalOpts, a: &CorpusArg) -> Result<i32> {
    let corpus = load_corpus(&a.corpus, g)?;
    let decided = |d| {
        corpus
            .papers()
            .iter()
            .filter(|p| p.final_decision == d)
            .count()
    };
    let summary = IngestSummary {
        papers: corpus.papers().len(),
        events: corpus.events().len(),
        episodes: corpus.episodes().len(),
        editors: editor_profiles(&corpus, &metrics_config(g), exec(g)).len(),
        reviewers: reviewer_profiles(&corpus, &metrics_config(g), exec(g)).len(),
        accepted: decided(ledger::FinalDecision::Accepted),
        rejected: decided(ledger::FinalDecision::Rejected),
        undecided: corpus
            .papers()
            .iter()
            .filter(|p| !p.final_decision.is_decided())
            .count(),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(0)
}

fn write_editors(run: &mut Run, out: &Path, profiles: &[EditorProfile]) -> Result<()> {
    let rows = profiles
        .iter()
        .map(|p| {
            vec![
                p.editor_id.0.clone(),
                p.n_assignments.to_string(),
                opt(p.meat),
                opt(p.rdi),
                opt(p.radi),
                opt(p.sri),
                p.n_declines_received.to_string(),
                p.n_papers.to_string(),
                p.n_self_reviewed.to_string(),
                p.n_assignments_before_cutoff.to_string(),
                p.n_accepted_before_cutoff.to_string(),
                detect::is_eligible(p).to_string(),
            ]
        })
        .collect();
    run.csv(
        out,
        &[
            "editor_id",
            "n_assignments",
            "meat",
            "rdi",
            "radi",
            "sri",
            "n_declines_received",
            "n_papers",
            "n_self_reviewed",
            "n_assignments_before_cutoff",
            "n_accepted_before_cutoff",
            "eligible",
        ],
        rows,
    )
}

fn write_reviewers(run: &mut Run, out: &Path, profiles: &[ReviewerProfile]) -> Result<()> {
    let rows = profiles
        .iter()
        .map(|p| {
            vec![
                p.reviewer_id.0.clone(),
                p.n_assignments.to_string(),
                p.n_declines.to_string(),
                p.n_accept.to_string(),
                p.n_reject.to_string(),
                p.n_pending.to_string(),
                opt(p.mrat),
                opt(p.mrsd),
                opt(p.tdi),
                opt(p.edi),
                opt(p.ar),
                opt(p.mtd),
                opt(p.dfi),
                p.is_editor_self_review.to_string(),
                p.n_assignments_before_cutoff.to_string(),
                p.n_accepted_before_cutoff.to_string(),
                detect::is_eligible(p).to_string(),
            ]
        })
        .collect();
    run.csv(
        out,
        &[
            "reviewer_id",
            "n_assignments",
            "n_declines",
            "n_accept",
            "n_reject",
            "n_pending",
            "mrat",
            "mrsd",
            "tdi",
            "edi",
            "ar",
            "mtd",
            "dfi",
            "is_editor_self_review",
            "n_assignments_before_cutoff",
            "n_accepted_before_cutoff",
            "eligible",
        ],
        rows,
    )
}

fn write_figure(
    run: &mut Run,
    values: &BTreeMap<ledger::AgentId, f64>,
    papers: &detect::AgentPapers,
    metric: &str,
    scheme: &BinningScheme,
) -> Result<()> {
    let bins = diagnostics::mac_by_bin(values, papers, scheme)?;
    let rows = bins
        .iter()
        .map(|b| {
            vec![
                b.bin_index.to_string(),
                fmt_g(b.bin_lower),
                fmt_g(b.bin_upper),
                b.n_agents.to_string(),
                opt(b.mac_accepted),
                opt(b.mac_rejected),
            ]
        })
        .collect();
    run.csv(
        format!("fig_{}.csv", metric.to_ascii_lowercase()),
        &[
            "bin_index",
            "bin_lower",
            "bin_upper",
            "n_agents",
            "mac_accepted",
            "mac_rejected",
        ],
        rows,
    )
}

fn write_diagnostics(
    run: &mut Run,
    corpus: &Corpus,
    g: &GlobalOpts,
    now: Option<NaiveDate>,
    years: u32,
) -> Result<()> {
    let months = diagnostics::declines_by_month(corpus);
    run.csv(
        "declines_by_month.csv",
        &["month", "declines"],
        months
            .iter()
            .map(|(m, n)| vec![m.to_string(), n.to_string()])
            .collect(),
    )?;

    let pairs = diagnostics::rdi_vs_declines(corpus, &metrics_config(g), exec(g));
    let x: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.2 as f64).collect();
    if let Some(rho) = diagnostics::spearman(&x, &y) {
        info!("Spearman correlation of RDI and declines received: {rho:.4}");
    }
    run.csv(
        "rdi_declines.csv",
        &["editor_id", "rdi", "n_declines_received"],
        pairs
            .iter()
            .map(|(id, r, d)| vec![id.0.clone(), fmt_g(*r), d.to_string()])
            .collect(),
    )?;

    let now = now.or_else(|| corpus.events().iter().map(|e| e.date).max());
    let dormant = match now {
        Some(now) => diagnostics::dormant_reviewers(corpus, now, years),
        None => Vec::new(),
    };
    run.csv(
        "dormant.csv",
        &["reviewer_id", "last_assignment", "never_reported"],
        dormant
            .iter()
            .map(|d| {
                vec![
                    d.reviewer_id.0.clone(),
                    d.last_assignment.to_string(),
                    d.never_reported.to_string(),
                ]
            })
            .collect(),
    )
}

fn run_detect(corpus: &Corpus, g: &GlobalOpts, role: Role, k: &KMeansArgs) -> Result<Detection> {
    let params = KMeansParams {
        k: 2,
        seed: k.seed,
        max_iter: k.max_iter,
        n_restarts: k.restarts,
    };
    let cfg = metrics_config(g);
    let standardize = !g.no_standardize;
    let det = match role {
        Role::Editor => detect::detect(
            &editor_profiles(corpus, &cfg, exec(g)),
            &editor_papers(corpus),
            &params,
            standardize,
            exec(g),
        ),
        Role::Reviewer => detect::detect(
            &reviewer_profiles(corpus, &cfg, exec(g)),
            &reviewer_papers(corpus),
            &params,
            standardize,
            exec(g),
        ),
    }?;
    for w in &det.warnings {
        warn!("{w}");
    }
    Ok(det)
}

fn write_detection(run: &mut Run, json: &Path, cdf: &str, det: &Detection) -> Result<()> {
    run.json(json, det)?;
    let mut rows = Vec::new();
    for (class, c) in [
        ("accepted", &det.validation.accepted),
        ("rejected", &det.validation.rejected),
    ] {
        let Some(c) = c else { continue };
        for (group, points) in [("anomalous", &c.anomalous_cdf), ("normal", &c.normal_cdf)] {
            for &(x, f) in points {
                rows.push(vec![
                    class.to_string(),
                    group.to_string(),
                    fmt_g(x),
                    fmt_g(f),
                ]);
            }
        }
    }
    run.csv(cdf, &["class", "group", "average_citation", "cdf"], rows)?;
    run.warnings.extend(det.validation_warnings());
    Ok(())
}

fn write_profiles(
    run: &mut Run,
    trends: &Path,
    profiles: &Path,
    corpus: &Corpus,
    det: &Detection,
    exec: Exec,
) -> Result<()> {
    let flagged = det.result.anomalous_agents();
    let seqs = trend::accepted_sequences(corpus, &flagged);
    let classified = trend::classify_all(&seqs, &TrendParams::default(), exec);
    let mut rows = Vec::new();
    let mut by_category = Vec::new();
    for (seq, c) in seqs.iter().zip(&classified) {
        let n = seq.values.len().to_string();
        match c {
            Classified::Category(cat, s) => {
                by_category.push((*cat, seq));
                rows.push(vec![
                    seq.reviewer_id.0.clone(),
                    n,
                    cat.as_str().to_string(),
                    fmt_g(s.slope),
                    fmt_g(s.spearman),
                    fmt_g(s.residual_cv),
                    String::new(),
                ]);
            }
            Classified::Excluded(reason) => rows.push(vec![
                seq.reviewer_id.0.clone(),
                n,
                "Excluded".into(),
                String::new(),
                String::new(),
                String::new(),
                reason.clone(),
            ]),
        }
    }
    run.csv(
        trends,
        &[
            "reviewer_id",
            "n_papers",
            "category",
            "slope",
            "spearman",
            "residual_cv",
            "note",
        ],
        rows,
    )?;
    let mean_profiles = trend::category_profiles(&by_category, PROFILE_LENGTH);
    let counts: BTreeMap<_, usize> = by_category.iter().fold(BTreeMap::new(), |mut m, (c, _)| {
        *m.entry(*c).or_insert(0) += 1;
        m
    });
    let mut rows = Vec::new();
    for (cat, values) in &mean_profiles {
        for (i, v) in values.iter().enumerate() {
            rows.push(vec![
                cat.as_str().to_string(),
                counts[cat].to_string(),
                i.to_string(),
                fmt_g(*v),
            ]);
        }
    }
    run.csv(
        profiles,
        &["category", "n_reviewers", "position", "mean_citation"],
        rows,
    )
}

fn write_synth(
    run: &mut Run,
    out: &Path,
    truth_out: &Path,
    corpus: &Corpus,
    truth: &GroundTruth,
) -> Result<()> {
    let mut w = run.create(out)?;
    corpus.write_jsonl(&mut w)?;
    w.flush()?;
    let mut t = run.create(truth_out)?;
    truth.write_csv(&mut t)?;
    t.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct RoleReport {
    role: Role,
    n_profiles: usize,
    n_eligible: usize,
    cluster_sizes: Vec<usize>,
    n_flagged: usize,
    ks_accepted: Option<f64>,
    ks_rejected: Option<f64>,
    accepted_order_ok: Option<bool>,
    rejected_order_ok: Option<bool>,
    warnings: Vec<String>,
    recovery: Option<synth::Recovery>,
}

fn role_report(det: &Detection, truth: Option<&GroundTruth>) -> RoleReport {
    RoleReport {
        role: det.role,
        n_profiles: det.n_profiles,
        n_eligible: det.n_eligible,
        cluster_sizes: det.result.sizes(),
        n_flagged: det.result.anomalous_agents().len(),
        ks_accepted: det.validation.accepted.as_ref().map(|c| c.ks),
        ks_rejected: det.validation.rejected.as_ref().map(|c| c.ks),
        accepted_order_ok: det.validation.accepted.as_ref().map(|c| c.expected_order),
        rejected_order_ok: det.validation.rejected.as_ref().map(|c| c.expected_order),
        warnings: det.validation_warnings(),
        recovery: truth.map(|t| synth::recovery(&det.result, t)),
    }
}

fn pipeline(g: &GlobalOpts, a: &PipelineArgs) -> Result<i32> {
    let mut run = Run::new("pipeline", g, a)?;
    run.seed = Some(a.kmeans.seed);
    let mut g = g.clone();
    let (corpus, truth) = match (&a.synth_config, &a.corpus) {
        (Some(cfg_path), _) => {
            let cfg = synth_config(&mut run, Some(cfg_path), Some(a.kmeans.seed))?;
            let end_year = cfg.start_year + cfg.time_span_years as i32;
            let cutoff = *g.cutoff_year.get_or_insert(end_year);
            let (corpus, truth) = synth::generate(&cfg)?;
            let corpus = corpus.with_config(cutoff, g.window_years)?;
            write_synth(
                &mut run,
                Path::new("corpus.jsonl"),
                Path::new("truth.csv"),
                &corpus,
                &truth,
            )?;
            (corpus, Some(truth))
        }
        (None, Some(path)) => {
            run.digest(path)?;
            let corpus = load_corpus(path, &g)?;
            let truth = match &a.truth {
                Some(t) => {
                    run.digest(t)?;
                    let bytes = read_input(t)?;
                    Some(
                        GroundTruth::read_csv(bytes.as_slice())
                            .map_err(|e| anyhow!("invalid truth file {}: {e}", t.display()))?,
                    )
                }
                None => None,
            };
            (corpus, truth)
        }
        (None, None) => unreachable!("clap requires a corpus source"),
    };
    let cfg = metrics_config(&g);
    let editor_list = editor_profiles(&corpus, &cfg, exec(&g));
    let reviewer_list = reviewer_profiles(&corpus, &cfg, exec(&g));
    write_editors(&mut run, Path::new("editors.csv"), &editor_list)?;
    write_reviewers(&mut run, Path::new("reviewers.csv"), &reviewer_list)?;
    let scheme = BinningScheme::parse(&a.bins, None)?;
    let (e_papers, r_papers) = (editor_papers(&corpus), reviewer_papers(&corpus));
    for metric in METRICS {
        let values = diagnostics::metric_values(&editor_list, &reviewer_list, metric)?;
        let papers = match diagnostics::metric_role(metric)? {
            Role::Editor => &e_papers,
            Role::Reviewer => &r_papers,
        };
        write_figure(&mut run, &values, papers, metric, &scheme)?;
    }
    write_diagnostics(&mut run, &corpus, &g, None, a.dormancy_years)?;

    let editors = run_detect(&corpus, &g, Role::Editor, &a.kmeans)?;
    write_detection(
        &mut run,
        Path::new("clusters_editor.json"),
        "cdf_editor.csv",
        &editors,
    )?;
    let reviewers = run_detect(&corpus, &g, Role::Reviewer, &a.kmeans)?;
    write_detection(
        &mut run,
        Path::new("clusters_reviewer.json"),
        "cdf_reviewer.csv",
        &reviewers,
    )?;
    write_profiles(
        &mut run,
        Path::new("trends.csv"),
        Path::new("profiles.csv"),
        &corpus,
        &reviewers,
        exec(&g),
    )?;

    let report = vec![
        role_report(&editors, truth.as_ref()),
        role_report(&reviewers, truth.as_ref()),
    ];
    run.json("validation.json", &report)?;
    run.finish()
}
