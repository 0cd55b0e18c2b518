//! The `chac` command line: `cluster`, `metrics`, `bench` and
//! `invariant-check`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
//! Log verbosity comes from the `CHAC_LOG` environment variable
//! (`error`, `warn`, `info`, `debug`, `trace`).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use crate::geometry::{compute_bounds_with, BoundsOptions, Dataset, DistanceBounds, GeometryError};
use crate::hac::{
    audit_merges, run_hac, HacConfig, HacError, HacMode, NnsBackend, RunStats, DEFAULT_EPSILON,
};
use crate::io::{
    dendrogram_csv, load_labels, load_points, read_dendrogram, write_dendrogram, write_json,
    IoError, PointFormat,
};
use crate::lsh::LshTuning;
use crate::metrics::{
    best_cut_score, dasgupta_cost_with, delta_inversions, dendrogram_purity_with, CutPolicy,
    CutScore, Estimate, FlatMetric, Kernel, SamplingOptions,
};

pub const LOG_ENV: &str = "CHAC_LOG";

#[derive(Parser, Debug)]
#[command(
    name = "chac",
    version,
    about = "Approximate centroid-linkage hierarchical clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster a point file and write the dendrogram as CSV.
    Cluster(ClusterArgs),
    /// Score a dendrogram against ground-truth labels.
    Metrics(MetricsArgs),
    /// Time repeated runs and print their counters.
    Bench(BenchArgs),
    /// Replay a run and check every merge against the closest pair.
    InvariantCheck(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Heap,
    Bucket,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NnsArg {
    Exact,
    Lsh,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Fvecs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CutsArg {
    All,
    Log,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    Inverse,
    Unit,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Point file.
    #[arg(long)]
    input: PathBuf,
    /// Defaults to fvecs for `.fvecs` files and CSV otherwise.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args, Debug)]
struct EngineArgs {
    #[arg(long, value_enum, default_value = "heap")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "exact")]
    nns: NnsArg,
    /// Queue slack; defaults to 0.1, or 0 in exact mode.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Approximation target for the LSH backend.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 1.5)]
    lambda: f64,
    /// Lower bound on the smallest distance between distinct points.
    #[arg(long)]
    delta: Option<f64>,
    /// Upper bound on the largest pairwise distance.
    #[arg(long)]
    big_delta: Option<f64>,
    /// LSH ands per table (auto-tuned when absent).
    #[arg(long)]
    lsh_k: Option<usize>,
    /// LSH tables per scale (auto-tuned when absent).
    #[arg(long)]
    lsh_l: Option<usize>,
    /// Independent LSH repetitions.
    #[arg(long)]
    lsh_gamma: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Dendrogram CSV; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Counters and timings as JSON.
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[arg(long)]
    dendrogram: PathBuf,
    /// Ground-truth labels, one per line.
    #[arg(long)]
    labels: PathBuf,
    /// Points, needed for the Dasgupta cost.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, value_enum, default_value = "all")]
    cuts: CutsArg,
    /// Grid ratio for `--cuts log`.
    #[arg(long, default_value_t = 1.1)]
    log_base: f64,
    #[arg(long, value_enum, default_value = "inverse")]
    kernel: KernelArg,
    /// Slack values for the inversion counts.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1])]
    inversion_deltas: Vec<f64>,
    /// Seed for pair sampling on large inputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scores JSON; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Results as JSON.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Refuse inputs larger than this; the replay is quadratic.
    #[arg(long, default_value_t = 5000)]
    max_n: usize,
    /// Tolerated share of merges over the bound with the LSH backend.
    #[arg(long, default_value_t = 0.05)]
    max_violation_rate: f64,
    /// Report as JSON.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failure with its exit code.
struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            msg: msg.into(),
        }
    }

    fn runtime(msg: impl Into<String>) -> Self {
        Failure {
            code: 1,
            msg: msg.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io { ref source, .. } if source.kind() != std::io::ErrorKind::NotFound => {
                Failure::runtime(e.to_string())
            }
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<HacError> for Failure {
    fn from(e: HacError) -> Self {
        match e {
            HacError::Config(_)
            | HacError::Geometry(GeometryError::DeltaRequired { .. })
            | HacError::Geometry(GeometryError::TooFewPoints { .. })
            | HacError::Geometry(GeometryError::InvalidBounds { .. }) => {
                Failure::usage(e.to_string())
            }
            _ => Failure::runtime(e.to_string()),
        }
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// `run_cli` with explicit output streams.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Cluster(a) => cluster(a, out),
        Command::Metrics(a) => metrics(a, out),
        Command::Bench(a) => bench(a, out),
        Command::InvariantCheck(a) => invariant_check(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

fn point_format(path: &Path, format: Option<FormatArg>) -> PointFormat {
    match format {
        Some(FormatArg::Csv) => PointFormat::Csv,
        Some(FormatArg::Fvecs) => PointFormat::Fvecs,
        None => PointFormat::from_path(path),
    }
}

fn load(input: &InputArgs) -> Result<Dataset, Failure> {
    Ok(load_points(
        &input.input,
        point_format(&input.input, input.format),
    )?)
}

fn distinct(data: &Dataset) -> Result<Dataset, Failure> {
    let rows = data
        .duplicate_groups()
        .iter()
        .map(|g| data.point(g[0]).to_vec())
        .collect();
    Dataset::new(rows).map_err(|e| Failure::usage(e.to_string()))
}

fn engine_config(args: &EngineArgs, data: &Dataset) -> Result<HacConfig, Failure> {
    let mode = match args.mode {
        ModeArg::Exact => HacMode::Exact,
        ModeArg::Heap => HacMode::HeapApprox,
        ModeArg::Bucket => HacMode::BucketApprox,
    };
    let nns_backend = match args.nns {
        NnsArg::Exact => NnsBackend::Exact,
        NnsArg::Lsh => NnsBackend::LshAdaptive,
    };
    let epsilon = match (mode, args.epsilon) {
        (_, Some(e)) => e,
        (HacMode::Exact, None) => 0.0,
        _ => DEFAULT_EPSILON,
    };
    if mode == HacMode::Exact && epsilon != 0.0 {
        return Err(Failure::usage(format!(
            "--mode exact conflicts with --epsilon {epsilon}"
        )));
    }
    if mode == HacMode::Exact && nns_backend != NnsBackend::Exact {
        return Err(Failure::usage("--mode exact conflicts with --nns lsh"));
    }
    let bounds = if args.delta.is_some() || args.big_delta.is_some() {
        let opts = BoundsOptions {
            delta: args.delta,
            big_delta: args.big_delta,
            ..BoundsOptions::default()
        };
        let d = distinct(data)?;
        Some(compute_bounds_with(&d, &opts).map_err(|e| Failure::usage(e.to_string()))?)
    } else {
        None
    };
    let lsh = LshTuning {
        k_ands: args.lsh_k,
        l_ors: args.lsh_l,
        repetitions: args.lsh_gamma.unwrap_or(1),
        ..LshTuning::default()
    };
    let config = HacConfig {
        epsilon,
        mode,
        nns_backend,
        c_target: args.c,
        lambda: args.lambda,
        bounds,
        seed: args.seed,
        lsh,
    };
    config
        .validate()
        .map_err(|e| Failure::usage(e.to_string()))?;
    Ok(config)
}

#[derive(Serialize)]
struct Phases {
    load_s: f64,
    cluster_s: f64,
    write_s: f64,
}

#[derive(Serialize)]
struct StatsReport<'a> {
    input: String,
    seed: u64,
    config: &'a HacConfig,
    stats: &'a RunStats,
    gamma: f64,
    phases: Phases,
}

fn cluster(args: ClusterArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let t0 = Instant::now();
    let data = load(&args.input)?;
    let config = engine_config(&args.engine, &data)?;
    let load_s = t0.elapsed().as_secs_f64();
    info!("loaded {} points of dimension {}", data.len(), data.dim());
    let t1 = Instant::now();
    let (dend, stats) = run_hac(&data, &config)?;
    let cluster_s = t1.elapsed().as_secs_f64();
    let t2 = Instant::now();
    match &args.output {
        Some(path) => write_dendrogram(&dend, path)?,
        None => dendrogram_csv(&dend, out).map_err(|e| Failure::runtime(e.to_string()))?,
    }
    let write_s = t2.elapsed().as_secs_f64();
    if let Some(path) = &args.stats_out {
        let report = StatsReport {
            input: args.input.input.display().to_string(),
            seed: config.seed,
            config: &config,
            gamma: stats.gamma(),
            stats: &stats,
            phases: Phases {
                load_s,
                cluster_s,
                write_s,
            },
        };
        write_json(&report, path)?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct InversionCount {
    delta: f64,
    count: u64,
}

#[derive(Serialize)]
struct ScoresReport {
    dendrogram: String,
    seed: u64,
    n: usize,
    cut_policy: CutPolicy,
    ari: CutScore,
    nmi: CutScore,
    purity: Estimate,
    kernel: Kernel,
    dasgupta: Option<Estimate>,
    delta_inversions: Vec<InversionCount>,
}

fn metrics(args: MetricsArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let dend = read_dendrogram(&args.dendrogram)?;
    let truth = load_labels(&args.labels)?;
    if truth.len() != dend.n_leaves() {
        return Err(Failure::usage(format!(
            "{} has {} labels but the dendrogram has {} leaves",
            args.labels.display(),
            truth.len(),
            dend.n_leaves()
        )));
    }
    if !dend.is_complete() {
        warn!("dendrogram is incomplete; scoring the forest");
    }
    let policy = match args.cuts {
        CutsArg::All => CutPolicy::AllThresholds,
        CutsArg::Log => CutPolicy::LogThresholds {
            base: args.log_base,
        },
    };
    let kernel = match args.kernel {
        KernelArg::Inverse => Kernel::InverseDistance,
        KernelArg::Unit => Kernel::Unit,
    };
    let bad = |e: crate::metrics::MetricsError| Failure::usage(e.to_string());
    let sampling = SamplingOptions {
        seed: args.seed,
        ..SamplingOptions::default()
    };
    let dasgupta = match &args.input {
        Some(path) => {
            let data = load_points(path, point_format(path, args.format))?;
            Some(dasgupta_cost_with(&dend, &data, kernel, &sampling).map_err(bad)?)
        }
        None => None,
    };
    let report = ScoresReport {
        dendrogram: args.dendrogram.display().to_string(),
        seed: args.seed,
        n: dend.n_leaves(),
        cut_policy: policy,
        ari: best_cut_score(&dend, &truth, FlatMetric::Ari, policy).map_err(bad)?,
        nmi: best_cut_score(&dend, &truth, FlatMetric::Nmi, policy).map_err(bad)?,
        purity: dendrogram_purity_with(&dend, &truth, &sampling).map_err(bad)?,
        kernel,
        dasgupta,
        delta_inversions: args
            .inversion_deltas
            .iter()
            .map(|&delta| InversionCount {
                delta,
                count: delta_inversions(&dend, delta),
            })
            .collect(),
    };
    match &args.output {
        Some(path) => write_json(&report, path)?,
        None => {
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| Failure::runtime(e.to_string()))?;
            writeln!(out, "{text}").map_err(|e| Failure::runtime(e.to_string()))?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct BenchRun {
    repeat: usize,
    seconds: f64,
    stats: RunStats,
    gamma: f64,
}

#[derive(Serialize)]
struct BenchReport<'a> {
    input: String,
    seed: u64,
    config: &'a HacConfig,
    runs: Vec<BenchRun>,
}

fn bench(args: BenchArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let data = load(&args.input)?;
    let config = engine_config(&args.engine, &data)?;
    let w = |out: &mut dyn Write, s: String| {
        writeln!(out, "{s}").map_err(|e| Failure::runtime(e.to_string()))
    };
    w(
        out,
        format!(
            "{:>6} {:>10} {:>8} {:>10} {:>10} {:>10} {:>8} {:>8} {:>8}",
            "repeat",
            "seconds",
            "merges",
            "queries",
            "inserts",
            "deletes",
            "stale",
            "requeue",
            "gamma"
        ),
    )?;
    let mut runs = Vec::new();
    for repeat in 0..args.repeats.max(1) {
        let t = Instant::now();
        let (_, stats) = run_hac(&data, &config)?;
        let seconds = t.elapsed().as_secs_f64();
        w(
            out,
            format!(
                "{repeat:>6} {seconds:>10.4} {:>8} {:>10} {:>10} {:>10} {:>8} {:>8} {:>8.4}",
                stats.merges,
                stats.nns_queries,
                stats.nns_inserts,
                stats.nns_deletes,
                stats.stale_dequeues,
                stats.requeues,
                stats.gamma()
            ),
        )?;
        runs.push(BenchRun {
            repeat,
            seconds,
            gamma: stats.gamma(),
            stats,
        });
    }
    if let Some(path) = &args.output {
        let report = BenchReport {
            input: args.input.input.display().to_string(),
            seed: config.seed,
            config: &config,
            runs,
        };
        write_json(&report, path)?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct CheckReport {
    n: usize,
    merges: usize,
    bound: f64,
    violations: usize,
    max_ratio: f64,
    distance_mismatches: usize,
    max_requeues: u64,
    requeue_cap: Option<f64>,
    max_close_entries: u64,
    structure_ok: bool,
    passed: bool,
}

fn invariant_check(args: CheckArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let data = load(&args.input)?;
    if data.len() > args.max_n {
        return Err(Failure::usage(format!(
            "{} points exceed --max-n {}",
            data.len(),
            args.max_n
        )));
    }
    let mut config = engine_config(&args.engine, &data)?;
    if config.bounds.is_none() {
        let d = distinct(&data)?;
        if d.len() >= 2 {
            config.bounds = Some(
                compute_bounds_with(&d, &BoundsOptions::default())
                    .map_err(|e| Failure::usage(e.to_string()))?,
            );
        }
    }
    let (dend, stats) = run_hac(&data, &config)?;
    let structure_ok = dend.validate_complete().is_ok();
    let audit = audit_merges(&data, &dend)?;
    let c = match config.nns_backend {
        NnsBackend::Exact => 1.0,
        NnsBackend::LshAdaptive => config.c_target,
    };
    let bound = c * (1.0 + config.epsilon);
    let tolerance = 1.0 + 1e-12;
    let violations = audit
        .iter()
        .filter(|a| a.distance > bound * a.optimal * tolerance)
        .count();
    let max_ratio = audit.iter().map(|a| a.ratio()).fold(0.0, f64::max);
    let distance_mismatches = audit
        .iter()
        .filter(|a| (a.recorded - a.distance).abs() > 1e-12 * a.distance.max(1.0))
        .count();
    let cap = config
        .bounds
        .map(|b: DistanceBounds| b.requeue_cap(config.epsilon));
    let cap_ok = cap.is_none_or(|cap| stats.max_requeues as f64 <= cap);
    let allowed = match config.nns_backend {
        NnsBackend::Exact => 0,
        NnsBackend::LshAdaptive => (args.max_violation_rate * audit.len() as f64).floor() as usize,
    };
    let passed = structure_ok
        && distance_mismatches == 0
        && violations <= allowed
        && cap_ok
        && stats.max_close_entries <= 1;
    let report = CheckReport {
        n: data.len(),
        merges: audit.len(),
        bound,
        violations,
        max_ratio,
        distance_mismatches,
        max_requeues: stats.max_requeues,
        requeue_cap: cap,
        max_close_entries: stats.max_close_entries,
        structure_ok,
        passed,
    };
    let w = |out: &mut dyn Write, s: String| {
        writeln!(out, "{s}").map_err(|e| Failure::runtime(e.to_string()))
    };
    w(out, format!("points            {}", report.n))?;
    w(out, format!("merges            {}", report.merges))?;
    w(
        out,
        format!(
            "structure         {}",
            if structure_ok { "ok" } else { "BROKEN" }
        ),
    )?;
    w(out, format!("bound             {bound:.6}"))?;
    w(
        out,
        format!("violations        {violations} (allowed {allowed}), max ratio {max_ratio:.6}"),
    )?;
    w(out, format!("distance mismatch {distance_mismatches}"))?;
    match cap {
        Some(cap) => w(
            out,
            format!("requeues          max {} <= cap {cap}", stats.max_requeues),
        )?,
        None => w(out, format!("requeues          max {}", stats.max_requeues))?,
    }
    w(
        out,
        format!("close entries     max {}", stats.max_close_entries),
    )?;
    w(
        out,
        format!("verdict           {}", if passed { "ok" } else { "FAILED" }),
    )?;
    if let Some(path) = &args.output {
        write_json(&report, path)?;
    }
    Ok(if passed { 0 } else { 1 })
}
