//! `vizrec`: drive ingestion, recommendation, bounds and experiments from
//! the shell. Machine output goes to stdout, logs to stderr (`VIZREC_LOG`).

mod render;

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vizrec_core::experiments::{run_named, RunOptions, EXPERIMENTS};
use vizrec_core::query::{Op, Predicate};
use vizrec_core::recommend::{ExplorationConfig, PreparedDataset, RecommendRequest};
use vizrec_core::table::{load_table, parse_schema, LoadOptions, Table};
use vizrec_core::vc::{vc_dimension_bound, BoundConfig, LogBase, QueryClassSpec};
use vizrec_service::ServiceConfig;

type CliResult<T> = Result<T, String>;

#[derive(Parser)]
#[command(name = "vizrec", version, about = "Statistically safe bar-chart recommendations")]
struct Cli {
    /// Worker threads for candidate scoring (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a CSV and report its schema and column statistics.
    Ingest {
        csv: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Rank safe recommendations against a reference visualization.
    Recommend(RecommendArgs),
    /// Chi-squared goodness-of-fit baseline over the same candidates.
    Baseline {
        #[command(flatten)]
        common: RecommendArgs,
        /// Family-wise significance level.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Test every candidate at `alpha` without Bonferroni correction.
        #[arg(long)]
        uncorrected: bool,
    },
    /// VC-dimension bound of a query class, with optional uncertainty radius.
    VcBound {
        #[arg(long)]
        class: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        /// Rows behind a visualization; prints its epsilon-bar.
        #[arg(long)]
        support: Option<u64>,
    },
    /// Seeded experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value_t = vizrec_service::DEFAULT_MAX_UPLOAD_BYTES)]
        max_upload_bytes: usize,
        /// Origin allowed by CORS (any origin when omitted).
        #[arg(long)]
        allow_origin: Option<String>,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Run one experiment and write `<out>/<name>/<timestamp>.{json,csv}`.
    Run {
        name: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Use the natural logarithm in the uncertainty radius.
        #[arg(long)]
        ln: bool,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// List experiment names.
    List,
}

#[derive(Args)]
struct RecommendArgs {
    csv: PathBuf,
    /// Reference predicate: a JSON file, or inline JSON. Defaults to TRUE.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    group_by: String,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps_v: Option<f64>,
    /// Treat the reference pmf as exact.
    #[arg(long)]
    one_sample: bool,
    /// Comma-separated clause operators, e.g. `<=,>=`.
    #[arg(long)]
    operators: Option<String>,
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long)]
    vc_dimension: Option<u32>,
    /// Exploration configuration as JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Name recorded as the dataset (default: file stem).
    #[arg(long)]
    name: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VIZREC_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err("--threads must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    match cli.command {
        Command::Ingest { csv, schema, format } => {
            let table = read_table(&csv, schema.as_deref(), None)?;
            print!("{}", render::ingest(&table, format == Format::Json)?);
        }
        Command::Recommend(args) => {
            let (prepared, request) = prepare(&args)?;
            let set = prepared.recommend(&request).map_err(|e| e.to_string())?;
            let text = match args.format {
                Format::Json => serde_json::to_string(&set).map_err(|e| e.to_string())? + "\n",
                Format::Csv => render::recommendations_csv(&set)?,
                Format::Table => render::recommendations_table(&set),
            };
            print!("{text}");
        }
        Command::Baseline { common, alpha, uncorrected } => {
            let (prepared, request) = prepare(&common)?;
            let set = prepared.baseline_chi2(&request, alpha, !uncorrected).map_err(|e| e.to_string())?;
            let text = match common.format {
                Format::Json => serde_json::to_string(&set).map_err(|e| e.to_string())? + "\n",
                Format::Csv => render::baseline_csv(&set)?,
                Format::Table => render::baseline_table(&set),
            };
            print!("{text}");
        }
        Command::VcBound { class, delta, support } => {
            let text = fs::read_to_string(&class).map_err(|e| format!("{}: {e}", class.display()))?;
            let spec = QueryClassSpec::from_json(&text).map_err(|e| e.to_string())?;
            let d = vc_dimension_bound(&spec).map_err(|e| e.to_string())?;
            println!("{d}");
            if let Some(m) = support {
                let bound = BoundConfig::new(d, delta.unwrap_or(0.05)).map_err(|e| e.to_string())?;
                let eps = bound.epsilon_bar(m).map_err(|e| e.to_string())?;
                println!("epsilon_bar(m = {m}, delta = {}) = {}", bound.delta, eps.value);
            }
        }
        Command::Experiment { action: ExperimentAction::List } => {
            for name in EXPERIMENTS {
                println!("{name}");
            }
        }
        Command::Experiment { action: ExperimentAction::Run { name, seed, n, d, delta, ln, out } } => {
            let log_base = if ln { LogBase::Natural } else { LogBase::Two };
            let opts = RunOptions { seed, n, d, delta, log_base };
            let result = run_named(&name, &opts).map_err(|e| e.to_string())?;
            let dir = out.join(&name);
            fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let stem = unique_stem(&dir, &chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string());
            for (ext, body) in [("json", result.to_json() + "\n"), ("csv", result.to_csv())] {
                let path = dir.join(format!("{stem}.{ext}"));
                fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))?;
                println!("{}", path.display());
            }
        }
        Command::Serve { addr, max_upload_bytes, allow_origin } => {
            let config = ServiceConfig { max_upload_bytes, allowed_origin: allow_origin };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime.block_on(vizrec_service::serve(addr, config)).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

/// `base`, or `base-<k>` for the first `k` not yet used in `dir`.
fn unique_stem(dir: &Path, base: &str) -> String {
    let taken = |s: &str| dir.join(format!("{s}.json")).exists() || dir.join(format!("{s}.csv")).exists();
    if !taken(base) {
        return base.to_string();
    }
    (1..).map(|k| format!("{base}-{k}")).find(|s| !taken(s)).expect("unbounded search")
}

fn read_table(csv: &Path, schema: Option<&Path>, name: Option<&str>) -> CliResult<Table> {
    let mut options = LoadOptions {
        name: name
            .map(str::to_string)
            .or_else(|| csv.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "table".into()),
        ..Default::default()
    };
    if let Some(path) = schema {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        options.schema = parse_schema(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let file = fs::File::open(csv).map_err(|e| format!("{}: {e}", csv.display()))?;
    load_table(std::io::BufReader::new(file), &options).map_err(|e| format!("{}: {e}", csv.display()))
}

fn parse_operators(text: &str) -> CliResult<Vec<Op>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Op::parse(s).ok_or_else(|| format!("unknown operator `{s}`")))
        .collect()
}

/// Validates every flag, then loads and prepares the table.
fn prepare(args: &RecommendArgs) -> CliResult<(PreparedDataset, RecommendRequest)> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str::<ExplorationConfig>(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ExplorationConfig::default(),
    };
    if let Some(ops) = &args.operators {
        config.operators = parse_operators(ops)?;
    }
    if args.max_features.is_some() {
        config.max_features = args.max_features;
    }
    if args.vc_dimension.is_some() {
        config.vc_dimension = args.vc_dimension;
    }
    config.validate().map_err(|e| e.to_string())?;
    if let Some(delta) = args.delta {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(format!("--delta must lie in (0, 1), got {delta}"));
        }
    }
    if let Some(e) = args.eps_v {
        if !(0.0..=1.0).contains(&e) {
            return Err(format!("--eps-v must lie in [0, 1], got {e}"));
        }
    }
    let reference = match args.reference.as_deref() {
        None => Predicate::truth(),
        Some(text) if text.trim_start().starts_with('{') => Predicate::from_json(text).map_err(|e| e.to_string())?,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            Predicate::from_json(&text).map_err(|e| format!("{path}: {e}"))?
        }
    };
    let request = RecommendRequest {
        reference,
        group_by: args.group_by.clone(),
        delta: args.delta,
        eps_v: args.eps_v,
        one_sample: args.one_sample.then_some(true),
    };

    let table = read_table(&args.csv, args.schema.as_deref(), args.name.as_deref())?;
    let prepared = PreparedDataset::prepare(&table, config).map_err(|e| e.to_string())?;
    for drop in &prepared.report().dropped {
        log::info!("dropped `{}` ({:?}, statistic {})", drop.feature, drop.reason, drop.statistic);
    }
    Ok((prepared, request))
}
