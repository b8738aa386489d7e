//! `sentinel` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or schema error, 3 internal error.

use std::fmt::Write as _;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Utc;
use clap::{Parser, Subcommand};
use tracing::{info, warn};

use sentinel_core::config::EngineConfig;
use sentinel_core::dataset::{
    generate_synthetic, load_csv, stratified_split, write_csv, LabeledDataset, SyntheticConfig,
};
use sentinel_core::features::{canonicalize, FixtureProvider, MetadataProvider, NullProvider};
use sentinel_core::metrics::Metrics;
use sentinel_core::models::{load_bundle, save_bundle, train_ensemble, Ensemble, Resample};
use sentinel_core::pipeline::extract;
use sentinel_core::reputation::ReputationStore;
use sentinel_core::scoring::{assess, evaluate, RiskAssessment};
use sentinel_core::FEATURE_NAMES;
use sentinel_service::{check_bundle, AppState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

const ANALYZE_TOP_N: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "sentinel", version, about = "Website risk-scoring engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic feature dataset as CSV.
    GenData {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        fraud_ratio: f64,
        #[arg(long, default_value_t = 1.0)]
        separation: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified train/test split of a CSV dataset.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        test_fraction: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Train the ensemble and write a model bundle.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_bundle: PathBuf,
        /// Overrides the configured resampling strategy.
        #[arg(long)]
        resample: Option<Resample>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Evaluate a bundle on a labeled CSV dataset.
    Eval {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also print the metrics as one JSON line.
        #[arg(long)]
        json: bool,
    },
    /// Score a single URL, optionally with a saved page.
    Analyze {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        url: String,
        #[arg(long)]
        html: Option<PathBuf>,
        /// Domain metadata fixture (JSON object keyed by host).
        #[arg(long)]
        metadata: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Reputation journal; overrides the configured store path.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

type CliResult = Result<(), CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult {
    match cmd {
        Command::GenData {
            n,
            fraud_ratio,
            separation,
            seed,
            out: path,
        } => {
            let ds = generate_synthetic(&SyntheticConfig {
                n,
                fraud_ratio,
                separation,
                seed,
            })
            .map_err(|e| data(format!("--n/--fraud-ratio/--separation: {e}")))?;
            write_dataset(&ds, &path)?;
            say(
                out,
                &format!(
                    "wrote {} rows ({} fraud) to {}",
                    ds.len(),
                    ds.count(sentinel_core::dataset::Label::Fraud),
                    path.display()
                ),
            )
        }
        Command::Split {
            data: path,
            test_fraction,
            seed,
            train_out,
            test_out,
        } => {
            let ds = load_csv(&path).map_err(data)?;
            let (train, test) = stratified_split(&ds, test_fraction, seed)
                .map_err(|e| data(format!("{}: {e}", path.display())))?;
            write_dataset(&train, &train_out)?;
            write_dataset(&test, &test_out)?;
            say(
                out,
                &format!(
                    "train {} rows -> {}\ntest {} rows -> {}",
                    train.len(),
                    train_out.display(),
                    test.len(),
                    test_out.display()
                ),
            )
        }
        Command::Train {
            data: path,
            config,
            out_bundle,
            resample,
            seed,
        } => {
            let cfg = load_config(config.as_deref())?;
            let ds = load_training_set(&path)?;
            let mut params = cfg.models.clone();
            if let Some(r) = resample {
                params.resample = r;
            }
            let started = std::time::Instant::now();
            let e = train_ensemble(&ds, &params, seed)
                .map_err(|e| data(format!("{}: {e}", path.display())))?;
            info!(
                elapsed_ms = started.elapsed().as_millis() as u64,
                "trained ensemble"
            );
            save_bundle(&e, &out_bundle).map_err(internal)?;
            say(
                out,
                &format!(
                    "trained on {} rows (resample {}, seed {seed}) -> {}",
                    ds.len(),
                    format!("{:?}", params.resample).to_lowercase(),
                    out_bundle.display()
                ),
            )
        }
        Command::Eval {
            bundle,
            data: path,
            config,
            json,
        } => {
            let cfg = load_config(config.as_deref())?;
            let e = load_checked_bundle(&bundle)?;
            let ds = load_csv(&path).map_err(data)?;
            if ds.feature_names != e.manifest {
                return Err(data(format!(
                    "{}: columns do not match the bundle manifest",
                    path.display()
                )));
            }
            let m = evaluate(&e, &ds, &cfg.scoring).map_err(internal)?;
            say(out, &eval_report(&m, json))
        }
        Command::Analyze {
            bundle,
            url,
            html,
            metadata,
            config,
        } => {
            let cfg = load_config(config.as_deref())?;
            let e = load_checked_bundle(&bundle)?;
            let html = html
                .map(|p| {
                    std::fs::read_to_string(&p)
                        .map_err(|err| data(format!("--html {}: {err}", p.display())))
                })
                .transpose()?;
            let provider = metadata_provider(
                metadata
                    .as_deref()
                    .or(cfg.service.metadata_fixture.as_deref()),
            )?;
            let now = Utc::now();
            let x = extract(
                &url,
                html.as_deref(),
                provider.as_ref(),
                now.date_naive(),
                &cfg.features,
                &cfg.content,
            )
            .map_err(|err| data(format!("--url: {err}")))?;
            let a = assess(&e, x.vector.as_slice(), &cfg.scoring, now).map_err(internal)?;
            let canonical = canonicalize(&url).map_err(|err| data(format!("--url: {err}")))?;
            say(out, &analyze_report(&canonical, &a))
        }
        Command::Serve {
            bundle,
            store,
            port,
            host,
            config,
        } => {
            let cfg = load_config(config.as_deref())?;
            serve(cfg, bundle, store, SocketAddr::new(host, port))
        }
    }
}

fn say(out: &mut dyn Write, text: &str) -> CliResult {
    writeln!(out, "{text}").map_err(internal)
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig, CliError> {
    EngineConfig::resolve(path).map_err(data)
}

fn load_training_set(path: &Path) -> Result<LabeledDataset, CliError> {
    let ds = load_csv(path).map_err(data)?;
    if ds
        .feature_names
        .iter()
        .map(String::as_str)
        .ne(FEATURE_NAMES.iter().copied())
    {
        return Err(data(format!(
            "{}: columns do not match the feature manifest",
            path.display()
        )));
    }
    Ok(ds)
}

fn load_checked_bundle(path: &Path) -> Result<Ensemble, CliError> {
    let e = load_bundle(path).map_err(|err| data(format!("--bundle {}: {err}", path.display())))?;
    check_bundle(&e).map_err(|err| data(format!("--bundle {}: {err}", path.display())))?;
    Ok(e)
}

fn write_dataset(ds: &LabeledDataset, path: &Path) -> CliResult {
    let file =
        std::fs::File::create(path).map_err(|e| internal(format!("{}: {e}", path.display())))?;
    write_csv(ds, std::io::BufWriter::new(file))
        .map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn metadata_provider(path: Option<&Path>) -> Result<Arc<dyn MetadataProvider>, CliError> {
    Ok(match path {
        Some(p) => Arc::new(FixtureProvider::load(p).map_err(data)?),
        None => Arc::new(NullProvider),
    })
}

/// Fixed-format table, plus a JSON line when requested.
pub fn eval_report(m: &Metrics, json: bool) -> String {
    let mut s = m.table();
    if json {
        let line = serde_json::to_string(m).unwrap_or_default();
        let _ = write!(s, "\n{line}");
    }
    s.trim_end().to_string()
}

pub fn analyze_report(canonical: &str, a: &RiskAssessment) -> String {
    let mut s = format!(
        "url      {canonical}\nscore    {:.2}\nverdict  {}\ntop features",
        a.score, a.verdict
    );
    for c in a.explanation.iter().take(ANALYZE_TOP_N) {
        let _ = write!(s, "\n  {:<28} {:+.2}", c.feature, c.delta);
    }
    s
}

fn serve(
    cfg: EngineConfig,
    bundle: Option<PathBuf>,
    store: Option<PathBuf>,
    addr: SocketAddr,
) -> CliResult {
    let bundle = match &bundle {
        Some(p) => Some(load_checked_bundle(p)?),
        None => {
            warn!("no --bundle given; unknown URLs will get 503 bundle_not_loaded");
            None
        }
    };
    let now = Utc::now().timestamp();
    let ttl = cfg.store.ttl_seconds;
    let store_path = store.or_else(|| cfg.store.path.clone());
    let rep = match &store_path {
        Some(p) => {
            let (rep, corrupt) = ReputationStore::open(p, ttl, now).map_err(data)?;
            for c in &corrupt {
                warn!(error = %c, "skipped journal line");
            }
            rep
        }
        None => ReputationStore::new(ttl),
    };
    if let Some(seeds) = &cfg.store.seed_list {
        let n = rep.load_seed_list(seeds, now).map_err(data)?;
        info!(entries = n, path = %seeds.display(), "loaded seed list");
    }
    let provider = metadata_provider(cfg.service.metadata_fixture.as_deref())?;
    let state = AppState::new(cfg, bundle, Arc::new(rep), provider).map_err(data)?;
    let rt = tokio::runtime::Runtime::new().map_err(internal)?;
    rt.block_on(sentinel_service::serve(Arc::new(state), addr))
        .map_err(|e| internal(format!("serving on {addr}: {e}")))
}
