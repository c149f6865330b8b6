use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use polyrec_core::datagen::{generate_dataset, verify_dataset, GenerationConfig, ImageRecord, Manifest};
use polyrec_core::error::{ConfigError, DatasetError, EvalError, GeometryError, RasterError};
use polyrec_core::evalmetrics::{
    accuracy_by_cell, export_report, load_baseline, load_predictions, topk_accuracy,
};
use polyrec_core::geometry::{DegradationKind, DegradationSpec, PolygonSpec};
use polyrec_core::raster::{decode_png, encode_png, measure_degradation};
use polyrec_core::Workers;
use polyrec_trials::{SessionFilter, TrialConfig, TrialError, TrialStore};

#[derive(Debug, Parser)]
#[command(
    name = "polyrec",
    version,
    about = "Perimeter-degraded polygon datasets and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset.
    Gen(GenArgs),
    /// Degrade one whole-shape PNG.
    Degrade(DegradeArgs),
    /// Re-measure a dataset against its manifest.
    Verify(VerifyArgs),
    /// Score a predictions CSV and export tables and plots.
    Eval(EvalArgs),
    /// Run the human trial service.
    Serve(ServeArgs),
    /// Write recorded trial responses as a predictions CSV.
    ExportHuman(ExportArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// JSON generation config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config's.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    r_min: Option<f64>,
    /// Sample a fresh polygon for every degraded cell.
    #[arg(long)]
    resample: bool,
}

#[derive(Debug, Args)]
struct DegradeArgs {
    /// Whole-shape PNG.
    #[arg(long)]
    image: PathBuf,
    /// Polygon JSON: a manifest record or a bare polygon spec.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    kind: DegradationKind,
    #[arg(long)]
    proportion: f64,
    /// Output PNG.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Dataset directory or manifest.jsonl.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.04)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Write the full report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Dataset directory or manifest.jsonl.
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for cells.csv, curves.csv and the SVG plots.
    #[arg(long)]
    out: PathBuf,
    /// Human baseline CSV (p_d,kind,accuracy) to overlay.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Also report top-k accuracy.
    #[arg(long)]
    topk: Option<usize>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Dataset directory or manifest.jsonl.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, env = "POLYREC_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Response log (JSONL, appended).
    #[arg(long, default_value = "trials.jsonl")]
    log: PathBuf,
    /// JSON trial config (exposures_ms, mask).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "trials.jsonl")]
    log: PathBuf,
    /// Session to export; repeat for several. All sessions when absent.
    #[arg(long = "session")]
    sessions: Vec<String>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Validation = 1,
    Io = 2,
}

fn classify(err: &anyhow::Error) -> Class {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<DatasetError>() {
            return if e.is_io() { Class::Io } else { Class::Validation };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return if matches!(e, EvalError::Io { .. }) {
                Class::Io
            } else {
                Class::Validation
            };
        }
        if let Some(e) = cause.downcast_ref::<TrialError>() {
            return if matches!(e, TrialError::Io { .. }) {
                Class::Io
            } else {
                Class::Validation
            };
        }
        if cause.is::<std::io::Error>() {
            return Class::Io;
        }
        if cause.is::<ConfigError>()
            || cause.is::<GeometryError>()
            || cause.is::<RasterError>()
            || cause.is::<serde_json::Error>()
        {
            return Class::Validation;
        }
    }
    Class::Validation
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err) as u8)
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Degrade(a) => degrade(a),
        Command::Verify(a) => verify(a),
        Command::Eval(a) => eval(a),
        Command::Serve(a) => serve(a),
        Command::ExportHuman(a) => export_human(a),
    }
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn gen(a: GenArgs) -> anyhow::Result<ExitCode> {
    let mut config = match &a.config {
        Some(path) => GenerationConfig::from_json(&String::from_utf8_lossy(&read(path)?))
            .with_context(|| format!("config {}", path.display()))?,
        None => GenerationConfig::default(),
    };
    if let Some(out) = a.out {
        config.output_dir = Some(out);
    }
    if let Some(seed) = a.seed {
        config.master_seed = seed;
    }
    if let Some(n) = a.per_class {
        config.per_class_whole = n;
    }
    if let Some(r) = a.r_min {
        config.r_min = r;
    }
    config.resample_per_cell |= a.resample;
    if config.output_dir.is_none() {
        anyhow::bail!(ConfigError::Invalid(
            "an output directory is required (--out)".into()
        ));
    }
    let start = std::time::Instant::now();
    let manifest = generate_dataset(&config, Workers(a.workers))?;
    println!(
        "wrote {} images to {} in {:.1}s",
        manifest.len(),
        manifest.root.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn degrade(a: DegradeArgs) -> anyhow::Result<ExitCode> {
    let text = read(&a.spec)?;
    let polygon = match serde_json::from_slice::<ImageRecord>(&text) {
        Ok(record) => record.polygon,
        Err(_) => serde_json::from_slice::<PolygonSpec>(&text).with_context(|| {
            format!(
                "{}: neither a manifest record nor a polygon spec",
                a.spec.display()
            )
        })?,
    };
    let whole = decode_png(&read(&a.image)?)?;
    let deg = DegradationSpec::new(a.kind, a.proportion)?;
    let out = polyrec_core::datagen::degrade_canvas(&whole, &polygon, &deg)?;
    write(&a.out, &encode_png(&out)?)?;
    println!(
        "measured erasure {:.4} (declared {})",
        measure_degradation(&whole, &out)?,
        deg.proportion
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let manifest = Manifest::load(&a.dataset)?;
    let report = verify_dataset(&manifest, a.tolerance, Workers(a.workers))?;
    if let Some(out) = &a.out {
        write(out, &serde_json::to_vec_pretty(&report)?)?;
    }
    println!(
        "checked {} images: max |error| {:.4}, mean signed error {:+.4}, {} flagged",
        report.checked,
        report.max_abs_deviation,
        report.mean_signed_error,
        report.flagged.len()
    );
    for f in report.flagged.iter().take(20) {
        println!("  {}", serde_json::to_string(f)?);
    }
    Ok(if report.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(Class::Validation as u8)
    })
}

fn eval(a: EvalArgs) -> anyhow::Result<ExitCode> {
    let manifest = Manifest::load(&a.manifest)?;
    let preds = load_predictions(&a.predictions, &manifest)?;
    let report = accuracy_by_cell(&preds, &manifest)?;
    let baseline = a.baseline.as_deref().map(load_baseline).transpose()?;
    let files = export_report(&report, &a.out, baseline.as_deref())?;
    if let Some(acc) = report.overall_accuracy() {
        println!(
            "{}: {} predictions, overall accuracy {acc:.2}%",
            report.source,
            preds.len()
        );
    }
    for point in report.differential_curve().points {
        println!("  p_d {:.2}: edge - corner {:+.2}", point.p_d, point.value);
    }
    if let Some(k) = a.topk {
        println!("top-{k} accuracy {:.2}%", topk_accuracy(&preds, &manifest, k)?);
    }
    println!(
        "exports in {}",
        files.cells_csv.parent().unwrap_or(&a.out).display()
    );
    Ok(ExitCode::SUCCESS)
}

fn trial_config(path: Option<&Path>) -> anyhow::Result<TrialConfig> {
    Ok(match path {
        Some(p) => serde_json::from_slice(&read(p)?).with_context(|| format!("config {}", p.display()))?,
        None => TrialConfig::default(),
    })
}

fn serve(a: ServeArgs) -> anyhow::Result<ExitCode> {
    let manifest = Arc::new(Manifest::load(&a.dataset)?);
    let store = Arc::new(TrialStore::open(
        manifest,
        trial_config(a.config.as_deref())?,
        &a.log,
    )?);
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((a.bind.as_str(), a.port))
            .await
            .with_context(|| format!("binding {}:{}", a.bind, a.port))?;
        log::info!("serving trials on http://{}", listener.local_addr()?);
        polyrec_trials::serve(listener, store, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .context("server")
    })?;
    Ok(ExitCode::SUCCESS)
}

fn export_human(a: ExportArgs) -> anyhow::Result<ExitCode> {
    let manifest = Arc::new(Manifest::load(&a.dataset)?);
    let store = TrialStore::open(manifest, TrialConfig::default(), &a.log)?;
    let filter = if a.sessions.is_empty() {
        SessionFilter::All
    } else {
        SessionFilter::Ids(a.sessions)
    };
    let csv = store.export_human_predictions(&filter);
    match &a.out {
        Some(path) => write(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}
