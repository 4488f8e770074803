//! `raman-tda` command-line interface.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use raman_tda::config::RunConfig;
use raman_tda::dataset::{load_manifest, validate, Dataset};
use raman_tda::evaluate::grid_search;
use raman_tda::export::{export_features, write_run_outputs};
use raman_tda::{demo, Method, TransformKind, VectorizationConfig};

const EXIT_INVALID: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "raman-tda",
    version,
    about = "Topological classification of Raman spectra with leave-one-patient-out evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a manifest and print a JSON validation report.
    Validate {
        /// Manifest JSON listing {patient_id, session_id, label, file} records.
        manifest: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the configuration grid and write results.jsonl, report.csv,
    /// ranking.csv and report.txt.
    Run(RunArgs),
    /// Write one sample's persistence diagram and feature vector as CSV.
    ExportFeatures(ExportArgs),
    /// Generate the synthetic demo cohort (spectra, manifest.json, config.toml).
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; omitted keys take the reference-grid defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest to use instead of the one named in the config.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Maximum number of worker threads.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generate the synthetic demo cohort under <out>/demo-data and run on it.
    #[arg(long)]
    demo: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Sample id as patient_id/session_id (or a unique session_id).
    #[arg(long)]
    sample: String,
    /// raw, fourier, welch or autocorrelation.
    #[arg(long, default_value = "raw")]
    transform: TransformKind,
    /// persistence_image, landscape, silhouette or betti_curve (PI, PL, PS, BC also accepted).
    #[arg(long)]
    method: Method,
    /// Gaussian bandwidth for persistence images.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Grid resolution n; defaults to 10 for images and 100 for curves.
    #[arg(long)]
    resolution: Option<usize>,
    /// Landscape layers.
    #[arg(long, default_value_t = VectorizationConfig::DEFAULT_LAYERS)]
    layers: usize,
    /// Silhouette weight exponent.
    #[arg(long, default_value_t = VectorizationConfig::DEFAULT_POWER)]
    power: f64,
    /// Drop zero-persistence pairs before vectorizing.
    #[arg(long)]
    drop_zero: bool,
    #[arg(long, default_value = "features")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { manifest, out } => return cmd_validate(&manifest, out.as_deref()),
        Command::Run(args) => cmd_run(args),
        Command::ExportFeatures(args) => cmd_export(args),
        Command::Demo { out, seed } => demo::write(&out, seed)
            .map(|manifest| println!("wrote {}", manifest.display()))
            .map_err(|e| e.to_string()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn cmd_validate(manifest: &Path, out: Option<&Path>) -> ExitCode {
    let (json, ok) = match load_manifest(manifest) {
        Ok(dataset) => {
            let report = validate(&dataset);
            let ok = report.valid;
            (
                serde_json::to_string_pretty(&report).expect("report serializes"),
                ok,
            )
        }
        Err(e) => (
            serde_json::to_string_pretty(&serde_json::json!({
                "valid": false,
                "errors": [e.to_string()],
            }))
            .expect("json"),
            false,
        ),
    };
    println!("{json}");
    if let Some(path) = out {
        if let Err(e) = std::fs::write(path, format!("{json}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVALID)
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, String> {
    match path {
        Some(p) => RunConfig::from_file(p).map_err(|e| e.to_string()),
        None => Ok(RunConfig::default()),
    }
}

fn load_dataset(config: &RunConfig) -> Result<Dataset, String> {
    let manifest = config
        .manifest
        .as_ref()
        .ok_or("no manifest given (use --manifest, a config file, or --demo)")?;
    load_manifest(manifest).map_err(|e| e.to_string())
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(out) = args.out {
        config.out = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = Some(workers);
    }
    if let Some(manifest) = args.manifest {
        config.manifest = Some(manifest);
    }
    if args.demo {
        let dir = config.out.join("demo-data");
        let manifest = demo::write(&dir, config.seed).map_err(|e| e.to_string())?;
        config.manifest = Some(manifest);
    }
    config.validate().map_err(|e| e.to_string())?;

    let dataset = load_dataset(&config)?;
    let grid = config.pipeline_grid();
    log::info!(
        "evaluating {} configurations on {} samples",
        grid.len(),
        dataset.len()
    );
    let report = grid_search(&dataset, &grid, config.workers).map_err(|e| e.to_string())?;
    let written = write_run_outputs(&report, &config.out).map_err(|e| e.to_string())?;
    print!("{}", report.render_table());
    for path in written {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), String> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(manifest) = args.manifest {
        config.manifest = Some(manifest);
    }
    let dataset = load_dataset(&config)?;
    let vectorization = match args.method {
        Method::PersistenceImage => VectorizationConfig::PersistenceImage {
            sigma: args.sigma,
            resolution: args.resolution.unwrap_or(10),
        },
        Method::Landscape => VectorizationConfig::Landscape {
            layers: args.layers,
            resolution: args.resolution.unwrap_or(100),
        },
        Method::Silhouette => VectorizationConfig::Silhouette {
            power: args.power,
            resolution: args.resolution.unwrap_or(100),
        },
        Method::BettiCurve => VectorizationConfig::BettiCurve {
            resolution: args.resolution.unwrap_or(100),
        },
    };
    let exported = export_features(
        &dataset,
        &args.sample,
        args.transform,
        &config.welch,
        &vectorization,
        args.drop_zero,
        &args.out,
    )
    .map_err(|e| e.to_string())?;
    println!("{}", exported.diagram_csv.display());
    println!("{}", exported.features_csv.display());
    Ok(())
}
