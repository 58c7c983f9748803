use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use radcompat::compat::Ordering;
use radcompat::manifest::{load_manifest, validate_manifest, write_phantom_study, AnalysisConfig};
use radcompat::model::{enumerate_conditions, ConditionGridConfig, Kernel};
use radcompat::phantom::{generate_cohort_phantoms, CohortJitter, PhantomSpec, TextureModel};
use radcompat::report::{render_report, ReportFormat, ReportKind};
use radcompat::store::{run_study, ResultsStore, RunOptions};
use radcompat::Error;

/// Reproducibility of CT radiomic features across reconstruction conditions.
#[derive(Debug, Parser)]
#[command(name = "radcompat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic nodule cohort and a ready-to-run manifest.
    Phantom(PhantomArgs),
    /// Run a study manifest into a results store.
    Run(RunArgs),
    /// Emit a report from a completed results store.
    Report(ReportArgs),
}

#[derive(Debug, clap::Args)]
struct PhantomArgs {
    /// Number of cases.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    cohort: u32,
    /// Seed for the cohort variation, textures and simulated noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for NRRD files and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Nominal nodule radius in mm.
    #[arg(long, default_value_t = 7.0)]
    radius_mm: f64,
    #[arg(long, value_enum, default_value_t = Texture::Gaussian)]
    texture: Texture,
    /// Per-case variation of radius, texture and position.
    #[arg(long, value_enum, default_value_t = Jitter::Standard)]
    jitter: Jitter,
    #[arg(long, default_value = "phantom-study")]
    study_id: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Texture {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Jitter {
    None,
    Standard,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    manifest: PathBuf,
    /// Results directory [default: <manifest dir>/results].
    #[arg(long)]
    store: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long, env = "RADCOMPAT_THREADS")]
    threads: Option<usize>,
    /// Discard existing results instead of resuming.
    #[arg(long)]
    force: bool,
    /// Override grid.doses, e.g. 1.0,0.5.
    #[arg(long, value_delimiter = ',')]
    grid_doses: Option<Vec<f64>>,
    /// Override grid.kernels by name, e.g. I26f,B70f.
    #[arg(long, value_delimiter = ',')]
    grid_kernels: Option<Vec<String>>,
    /// Override grid.thicknessesMm, e.g. 5,1,0.6.
    #[arg(long, value_delimiter = ',')]
    grid_thicknesses: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    Map,
    Kernel,
    Thickness,
    Dose,
    Volumes,
    Features,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Ppm,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Order {
    Canonical,
    Total,
}

#[derive(Debug, clap::Args)]
struct ReportArgs {
    store: PathBuf,
    #[arg(value_enum)]
    which: Which,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Row/column order of the `map` report.
    #[arg(long, value_enum, default_value_t = Order::Canonical)]
    order: Order,
}

/// Exit status with a message for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Manifest { .. } | Error::Invalid { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn phantom(args: PhantomArgs) -> Result<(), Failure> {
    let mut spec = PhantomSpec {
        radii_mm: [args.radius_mm; 3],
        ..PhantomSpec::default()
    };
    if let Texture::Uniform = args.texture {
        spec.texture_model = TextureModel::Uniform;
    }
    spec.validate()?;
    let jitter = match args.jitter {
        Jitter::None => CohortJitter::default(),
        Jitter::Standard => CohortJitter::standard(),
    };
    let cases = generate_cohort_phantoms(args.cohort as usize, &spec, &jitter, args.seed)?;
    let mut analysis = AnalysisConfig::default();
    analysis.simulator.seed = args.seed;
    let path = write_phantom_study(
        &args.out,
        &args.study_id,
        &cases,
        &ConditionGridConfig::default(),
        &analysis,
    )?;
    log::info!("wrote {} cases and {}", cases.len(), path.display());
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut manifest = load_manifest(&args.manifest)?;
    if let Some(d) = args.grid_doses {
        manifest.grid.doses = d;
    }
    if let Some(names) = args.grid_kernels {
        manifest.grid.kernels = names
            .iter()
            .map(|n| Kernel::from_name(n))
            .collect::<radcompat::Result<_>>()?;
    }
    if let Some(t) = args.grid_thicknesses {
        manifest.grid.thicknesses_mm = t;
    }
    validate_manifest(&manifest)?;
    let store_dir = args.store.unwrap_or_else(|| {
        args.manifest
            .parent()
            .unwrap_or(Path::new("."))
            .join("results")
    });
    let store = ResultsStore::new(&store_dir);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure { code: 1, message: e.to_string() })?;
    let conditions = enumerate_conditions(&manifest.grid)?.len();
    log::info!(
        "study {}: {} cases x {conditions} conditions on {} threads -> {}",
        manifest.study_id,
        manifest.cases.len(),
        pool.current_num_threads(),
        store_dir.display()
    );
    let summary = pool.install(|| {
        run_study(
            &manifest,
            Some(&args.manifest),
            &store,
            RunOptions { force: args.force },
        )
    })?;
    log::info!(
        "computed {} series, reused {}",
        summary.computed_series,
        summary.skipped_series
    );
    if summary.is_success() {
        Ok(())
    } else {
        let list: Vec<String> = summary
            .failed_cases
            .iter()
            .map(|f| format!("  {}: {}", f.case_id, f.reason))
            .collect();
        Err(Failure {
            code: 1,
            message: format!("{} case(s) failed:\n{}", list.len(), list.join("\n")),
        })
    }
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let kind = match args.which {
        Which::Map => ReportKind::Map,
        Which::Kernel => ReportKind::Kernel,
        Which::Thickness => ReportKind::Thickness,
        Which::Dose => ReportKind::Dose,
        Which::Volumes => ReportKind::Volumes,
        Which::Features => ReportKind::Features,
    };
    let format = match args.format {
        Format::Csv => ReportFormat::Csv,
        Format::Ppm => ReportFormat::Ppm,
        Format::Json => ReportFormat::Json,
    };
    let order = match args.order {
        Order::Canonical => Ordering::Canonical,
        Order::Total => Ordering::ByTotalCompatibility,
    };
    let store = ResultsStore::new(&args.store);
    let bytes = render_report(&store, kind, format, order)?;
    let written = match &args.out {
        Some(p) => std::fs::write(p, &bytes).map_err(|e| (p.display().to_string(), e)),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| ("stdout".to_string(), e)),
    };
    written.map_err(|(what, e)| Failure {
        code: 1,
        message: format!("{what}: {e}"),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Phantom(a) => phantom(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
