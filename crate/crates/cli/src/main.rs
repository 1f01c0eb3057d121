//! `rskpca` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a bound is violated where its
//! precondition holds, 2 on any input or runtime error.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rskpca::dataio::{self, Config, DataSet};
use rskpca::experiment::{self, ExperimentSpec, Method, Table};
use rskpca::kpca::{load_model, project, save_model};
use rskpca::{Error, KernelConfig, KernelFamily, Result};

#[derive(Parser)]
#[command(
    name = "rskpca",
    version,
    about = "Reduced-set kernel PCA experiments and tools"
)]
struct Cli {
    /// Overrides the seed of a spec file; default 0 elsewhere.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving CSV and plot-data output.
    #[arg(long, global = true, default_value = "results")]
    out_dir: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Sparse `label index:value` file, or `.csv`.
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    /// Built-in generator instead of a file: german, redundant or blobs.
    #[arg(long)]
    synthetic: Option<String>,
    /// Sample count for --synthetic.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// 0-based label column for CSV input.
    #[arg(long)]
    label_column: Option<usize>,
}

impl DataArgs {
    fn load(&self, seed: u64) -> Result<DataSet> {
        match (&self.dataset, &self.synthetic) {
            (Some(p), _) => dataio::load_any(p, self.label_column),
            (None, Some(name)) => dataio::synthetic(name, self.n, seed),
            (None, None) => Err(Error::InvalidParameter(
                "pass --dataset or --synthetic".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a flat JSON spec.
    Run { spec: PathBuf },
    /// Check the four discrepancy bounds for shadow reductions over an ℓ sweep.
    Bounds {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value = "gaussian")]
        kernel: KernelFamily,
        #[arg(long, default_value_t = 3.0)]
        ell_min: f64,
        #[arg(long, default_value_t = 5.0)]
        ell_max: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Eigenspace dimension for the projection bound.
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Train a model and save it.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        /// full, shadow, subsampled, nystrom, wnystrom, kmeans, paring or herding.
        #[arg(long, default_value = "shadow")]
        method: String,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value = "gaussian")]
        kernel: KernelFamily,
        #[arg(long, default_value_t = 5)]
        rank: usize,
        /// Shadow parameter (shadow method).
        #[arg(long, default_value_t = 4.0)]
        ell: f64,
        /// Subset or center count (other non-full methods).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        model: PathBuf,
    },
    /// Embed a dataset with a saved model; writes one CSV row per point.
    Project {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        output: PathBuf,
    },
}

enum Outcome {
    Ok,
    Violation,
}

fn report_paths(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn run_spec(path: &Path, seed: Option<u64>, out_dir: &Path) -> Result<Outcome> {
    let mut config = Config::load(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let spec = ExperimentSpec::from_config(config)?;
    let ds = spec.config.dataset()?;
    let report = experiment::run(&spec, &ds)?;
    report_paths(&experiment::emit_report(&report, out_dir)?);
    Ok(if report.violations().is_empty() {
        Outcome::Ok
    } else {
        Outcome::Violation
    })
}

fn execute(cli: Cli) -> Result<Outcome> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Run { spec } => run_spec(&spec, cli.seed, &cli.out_dir),
        Command::Bounds {
            data,
            sigma,
            kernel,
            ell_min,
            ell_max,
            step,
            dim,
        } => {
            let ds = data.load(seed)?;
            let mut config = Config {
                experiment: "bounds".into(),
                kernel_family: kernel,
                kernel_sigma: Some(sigma),
                ell_min,
                ell_max,
                ell_step: step,
                bounds_dim: dim,
                seed,
                ..Config::default()
            };
            config.timing_enabled = false;
            let spec = ExperimentSpec::from_config(config)?;
            let report = experiment::run(&spec, &ds)?;
            if let Table::Bounds(rows) = &report.table {
                let stdout = std::io::stdout();
                let mut out = stdout.lock();
                writeln!(out, "{}", rskpca::metrics::BoundReport::CSV_HEADER)?;
                for r in rows {
                    writeln!(out, "{}", r.csv_row())?;
                }
            }
            report_paths(&experiment::emit_report(&report, &cli.out_dir)?);
            let violations = report.violations();
            for v in &violations {
                eprintln!("bound violated: {v}");
            }
            Ok(if violations.is_empty() {
                Outcome::Ok
            } else {
                Outcome::Violation
            })
        }
        Command::Fit {
            data,
            method,
            sigma,
            kernel,
            rank,
            ell,
            m,
            model,
        } => {
            let ds = data.load(seed)?;
            let method = Method::parse(&method)?;
            let cfg = KernelConfig::new(kernel, sigma)?;
            let needs_m = !matches!(method, Method::Full | Method::Shadow);
            let m = match m {
                Some(m) => m,
                None if needs_m => {
                    return Err(Error::InvalidParameter(format!(
                        "--m is required for {}",
                        method.name()
                    )))
                }
                None => ds.n(),
            };
            let fitted = experiment::fit_by_method(method, &ds.points, &cfg, ell, m, rank, seed)?;
            save_model(&fitted, BufWriter::new(fs::File::create(&model)?))?;
            eprintln!(
                "saved {} model: basis {}, rank {}",
                fitted.variant.name(),
                fitted.basis_len(),
                fitted.rank()
            );
            Ok(Outcome::Ok)
        }
        Command::Project {
            model,
            data,
            output,
        } => {
            let model = load_model(BufReader::new(fs::File::open(&model)?))?;
            let ds = data.load(seed)?;
            let emb = project(&model, &ds.points)?;
            let mut w = BufWriter::new(fs::File::create(&output)?);
            for row in emb.row_iter() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
            w.flush()?;
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
