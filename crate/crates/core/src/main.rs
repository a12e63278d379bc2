use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use critical_tree::experiments::{
    apply_seed_override, read_record, report, run, tables_to_json, ExperimentConfig, ExperimentKind, OutputFormat,
};
use critical_tree::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "critical-tree", version, about = "Experiments on the critical birth-death model of viral types")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo hitting times with an ECDF comparison.
    HittingCdf(RunArgs),
    /// Solve the renewal equation for the hitting-time CDF.
    RenewalSolve(RunArgs),
    /// Compare the renewal solution with the truncated forward equations.
    OdeOracle(RunArgs),
    /// Moment integrals, tail products and Laplace transforms.
    Tauberian(RunArgs),
    /// Persistence probability of the maximal type.
    Persistence(RunArgs),
    /// Total time of n returns, scaled by n log n.
    TnScaling(RunArgs),
    /// Residuals of the generating-function identity.
    GfIdentity(RunArgs),
    /// Merge result records of one experiment kind into a table.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// `*.record.json` files written by earlier runs.
    #[arg(required = true)]
    records: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        Error::Config { .. } | Error::InvalidParameter { .. } => ExitCode::from(EXIT_VALIDATION),
        _ => ExitCode::FAILURE,
    }
}

fn load_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let cfg = ExperimentConfig::parse(&text)?;
            let names_experiment = text
                .lines()
                .filter_map(|l| l.split('#').next()?.split_once('='))
                .any(|(k, _)| k.trim() == "experiment");
            if names_experiment && cfg.experiment != kind {
                return Err(Error::Config {
                    keys: vec!["experiment".into()],
                    details: vec![format!(
                        "experiment: config names {} but the subcommand is {}",
                        cfg.experiment.as_str(),
                        kind.as_str()
                    )],
                });
            }
            cfg
        }
        None => ExperimentConfig::default(),
    };
    cfg.experiment = kind;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    if let Some(format) = args.format {
        cfg.format = format.into();
    }
    Ok(cfg)
}

fn run_experiment(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    if args.workers == Some(0) {
        return fail(Error::Config {
            keys: vec!["workers".into()],
            details: vec!["workers: must be at least 1".into()],
        });
    }
    let mut cfg = match load_config(kind, args) {
        Ok(cfg) => cfg,
        Err(e) => return fail(e),
    };
    let seed_override = match apply_seed_override(&mut cfg) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    if let Some(seed) = seed_override {
        eprintln!("seed overridden from environment: {seed}");
    }
    match run(&cfg, args.workers, seed_override) {
        Ok(record) => {
            for path in &record.outputs {
                eprintln!("wrote {}", path.display());
            }
            eprintln!("{:.3} s", record.wall_clock_seconds);
            if record.partial() {
                eprintln!(
                    "{} of {} replicates hit a resource cap",
                    record.counters.censored, record.counters.replicates
                );
                ExitCode::from(EXIT_PARTIAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => fail(e),
    }
}

fn run_report(args: &ReportArgs) -> ExitCode {
    let records = match args.records.iter().map(|p| read_record(p)).collect::<Result<Vec<_>, _>>() {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let table = match report(&records) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let text = match args.format {
        Format::Csv => table.to_csv(),
        Format::Json => tables_to_json(std::slice::from_ref(&table)),
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                return fail(e.into());
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::HittingCdf(a) => (ExperimentKind::HittingCdf, a),
        Command::RenewalSolve(a) => (ExperimentKind::RenewalSolve, a),
        Command::OdeOracle(a) => (ExperimentKind::OdeOracle, a),
        Command::Tauberian(a) => (ExperimentKind::Tauberian, a),
        Command::Persistence(a) => (ExperimentKind::Persistence, a),
        Command::TnScaling(a) => (ExperimentKind::TnScaling, a),
        Command::GfIdentity(a) => (ExperimentKind::GfIdentity, a),
        Command::Report(a) => return run_report(a),
    };
    run_experiment(kind, args)
}
