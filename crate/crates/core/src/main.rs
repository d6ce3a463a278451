//! `memteach` command line.
//!
//! Exit codes: 0 success, 1 internal failure, 2 usage error, 3 invalid
//! configuration or incomplete input, 4 I/O or parse failure, 5 output
//! directory locked by another run.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use memteach::analysis::{analyze_dir, write_analysis};
use memteach::config::ExperimentConfig;
use memteach::simulator::{write_outputs, Simulation};
use memteach::tutor::config::ServiceConfig;
use memteach::tutor::service::ServiceError;
use memteach::{Error, ModelKind};

#[derive(Parser)]
#[command(name = "memteach", version, about = "Adaptive vocabulary teaching: simulate, analyze, serve")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Full,
    Desk,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulated experiment and write metric tables.
    Simulate {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; existing outputs are overwritten.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare each model-based arm with Leitner.
    Analyze {
        /// Directory written by `simulate`.
        dir: PathBuf,
        /// Where to write analysis.tsv, boxplot.tsv and report.txt (default: DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the tutor HTTP service until interrupted.
    Serve {
        /// Service config (TOML); MEMTEACH_* variables override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print an experiment config to start from.
    Template {
        #[arg(value_enum, default_value = "desk")]
        preset: Preset,
        #[arg(long, value_enum, default_value = "isef")]
        model: ModelArg,
        #[arg(long)]
        omniscient: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Isef,
    Ef,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("{} is locked by another run; delete {} if none is active", .dir.display(), .lock.display())]
    Locked { dir: PathBuf, lock: PathBuf },
    #[error("{}: {source}", .path.display())]
    Read { path: PathBuf, source: std::io::Error },
}

fn core_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 3,
        Error::Io(_) | Error::Parse { .. } => 4,
        _ => 1,
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) | CliError::Service(ServiceError::Core(e)) => core_code(e),
            CliError::Service(_) => 1,
            CliError::Locked { .. } => 5,
            CliError::Read { .. } => 4,
        }
    }
}

/// Held while a command writes into a directory.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(Error::Io)?;
        let lock = dir.join(".memteach.lock");
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => Ok(Self(lock)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Locked { dir: dir.to_path_buf(), lock })
            }
            Err(e) => Err(Error::Io(e).into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn simulate(config: &Path, out: &Path, threads: Option<usize>) -> Result<(), CliError> {
    let text = fs::read_to_string(config).map_err(|source| CliError::Read { path: config.into(), source })?;
    let cfg = ExperimentConfig::from_toml(&text)?;
    let _lock = DirLock::acquire(out)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("threads: {e}")))?;
    }
    tracing::info!(learners = cfg.population_size, items = cfg.item_count, teachers = ?cfg.teachers, "simulating");
    let started = std::time::Instant::now();
    let result = Simulation::new(cfg.clone())?.run()?;
    let paths = write_outputs(out, &cfg, &result)?;
    tracing::info!(seconds = started.elapsed().as_secs_f64(), "done");
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn analyze(dir: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let out = out.unwrap_or(dir);
    let _lock = DirLock::acquire(out)?;
    let analysis = analyze_dir(dir)?;
    write_analysis(out, &analysis)?;
    print!("{}", analysis.report());
    Ok(())
}

fn serve(config: Option<&Path>) -> Result<(), CliError> {
    let cfg = ServiceConfig::load(config)?;
    let rt = tokio::runtime::Runtime::new().map_err(Error::Io)?;
    rt.block_on(memteach::tutor::http::serve(cfg))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, threads } => simulate(&config, &out, threads),
        Command::Analyze { dir, out } => analyze(&dir, out.as_deref()),
        Command::Serve { config } => serve(config.as_deref()),
        Command::Template { preset, model, omniscient } => {
            let model = match model {
                ModelArg::Isef => ModelKind::Isef,
                ModelArg::Ef => ModelKind::Ef,
            };
            let cfg = match preset {
                Preset::Full => ExperimentConfig::full_scale(model, omniscient),
                Preset::Desk => ExperimentConfig::desk_scale(model, omniscient),
            };
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
