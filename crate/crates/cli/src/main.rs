//! `psuper`: runs p-supersolution experiments from a TOML config and
//! exposes the solvers on raw grid dumps.
//!
//! Exit codes: 0 success, 1 an experiment failed or a pass flag is false,
//! 2 bad config, arguments or input files, 3 artifacts could not be written.

mod commands;
mod config;
mod error;
mod experiments;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "psuper", version, about = "Approximation of p-supersolutions")]
struct Cli {
    /// TOML experiment config (required by `run`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory; overrides the config, defaults to `out`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; overrides the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every experiment in the config and write CSV/JSON reports.
    Run,
    /// Sample a closed-form solution into a raw dump.
    Tabulate(commands::TabulateArgs),
    /// Dirichlet problem for a measure or density dump.
    SolveElliptic(commands::EllipticArgs),
    /// Cauchy-Dirichlet problem, one dump per time level.
    SolveParabolic(commands::ParabolicArgs),
    /// Elliptic obstacle problem.
    Obstacle(commands::ObstacleArgs),
    /// Norms of a dump as CSV on stdout.
    Norms(commands::NormsArgs),
}

fn stamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string()
}

fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        b = b.num_threads(t);
    }
    b.build().map_err(CliError::experiment)
}

fn run(cli: &Cli) -> CliResult<()> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("`run` needs --config".into()))?;
    let cfg = RunConfig::load(path)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out_dir = cli.out_dir.clone().or(cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let opts = cfg.solver.options();
    if cfg.experiments.is_empty() {
        log::info!("no experiments configured");
        return Ok(());
    }

    let pool = pool(cli.threads.or(cfg.threads))?;
    let results: Vec<_> = pool.install(|| {
        cfg.experiments
            .par_iter()
            .map(|spec| {
                log::info!("start {}", spec.name());
                experiments::run(spec, seed, &opts)
            })
            .collect()
    });

    // assembly stays on this thread, in config order
    let stamp = stamp();
    let mut failed = Vec::new();
    for (spec, res) in cfg.experiments.iter().zip(results) {
        match res {
            Ok(report) => {
                println!("{}", report.summary_line());
                std::fs::create_dir_all(&out_dir)
                    .map_err(|e| CliError::output(format!("{}: {e}", out_dir.display())))?;
                let (csv, json) =
                    report.write_artifacts(&out_dir, spec.n(), spec.p(), &stamp).map_err(CliError::output)?;
                log::info!("wrote {} and {}", csv.display(), json.display());
                if !report.passed() {
                    failed.push(format!("{}: flags {:?}", report.name, report.flags));
                }
            }
            Err(e) => {
                println!("{}: ERROR {e}", spec.name());
                failed.push(format!("{}: {e}", spec.name()));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Experiment(failed.join("; ")))
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let stamp = stamp();
    let out = commands::Output { dir: Path::new(&out_dir), stamp: &stamp };
    let announce = |p: PathBuf| println!("{}", p.display());
    match &cli.command {
        Command::Run => run(cli),
        Command::Tabulate(a) => commands::tabulate(a, &out).map(announce),
        Command::SolveElliptic(a) => commands::solve_elliptic(a, &out).map(announce),
        Command::Obstacle(a) => commands::obstacle(a, &out).map(announce),
        Command::SolveParabolic(a) => {
            let paths = commands::solve_parabolic(a, &out)?;
            paths.into_iter().for_each(announce);
            Ok(())
        }
        Command::Norms(a) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            commands::norms(a, &mut lock)?;
            lock.flush().map_err(CliError::output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("psuper: {e}");
            e.exit_code()
        }
    }
}
