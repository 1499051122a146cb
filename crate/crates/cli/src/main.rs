mod commands;
mod config;
mod logging;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Imbalanced classification experiments with weighted hybrid-sampling boosting.
#[derive(Parser)]
#[command(name = "whsboost", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic datasets described by `simulation.*` blocks.
    Simulate(Paths),
    /// Run every pipeline on every dataset and write result tables.
    Bench(Paths),
    /// Pairwise signed-rank tests over stored result tables.
    Stats(Paths),
}

#[derive(clap::Args)]
struct Paths {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Environment variable that sets the number of worker threads.
const WORKERS_VAR: &str = "WHSBOOST_WORKERS";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; --help and --version are not.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    run(&cli.command)
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn run(command: &Command) -> ExitCode {
    let paths = match command {
        Command::Simulate(p) | Command::Bench(p) | Command::Stats(p) => p,
    };
    let cfg = match config::load(&paths.config) {
        Ok(c) => c,
        Err(e) => return fail(1, e),
    };
    let Some(out) = paths.out.clone().or_else(|| cfg.out.clone()) else {
        return fail(1, "no output directory: pass --out or set `out` in the config");
    };
    if let Err(e) = std::fs::create_dir_all(&out) {
        return fail(1, format!("cannot create {}: {e}", out.display()));
    }
    if let Err(e) = logging::init(&out.join("run.log")) {
        return fail(1, format!("cannot open run log: {e}"));
    }
    if let Ok(v) = std::env::var(WORKERS_VAR) {
        let n = match v.parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => return fail(1, format!("{WORKERS_VAR} must be a positive integer, got `{v}`")),
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(1, format!("cannot start {n} workers: {e}"));
        }
    }
    log::info!("config {} (seed {})", cfg.path.display(), cfg.seed);

    let result = match command {
        Command::Simulate(_) => commands::simulate(&cfg, &out),
        Command::Bench(_) => commands::bench(&cfg, &out),
        Command::Stats(_) => commands::stats(&cfg, &out),
    };
    let code = match result {
        Ok(o) if o.partial => {
            log::warn!("finished with pipeline failures; see summary.json");
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("{:#}", f.error());
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code())
        }
    };
    log::logger().flush();
    code
}
