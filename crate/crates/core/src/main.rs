use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use insulation::cli::{run, Command};
use insulation::io::{parse_config_with, read_text};
use insulation::Error;

/// Optimal boundary insulation: thin-layer, Robin and reduced solvers.
///
/// Set INSULATION_THREADS to bound the worker threads.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a configuration key, e.g. `--set solver.h=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Triangulate the body (and the layer if `solver.epsilon` is set).
    Mesh(Common),
    /// Solve the Robin limit problem.
    SolveLimit(Common),
    /// Solve the thin-layer problem at `solver.epsilon`.
    SolveEps(Common),
    /// Solve the reduced convex problem for `mass`.
    SolveReduced(Common),
    /// Optimal thickness from a nodal field (default: the reduced minimizer).
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Nodal field CSV (`node,x,y,u`) on the bulk mesh.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Layer energies against the limit over `solver.epsilon_list`.
    GammaSweep(Common),
    /// Boundary-layer integrals against their limit.
    CheckLebesgue(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Ok(n) = std::env::var("INSULATION_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: INSULATION_THREADS must be a positive integer, got `{n}`");
                return ExitCode::from(1);
            }
        }
    }
    let (command, common, field) = match args.command {
        Cmd::Mesh(c) => (Command::Mesh, c, None),
        Cmd::SolveLimit(c) => (Command::SolveLimit, c, None),
        Cmd::SolveEps(c) => (Command::SolveEps, c, None),
        Cmd::SolveReduced(c) => (Command::SolveReduced, c, None),
        Cmd::Reconstruct { common, field } => (Command::Reconstruct, common, field),
        Cmd::GammaSweep(c) => (Command::GammaSweep, c, None),
        Cmd::CheckLebesgue(c) => (Command::CheckLebesgue, c, None),
    };
    match execute(command, &common, field) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}

fn execute(command: Command, common: &Common, field: Option<PathBuf>) -> Result<(), Error> {
    let text = read_text(&common.config)?;
    let config = parse_config_with(&text, &common.overrides)?;
    let base = common
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let outcome = run(command, &config, &base, field.as_deref())?;
    let paths: Vec<PathBuf> = outcome.artifacts.paths().map(PathBuf::from).collect();
    outcome.artifacts.commit()?;
    for line in &outcome.lines {
        println!("{line}");
    }
    for p in paths {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}
