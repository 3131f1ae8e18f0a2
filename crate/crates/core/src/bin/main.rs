use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use surfflow::config::parse_config;
use surfflow::driver::{convergence, monotone, simulate, StudyMode};

/// Thread count for assembly and block solves.
const THREADS_VAR: &str = "SURFFLOW_THREADS";

#[derive(Parser)]
#[command(name = "surfflow", version, about = "Evolving surface FEM for generalized mean curvature flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow, writing VTK snapshots and series.csv.
    Simulate { config: PathBuf },
    /// Convergence study against the exact sphere solution.
    Convergence {
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Simulate, then report monotonicity of the Hawking mass and the Schulze quantity.
    Monotone { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Space,
    Time,
}

fn run(cli: Cli) -> surfflow::Result<bool> {
    match cli.command {
        Command::Simulate { config } => {
            let cfg = parse_config(&config)?;
            let s = simulate(&cfg)?;
            println!(
                "{} steps to t = {:.6}, {} snapshots, {} clamped values",
                s.steps,
                s.final_time,
                s.snapshots.len(),
                s.clamp_total
            );
            Ok(true)
        }
        Command::Convergence { config, mode, levels } => {
            let cfg = parse_config(&config)?;
            let (mode, name) = match mode {
                Mode::Space => (StudyMode::Space, "space"),
                Mode::Time => (StudyMode::Time, "time"),
            };
            let table = convergence(&cfg, mode, levels)?;
            print!("{table}");
            std::fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join(format!("convergence_{name}.csv"));
            std::fs::write(&path, table.to_csv())?;
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::Monotone { config } => {
            let cfg = parse_config(&config)?;
            let (s, report) = monotone(&cfg)?;
            println!("{} steps to t = {:.6}", s.steps, s.final_time);
            print!("{report}");
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            _ => {
                eprintln!("error: {THREADS_VAR} must be a positive integer, got {v:?}");
                return ExitCode::FAILURE;
            }
        }
    }
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
