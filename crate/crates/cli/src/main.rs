use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fracball_cli::commands::{cmd_conjecture, cmd_eigs, cmd_morse, cmd_solve, cmd_verify_all};
use fracball_cli::config::{CampaignConfig, OutputFormat, MAX_ORACLE_LEVEL};
use fracball_cli::{exit, exit_code, write_output};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Eigs,
    Conjecture,
    Solve,
    Morse,
    VerifyAll,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

/// Spectral and Morse-index campaigns for the fractional Laplacian on the unit ball.
#[derive(Debug, Parser)]
#[command(name = "fracball", version)]
struct Cli {
    command: Command,
    /// Campaign configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Campaign seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; falls back to FRACBALL_JOBS, then to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Quadrature level for oracle checks (overrides `oracle.level`).
    #[arg(long)]
    oracle_budget: Option<usize>,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("fracball: {msg}");
    ExitCode::from(exit::INFRASTRUCTURE as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", cli.config.display())),
    };
    let mut cfg = match CampaignConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(format!("{}: {e}", cli.config.display())),
    };
    if let Some(dir) = cli.out {
        cfg.output_dir = dir;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(level) = cli.oracle_budget {
        if level > MAX_ORACLE_LEVEL {
            return fail(format!(
                "--oracle-budget must be at most {MAX_ORACLE_LEVEL}"
            ));
        }
        cfg.oracle_level = level;
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Both => OutputFormat::Both,
        };
    }
    if let Err(e) = cfg.validate() {
        return fail(e);
    }
    let jobs = match cli.jobs {
        Some(j) => Some(j),
        None => match std::env::var("FRACBALL_JOBS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(j) => Some(j),
                Err(_) => return fail(format!("FRACBALL_JOBS is not a thread count: `{v}`")),
            },
            Err(_) => None,
        },
    };
    if let Some(j) = jobs.filter(|&j| j > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
        {
            return fail(e);
        }
    }

    let out = match cli.command {
        Command::Eigs => cmd_eigs(&cfg),
        Command::Conjecture => cmd_conjecture(&cfg),
        Command::Solve => cmd_solve(&cfg),
        Command::Morse => cmd_morse(&cfg),
        Command::VerifyAll => cmd_verify_all(&cfg),
    };
    for line in &out.summary {
        println!("{line}");
    }
    if let Err(e) = write_output(&out, &cfg.output_dir, cfg.format) {
        return fail(format!("cannot write {}: {e}", cfg.output_dir.display()));
    }
    println!("wrote {}", cfg.output_dir.display());
    ExitCode::from(exit_code(&out) as u8)
}
