use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use smtp_core::harness::{compare_methods, parse_config, prepare, run_experiment, ExperimentConfig, OUT_DIR_ENV};
use smtp_core::Error;

const DEFAULT_OUT_DIR: &str = "smtp-out";

#[derive(Parser)]
#[command(name = "smtp", version, about = "Run three-point derivative-free optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a config, write CSV traces and summary.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory. Falls back to the config's `output`, then $SMTP_OUT_DIR.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run this single seed instead of the config's list.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for running seeds in parallel.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare evaluations-to-target across configs sharing one objective.
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        configs: Vec<PathBuf>,
        /// Also write the CSV table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

fn out_dir(cli: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    cli.or_else(|| config.output.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run { config, out, seed, jobs } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            let dir = out_dir(out, &cfg);
            let summary = run_experiment(&cfg, &dir, jobs)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for s in &summary.seeds {
                let gap = s.final_gap.map_or_else(|| "n/a".to_string(), |g| format!("{g:.6e}"));
                println!(
                    "seed {}: {} iterations, {} evaluations, final gap {gap}, stop {}",
                    s.seed,
                    s.iterations,
                    s.evaluations,
                    s.stop.as_str()
                );
            }
            if let Some(e) = &summary.envelope {
                for c in &e.checkpoints {
                    println!(
                        "envelope {} k={}: observed {:.6e} vs bound {:.6e} ({})",
                        e.theorem,
                        c.k,
                        c.observed,
                        c.bound,
                        if c.pass { "ok" } else { "FAIL" }
                    );
                }
            }
            println!("wrote {}", dir.display());
            Ok(summary.exit_code() as u8)
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let prepared = prepare(&cfg)?;
            for w in &prepared.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "ok: {} on {} (d={}), {} schedule, {} seed(s)",
                cfg.method,
                cfg.objective.name(),
                cfg.dim(),
                cfg.schedule.kind.as_str(),
                cfg.seeds.len()
            );
            Ok(0)
        }
        Command::Compare { configs, out, jobs } => {
            let labelled = configs
                .iter()
                .map(|p| {
                    let label = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                    load(p).map(|c| (label, c))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let table = compare_methods(&labelled, jobs)?;
            let csv = table.to_csv();
            print!("{csv}");
            if let Some(path) = out {
                fs::write(&path, csv).map_err(|source| Error::Io { path, source })?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
