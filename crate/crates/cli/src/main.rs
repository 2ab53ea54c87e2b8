use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use icnsim_core::experiment::{build_realizations, expand_and_run, load_config, RunOptions};
use icnsim_core::metrics::{write_long_csv, write_summary_csv};

#[derive(Parser, Debug)]
#[command(
    name = "icnsim",
    version,
    about = "NDN cache replacement policy simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment sweep described by a TOML config.
    Run(RunArgs),
}

#[derive(Parser, Debug)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Summary CSV destination; stdout when omitted. A long-format
    /// `<stem>.long.csv` is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long)]
    parallel: Option<usize>,
    /// Regenerate the WS topology this many times (cells ws-topo-1..N).
    #[arg(long)]
    topology_realizations: Option<u32>,
    /// Write the (first) topology in the topology file format.
    #[arg(long)]
    emit_topology: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(code) => code,
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
        },
    }
}

fn long_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}.long.csv"))
}

fn run(args: &RunArgs) -> Result<ExitCode, String> {
    let mut cfg = load_config(&args.config).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(count) = args.topology_realizations {
        cfg.topology_realizations = Some(count);
    }
    if args.parallel == Some(0) {
        return Err("--parallel must be at least 1".into());
    }
    cfg.validate().map_err(|e| e.to_string())?;

    if let Some(path) = &args.emit_topology {
        let realizations = build_realizations(&cfg).map_err(|e| e.to_string())?;
        let text = realizations[0].graph.to_topology_text();
        fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }

    let started = Instant::now();
    let outcome = expand_and_run(
        &cfg,
        RunOptions {
            parallel: args.parallel,
        },
    )
    .map_err(|e| e.to_string())?;
    let cells = outcome.summaries();

    if !args.quiet {
        eprintln!(
            "{} runs, {} cells, {} failed, {:.1}s",
            outcome.reports.len() + outcome.failures.len(),
            cells.len(),
            outcome.failures.len(),
            started.elapsed().as_secs_f64()
        );
    }
    for failure in &outcome.failures {
        eprintln!(
            "failed cell: {} (seed {}): {}",
            failure.cell, failure.seed, failure.error
        );
    }

    if !cells.is_empty() {
        match &args.out {
            Some(path) => {
                let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
                write_summary_csv(&cells, BufWriter::new(file)).map_err(|e| e.to_string())?;
                let long = long_path(path);
                let file = File::create(&long).map_err(|e| format!("{}: {e}", long.display()))?;
                write_long_csv(&cells, BufWriter::new(file)).map_err(|e| e.to_string())?;
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                write_summary_csv(&cells, &mut lock).map_err(|e| e.to_string())?;
                lock.flush().map_err(|e| e.to_string())?;
            }
        }
    }

    Ok(if outcome.is_complete() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
