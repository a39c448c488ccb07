use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use flowerbed::bounds::{delta_bookkeeping, edge_budget, main_length_bound};
use flowerbed::experiment::{run, ExperimentConfig};
use flowerbed::report::write_slice_csv;
use flowerbed::slicing::find_small_slice;
use flowerbed::{ModelKind, ModelManifold};

#[derive(Parser)]
#[command(name = "flowerbed", version, about = "Geodesic flowers on model manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its artifacts.
    Run {
        config: PathBuf,
        /// Worker threads (default: all processors).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Find the first end slice whose level sets have volume at most eps.
    Slice {
        /// sphere, torus, cusp, double-cusp or warped3.
        #[arg(long)]
        model: String,
        #[arg(long)]
        eps: f64,
        /// Warp rate (cusp models) or size (sphere radius, torus side).
        #[arg(long)]
        rate: Option<f64>,
        /// CSV destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the edge and length budgets for dimension n and volume vol.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        vol: f64,
        #[arg(long)]
        delta: Option<f64>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, workers } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let summary = run(&cfg)?;
            let table = std::fs::read_to_string(summary.output_dir.join("summary.txt"))
                .context("reading the summary back")?;
            print!("{table}");
            if summary.failures() > 0 {
                eprintln!("{} run(s) failed; see summary.csv", summary.failures());
            }
            Ok(())
        }
        Command::Slice { model, eps, rate, out } => {
            let m = ModelManifold::new(ModelKind::from_name(&model, rate)?)?;
            let slice = find_small_slice(&m, eps)?;
            match out {
                Some(path) => {
                    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    write_slice_csv(f, &slice, &model, eps)?;
                }
                None => write_slice_csv(io::stdout().lock(), &slice, &model, eps)?,
            }
            Ok(())
        }
        Command::Bounds { n, vol, delta } => {
            if n < 2 {
                bail!("n must be at least 2");
            }
            if !(vol > 0.0) {
                bail!("vol must be positive");
            }
            let mut out = io::stdout().lock();
            writeln!(out, "main_length_bound = {}", main_length_bound(n, vol))?;
            writeln!(out, "edge_budget = {}", edge_budget(n))?;
            if let Some(d) = delta {
                if !(d > 0.0) {
                    bail!("delta must be positive");
                }
                let b = delta_bookkeeping(n, d);
                writeln!(out, "delta1 = {}", b.delta1)?;
                writeln!(out, "L_E = {}", b.l_e(vol))?;
                writeln!(out, "L_delta = {}", b.l_delta(vol))?;
                writeln!(
                    out,
                    "identity binom(n+2,2)*L_E = L_delta: {} (relative residual {:e})",
                    if b.identity_holds(vol) { "holds" } else { "FAILS" },
                    b.identity_residual(vol)
                )?;
            }
            Ok(())
        }
    }
}
