use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use patch_uce::em_mom::{sweep_geometry, FrequencyGrid};
use patch_uce::geometry::{DesignSpace, PhysicalGeometry};
use patch_uce::harness::{self, BenchSpec, OptimizerName, RunSpec};
use patch_uce::{Error, Result};

#[derive(Parser)]
#[command(name = "patch-uce", version, about = "Microstrip patch design by uniform cross-entropy search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one geometry and write its S11 curve.
    Simulate {
        /// Geometry JSON (millimetres and feed cell).
        #[arg(long)]
        geometry: PathBuf,
        /// CSV with a `freq_hz` column; defaults to 101 points over 1-6 GHz.
        #[arg(long)]
        freqs: Option<PathBuf>,
        /// Cells per side of the simulation grid.
        #[arg(long, default_value_t = DesignSpace::default().grid_cells_per_side)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one optimizer with restarts against a target curve.
    Optimize {
        /// JSON run configuration; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        optimizer: Option<OptimizerName>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Target `freq_hz,s11_db` CSV; the bundled two-band target if omitted.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave wall times out of the CSV outputs.
        #[arg(long)]
        no_timing: bool,
    },
    /// Run several optimizers and write the comparison table.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_timing: bool,
    },
    /// Write the bundled two-band target curve.
    Target {
        #[arg(long)]
        out: PathBuf,
    },
}

fn write(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { geometry, freqs, grid, out } => {
            let space = DesignSpace::default().with_grid(grid);
            space.validate()?;
            let g = PhysicalGeometry::read(&geometry)?;
            let grid = match freqs {
                Some(path) => FrequencyGrid::read_csv(&path)?,
                None => FrequencyGrid::default_sweep(),
            };
            let curve = sweep_geometry(&g, &space, &grid)?;
            curve.write_csv(&out)?;
            println!("dip at {:.4} GHz", curve.dip_frequency_hz() / 1e9);
        }
        Command::Optimize { config, optimizer, seed, restarts, target, out, no_timing } => {
            let mut spec = match config {
                Some(path) => RunSpec::read(&path)?,
                None => RunSpec::default(),
            };
            spec.optimizer = optimizer.unwrap_or(spec.optimizer);
            spec.seed = seed.unwrap_or(spec.seed);
            spec.restarts = restarts.unwrap_or(spec.restarts);
            spec.target = target.or(spec.target);
            spec.out = out.or(spec.out);
            spec.timing &= !no_timing;
            let report = harness::run(&spec)?;
            let best = report.best();
            println!(
                "{}: best l2 error {:.3} (restart {}, huber {:.3})",
                spec.optimizer.as_str(),
                best.l2_error,
                best.restart,
                best.huber
            );
        }
        Command::Bench { config, out, no_timing } => {
            let mut bench = BenchSpec::read(&config)?;
            bench.run.out = out.or(bench.run.out);
            bench.run.timing &= !no_timing;
            let (table, _) = harness::benchmark(&bench.specs(), bench.run.out.as_deref())?;
            print!("{}", table.to_text());
        }
        Command::Target { out } => {
            write(&out, &harness::two_band_target().to_csv_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
