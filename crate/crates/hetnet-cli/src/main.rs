//! Command-line front end: preset catalog, simulation runs, analytic
//! indices, visibility classification, and SVG plotting.
//!
//! Exit codes: 0 success, 1 usage or scenario parse error, 2 numerical
//! failure, 3 partial batch failure.

mod commands;
mod scenario;
mod svg;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hetnet",
    about = "Simulation and classification toolkit for heteroclinic cycles and networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in parameter sets with their predicted regimes.
    Presets,
    /// Integrate a scenario and write trajectory/itinerary tables.
    Simulate {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        tmax: Option<f64>,
        /// Output directory (default: run-<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG plots.
        #[arg(long)]
        plots: bool,
        /// Logarithmic ordinate for the time-series plot.
        #[arg(long, conflicts_with = "linear")]
        log: bool,
        /// Linear ordinate for the time-series plot.
        #[arg(long)]
        linear: bool,
    },
    /// Print the analytic stability indices of a parameter set.
    Indices {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Write the report as JSON to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte Carlo visibility and stability classification.
    Classify {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated delta ladder override.
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        /// Samples per delta rung.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Render previously computed tables as SVG plots.
    Plot {
        /// Input CSV (trajectory or pentacle table).
        #[arg(long)]
        data: PathBuf,
        /// "timeseries" or "pentacle".
        #[arg(long, default_value = "timeseries")]
        kind: String,
        #[arg(long, conflicts_with = "linear")]
        log: bool,
        #[arg(long)]
        linear: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("HETNET_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are success, not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Presets => commands::cmd_presets(),
        Command::Simulate {
            scenario,
            preset,
            tmax,
            out,
            plots,
            log,
            linear,
        } => commands::cmd_simulate(scenario, preset, tmax, out, plots, log, linear),
        Command::Indices {
            preset,
            scenario,
            out,
        } => commands::cmd_indices(preset, scenario, out),
        Command::Classify {
            scenario,
            preset,
            seed,
            out,
            delta,
            epsilon,
            tmax,
            samples,
        } => commands::cmd_classify(scenario, preset, seed, out, delta, epsilon, tmax, samples),
        Command::Plot {
            data,
            kind,
            log,
            linear,
            out,
        } => commands::cmd_plot(data, kind, log, linear, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code_for(&e))
        }
    }
}
