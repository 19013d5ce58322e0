//! `rideshare`: evaluate, optimize and simulate fleet designs from scenario
//! and design files.
//!
//! Exit status: 0 on success, 1 on usage or I/O errors, 2 when the model
//! cannot be solved for the given inputs or a check fails.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rideshare", version, about = "Steady-state planning for shared ride-hailing fleets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and price one design.
    Evaluate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-zone metrics as CSV, ready for bar charts.
        #[arg(long)]
        emit_csv: Option<PathBuf>,
    },
    /// Search idle counts and path fractions for the cheapest design.
    Optimize {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 20190101)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        multistarts: usize,
        #[arg(long, default_value_t = 80)]
        max_iters: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        emit_csv: Option<PathBuf>,
    },
    /// Run the event simulator on an evaluated design.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value_t = 200.0)]
        hours: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replications: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Fleet size; defaults to the analytic fleet rounded up.
        #[arg(long)]
        fleet: Option<usize>,
        /// Write every state transition of the first replication as CSV.
        #[arg(long)]
        event_log: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo check of the geometric constants.
    Oracle {
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Relative tolerance for PASS.
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a scenario's demand from trip records.
    Ingest {
        /// CSV with pickup/dropoff zone or x/y columns and a timestamp.
        #[arg(long)]
        trips: PathBuf,
        /// Scenario supplying grid, speed and costs; its demand is replaced.
        #[arg(long)]
        template: PathBuf,
        /// Daily window, e.g. `7-10`; whole day when omitted.
        #[arg(long)]
        window: Option<String>,
        #[arg(long, default_value_t = 1)]
        days: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Route idle vehicles for a vector of net outflows.
    Rebalance {
        /// Scenario supplying the grid and speed.
        #[arg(long)]
        scenario: PathBuf,
        /// JSON array of net idle-vehicle outflow per zone (veh/hr).
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RIDESHARE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evaluate { scenario, design, out, emit_csv } => commands::evaluate(&scenario, &design, &out, emit_csv.as_deref()),
        Command::Optimize { scenario, seed, multistarts, max_iters, workers, out, emit_csv } => {
            commands::optimize(&scenario, seed, multistarts, max_iters, workers, &out, emit_csv.as_deref())
        }
        Command::Simulate { scenario, design, hours, seed, replications, workers, fleet, event_log, out } => {
            commands::simulate(&commands::SimArgs {
                scenario,
                design,
                hours,
                seed,
                replications,
                workers,
                fleet,
                event_log,
                out,
            })
        }
        Command::Oracle { samples, seed, tol, out } => commands::oracle(samples, seed, tol, out.as_deref()),
        Command::Ingest { trips, template, window, days, out } => commands::ingest(&trips, &template, window.as_deref(), days, &out),
        Command::Rebalance { scenario, rho, out } => commands::rebalance(&scenario, &rho, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
