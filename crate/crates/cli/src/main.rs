use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quadmpc_cli::bench::{self, millis, TimingStats};
use quadmpc_cli::output::Timing;
use quadmpc_cli::run_config;

#[derive(Parser)]
#[command(name = "quadmpc", version, about = "Quadrotor MPC path-following scenarios and timing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write trajectory.csv, summary.txt and plot.py
    Run {
        /// Scenario file (TOML)
        config: PathBuf,

        /// Output directory, created if missing
        #[arg(long)]
        out: PathBuf,

        /// Write measured solve times to the solve_ms column instead of zeros
        #[arg(long)]
        with_timing: bool,
    },
    /// Time controller ticks on the bundled circle scenario
    Bench {
        /// Number of ticks
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        iters: u64,

        /// Also time the step-time sweep from 0.08 s to 2 s
        #[arg(long)]
        dt_sweep: bool,
    },
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with configuration errors; 2 is
    // reserved for runs that fail part-way.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            with_timing,
        } => {
            let timing = if with_timing { Timing::Measured } else { Timing::Zeroed };
            match run_config(&config, &out, timing) {
                Ok(outcome) => {
                    print!("{}", outcome.summary.render());
                    println!("wrote {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
            }
        }
        Command::Bench { iters, dt_sweep } => match bench_command(iters as usize, dt_sweep) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}

fn describe(label: &str, stats: &TimingStats) {
    if stats.samples == 1 {
        println!("{label}: {:.3} ms", millis(stats.mean));
    } else {
        println!(
            "{label}: n={} mean={:.3} ms median={:.3} ms p99={:.3} ms max={:.3} ms",
            stats.samples,
            millis(stats.mean),
            millis(stats.median),
            millis(stats.p99),
            millis(stats.max)
        );
    }
}

fn bench_command(iters: usize, dt_sweep: bool) -> anyhow::Result<()> {
    let scenario = bench::circle_scenario(quadmpc::predictor::DEFAULT_DT)?;
    let ticks = bench::closed_loop_ticks(&scenario, iters)?;
    describe("closed-loop tick", &TimingStats::from_samples(&ticks).expect("iters ≥ 1"));
    if iters > 1 {
        let solves = bench::repeated_first_tick(&scenario, iters)?;
        describe("repeated first-tick solve", &TimingStats::from_samples(&solves).expect("iters ≥ 1"));
    }
    if dt_sweep {
        println!("{:>8} {:>12} {:>12}", "dt [s]", "mean [ms]", "p99 [ms]");
        for (dt, stats) in bench::dt_sweep(iters)? {
            println!("{dt:>8.2} {:>12.3} {:>12.3}", millis(stats.mean), millis(stats.p99));
        }
    }
    Ok(())
}
