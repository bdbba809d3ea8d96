use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod scenario;
mod svg;

use scenario::Scenario;

#[derive(Parser, Debug)]
#[command(
    name = "gfmc",
    version,
    about = "Grid-forming converter modeling and stability analysis"
)]
struct Cli {
    /// JSON scenario file; the built-in Table I profile when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve and print the steady-state operating point.
    OperatingPoint,
    /// Characteristic polynomial, roots and verdict as CSV.
    Linearize {
        /// proposed, static or line.
        #[arg(long)]
        variant: Option<String>,
        /// Damping: a value, a list `a,b,c` or a range `start:stop:step`.
        #[arg(long)]
        dg: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation and write its trace as CSV.
    Simulate {
        /// timedomain, phasor, static or line.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        dg: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write an SVG plot of p_g and q_g next to the CSV.
        #[arg(long)]
        svg: bool,
    },
    /// Dominant root over a damping sweep as CSV.
    Sweep {
        #[arg(long)]
        variant: Option<String>,
        /// Defaults to 4:30:2.
        #[arg(long)]
        dg: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the four-model comparison and the damping locus on Table I and
    /// write fig3_locus.csv, fig4_compare.csv and verdicts.txt.
    ReproducePaper {
        #[arg(long, default_value = "gfmc-paper")]
        out: PathBuf,
    },
    /// Print the effective scenario as JSON, a starting point for edits.
    ShowScenario,
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let scenario = match &cli.scenario {
        Some(path) => Scenario::load(path)?,
        None => Scenario::default(),
    };
    match cli.command {
        Command::OperatingPoint => commands::operating_point(&scenario),
        Command::Linearize { variant, dg, out } => {
            commands::linearize(&scenario, variant.as_deref(), dg.as_deref(), out.as_deref())
        }
        Command::Simulate {
            variant,
            dg,
            out,
            svg,
        } => commands::simulate(&scenario, variant.as_deref(), dg, &out, svg),
        Command::Sweep { variant, dg, out } => {
            commands::sweep(&scenario, variant.as_deref(), dg.as_deref(), out.as_deref())
        }
        Command::ReproducePaper { out } => commands::reproduce_paper(&out),
        Command::ShowScenario => {
            println!("{}", scenario.to_json()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
