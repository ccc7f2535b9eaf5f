use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rmst_cli::analyze::{self, analyze};
use rmst_cli::plan::{self, plan, PlanRequest};
use rmst_cli::simulate::{plot_csv, render_table, simulate, SimulateOptions};
use rmst_cli::{config, data, CliError, Result};
use rmst_core::design::WeightPairing;
use rmst_core::regress::HcVariant;

#[derive(Parser)]
#[command(name = "rmst", version, about = "Covariate-adjusted RMST analysis via pseudovalue regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Hc {
    Hc0,
    Hc1,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pairing {
    AsPrinted,
    Swapped,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the RMST difference from a CSV dataset.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        tau: f64,
        /// Comma-separated covariate column names.
        #[arg(long, value_delimiter = ',')]
        covariates: Vec<String>,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, value_enum, default_value_t = Hc::Hc1)]
        hc: Hc,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the simulation scenarios of a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "RMST_THREADS")]
        threads: Option<usize>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write (r², variance reduction) plot data as CSV here.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Sample size with and without covariate adjustment.
    Plan {
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long, allow_hyphen_values = true)]
        r0: f64,
        #[arg(long, allow_hyphen_values = true)]
        r1: f64,
        #[arg(long)]
        pi: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.8)]
        power: f64,
        /// Per-subject pseudovalue variance without adjustment.
        #[arg(long = "var")]
        var: f64,
        #[arg(long, value_enum, default_value_t = Pairing::AsPrinted)]
        pairing: Pairing,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn write_file(path: &PathBuf, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(text: &str) -> Result<()> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze {
            data,
            tau,
            covariates,
            level,
            hc,
            out,
            format,
        } => {
            let covariates: Vec<String> = covariates.into_iter().filter(|c| !c.trim().is_empty()).collect();
            let dataset = data::read_csv(&data, &covariates)?;
            let hc = match hc {
                Hc::Hc0 => HcVariant::HC0,
                Hc::Hc1 => HcVariant::HC1,
            };
            let report = analyze(&dataset, tau, level, hc)?;
            let json = to_json(&report);
            if let Some(path) = &out {
                write_file(path, &json)?;
            }
            match format {
                Format::Text => emit(&analyze::render_text(&report)),
                Format::Json => emit(&json),
            }
        }
        Command::Simulate {
            config,
            replicates,
            seed,
            threads,
            out,
            plot,
            format,
        } => {
            if threads == Some(0) {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            let scenarios = config::load(&config)?;
            let report = simulate(&scenarios, SimulateOptions { replicates, seed, threads })?;
            let json = to_json(&report);
            if let Some(path) = &out {
                write_file(path, &json)?;
            }
            if let Some(path) = &plot {
                write_file(path, &plot_csv(&report))?;
            }
            match format {
                Format::Text => emit(&render_table(&report)),
                Format::Json => emit(&json),
            }
        }
        Command::Plan {
            delta,
            r0,
            r1,
            pi,
            alpha,
            power,
            var,
            pairing,
            format,
        } => {
            let pairing = match pairing {
                Pairing::AsPrinted => WeightPairing::AsPrinted,
                Pairing::Swapped => WeightPairing::Swapped,
            };
            let report = plan(&PlanRequest {
                delta,
                r0,
                r1,
                pi,
                alpha,
                power,
                base_var: var,
                pairing,
            })?;
            match format {
                Format::Text => emit(&plan::render_text(&report)),
                Format::Json => emit(&to_json(&report)),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
