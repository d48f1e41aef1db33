use clap::{Args, Parser, Subcommand};
use seqcomm::cli::{
    self, cmd_detect, cmd_select_alpha, cmd_simulate, render_text, CliError, InputFormat,
};
use seqcomm::report::RunReport;
use std::path::PathBuf;
use std::process::ExitCode;

/// Seed fallback when neither --seed nor the environment provides one.
const DEFAULT_SEED: u64 = 42;
const SEED_ENV: &str = "SEQCOMM_SEED";

#[derive(Parser)]
#[command(
    name = "seqcomm",
    about = "Sequential community detection with tolerance-ratio calibrated significance levels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Master seed; overrides the SEQCOMM_SEED environment variable.
    #[arg(long)]
    seed: Option<u64>,
    /// Bootstrap sample size per test.
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
    /// Stage cap on the number of communities tested.
    #[arg(long, default_value_t = 20)]
    kmax: usize,
    /// Write the JSON report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock phase timings in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct InputOpts {
    /// Input file path.
    #[arg(long)]
    input: PathBuf,
    /// Input format: edge (edge list), adj (adjacency CSV), corr (correlation CSV).
    #[arg(long)]
    format: InputFormat,
    /// Threshold absolute correlations instead of signed values.
    #[arg(long)]
    abs_tau: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Planted-SBM simulation benchmark: mode of K-hat per alpha.
    Simulate {
        #[arg(long)]
        k0: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        /// Comma-separated significance levels.
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.2")]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sequential detection on one network: p-values, step function, K*.
    Detect {
        #[command(flatten)]
        input: InputOpts,
        /// Correlation threshold (required for corr input).
        #[arg(long)]
        tau: Option<f64>,
        /// Report K-hat at this significance level.
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Select alpha matching a target tolerance ratio.
    SelectAlpha {
        #[command(flatten)]
        input: InputOpts,
        /// Single target tolerance ratio.
        #[arg(long)]
        gamma: Option<f64>,
        /// Comma-separated tolerance-ratio grid; overrides --gamma.
        #[arg(long, value_delimiter = ',')]
        gammas: Vec<f64>,
        /// Comma-separated correlation thresholds (corr input only).
        #[arg(long, value_delimiter = ',')]
        tau: Vec<f64>,
        /// Convergence precision for the selected alpha.
        #[arg(long, default_value_t = seqcomm::alpha::DEFAULT_EPS_ALPHA)]
        eps_alpha: f64,
        #[arg(long, default_value_t = seqcomm::alpha::DEFAULT_MAX_ROUNDS)]
        max_rounds: usize,
        /// Also write the (tau, gamma) grid as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var(SEED_ENV)
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
    })
    .unwrap_or(DEFAULT_SEED)
}

fn emit(report: &RunReport, out: Option<&PathBuf>) -> Result<(), CliError> {
    print!("{}", render_text(report));
    if let Some(path) = out {
        std::fs::write(path, report.to_json())
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Simulate {
            k0,
            n,
            eps,
            alphas,
            reps,
            common,
        } => {
            let seed = resolve_seed(common.seed);
            let report = cmd_simulate(
                k0,
                n,
                eps,
                &alphas,
                reps,
                common.bootstrap,
                common.kmax,
                seed,
                common.timings,
            )?;
            emit(&report, common.out.as_ref())
        }
        Command::Detect {
            input,
            tau,
            alpha,
            common,
        } => {
            let seed = resolve_seed(common.seed);
            let a = cli::load_graph(&input.input, input.format, tau, input.abs_tau)?;
            let mut inputs: Vec<(&str, serde_json::Value)> = vec![
                ("input", input.input.display().to_string().into()),
                ("format", format_name(input.format).into()),
            ];
            if let Some(t) = tau {
                inputs.push(("tau", t.into()));
            }
            let report = cmd_detect(
                &a,
                common.kmax,
                common.bootstrap,
                seed,
                alpha,
                &inputs,
                common.timings,
            )?;
            emit(&report, common.out.as_ref())
        }
        Command::SelectAlpha {
            input,
            gamma,
            gammas,
            tau,
            eps_alpha,
            max_rounds,
            csv,
            common,
        } => {
            let seed = resolve_seed(common.seed);
            let gammas: Vec<f64> = if gammas.is_empty() {
                gamma.into_iter().collect()
            } else {
                gammas
            };
            let taus: Vec<Option<f64>> = if input.format == InputFormat::CorrelationCsv {
                if tau.is_empty() {
                    return Err(CliError::Validation(
                        "--tau is required for correlation input".into(),
                    ));
                }
                tau.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            let path = input.input.clone();
            let format = input.format;
            let abs_tau = input.abs_tau;
            let mut inputs: Vec<(&str, serde_json::Value)> = vec![
                ("input", path.display().to_string().into()),
                ("format", format_name(format).into()),
            ];
            if abs_tau {
                inputs.push(("abs_tau", true.into()));
            }
            let report = cmd_select_alpha(
                |t| cli::load_graph(&path, format, t, abs_tau),
                &taus,
                &gammas,
                eps_alpha,
                common.bootstrap,
                common.kmax,
                max_rounds,
                seed,
                &inputs,
                common.timings,
            )?;
            emit(&report, common.out.as_ref())?;
            if let Some(csv_path) = csv {
                let rows = report.tolerance.as_deref().unwrap_or(&[]);
                std::fs::write(&csv_path, cli::tolerance_grid_csv(rows)).map_err(|e| {
                    CliError::Validation(format!("cannot write {}: {e}", csv_path.display()))
                })?;
            }
            Ok(())
        }
    }
}

fn format_name(f: InputFormat) -> &'static str {
    match f {
        InputFormat::EdgeList => "edge",
        InputFormat::AdjacencyCsv => "adj",
        InputFormat::CorrelationCsv => "corr",
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
