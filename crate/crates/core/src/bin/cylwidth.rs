use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cylwidth::experiment::{run, Command, ExperimentConfig, Format};
use cylwidth::Error;

/// Cylindrical width experiments: T-norms, dyadic measures, orbit widths,
/// lower-bound witnesses and real reductions.
///
/// Exit status: 0 success, 2 invalid input, 3 a guaranteed bound was missed
/// (the report is still written), 1 anything else.
#[derive(Parser)]
#[command(name = "cylwidth", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Gaussian T-norm statistics per d, with and without the sum-zero projection.
    #[command(after_help = "CSV columns: d,trials,mean_ratio,max_ratio,median_ratio,mean_ratio_sum_zero,max_ratio_sum_zero,median_ratio_sum_zero")]
    Tnorm(Common),
    /// Mean squared width under the dyadic measure, for a random and the witness vector.
    #[command(after_help = "CSV columns: d,k,j_count,test_vector,trials,mean_sup_sq,std_err,normalized")]
    Scaling(Common),
    /// Adversarial search for a real subspace of small width against the witness orbit.
    #[command(after_help = "CSV columns: d,k,restarts,steps,min_width,normalized,evaluations")]
    Lowerbound(Common),
    /// Complex-to-real subspace reduction on an enumerated orbit.
    #[command(after_help = "CSV columns: d,k,orbit_size,candidates,complex_width,real_width,ratio,s_2k,selected_s_k,real_basis")]
    Realize(Common),
    /// Random instances of the Gram eigenvalue / row-sum inequality.
    #[command(after_help = "CSV columns: d,instances,max_m,violations,max_excess")]
    SelbergFuzz(Common),
    /// Random column selections and s_2k checks for [Re B | Im B].
    #[command(after_help = "CSV columns: d,k,trials,min_ratio,min_vs_exhaustive,selection_failures,min_s_2k,s_2k_violations")]
    RipFuzz(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// JSON config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    /// Subspace dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Required, here or in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Dyadic index offset.
    #[arg(long, conflicts_with = "asymptotic_range")]
    delta: Option<u32>,
    /// Use the asymptotic dyadic index range instead of an offset.
    #[arg(long)]
    asymptotic_range: bool,
    /// ALTMAX restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Adversarial restarts.
    #[arg(long)]
    adversary_restarts: Option<usize>,
    /// Adversarial steps per restart.
    #[arg(long)]
    steps: Option<usize>,
    /// Group description (JSON).
    #[arg(long)]
    group: Option<PathBuf>,
    /// Real base point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    base_point: Option<Vec<f64>>,
    #[arg(long)]
    max_orbit: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(command: Command, a: Common) -> cylwidth::Result<ExperimentConfig> {
    let mut c = match &a.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    c.command = Some(command);
    if !a.d.is_empty() {
        c.d = a.d;
    }
    if !a.k.is_empty() {
        c.k = a.k;
    }
    if a.asymptotic_range {
        c.delta = None;
    } else if let Some(delta) = a.delta {
        c.delta = Some(delta);
    }
    c.trials = a.trials.unwrap_or(c.trials);
    c.seed = a.seed.or(c.seed);
    c.restarts = a.restarts.unwrap_or(c.restarts);
    c.adversary_restarts = a.adversary_restarts.unwrap_or(c.adversary_restarts);
    c.steps = a.steps.unwrap_or(c.steps);
    c.max_orbit = a.max_orbit.unwrap_or(c.max_orbit);
    c.group = a.group.or(c.group);
    c.base_point = a.base_point.or(c.base_point);
    c.out = a.out.or(c.out);
    if let Some(f) = a.format {
        c.format = match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        };
    }
    Ok(c)
}

fn execute(command: Command, args: Common) -> cylwidth::Result<Vec<String>> {
    let config = build_config(command, args)?;
    let output = run(&config)?;
    let bytes = output.to_bytes(config.format)?;
    match &config.out {
        Some(path) => std::fs::write(path, &bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(output.guarantee_failures())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Tnorm(a) => (Command::Tnorm, a),
        Cmd::Scaling(a) => (Command::Scaling, a),
        Cmd::Lowerbound(a) => (Command::Lowerbound, a),
        Cmd::Realize(a) => (Command::Realize, a),
        Cmd::SelbergFuzz(a) => (Command::SelbergFuzz, a),
        Cmd::RipFuzz(a) => (Command::RipFuzz, a),
    };
    match execute(command, args) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("guarantee missed: {f}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else if e.is_guarantee_missed() {
        3
    } else {
        1
    }
}
