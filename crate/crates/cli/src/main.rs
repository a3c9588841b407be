use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use landmark2vec_cli::commands::{self, EvaluateOptions};
use landmark2vec_cli::config::{RunConfig, FULL_SCALE_MEASUREMENTS};
use landmark2vec_cli::CliError;

#[derive(Parser)]
#[command(
    name = "landmark2vec",
    version,
    about = "Unsupervised landmark map reconstruction"
)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Recipe file with `key = value` lines
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the recipe
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,

    /// Override any recipe key, e.g. `--set tau=0.025` (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Use the full measurement count of one million
    #[arg(long, global = true)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a landmark layout and synthetic measurements
    Simulate,
    /// Train the embedding network on a measurement CSV
    Train {
        /// Measurement CSV [default: <out>/measurements.csv]
        measurements: Option<PathBuf>,
    },
    /// Extract the landmark map from a trained model
    Infer {
        /// Model file [default: <out>/model.csv]
        model: Option<PathBuf>,
    },
    /// Score an estimated map against the true layout
    Evaluate {
        /// True layout CSV [default: <out>/layout.csv]
        truth: Option<PathBuf>,
        /// Estimated map CSV [default: <out>/map.csv]
        estimate: Option<PathBuf>,
        /// Also position every row of this measurement CSV by weighted centroid
        #[arg(long, value_name = "MEASUREMENTS")]
        agent: Option<PathBuf>,
        /// Also score the weighted-centroid baseline built from this labelled CSV
        #[arg(long, value_name = "MEASUREMENTS")]
        wcl: Option<PathBuf>,
    },
    /// Draw one map, or two side by side, as SVG
    Plot {
        /// Map CSV [default: <out>/layout.csv]
        map: Option<PathBuf>,
        /// Second map CSV [default: <out>/map.csv when MAP is omitted]
        second: Option<PathBuf>,
        /// Output file [default: <out>/plot.svg]
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if common.full_scale {
        config.num_measurements = FULL_SCALE_MEASUREMENTS;
    }
    for assignment in &common.overrides {
        config.set_flag(assignment)?;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = &cli.common.out;
    let config = load_config(&cli.common)?;
    match cli.command {
        Command::Simulate => {
            let sim = commands::simulate(&config, out)?;
            eprintln!(
                "wrote {} landmarks and {} measurements to {}",
                sim.layout.len(),
                sim.measurements.len(),
                out.display()
            );
        }
        Command::Train { measurements } => {
            let path = measurements.unwrap_or_else(|| out.join(commands::MEASUREMENTS_CSV));
            commands::train(&config, &path, out)?;
        }
        Command::Infer { model } => {
            let path = model.unwrap_or_else(|| out.join(commands::MODEL_CSV));
            let map = commands::infer(&path, out)?;
            eprintln!("wrote {} landmark positions", map.len());
        }
        Command::Evaluate {
            truth,
            estimate,
            agent,
            wcl,
        } => {
            let truth = truth.unwrap_or_else(|| out.join(commands::LAYOUT_CSV));
            let estimate = estimate.unwrap_or_else(|| out.join(commands::MAP_CSV));
            let report =
                commands::evaluate(&truth, &estimate, &EvaluateOptions { agent, wcl }, out)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
        Command::Plot {
            map,
            second,
            output,
        } => {
            let output = output.unwrap_or_else(|| out.join(commands::PLOT_SVG));
            match map {
                Some(map) => commands::plot(&map, second.as_deref(), &output)?,
                None => commands::plot(
                    &out.join(commands::LAYOUT_CSV),
                    Some(&out.join(commands::MAP_CSV)),
                    &output,
                )?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
