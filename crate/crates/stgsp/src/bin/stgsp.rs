use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stgsp::cli::{
    cmd_experiment, cmd_extract, cmd_graph, cmd_synth, ExperimentArgs, ExtractArgs, GraphArgs,
    SynthArgs,
};
use stgsp::eval::{ExperimentParams, ForestConfig};
use stgsp::signal::SignalFormat;

/// Hierarchical graph-signal feature extraction for multichannel time
/// series: spatiotemporal graph learning, topology and graph-spectral
/// embeddings, and a synthetic classification benchmark.
#[derive(Parser)]
#[command(name = "stgsp", version, about)]
struct Cli {
    /// Log progress and warnings to stderr.
    #[arg(long, global = true)]
    verbose: bool,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Csv,
    RawF64,
}

#[derive(Args)]
struct InputFormat {
    /// Sample file encoding.
    #[arg(long, value_enum, default_value = "csv")]
    format: FileFormat,

    /// Channel count; required for raw-f64 input, which cannot infer it.
    #[arg(long)]
    channels: Option<usize>,

    /// Sampling rate of the input files in Hz.
    #[arg(long, default_value_t = 400.0)]
    sample_rate: f64,
}

impl InputFormat {
    fn resolve(&self) -> Result<SignalFormat, String> {
        match self.format {
            FileFormat::Csv => Ok(SignalFormat::Csv),
            FileFormat::RawF64 => match self.channels {
                Some(channels) if channels >= 2 => Ok(SignalFormat::RawF64 { channels }),
                _ => Err("--format raw-f64 requires --channels >= 2".to_string()),
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Extract feature vectors for every sample file in a directory.
    Extract {
        /// Directory of sample files (processed in filename order).
        #[arg(long)]
        input: PathBuf,
        /// Output feature CSV.
        #[arg(long)]
        output: PathBuf,
        /// Pipeline config file (TOML key-value; defaults apply).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        input_format: InputFormat,
    },
    /// Dump the level-2 graph artifacts (dense adjacency, collapsed
    /// autocovariance, thresholded spatial graph) for one sample.
    Graph {
        /// Sample file.
        #[arg(long)]
        input: PathBuf,
        /// Output path prefix; three files <prefix>.{adjacency,autocov,wtilde}.csv.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// 1-based filter-bank band to dump.
        #[arg(long, default_value_t = 1)]
        band: usize,
        #[command(flatten)]
        input_format: InputFormat,
    },
    /// Run the synthetic end-to-end experiment and write a report CSV.
    Experiment {
        /// Output report CSV.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed for data generation, splitting and training.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples generated per class.
        #[arg(long, default_value_t = 100)]
        samples_per_class: usize,
        /// Channels per generated sample.
        #[arg(long, default_value_t = 8)]
        channels: usize,
        /// Time samples per generated sample.
        #[arg(long, default_value_t = 400)]
        samples: usize,
        #[arg(long, default_value_t = 400.0)]
        sample_rate: f64,
        /// Trees in the random forest.
        #[arg(long, default_value_t = 200)]
        trees: usize,
        /// Shuffle labels before training (null-model control).
        #[arg(long)]
        shuffle_labels: bool,
        /// Keep only the top-q features by training-half variance.
        #[arg(long)]
        select_top: Option<usize>,
    },
    /// Generate a synthetic labeled dataset as CSV sample files.
    Synth {
        /// Output directory (created if missing).
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        samples_per_class: usize,
        #[arg(long, default_value_t = 8)]
        channels: usize,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        #[arg(long, default_value_t = 400.0)]
        sample_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut logger = env_logger::Builder::from_default_env();
    if cli.verbose {
        logger.filter_level(log::LevelFilter::Debug);
    }
    let _ = logger.try_init();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::warn!("could not set thread count: {e}");
        }
    }

    let code = match cli.command {
        Command::Extract {
            input,
            output,
            config,
            input_format,
        } => match input_format.resolve() {
            Ok(format) => cmd_extract(&ExtractArgs {
                input_dir: input,
                output,
                config,
                sample_rate_hz: input_format.sample_rate,
                format,
            }),
            Err(msg) => {
                eprintln!("error: {msg}");
                stgsp::cli::EXIT_CONFIG
            }
        },
        Command::Graph {
            input,
            output,
            config,
            band,
            input_format,
        } => match input_format.resolve() {
            Ok(format) => cmd_graph(&GraphArgs {
                input,
                output_prefix: output,
                config,
                sample_rate_hz: input_format.sample_rate,
                format,
                band,
            }),
            Err(msg) => {
                eprintln!("error: {msg}");
                stgsp::cli::EXIT_CONFIG
            }
        },
        Command::Experiment {
            output,
            config,
            seed,
            samples_per_class,
            channels,
            samples,
            sample_rate,
            trees,
            shuffle_labels,
            select_top,
        } => cmd_experiment(&ExperimentArgs {
            output,
            config,
            seed,
            forest: ForestConfig {
                n_trees: trees,
                rng_seed: seed,
                ..ForestConfig::default()
            },
            params: ExperimentParams {
                n_per_class: samples_per_class,
                channels,
                samples,
                sample_rate_hz: sample_rate,
                shuffle_labels,
                feature_select_top: select_top,
            },
        }),
        Command::Synth {
            output,
            samples_per_class,
            channels,
            samples,
            sample_rate,
            seed,
        } => cmd_synth(&SynthArgs {
            output_dir: output,
            n_per_class: samples_per_class,
            channels,
            samples,
            sample_rate_hz: sample_rate,
            seed,
        }),
    };
    ExitCode::from(code as u8)
}
