use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use topicalign::bundle::write_bundle;
use topicalign::error::EXIT_DATA;
use topicalign::{run_pipeline, run_stages, CliError, CliResult, PipelineConfig, Stage};
use topicalign_core::synth::DatasetSpec;

const TOKENIZER_NOTE: &str = "\
Text is lowercased and split on every non-alphanumeric character; tokens \
shorter than two characters and purely numeric tokens are dropped. Stopwords \
are removed when the vocabulary is built, together with terms below the \
configured minimum document frequency.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.";

#[derive(Parser)]
#[command(name = "topicalign", version, about = "Map and align science and policy topic models", after_long_help = TOKENIZER_NOTE)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read both corpora, match seed documents and load the cluster assignment
    Ingest(PipelineArgs),
    /// Expand the seed documents through citation clusters
    Delineate(PipelineArgs),
    /// Build vocabularies and fit both topic models
    Fit(PipelineArgs),
    /// Topic distances, layouts, relevance and corpus analytics
    Map(PipelineArgs),
    /// Cross-corpus topic distances, close pairs and echo flags
    Align(PipelineArgs),
    /// Refit on the documents of selected science topics
    Zoom(PipelineArgs),
    /// Write SVG and HTML reports
    Report(PipelineArgs),
    /// Run every stage in order
    Run(PipelineArgs),
    /// Write the bundled synthetic dataset and a matching config
    Synth(SynthArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// With `run`: resume from this stage
    #[arg(long)]
    stage: Option<String>,
    /// Output directory, overriding the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sampler seed for every model, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory to write the dataset into
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2013)]
    seed: u64,
    #[arg(long, short)]
    verbose: bool,
}

fn init_logging(verbose: bool) {
    let level = if verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn load(args: &PipelineArgs) -> CliResult<PipelineConfig> {
    let mut config = PipelineConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        config.paths.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    Ok(config)
}

fn pipeline(stage: Option<Stage>, args: PipelineArgs) -> CliResult<()> {
    init_logging(args.verbose);
    let config = load(&args)?;
    let manifest = match stage {
        Some(s) => {
            if args.stage.as_deref().is_some_and(|name| name != s.name()) {
                return Err(CliError::config("--stage only applies to `run`"));
            }
            run_stages(&config, &[s])?
        }
        None => {
            let from = args.stage.as_deref().map(str::parse).transpose()?.unwrap_or(Stage::Ingest);
            run_pipeline(&config, from)?
        }
    };
    println!(
        "{} files written to {}",
        manifest.files.len(),
        config.paths.output_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => pipeline(Some(Stage::Ingest), a),
        Command::Delineate(a) => pipeline(Some(Stage::Delineate), a),
        Command::Fit(a) => pipeline(Some(Stage::Fit), a),
        Command::Map(a) => pipeline(Some(Stage::Map), a),
        Command::Align(a) => pipeline(Some(Stage::Align), a),
        Command::Zoom(a) => pipeline(Some(Stage::Zoom), a),
        Command::Report(a) => pipeline(Some(Stage::Report), a),
        Command::Run(a) => pipeline(None, a),
        Command::Synth(a) => {
            init_logging(a.verbose);
            match write_bundle(&a.out, &DatasetSpec::default(), a.seed) {
                Ok(path) => {
                    println!("config written to {}", path.display());
                    Ok(())
                }
                Err(e) => {
                    eprintln!("error: synth: {e}");
                    return ExitCode::from(EXIT_DATA as u8);
                }
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
