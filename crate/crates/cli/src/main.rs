//! `crisis-al`: batch entry points for keyword filtering, training,
//! simulated active learning, evaluation and the annotation service.

mod data;
mod evaluate;
mod io;
mod learn;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use crisis_al_service::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "crisis-al", version, about = "Keyword filtering and active learning for disaster-related short texts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a raw corpus, map source labels, and write canonical JSON-lines.
    Ingest(data::IngestArgs),
    /// Keep only documents containing a keyword.
    Prefilter(data::PrefilterArgs),
    /// Classify documents by keyword match and evaluate against gold labels.
    Filter(evaluate::FilterArgs),
    /// Train a logistic regression on the gold-labeled documents.
    Train(learn::TrainArgs),
    /// Score a corpus with a trained model.
    Predict(learn::PredictArgs),
    /// Simulate active learning with gold labels as the annotator.
    AlSimulate(simulate::SimulateArgs),
    /// Serve the annotation API (and optionally the UI bundle).
    AlServe(ServeArgs),
    /// Score a predictions file against gold labels.
    Evaluate(evaluate::EvaluateArgs),
    /// Compare several methods side by side.
    Compare(evaluate::CompareArgs),
}

#[derive(Debug, clap::Args)]
struct ServeArgs {
    /// Data directory [env: CRISIS_AL_DATA_DIR, default: crisis-al-data].
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Listen address [env: CRISIS_AL_BIND, default: 127.0.0.1:8080].
    #[arg(long)]
    bind: Option<String>,
    /// Static UI bundle served at / [env: CRISIS_AL_UI_DIR].
    #[arg(long)]
    ui_dir: Option<PathBuf>,
}

fn serve(args: ServeArgs) -> Result<()> {
    let mut config = ServiceConfig::from_env();
    if let Some(dir) = args.data_dir {
        config.data_dir = dir;
    }
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    if args.ui_dir.is_some() {
        config.ui_dir = args.ui_dir;
    }
    println!("serving {} on http://{}", config.data_dir.display(), config.bind);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crisis_al_service::serve(config))?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(args) => data::ingest(args),
        Command::Prefilter(args) => data::prefilter(args),
        Command::Filter(args) => evaluate::filter(args),
        Command::Train(args) => learn::train(args),
        Command::Predict(args) => learn::predict(args),
        Command::AlSimulate(args) => simulate::simulate(args),
        Command::AlServe(args) => serve(args),
        Command::Evaluate(args) => evaluate::evaluate(args),
        Command::Compare(args) => evaluate::compare(args),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<io::MissingInput>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
