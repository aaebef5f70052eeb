//! `phonalign`: batch forced alignment, boundary evaluation and feature
//! extraction.
//!
//! Exit status is 0 on full success, 1 when some utterances or files failed
//! (the rest are still written), and 2 for usage or setup errors.

mod align;
mod eval;
mod extract;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "phonalign",
    version,
    about = "Forced alignment of phone sequences to audio"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align transcripts to audio or posteriorgrams and write TextGrids.
    Align(AlignArgs),
    /// Compare hypothesis TextGrids against references.
    Eval(EvalArgs),
    /// Write MFCC + delta + delta-delta features of a WAV file.
    Features(FeaturesArgs),
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// 16-bit mono WAV input (needs --scorer and --phones).
    #[arg(long, conflicts_with_all = ["pgram", "manifest"])]
    pub audio: Option<PathBuf>,
    /// PGRAM1 posteriorgram input.
    #[arg(long, conflicts_with = "manifest")]
    pub pgram: Option<PathBuf>,
    /// TSV of `input<TAB>transcript<TAB>output` rows; `.wav` inputs are
    /// treated as audio, anything else as a posteriorgram. Relative paths
    /// resolve against the manifest's directory.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Space-separated words for single-utterance mode.
    #[arg(long, required_unless_present = "manifest")]
    pub transcript: Option<String>,
    /// Pronunciation dictionary in CMUdict layout.
    #[arg(long)]
    pub dict: PathBuf,
    /// `buckeye`, `timit`, `none`, or a TSV file of `source<TAB>target`.
    #[arg(long, default_value = "buckeye")]
    pub folding: String,
    /// Output TextGrid for single-utterance mode.
    #[arg(long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    /// Refine boundaries below frame resolution (default).
    #[arg(long, overrides_with = "no_interp")]
    pub interp: bool,
    /// Keep boundaries at frame times.
    #[arg(long = "no-interp", overrides_with = "interp")]
    pub no_interp: bool,
    /// Parallel utterance workers; defaults to the number of cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// MAPSLIN1 linear scorer used for audio input.
    #[arg(long)]
    pub scorer: Option<PathBuf>,
    /// Phone symbols of the scorer's output rows, whitespace separated.
    #[arg(long)]
    pub phones: Option<PathBuf>,
    #[arg(long, default_value = phonalign::aligner::DEFAULT_TIER_NAME)]
    pub tier_name: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ref_dir: PathBuf,
    #[arg(long)]
    pub hyp_dir: PathBuf,
    /// Comma-separated thresholds in ms.
    #[arg(long, value_delimiter = ',', default_value = "10,20,25,50,100")]
    pub tolerances: Vec<f64>,
    /// `buckeye`, `timit`, `none`, or a TSV file, applied to both sides.
    #[arg(long, default_value = "none")]
    pub folding: String,
    /// CSV of CDF points.
    #[arg(long)]
    pub cdf_out: Option<PathBuf>,
    /// JSON summary.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// TSV tolerance table; printed to stdout when omitted.
    #[arg(long)]
    pub tsv_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub wav: PathBuf,
    /// MAPSFEAT1 dump path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    PartialFailure,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MAPS_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Align(args) => align::run(&args),
        Command::Eval(args) => eval::run(&args),
        Command::Features(args) => extract::run(&args),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::PartialFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
