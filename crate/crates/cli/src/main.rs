//! `difftree`: run the knowledge-diffusion pipeline from a config file.
//!
//! Exit codes: 0 success, 2 invalid config or arguments, 3 stage failure.

use clap::{Args, Parser, Subcommand};
use difftree::pipeline::{
    run_pipeline, PipelineConfig, PipelineError, RunManifest, StageName, StageStatus, OUTPUT_DIR_ENV,
};
use difftree::qstat::{q_permutation_test_with, read_sample_csv, QError};
use difftree::Execution;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "difftree", version, about = "Knowledge-diffusion analysis of citation corpora")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config and the environment.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    /// More log output (repeatable).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, deduplicate, window and geocode the corpus.
    Parse,
    /// Select the topic count and fit the topic model.
    Topics,
    /// Label documents with research directions.
    Classify,
    /// Diffusion series, stage timeline and decay patterns.
    Stages,
    /// Evolution trees in DOT and JSON.
    Trees,
    /// Cross-validated growth models and cumulative forecasts.
    Forecast,
    /// q-statistic of citations by economy factors.
    Qstat(QstatArgs),
    /// Summarize every stage that has run.
    Report,
    /// Every stage in order.
    All,
}

#[derive(Args)]
struct QstatArgs {
    /// Standalone mode: `value,stratum` CSV; prints the result as JSON.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 999, requires = "csv")]
    permutations: usize,
    #[arg(long, default_value_t = 0, requires = "csv")]
    seed: u64,
    /// Apply log(1 + y) before computing q.
    #[arg(long, requires = "csv")]
    log1p: bool,
}

enum Failure {
    Config(String),
    Stage(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::ConfigInvalid(_) => Failure::Config(e.to_string()),
            _ => Failure::Stage(e.to_string()),
        }
    }
}

fn execution(common: &Common, configured: Execution) -> Execution {
    if common.sequential {
        Execution::Sequential
    } else {
        configured
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig, Failure> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    let mut cfg = PipelineConfig::from_file(path).map_err(|errs| Failure::from(PipelineError::ConfigInvalid(errs)))?;
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    } else if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
        cfg.output_dir = PathBuf::from(dir);
    }
    cfg.execution = execution(common, cfg.execution);
    Ok(cfg)
}

fn print_manifest(manifest: &RunManifest, requested: &[StageName]) {
    for rec in &manifest.stages {
        let status = match rec.status {
            StageStatus::Ran => "ran",
            StageStatus::UpToDate => "up to date",
            StageStatus::Failed => "failed",
        };
        let marker = if requested.contains(&rec.name) { "*" } else { " " };
        println!("{marker} {:<9} {status:<10} {} outputs", rec.name, rec.outputs.len());
    }
}

fn standalone_qstat(common: &Common, args: &QstatArgs, path: &PathBuf) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut sample = read_sample_csv(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if args.log1p {
        sample = sample.log1p().map_err(|e| Failure::Config(e.to_string()))?;
    }
    let result = q_permutation_test_with(&sample, args.permutations, args.seed, execution(common, Execution::default()))
        .map_err(|e| match e {
            QError::TooFewPermutations { .. } => Failure::Config(e.to_string()),
            _ => Failure::Stage(e.to_string()),
        })?;
    println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let stage = match &cli.command {
        Command::Parse => StageName::Parse,
        Command::Topics => StageName::Topics,
        Command::Classify => StageName::Classify,
        Command::Stages => StageName::Stages,
        Command::Trees => StageName::Trees,
        Command::Forecast => StageName::Forecast,
        Command::Qstat(args) => match &args.csv {
            Some(path) => return standalone_qstat(&cli.common, args, path),
            None => StageName::Qstat,
        },
        Command::Report => StageName::Report,
        Command::All => {
            let cfg = load_config(&cli.common)?;
            let manifest = run_pipeline(&cfg, &StageName::ALL)?;
            print_manifest(&manifest, &StageName::ALL);
            println!("outputs in {}", cfg.output_dir.display());
            return Ok(());
        }
    };
    let cfg = load_config(&cli.common)?;
    let manifest = run_pipeline(&cfg, &[stage])?;
    if stage == StageName::Report {
        let text = std::fs::read_to_string(cfg.output_dir.join("report.txt"))
            .map_err(|e| Failure::Stage(format!("report.txt: {e}")))?;
        print!("{text}");
    } else {
        print_manifest(&manifest, &[stage]);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Stage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
