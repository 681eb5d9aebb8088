use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use transparency::pipeline::{self, OodOptions};
use transparency::{CliError, OutputFormat, RunConfig};
use transparency_core::{Dimension, MetricKind, TaskKind};

#[derive(Parser)]
#[command(
    name = "transparency",
    version,
    about = "Data-dimension analysis of evaluation datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Classification,
    ExtractiveQa,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "extractive-qa")]
    task: Task,
    /// Master seed; every random choice derives from it.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    instances: Option<PathBuf>,
    #[arg(long)]
    predictions_dir: Option<PathBuf>,
    #[arg(long)]
    traces: Option<PathBuf>,
    #[arg(long)]
    pvi: Option<PathBuf>,
    #[arg(long)]
    ppl: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    /// JSONL of `{"id", "<dimension>": value}` for dimensions computed elsewhere.
    #[arg(long)]
    precomputed: Option<PathBuf>,
    /// qa_token_f1, qa_exact, cls_accuracy or cls_macro_f1.
    #[arg(long)]
    metric: Option<MetricKind>,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0.10)]
    fraction: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the six dimensions and write features.jsonl.
    Features {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Score and ranking significance per dimension.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Similarity vector between two feature tables.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        name_a: Option<String>,
        #[arg(long)]
        name_b: Option<String>,
    },
    /// Fit and evaluate the out-of-distribution score predictor.
    PredictOod {
        #[command(flatten)]
        common: Common,
        /// JSONL of `{"model_id", "dataset", "score"}`.
        #[arg(long)]
        scores: PathBuf,
        /// JSONL of similarity records `{"a", "b", "smd": {...}}`.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = 1)]
        holdout: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 1e-8)]
        ridge: f64,
    },
    /// Per-bin score difference of two models along one dimension.
    CompareModels {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        model_a: String,
        #[arg(long)]
        model_b: String,
        #[arg(long)]
        dimension: Dimension,
    },
    /// Export random and stratified splits to splits.jsonl.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
    },
}

fn config(common: &Common, inputs: Option<Inputs>) -> RunConfig {
    let task = match common.task {
        Task::Classification => TaskKind::Classification,
        Task::ExtractiveQa => TaskKind::ExtractiveQa,
    };
    let mut c = RunConfig::new(task, common.seed, common.out.clone());
    c.format = match common.format {
        Format::Json => OutputFormat::Json,
        Format::Csv => OutputFormat::Csv,
    };
    if let Some(i) = inputs {
        c.instances = i.instances;
        c.predictions_dir = i.predictions_dir;
        c.traces = i.traces;
        c.pvi = i.pvi;
        c.ppl = i.ppl;
        c.features = i.features;
        c.precomputed = i.precomputed;
        c.metric = i.metric;
        c.bins = i.bins;
        c.trials = i.trials;
        c.fraction = i.fraction;
    }
    c
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Features { common, inputs } => {
            let table = pipeline::cmd_features(&config(&common, Some(inputs)))?;
            log::info!("wrote features for {} instances", table.len());
        }
        Command::Analyze { common, inputs } => {
            pipeline::cmd_analyze(&config(&common, Some(inputs)))?
        }
        Command::Compare {
            common,
            a,
            b,
            name_a,
            name_b,
        } => {
            let v = pipeline::cmd_compare(&config(&common, None), &a, &b, (name_a, name_b))?;
            log::info!("average |SMD| {:.4}", v.avg_abs);
        }
        Command::PredictOod {
            common,
            scores,
            pairs,
            holdout,
            repeats,
            ridge,
        } => {
            let options = OodOptions {
                scores,
                pairs,
                holdout,
                repeats,
                ridge,
            };
            let report = pipeline::cmd_predict_ood(&config(&common, None), &options)?;
            log::info!(
                "MAD {:.3} vs identity baseline {:.3}",
                report.aggregate.mad,
                report.aggregate.baseline_mad
            );
        }
        Command::CompareModels {
            common,
            inputs,
            model_a,
            model_b,
            dimension,
        } => {
            pipeline::cmd_compare_models(
                &config(&common, Some(inputs)),
                &model_a,
                &model_b,
                dimension,
            )?;
        }
        Command::Sample { common, inputs } => {
            let n = pipeline::cmd_sample(&config(&common, Some(inputs)))?;
            log::info!("wrote {n} splits");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
