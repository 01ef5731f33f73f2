use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use corrfuse::commands::{
    self, cmd_rerun, exit_code, run, EstimateConfig, EvalConfig, FuseConfig, RunConfig, SynthConfig,
};

/// Correlation-aware truth discovery over multi-source triple data.
#[derive(Parser)]
#[command(name = "corrfuse", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a quality profile from observations and labels.
    Estimate {
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// A-priori probability that a triple is true.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Estimate alpha from the labels instead.
        #[arg(long)]
        estimate_alpha: bool,
        /// Which subsets get trained joint statistics:
        /// providers-only | up-to-size=K | file=PATH.
        #[arg(long, default_value = "providers-only")]
        joints: String,
        /// Minimum labeled intersection size before a joint entry is stored.
        #[arg(long, default_value_t = 1)]
        min_support: usize,
    },
    /// Compute per-triple truth probabilities.
    Fuse {
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// independent | exact | aggressive | elastic.
        #[arg(long, default_value = "independent")]
        engine: String,
        /// Elastic adjustment level.
        #[arg(long, default_value_t = 1)]
        level: usize,
        /// Non-provider cap for the exact engine.
        #[arg(long, default_value_t = 20)]
        cap: usize,
        /// Override the profile's alpha.
        #[arg(long)]
        alpha: Option<f64>,
        /// Classification threshold used for the output labels.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Abort on the first per-triple error.
        #[arg(long)]
        fail_fast: bool,
        /// Fall back to the elastic engine when the exact engine refuses a
        /// triple.
        #[arg(long)]
        allow_elastic_fallback: bool,
        /// Worker threads (CORRFUSE_THREADS as fallback).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Generate a synthetic benchmark dataset.
    Synth {
        #[arg(long)]
        output_dir: PathBuf,
        /// Required unless --params-file is given.
        #[arg(long)]
        sources: Option<usize>,
        /// Required unless --params-file is given.
        #[arg(long)]
        triples: Option<u64>,
        /// Fraction of golden tuples that are true.
        #[arg(long, default_value_t = 0.5)]
        tf: f64,
        #[arg(long, default_value_t = 0.75)]
        fr: f64,
        #[arg(long, default_value_t = 0.75)]
        fp1: f64,
        #[arg(long, default_value_t = 0.25)]
        fp2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// independent | replica:K | true-overlap:K:S | false-overlap:K:S |
        /// complementary:K.
        #[arg(long, default_value = "independent")]
        scenario: String,
        /// JSON file with a full SynthParams object; overrides the flags.
        #[arg(long)]
        params_file: Option<PathBuf>,
    },
    /// Score an outcomes file against ground-truth labels.
    Eval {
        #[arg(long)]
        outcomes: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Also write the metrics JSON here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Replay a config echo written by a previous run.
    Rerun {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate {
            observations,
            labels,
            output,
            alpha,
            estimate_alpha,
            joints,
            min_support,
        } => run(&RunConfig::Estimate(EstimateConfig {
            observations,
            labels,
            output,
            alpha,
            estimate_alpha,
            joints,
            min_support,
        })),
        Command::Fuse {
            observations,
            profile,
            output,
            engine,
            level,
            cap,
            alpha,
            threshold,
            fail_fast,
            allow_elastic_fallback,
            threads,
        } => engine.parse().and_then(|engine| {
            run(&RunConfig::Fuse(FuseConfig {
                observations,
                profile,
                output,
                engine,
                level,
                cap,
                alpha,
                threshold,
                fail_fast,
                allow_elastic_fallback,
                threads,
            }))
        }),
        Command::Synth {
            output_dir,
            sources,
            triples,
            tf,
            fr,
            fp1,
            fp2,
            seed,
            scenario,
            params_file,
        } => match params_file {
            Some(path) => std::fs::read_to_string(&path)
                .map_err(corrfuse::Error::from)
                .and_then(|text| Ok(serde_json::from_str(&text)?))
                .and_then(|params| run(&RunConfig::Synth(SynthConfig { output_dir, params }))),
            None => match (sources, triples) {
                (Some(sources), Some(triples)) => commands::synth_params_from_flags(
                    sources, triples, tf, fr, fp1, fp2, seed, &scenario,
                )
                .and_then(|params| run(&RunConfig::Synth(SynthConfig { output_dir, params }))),
                _ => Err(corrfuse::Error::InvalidParams(
                    "--sources and --triples are required without --params-file".into(),
                )),
            },
        },
        Command::Eval {
            outcomes,
            labels,
            threshold,
            output,
        } => run(&RunConfig::Eval(EvalConfig {
            outcomes,
            labels,
            threshold,
            output,
        })),
        Command::Rerun { config } => cmd_rerun(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
