//! Batch commands behind the `corrfuse` binary.
//!
//! Every successful run writes a config echo (`<output>.run.json`, or
//! `run.json` in the dataset directory) holding the fully resolved
//! [`RunConfig`]; `rerun` replays such an echo and reproduces the results
//! byte for byte.
//!
//! Exit-code contract, stable for scripting: 0 success, 2 input/parse
//! problems, 3 insufficient data, 4 engine refusal.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{self, Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::estimate::{self, aggressive_weights, build_profile, JointRequest};
use crate::eval;
use crate::io;
use crate::model::{FusionOutcome, ObservationMatrix, Prior, TripleId};
use crate::store::FallbackPolicy;
use crate::synth::{self, Scenario, SourceGenParams, SynthParams};

pub const THREADS_ENV: &str = "CORRFUSE_THREADS";

/// Fully resolved run settings; the on-disk config echo.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Estimate(EstimateConfig),
    Fuse(FuseConfig),
    Synth(SynthConfig),
    Eval(EvalConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EstimateConfig {
    pub observations: PathBuf,
    pub labels: PathBuf,
    pub output: PathBuf,
    pub alpha: f64,
    /// Estimate alpha from the labels instead of using the fixed value.
    pub estimate_alpha: bool,
    /// providers-only | up-to-size=K | file=PATH
    pub joints: String,
    pub min_support: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FuseConfig {
    pub observations: PathBuf,
    pub profile: PathBuf,
    pub output: PathBuf,
    pub engine: Engine,
    pub level: usize,
    pub cap: usize,
    /// Overrides the profile's alpha when set.
    pub alpha: Option<f64>,
    pub threshold: f64,
    pub fail_fast: bool,
    /// Compute triples the exact engine refuses with the elastic engine
    /// instead of aborting.
    pub allow_elastic_fallback: bool,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SynthConfig {
    pub output_dir: PathBuf,
    pub params: SynthParams,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalConfig {
    pub outcomes: PathBuf,
    pub labels: PathBuf,
    pub threshold: f64,
    /// Metrics are printed to stdout; also written here when set.
    pub output: Option<PathBuf>,
}

/// Maps an error to the documented exit code.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Parse { .. }
        | Error::Io(_)
        | Error::Json(_)
        | Error::InvalidParams(_)
        | Error::UnknownSource(_)
        | Error::UnknownTriple(_)
        | Error::TooManySources(_)
        | Error::PriorOutOfRange(_)
        | Error::InvalidPrior { .. } => 2,
        Error::InsufficientSupport(_) | Error::MissingLabel(_) => 3,
        Error::ExactTooLarge { .. } => 4,
        _ => 1,
    }
}

pub fn run(config: &RunConfig) -> Result<()> {
    match config {
        RunConfig::Estimate(c) => cmd_estimate(c),
        RunConfig::Fuse(c) => cmd_fuse(c),
        RunConfig::Synth(c) => cmd_synth(c),
        RunConfig::Eval(c) => cmd_eval(c),
    }
}

fn write_echo(output: &Path, config: &RunConfig) -> Result<()> {
    let mut echo = output.as_os_str().to_owned();
    echo.push(".run.json");
    let text = serde_json::to_string_pretty(config)?;
    std::fs::write(PathBuf::from(echo), text + "\n")?;
    Ok(())
}

/// Estimates a quality profile from observations and labels.
pub fn cmd_estimate(config: &EstimateConfig) -> Result<()> {
    let (obs, duplicates) = io::read_observations(&config.observations)?;
    if duplicates > 0 {
        eprintln!("warning: dropped {duplicates} duplicate provision row(s)");
    }
    let labels = io::read_labels(&obs, &config.labels)?;
    let alpha = if config.estimate_alpha {
        if labels.n_true() == 0 || labels.n_true() == labels.n_labeled() {
            eprintln!("warning: labels are all one class; estimated alpha was clamped");
        }
        estimate::estimate_alpha(&labels)?
    } else {
        Prior::new(config.alpha)?
    };
    let request = parse_joint_request(&config.joints, &obs)?;
    let profile = build_profile(&obs, &labels, alpha, &request, config.min_support)?;
    io::write_profile(&config.output, &profile)?;
    write_echo(&config.output, &RunConfig::Estimate(config.clone()))
}

fn parse_joint_request(spec: &str, obs: &ObservationMatrix) -> Result<JointRequest> {
    if spec == "providers-only" {
        return Ok(JointRequest::ProvidersOnly);
    }
    if let Some(k) = spec.strip_prefix("up-to-size=") {
        let k: usize = k
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad joint size in `{spec}`")))?;
        return Ok(JointRequest::UpToSize(k));
    }
    if let Some(path) = spec.strip_prefix("file=") {
        let text = std::fs::read_to_string(path)?;
        let subsets = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| obs.subset_from_string(l))
            .collect::<Result<Vec<_>>>()?;
        return Ok(JointRequest::Explicit(subsets));
    }
    Err(Error::InvalidParams(format!(
        "joints must be providers-only, up-to-size=K, or file=PATH; got `{spec}`"
    )))
}

/// Fuses an observation file against a trained profile.
pub fn cmd_fuse(config: &FuseConfig) -> Result<()> {
    let threads = config
        .threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParams(e.to_string()))?
            .install(|| fuse_inner(config)),
        _ => fuse_inner(config),
    }
}

fn fuse_inner(config: &FuseConfig) -> Result<()> {
    let (obs, duplicates) = io::read_observations(&config.observations)?;
    if duplicates > 0 {
        eprintln!("warning: dropped {duplicates} duplicate provision row(s)");
    }
    let profile = io::read_profile(&config.profile)?;
    let store = profile.to_store(&obs, FallbackPolicy::IndependenceProduct)?;
    let alpha = match config.alpha {
        Some(a) => Prior::new(a)?,
        None => profile.alpha()?,
    };
    let engine_config = EngineConfig {
        engine: config.engine,
        elastic_level: config.level,
        exact_subset_cap: config.cap,
        alpha,
        // Errors are post-processed here so the elastic fallback can apply.
        fail_fast: false,
    };
    let report = engine::fuse_all(&obs, &store, &engine_config)?;
    let mut outcomes = report.outcomes;
    let mut fallback: Vec<(TripleId, Error)> = Vec::new();
    for (t, e) in report.errors {
        match e {
            Error::ExactTooLarge { .. } if config.allow_elastic_fallback => {
                fallback.push((t, e));
            }
            e @ Error::ExactTooLarge { .. } => return Err(e),
            e if config.fail_fast => return Err(e),
            e => eprintln!("warning: triple `{}` skipped: {e}", obs.triple_name(t)),
        }
    }
    if !fallback.is_empty() {
        let weights = aggressive_weights(&store)?;
        for (t, _) in fallback {
            let mu = engine::mu_elastic_with(t, &obs, &store, &weights, config.level)?;
            outcomes.push(FusionOutcome::new(t, mu, alpha));
        }
        outcomes.sort_by_key(|o| o.triple);
    }
    io::write_outcomes(
        &config.output,
        &obs,
        &outcomes,
        config.engine.name(),
        config.threshold,
    )?;
    write_echo(&config.output, &RunConfig::Fuse(config.clone()))
}

/// Generates a synthetic dataset into a directory.
pub fn cmd_synth(config: &SynthConfig) -> Result<()> {
    let data = synth::generate(&config.params)?;
    std::fs::create_dir_all(&config.output_dir)?;
    io::write_observations(&config.output_dir.join("observations.csv"), &data.obs)?;
    io::write_labels(
        &config.output_dir.join("labels.csv"),
        &data.obs,
        &data.labels,
    )?;
    io::write_sidecar(
        &config.output_dir.join("params.json"),
        &io::SynthSidecar {
            params: config.params.clone(),
            golden_true: data.golden_true,
            golden_false: data.golden_false,
        },
    )?;
    write_echo(
        &config.output_dir.join("run"),
        &RunConfig::Synth(config.clone()),
    )
}

/// Scores an outcomes file against labels.
pub fn cmd_eval(config: &EvalConfig) -> Result<()> {
    let records = io::read_outcome_records(&config.outcomes)?;
    let label_pairs = io::read_label_pairs(&config.labels)?;
    let by_name: std::collections::HashMap<&str, bool> =
        label_pairs.iter().map(|(t, v)| (t.as_str(), *v)).collect();
    let mut outcomes = Vec::with_capacity(records.len());
    let mut labels = estimate::LabeledSet::new(records.len());
    for (i, record) in records.iter().enumerate() {
        let truth = *by_name
            .get(record.triple.as_str())
            .ok_or_else(|| Error::MissingLabel(record.triple.clone()))?;
        let t = TripleId(i as u32);
        labels.set(t, truth);
        outcomes.push(FusionOutcome {
            triple: t,
            mu: record.mu.0,
            probability: record.probability,
        });
    }
    let metrics = eval::score(&outcomes, &labels, config.threshold)?;
    print!("{}", metrics.table());
    println!("{}", serde_json::to_string(&metrics)?);
    if let Some(output) = &config.output {
        std::fs::write(output, serde_json::to_string_pretty(&metrics)? + "\n")?;
        write_echo(output, &RunConfig::Eval(config.clone()))?;
    }
    Ok(())
}

/// Replays a config echo.
pub fn cmd_rerun(config_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(config_path)?;
    let config: RunConfig = serde_json::from_str(&text)?;
    run(&config)
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Engine> {
        match s {
            "independent" => Ok(Engine::Independent),
            "exact" => Ok(Engine::Exact),
            "aggressive" => Ok(Engine::Aggressive),
            "elastic" => Ok(Engine::Elastic),
            other => Err(Error::InvalidParams(format!(
                "engine must be independent, exact, aggressive, or elastic; got `{other}`"
            ))),
        }
    }
}

/// Scenario flag syntax: `independent`, `replica:K`, `true-overlap:K:S`,
/// `false-overlap:K:S`, or `complementary:K`.
impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scenario> {
        let bad = || Error::InvalidParams(format!("bad scenario spec `{s}`"));
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let mut int =
            || -> Result<usize> { parts.next().ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let scenario = match kind {
            "independent" => Scenario::IndependentSources,
            "replica" => Scenario::ReplicaGroup { k: int()? },
            "complementary" => Scenario::Complementary { k: int()? },
            "true-overlap" | "false-overlap" => {
                let k = int()?;
                let strength: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if kind == "true-overlap" {
                    Scenario::TrueOverlap { k, strength }
                } else {
                    Scenario::FalseOverlap { k, strength }
                }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(scenario)
    }
}

/// Builds homogeneous synthetic params from CLI flags.
#[allow(clippy::too_many_arguments)]
pub fn synth_params_from_flags(
    sources: usize,
    triples: u64,
    tf: f64,
    fr: f64,
    fp1: f64,
    fp2: f64,
    seed: u64,
    scenario: &str,
) -> Result<SynthParams> {
    let params = SynthParams {
        n_sources: sources,
        n_triples: triples,
        true_fraction: tf,
        sources: vec![SourceGenParams { fr, fp1, fp2 }; sources],
        seed,
        scenario: scenario.parse()?,
    };
    params.validate()?;
    Ok(params)
}
