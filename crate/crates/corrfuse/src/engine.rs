//! The four fusion engines.
//!
//! Every engine computes, per triple, the likelihood ratio
//! mu = Pr(observations | true) / Pr(observations | false) and turns it into
//! a posterior with the shared transform in [`crate::model`]. They differ in
//! how they treat correlation between sources:
//!
//! * `Independent` multiplies per-source contributions; linear, ignores
//!   correlation entirely.
//! * `Exact` sums joint statistics over all subsets of the non-providers
//!   with alternating signs (inclusion–exclusion); exponential in the
//!   number of non-providers, hence the subset cap.
//! * `Aggressive` replaces each r_i, q_i by correlation-weighted values;
//!   linear, but collapses to the prior for replicas and to an undefined
//!   ratio for complementary sources.
//! * `Elastic` starts from the aggressive form and, level by level, swaps
//!   approximate subset coefficients for exact joint statistics; at level
//!   |non-providers| it reproduces the exact engine.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{aggressive_weights, AggressiveWeights};
use crate::kahan::KahanSum;
use crate::model::{FusionOutcome, LikelihoodRatio, ObservationMatrix, Prior, TripleId};
use crate::store::JointQualityStore;
use crate::subset::{self, SourceSubset};

/// Engine selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Independent,
    Exact,
    Aggressive,
    Elastic,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Independent => "independent",
            Engine::Exact => "exact",
            Engine::Aggressive => "aggressive",
            Engine::Elastic => "elastic",
        }
    }
}

pub const DEFAULT_EXACT_CAP: usize = 20;
pub const DEFAULT_ELASTIC_LEVEL: usize = 1;

/// Negative inclusion–exclusion results inside this tolerance are rounding
/// noise and clamp to zero; anything further negative means the joint
/// statistics are inconsistent.
const NEGATIVE_SUM_TOLERANCE: f64 = 1e-12;

/// Weighted per-source rates may exceed 1 by at most this much before the
/// complement factor is treated as inconsistent rather than clamped.
const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub engine: Engine,
    /// Adjustment level for the elastic engine; ignored by the others.
    pub elastic_level: usize,
    /// The exact engine refuses triples with more non-providers than this.
    pub exact_subset_cap: usize,
    pub alpha: Prior,
    /// Abort the batch on the first per-triple error instead of reporting.
    pub fail_fast: bool,
}

impl EngineConfig {
    pub fn new(engine: Engine) -> EngineConfig {
        EngineConfig {
            engine,
            elastic_level: DEFAULT_ELASTIC_LEVEL,
            exact_subset_cap: DEFAULT_EXACT_CAP,
            alpha: Prior::default(),
            fail_fast: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.exact_subset_cap == 0 {
            return Err(Error::InvalidParams("exact subset cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Independent-sources likelihood ratio:
/// prod r_i/q_i over providers times prod (1-r_i)/(1-q_i) over in-scope
/// non-providers.
///
/// Accumulates in log space so hundreds of sources cannot underflow; zero
/// factors on either side are tracked separately and resolve to the
/// sentinels.
pub fn mu_independent(
    t: TripleId,
    obs: &ObservationMatrix,
    store: &JointQualityStore,
) -> Result<LikelihoodRatio> {
    let mut acc = LogOddsAccumulator::default();
    for i in obs.providers(t).iter() {
        let q = store.quality(i)?;
        acc.multiply(q.recall, q.fpr);
    }
    for i in obs.non_providers(t).iter() {
        let q = store.quality(i)?;
        acc.multiply(1.0 - q.recall, 1.0 - q.fpr);
    }
    Ok(acc.into_ratio())
}

/// Exact correlated likelihood ratio via inclusion–exclusion over subsets of
/// the non-providers.
pub fn mu_exact(
    t: TripleId,
    obs: &ObservationMatrix,
    store: &JointQualityStore,
    cap: usize,
) -> Result<LikelihoodRatio> {
    let non_providers = obs.non_providers(t);
    if non_providers.len() > cap {
        return Err(Error::ExactTooLarge {
            non_providers: non_providers.len(),
            cap,
        });
    }
    let (r, q) = exact_observation_probabilities(obs.providers(t), non_providers, store)?;
    Ok(LikelihoodRatio::from_ratio(r, q))
}

/// Pr(exactly this provide/not-provide pattern | true) and (| false),
/// computed from joint statistics:
///
/// ```text
/// R = sum over S* subset of non-providers of (-1)^|S*| r_{providers u S*}
/// ```
///
/// and likewise Q with joint false positive rates. Subsets are enumerated by
/// increasing size then increasing bitmask value, and both alternating sums
/// are compensated, so results are bit-identical across runs.
pub fn exact_observation_probabilities(
    providers: SourceSubset,
    non_providers: SourceSubset,
    store: &JointQualityStore,
) -> Result<(f64, f64)> {
    let mut r_acc = KahanSum::default();
    let mut q_acc = KahanSum::default();
    for s_star in subset::subsets_by_size(non_providers) {
        let (jr, jq) = store.joint(providers.union(s_star))?;
        let sign = if s_star.len() % 2 == 0 { 1.0 } else { -1.0 };
        r_acc.add(sign * jr);
        q_acc.add(sign * jq);
    }
    Ok((
        clamp_probability(r_acc.value(), "R")?,
        clamp_probability(q_acc.value(), "Q")?,
    ))
}

fn clamp_probability(value: f64, side: &'static str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -NEGATIVE_SUM_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::InconsistentJointStats { side, value })
    }
}

/// Aggressive approximation: the independent formula with every r_i, q_i
/// replaced by its correlation-weighted value; weights are derived from the
/// store's all-source and leave-one-out joints.
pub fn mu_aggressive(
    t: TripleId,
    obs: &ObservationMatrix,
    store: &JointQualityStore,
) -> Result<LikelihoodRatio> {
    if let Some(u) = aggressive_undefined(store)? {
        return Ok(u);
    }
    let weights = aggressive_weights(store)?;
    mu_aggressive_with(t, obs, store, &weights)
}

/// Aggressive approximation with explicitly supplied weights.
pub fn mu_aggressive_with(
    t: TripleId,
    obs: &ObservationMatrix,
    store: &JointQualityStore,
    weights: &AggressiveWeights,
) -> Result<LikelihoodRatio> {
    if let Some(u) = aggressive_undefined(store)? {
        return Ok(u);
    }
    let mut acc = LogOddsAccumulator::default();
    for i in obs.providers(t).iter() {
        acc.multiply(weights.weighted_recall(i), weights.weighted_fpr(i));
    }
    for i in obs.non_providers(t).iter() {
        acc.multiply(
            complement(weights.weighted_recall(i), i)?,
            complement(weights.weighted_fpr(i), i)?,
        );
    }
    Ok(acc.into_ratio())
}

/// Complementary sources drive both all-source joints to zero; no weighted
/// formula yields a valid probability then.
fn aggressive_undefined(store: &JointQualityStore) -> Result<Option<LikelihoodRatio>> {
    let (r_all, q_all) = store.joint(store.all_sources())?;
    Ok((r_all == 0.0 && q_all == 0.0).then_some(LikelihoodRatio::Undefined))
}

fn complement(weighted: f64, source: usize) -> Result<f64> {
    if weighted > 1.0 + WEIGHT_TOLERANCE {
        Err(Error::WeightOutOfRange {
            index: source,
            value: weighted,
        })
    } else {
        Ok(1.0 - weighted.min(1.0))
    }
}

/// Elastic approximation at the given adjustment level; weights are derived
/// from the store.
pub fn mu_elastic(
    t: TripleId,
    obs: &ObservationMatrix,
    store: &JointQualityStore,
    level: usize,
) -> Result<LikelihoodRatio> {
    let weights = aggressive_weights(store)?;
    mu_elastic_with(t, obs, store, &weights, level)
}

pub fn mu_elastic_with(
    t: TripleId,
    obs: &ObservationMatrix,
    store: &JointQualityStore,
    weights: &AggressiveWeights,
    level: usize,
) -> Result<LikelihoodRatio> {
    Ok(mu_elastic_counted(t, obs, store, weights, level)?.0)
}

/// Elastic approximation that also reports how many subset correction terms
/// it evaluated: sum over l in 1..=level of C(|non-providers|, l).
///
/// Level 0 is the initialization alone:
///
/// ```text
/// R = r_{providers} * prod over non-providers of (1 - C_i+ r_i)
/// ```
///
/// Each level-l pass replaces the approximate coefficient of every
/// size-(|providers|+l) term with the stored joint statistic, so level
/// |non-providers| reproduces the exact engine.
pub fn mu_elastic_counted(
    t: TripleId,
    obs: &ObservationMatrix,
    store: &JointQualityStore,
    weights: &AggressiveWeights,
    level: usize,
) -> Result<(LikelihoodRatio, u64)> {
    let providers = obs.providers(t);
    let non_providers = obs.non_providers(t);
    let (r_st, q_st) = store.joint(providers)?;

    let mut r_init = r_st;
    let mut q_init = q_st;
    for i in non_providers.iter() {
        r_init *= complement(weights.weighted_recall(i), i)?;
        q_init *= complement(weights.weighted_fpr(i), i)?;
    }
    let mut r_acc = KahanSum::default();
    let mut q_acc = KahanSum::default();
    r_acc.add(r_init);
    q_acc.add(q_init);

    let mut work = 0u64;
    for l in 1..=level {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        for s_star in subset::combinations(non_providers, l) {
            work += 1;
            let (jr, jq) = store.joint(providers.union(s_star))?;
            let mut w_r = 1.0;
            let mut w_q = 1.0;
            for i in s_star.iter() {
                w_r *= weights.weighted_recall(i);
                w_q *= weights.weighted_fpr(i);
            }
            r_acc.add(sign * (jr - r_st * w_r));
            q_acc.add(sign * (jq - q_st * w_q));
        }
    }
    let r = clamp_probability(r_acc.value(), "R")?;
    let q = clamp_probability(q_acc.value(), "Q")?;
    Ok((LikelihoodRatio::from_ratio(r, q), work))
}

/// Product accumulator in log space with explicit zero tracking, so that
/// zero factors resolve to the likelihood-ratio sentinels instead of NaN and
/// long products cannot underflow.
#[derive(Debug, Default)]
struct LogOddsAccumulator {
    log_ratio: f64,
    zero_numerator: bool,
    zero_denominator: bool,
}

impl LogOddsAccumulator {
    fn multiply(&mut self, numerator: f64, denominator: f64) {
        if numerator <= 0.0 {
            self.zero_numerator = true;
        }
        if denominator <= 0.0 {
            self.zero_denominator = true;
        }
        if numerator > 0.0 && denominator > 0.0 {
            self.log_ratio += numerator.ln() - denominator.ln();
        }
    }

    fn into_ratio(self) -> LikelihoodRatio {
        match (self.zero_numerator, self.zero_denominator) {
            (true, true) => LikelihoodRatio::Undefined,
            (true, false) => LikelihoodRatio::Finite(0.0),
            (false, true) => LikelihoodRatio::PositiveInfinity,
            (false, false) => LikelihoodRatio::Finite(self.log_ratio.exp()),
        }
    }
}

/// Batch result: outcomes in triple-id order plus any per-triple errors.
#[derive(Debug)]
pub struct FusionReport {
    pub outcomes: Vec<FusionOutcome>,
    pub errors: Vec<(TripleId, Error)>,
}

/// Runs the configured engine over every triple of the matrix.
///
/// Outcomes keep the matrix's triple order regardless of thread count.
/// Per-triple errors are collected into the report unless `fail_fast` is
/// set, in which case the first error (in triple order) aborts the batch.
pub fn fuse_all(
    obs: &ObservationMatrix,
    store: &JointQualityStore,
    config: &EngineConfig,
) -> Result<FusionReport> {
    config.validate()?;
    let weights = match config.engine {
        Engine::Aggressive | Engine::Elastic => match aggressive_undefined(store)? {
            // Weight derivation is degenerate; the per-triple result is the
            // undefined sentinel anyway.
            Some(_) => None,
            None => Some(aggressive_weights(store)?),
        },
        _ => None,
    };
    let results: Vec<(TripleId, Result<LikelihoodRatio>)> = obs
        .triples()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|t| {
            let mu = match config.engine {
                Engine::Independent => mu_independent(t, obs, store),
                Engine::Exact => mu_exact(t, obs, store, config.exact_subset_cap),
                Engine::Aggressive => match &weights {
                    Some(w) => mu_aggressive_with(t, obs, store, w),
                    None => Ok(LikelihoodRatio::Undefined),
                },
                Engine::Elastic => match &weights {
                    Some(w) => mu_elastic_with(t, obs, store, w, config.elastic_level),
                    None => Ok(LikelihoodRatio::Undefined),
                },
            };
            (t, mu)
        })
        .collect();

    let mut outcomes = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (t, result) in results {
        match result {
            Ok(mu) => outcomes.push(FusionOutcome::new(t, mu, config.alpha)),
            Err(e) if config.fail_fast => return Err(e),
            Err(e) => errors.push((t, e)),
        }
    }
    Ok(FusionReport { outcomes, errors })
}
