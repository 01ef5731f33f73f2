//! Synthetic benchmark worlds with controlled quality and correlation.
//!
//! The golden set holds `n_triples` tuples, each true with probability
//! `true_fraction`. A source defined by (FR, FP1, FP2) considers each tuple
//! with probability FR and then outputs it with probability FP1 (true
//! tuples) or FP2 (false tuples), so per-source inclusion probabilities are
//! FR*FP1 given true and FR*FP2 given false, matching the closed forms
//!
//! ```text
//! E[recall]    = FR * FP1
//! E[precision] = FP1*TF / (FP1*TF + FP2*(1-TF))
//! ```
//!
//! Correlation scenarios override how the first `k` sources (the group)
//! draw their inclusion coins; the concrete mechanisms are fixed so that the
//! exhaustive pattern distribution stays analytically computable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::LabeledSet;
use crate::model::ObservationMatrix;
use crate::store::{FallbackPolicy, JointQualityStore, SourceQuality};
use crate::subset::{self, SourceSubset};

/// Per-source generative parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceGenParams {
    pub fr: f64,
    pub fp1: f64,
    pub fp2: f64,
}

impl SourceGenParams {
    /// Inclusion probability conditioned on the tuple's truth.
    pub fn inclusion(&self, truth: bool) -> f64 {
        self.fr * if truth { self.fp1 } else { self.fp2 }
    }
}

/// Correlation structure of the first `k` sources; everything outside the
/// group stays independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    IndependentSources,
    /// The group copies one generated output verbatim.
    ReplicaGroup {
        k: usize,
    },
    /// With probability `strength` a true tuple uses one shared inclusion
    /// coin for the whole group; false tuples stay independent.
    TrueOverlap {
        k: usize,
        strength: f64,
    },
    /// Mirror image: shared coin on false tuples, independent on true.
    FalseOverlap {
        k: usize,
        strength: f64,
    },
    /// Each tuple is eligible for exactly one group member, so group
    /// outputs are pairwise disjoint.
    Complementary {
        k: usize,
    },
}

impl Scenario {
    pub fn group_size(&self) -> usize {
        match *self {
            Scenario::IndependentSources => 0,
            Scenario::ReplicaGroup { k }
            | Scenario::TrueOverlap { k, .. }
            | Scenario::FalseOverlap { k, .. }
            | Scenario::Complementary { k } => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_sources: usize,
    pub n_triples: u64,
    pub true_fraction: f64,
    pub sources: Vec<SourceGenParams>,
    pub seed: u64,
    pub scenario: Scenario,
}

impl SynthParams {
    /// All sources share the same (FR, FP1, FP2).
    pub fn homogeneous(
        n_sources: usize,
        n_triples: u64,
        true_fraction: f64,
        fr: f64,
        fp1: f64,
        fp2: f64,
        seed: u64,
    ) -> SynthParams {
        SynthParams {
            n_sources,
            n_triples,
            true_fraction,
            sources: vec![SourceGenParams { fr, fp1, fp2 }; n_sources],
            seed,
            scenario: Scenario::IndependentSources,
        }
    }

    pub fn with_scenario(mut self, scenario: Scenario) -> SynthParams {
        self.scenario = scenario;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sources == 0 || self.n_sources > subset::MAX_SOURCES {
            return Err(Error::InvalidParams(format!(
                "source count must be in [1, {}], got {}",
                subset::MAX_SOURCES,
                self.n_sources
            )));
        }
        if self.n_triples == 0 {
            return Err(Error::InvalidParams("triple count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.true_fraction) {
            return Err(Error::InvalidParams(format!(
                "true fraction must lie in [0,1], got {}",
                self.true_fraction
            )));
        }
        if self.sources.len() != self.n_sources {
            return Err(Error::InvalidParams(format!(
                "expected {} per-source parameter sets, got {}",
                self.n_sources,
                self.sources.len()
            )));
        }
        for (i, s) in self.sources.iter().enumerate() {
            for (name, v) in [("FR", s.fr), ("FP1", s.fp1), ("FP2", s.fp2)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParams(format!(
                        "source {} parameter {name} must lie in [0,1], got {v}",
                        i + 1
                    )));
                }
            }
        }
        let k = self.scenario.group_size();
        match self.scenario {
            Scenario::IndependentSources => {}
            Scenario::TrueOverlap { strength, .. } | Scenario::FalseOverlap { strength, .. }
                if !(0.0..=1.0).contains(&strength) =>
            {
                return Err(Error::InvalidParams(format!(
                    "overlap strength must lie in [0,1], got {strength}"
                )));
            }
            _ => {}
        }
        if k > 0 {
            if k < 2 || k > self.n_sources {
                return Err(Error::InvalidParams(format!(
                    "scenario group size must lie in [2, {}], got {k}",
                    self.n_sources
                )));
            }
            // Group mechanisms share inclusion coins, which only has one
            // consistent reading when the group is homogeneous.
            if self.sources[1..k].iter().any(|s| *s != self.sources[0]) {
                return Err(Error::InvalidParams(
                    "scenario group members must share identical (FR, FP1, FP2)".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A generated world: observations, complete labels for every observed
/// triple, golden-set counts (including tuples no source output), and, for
/// small source counts, the exact pattern distribution.
#[derive(Debug)]
pub struct SynthDataset {
    pub obs: ObservationMatrix,
    pub labels: LabeledSet,
    pub golden_true: u64,
    pub golden_false: u64,
    pub generative_joint: Option<PatternDistribution>,
}

const ORACLE_MAX_SOURCES: usize = 12;

/// Generates a dataset; the seed fully determines the output.
///
/// Golden tuples that no source outputs are dropped from the observation
/// matrix (a triple must have at least one provider) but still counted in
/// `golden_true` / `golden_false`.
pub fn generate(params: &SynthParams) -> Result<SynthDataset> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n_sources;

    let mut builder = ObservationMatrix::builder();
    for i in 1..=n {
        builder.source(&format!("S{i}"));
    }
    let mut pending_labels: Vec<(String, bool)> = Vec::new();
    let mut golden_true = 0u64;
    let mut golden_false = 0u64;

    for j in 0..params.n_triples {
        let truth = rng.gen_bool(params.true_fraction);
        if truth {
            golden_true += 1;
        } else {
            golden_false += 1;
        }
        let pattern = draw_pattern(&mut rng, params, truth);
        if pattern.is_empty() {
            continue;
        }
        let name = format!("t{}", j + 1);
        for i in pattern.iter() {
            builder.provide(&name, &format!("S{}", i + 1));
        }
        pending_labels.push((name, truth));
    }

    let obs = builder.build()?;
    let labels =
        LabeledSet::from_named(&obs, pending_labels.iter().map(|(t, v)| (t.as_str(), *v)))?;
    let generative_joint = if n <= ORACLE_MAX_SOURCES {
        Some(exhaustive_pattern_distribution(params)?)
    } else {
        None
    };
    Ok(SynthDataset {
        obs,
        labels,
        golden_true,
        golden_false,
        generative_joint,
    })
}

fn draw_pattern(rng: &mut ChaCha8Rng, params: &SynthParams, truth: bool) -> SourceSubset {
    let n = params.n_sources;
    let k = params.scenario.group_size();
    let mut pattern = SourceSubset::EMPTY;

    match params.scenario {
        Scenario::IndependentSources => {
            for i in 0..n {
                if base_include(rng, &params.sources[i], truth) {
                    pattern.insert(i);
                }
            }
            return pattern;
        }
        Scenario::ReplicaGroup { .. } => {
            if base_include(rng, &params.sources[0], truth) {
                for i in 0..k {
                    pattern.insert(i);
                }
            }
        }
        Scenario::TrueOverlap { strength, .. } | Scenario::FalseOverlap { strength, .. } => {
            let shared_side = matches!(params.scenario, Scenario::TrueOverlap { .. }) == truth;
            if shared_side && rng.gen_bool(strength) {
                if base_include(rng, &params.sources[0], truth) {
                    for i in 0..k {
                        pattern.insert(i);
                    }
                }
            } else {
                for i in 0..k {
                    if base_include(rng, &params.sources[i], truth) {
                        pattern.insert(i);
                    }
                }
            }
        }
        Scenario::Complementary { .. } => {
            let owner = rng.gen_range(0..k);
            if base_include(rng, &params.sources[owner], truth) {
                pattern.insert(owner);
            }
        }
    }
    for i in k..n {
        if base_include(rng, &params.sources[i], truth) {
            pattern.insert(i);
        }
    }
    pattern
}

/// One tuple/source inclusion decision: considered with probability FR,
/// then kept with probability FP1 or FP2 depending on the tuple's truth.
fn base_include(rng: &mut ChaCha8Rng, sp: &SourceGenParams, truth: bool) -> bool {
    let considered: f64 = rng.gen();
    if considered >= sp.fr {
        return false;
    }
    let kept: f64 = rng.gen();
    kept < if truth { sp.fp1 } else { sp.fp2 }
}

/// Exact conditional probability of every provide/not-provide pattern under
/// the generative process; no sampling involved.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternDistribution {
    n_sources: usize,
    true_fraction: f64,
    given_true: Vec<f64>,
    given_false: Vec<f64>,
}

pub fn exhaustive_pattern_distribution(params: &SynthParams) -> Result<PatternDistribution> {
    params.validate()?;
    if params.n_sources > ORACLE_MAX_SOURCES {
        return Err(Error::TooLargeForOracle {
            got: params.n_sources,
            max: ORACLE_MAX_SOURCES,
        });
    }
    let n = params.n_sources;
    let k = params.scenario.group_size();
    let group = SourceSubset::from_indices(0..k);

    let conditional = |truth: bool| -> Vec<f64> {
        (0u64..(1 << n))
            .map(|bits| {
                let pattern = SourceSubset::from_bits(bits);
                let mut p = group_probability(params, pattern.intersection(group), truth);
                for i in k..n {
                    let incl = params.sources[i].inclusion(truth);
                    p *= if pattern.contains(i) {
                        incl
                    } else {
                        1.0 - incl
                    };
                }
                p
            })
            .collect()
    };

    Ok(PatternDistribution {
        n_sources: n,
        true_fraction: params.true_fraction,
        given_true: conditional(true),
        given_false: conditional(false),
    })
}

/// Probability that exactly `group_bits` of the scenario group provide a
/// tuple of the given truth.
fn group_probability(params: &SynthParams, group_bits: SourceSubset, truth: bool) -> f64 {
    let k = params.scenario.group_size();
    let independent = |bits: SourceSubset| -> f64 {
        (0..k)
            .map(|i| {
                let incl = params.sources[i].inclusion(truth);
                if bits.contains(i) {
                    incl
                } else {
                    1.0 - incl
                }
            })
            .product()
    };
    let all_or_nothing = |bits: SourceSubset| -> f64 {
        let incl = params.sources[0].inclusion(truth);
        if bits.len() == k {
            incl
        } else if bits.is_empty() {
            1.0 - incl
        } else {
            0.0
        }
    };
    match params.scenario {
        Scenario::IndependentSources => 1.0,
        Scenario::ReplicaGroup { .. } => all_or_nothing(group_bits),
        Scenario::TrueOverlap { strength, .. } => {
            if truth {
                strength * all_or_nothing(group_bits) + (1.0 - strength) * independent(group_bits)
            } else {
                independent(group_bits)
            }
        }
        Scenario::FalseOverlap { strength, .. } => {
            if truth {
                independent(group_bits)
            } else {
                strength * all_or_nothing(group_bits) + (1.0 - strength) * independent(group_bits)
            }
        }
        Scenario::Complementary { .. } => match group_bits.len() {
            0 => {
                1.0 - (0..k)
                    .map(|i| params.sources[i].inclusion(truth))
                    .sum::<f64>()
                    / k as f64
            }
            1 => {
                let i = group_bits.iter().next().unwrap();
                params.sources[i].inclusion(truth) / k as f64
            }
            _ => 0.0,
        },
    }
}

impl PatternDistribution {
    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn pr_given_true(&self, pattern: SourceSubset) -> f64 {
        self.given_true[pattern.bits() as usize]
    }

    pub fn pr_given_false(&self, pattern: SourceSubset) -> f64 {
        self.given_false[pattern.bits() as usize]
    }

    /// Pr(all of `subset` provide | true): the generative joint recall.
    pub fn joint_recall(&self, subset: SourceSubset) -> f64 {
        self.superset_mass(&self.given_true, subset)
    }

    /// Pr(all of `subset` provide | false): the generative joint fpr.
    pub fn joint_fpr(&self, subset: SourceSubset) -> f64 {
        self.superset_mass(&self.given_false, subset)
    }

    fn superset_mass(&self, dist: &[f64], subset: SourceSubset) -> f64 {
        dist.iter()
            .enumerate()
            .filter(|&(bits, _)| subset.is_subset_of(SourceSubset::from_bits(bits as u64)))
            .map(|(_, p)| p)
            .sum()
    }

    /// Quality store holding the exact generative statistics for every
    /// subset; the reference input for oracle checks.
    pub fn to_store(&self) -> Result<JointQualityStore> {
        let tf = self.true_fraction;
        let singles: Vec<SourceQuality> = (0..self.n_sources)
            .map(|i| {
                let s = SourceSubset::singleton(i);
                let recall = self.joint_recall(s);
                let fpr = self.joint_fpr(s);
                let denom = recall * tf + fpr * (1.0 - tf);
                SourceQuality {
                    precision: if denom > 0.0 {
                        recall * tf / denom
                    } else {
                        0.0
                    },
                    recall,
                    fpr,
                }
            })
            .collect();
        let mut store = JointQualityStore::new(singles, FallbackPolicy::IndependenceProduct);
        for s in subset::subsets_by_size(SourceSubset::all(self.n_sources)) {
            if s.len() >= 2 {
                store.insert_joint(s, self.joint_recall(s), self.joint_fpr(s))?;
            }
        }
        Ok(store)
    }
}
