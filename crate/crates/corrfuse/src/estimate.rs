//! Quality estimation from labeled training data.
//!
//! Precision and recall are counted directly. False positive rates are
//! never counted from labeled false triples — that count is biased by the
//! quality of the other sources — but derived from precision and recall:
//!
//! ```text
//! q = alpha/(1-alpha) * (1-p)/p * r
//! ```
//!
//! Joint statistics use the same counting on subset intersections, and the
//! same derivation gives the joint false positive rate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ObservationMatrix, Prior, SourceId, TripleId};
use crate::store::{FallbackPolicy, JointQualityStore, SourceQuality};
use crate::subset::{self, SourceSubset};

/// Ground-truth labels for triples of an observation matrix.
#[derive(Debug, Clone, Default)]
pub struct LabeledSet {
    labels: Vec<Option<bool>>,
    n_true: usize,
    n_labeled: usize,
}

impl LabeledSet {
    pub fn new(n_triples: usize) -> LabeledSet {
        LabeledSet {
            labels: vec![None; n_triples],
            n_true: 0,
            n_labeled: 0,
        }
    }

    /// Builds a labeled set from (triple id, truth) pairs, resolving names
    /// through the matrix. Every labeled triple must appear in the matrix.
    pub fn from_named<'a, I>(obs: &ObservationMatrix, pairs: I) -> Result<LabeledSet>
    where
        I: IntoIterator<Item = (&'a str, bool)>,
    {
        let mut set = LabeledSet::new(obs.n_triples());
        for (name, truth) in pairs {
            set.set(obs.triple_id(name)?, truth);
        }
        Ok(set)
    }

    pub fn set(&mut self, t: TripleId, truth: bool) {
        if t.index() >= self.labels.len() {
            self.labels.resize(t.index() + 1, None);
        }
        match self.labels[t.index()] {
            Some(old) => {
                if old != truth {
                    self.n_true = self.n_true.wrapping_add_signed(if truth { 1 } else { -1 });
                }
            }
            None => {
                self.n_labeled += 1;
                if truth {
                    self.n_true += 1;
                }
            }
        }
        self.labels[t.index()] = Some(truth);
    }

    pub fn get(&self, t: TripleId) -> Option<bool> {
        self.labels.get(t.index()).copied().flatten()
    }

    pub fn n_labeled(&self) -> usize {
        self.n_labeled
    }

    pub fn n_true(&self) -> usize {
        self.n_true
    }

    pub fn labeled(&self) -> impl Iterator<Item = (TripleId, bool)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|truth| (TripleId(i as u32), truth)))
    }
}

/// Fraction of a source's labeled triples that are true.
pub fn estimate_precision(
    source: SourceId,
    obs: &ObservationMatrix,
    labels: &LabeledSet,
) -> Result<f64> {
    let mut provided = 0usize;
    let mut correct = 0usize;
    for (t, truth) in labels.labeled() {
        if obs.provides(source, t) {
            provided += 1;
            if truth {
                correct += 1;
            }
        }
    }
    if provided == 0 {
        return Err(Error::InsufficientSupport(format!(
            "source `{}` provides no labeled triple",
            obs.source_name(source)
        )));
    }
    Ok(correct as f64 / provided as f64)
}

/// Fraction of the labeled-true triples that the source provides. The
/// universe is the set of true triples provided by at least one source in
/// the training data (every labeled triple, by construction).
pub fn estimate_recall(
    source: SourceId,
    obs: &ObservationMatrix,
    labels: &LabeledSet,
) -> Result<f64> {
    estimate_joint_recall(SourceSubset::singleton(source.index()), obs, labels)
}

/// Fraction of the labeled-true triples provided by every source in the
/// subset.
pub fn estimate_joint_recall(
    subset: SourceSubset,
    obs: &ObservationMatrix,
    labels: &LabeledSet,
) -> Result<f64> {
    if labels.n_true() == 0 {
        return Err(Error::InsufficientSupport(
            "no labeled-true triple in the training data".into(),
        ));
    }
    let hits = labels
        .labeled()
        .filter(|&(t, truth)| truth && subset.is_subset_of(obs.providers(t)))
        .count();
    Ok(hits as f64 / labels.n_true() as f64)
}

/// Fraction of the subset's labeled intersection triples that are true.
pub fn estimate_joint_precision(
    subset: SourceSubset,
    obs: &ObservationMatrix,
    labels: &LabeledSet,
) -> Result<f64> {
    let mut provided = 0usize;
    let mut correct = 0usize;
    for (t, truth) in labels.labeled() {
        if subset.is_subset_of(obs.providers(t)) {
            provided += 1;
            if truth {
                correct += 1;
            }
        }
    }
    if provided == 0 {
        return Err(Error::InsufficientSupport(format!(
            "subset {subset:?} has no labeled triple in its intersection"
        )));
    }
    Ok(correct as f64 / provided as f64)
}

/// Derives the false positive rate from precision and recall.
///
/// Valid only while `alpha <= p / (p + r - p*r)`; beyond that bound the
/// derived rate would exceed 1.
pub fn derive_fpr(precision: f64, recall: f64, alpha: Prior) -> Result<f64> {
    if !(0.0..=1.0).contains(&precision) || !(0.0..=1.0).contains(&recall) {
        return Err(Error::InvalidParams(format!(
            "precision and recall must lie in [0,1], got ({precision}, {recall})"
        )));
    }
    if precision == 0.0 {
        return Err(Error::DegeneratePrecision);
    }
    let a = alpha.value();
    let q = a / (1.0 - a) * (1.0 - precision) / precision * recall;
    if q > 1.0 + 1e-9 {
        return Err(Error::InvalidPrior {
            alpha: a,
            precision,
            recall,
            bound: precision / (precision + recall - precision * recall),
        });
    }
    Ok(q.min(1.0))
}

/// Same derivation applied to joint precision and joint recall.
pub fn derive_joint_fpr(joint_precision: f64, joint_recall: f64, alpha: Prior) -> Result<f64> {
    derive_fpr(joint_precision, joint_recall, alpha)
}

const ALPHA_CLAMP: f64 = 1e-6;

/// Fraction of labeled triples that are true, clamped into
/// (1e-6, 1 - 1e-6) so it remains a usable prior even for all-true or
/// all-false training sets.
pub fn estimate_alpha(labels: &LabeledSet) -> Result<Prior> {
    if labels.n_labeled() == 0 {
        return Err(Error::InsufficientSupport(
            "cannot estimate a prior from an empty labeled set".into(),
        ));
    }
    let f = labels.n_true() as f64 / labels.n_labeled() as f64;
    Prior::new(f.clamp(ALPHA_CLAMP, 1.0 - ALPHA_CLAMP))
}

/// Ratio of a subset's joint statistics to the product of its singletons;
/// 1 means independent, above 1 positive correlation, below 1
/// anti-correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationFactors {
    pub subset: SourceSubset,
    pub c_true: f64,
    pub c_false: f64,
}

pub fn correlation_factor(
    subset: SourceSubset,
    store: &JointQualityStore,
) -> Result<CorrelationFactors> {
    let mut recall_product = 1.0;
    let mut fpr_product = 1.0;
    for i in subset.iter() {
        let q = store.quality(i)?;
        if q.recall == 0.0 || q.fpr == 0.0 {
            return Err(Error::DegenerateQuality(i));
        }
        recall_product *= q.recall;
        fpr_product *= q.fpr;
    }
    let (joint_recall, joint_fpr) = store.joint(subset)?;
    Ok(CorrelationFactors {
        subset,
        c_true: joint_recall / recall_product,
        c_false: joint_fpr / fpr_product,
    })
}

/// Per-source correlation weights used by the aggressive and elastic
/// engines:
///
/// ```text
/// C_i+ = r_all / (r_i * r_all-without-i)      (and C_i- with fprs)
/// ```
///
/// All weights are 1 for independent sources.
#[derive(Debug, Clone, PartialEq)]
pub struct AggressiveWeights {
    c_plus: Vec<f64>,
    c_minus: Vec<f64>,
    weighted_recall: Vec<f64>,
    weighted_fpr: Vec<f64>,
}

impl AggressiveWeights {
    pub fn c_plus(&self, i: usize) -> f64 {
        self.c_plus[i]
    }

    pub fn c_minus(&self, i: usize) -> f64 {
        self.c_minus[i]
    }

    /// C_i+ * r_i
    pub fn weighted_recall(&self, i: usize) -> f64 {
        self.weighted_recall[i]
    }

    /// C_i- * q_i
    pub fn weighted_fpr(&self, i: usize) -> f64 {
        self.weighted_fpr[i]
    }

    /// Builds weights from explicitly given correlation factors instead of
    /// store lookups; lengths must match the store's source count.
    pub fn from_factors(
        store: &JointQualityStore,
        c_plus: Vec<f64>,
        c_minus: Vec<f64>,
    ) -> Result<AggressiveWeights> {
        let n = store.n_sources();
        if c_plus.len() != n || c_minus.len() != n {
            return Err(Error::InvalidParams(format!(
                "expected {n} correlation weights per side, got ({}, {})",
                c_plus.len(),
                c_minus.len()
            )));
        }
        let mut weighted_recall = Vec::with_capacity(n);
        let mut weighted_fpr = Vec::with_capacity(n);
        for i in 0..n {
            let q = store.quality(i)?;
            weighted_recall.push(c_plus[i] * q.recall);
            weighted_fpr.push(c_minus[i] * q.fpr);
        }
        Ok(AggressiveWeights {
            c_plus,
            c_minus,
            weighted_recall,
            weighted_fpr,
        })
    }
}

pub fn aggressive_weights(store: &JointQualityStore) -> Result<AggressiveWeights> {
    let n = store.n_sources();
    let all = store.all_sources();
    let (r_all, q_all) = store.joint(all)?;
    let mut c_plus = Vec::with_capacity(n);
    let mut c_minus = Vec::with_capacity(n);
    let mut weighted_recall = Vec::with_capacity(n);
    let mut weighted_fpr = Vec::with_capacity(n);
    for i in 0..n {
        let q = store.quality(i)?;
        let loo = all.difference(SourceSubset::singleton(i));
        let (r_loo, q_loo) = store.joint(loo)?;
        if q.recall * r_loo == 0.0 || q.fpr * q_loo == 0.0 {
            return Err(Error::DegenerateQuality(i));
        }
        c_plus.push(r_all / (q.recall * r_loo));
        c_minus.push(q_all / (q.fpr * q_loo));
        weighted_recall.push(r_all / r_loo);
        weighted_fpr.push(q_all / q_loo);
    }
    Ok(AggressiveWeights {
        c_plus,
        c_minus,
        weighted_recall,
        weighted_fpr,
    })
}

/// Trained quality statistics in their on-disk JSON form.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QualityProfile {
    pub alpha: f64,
    pub sources: Vec<ProfileSource>,
    pub joints: Vec<ProfileJoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileSource {
    pub id: String,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileJoint {
    /// Canonical subset string: ascending source ids joined by ",".
    pub subset: String,
    pub recall: f64,
    pub fpr: f64,
}

/// Which subsets receive trained joint entries. Exhaustive training is
/// exponential in the source count, so the caller chooses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JointRequest {
    /// Every distinct provider set appearing in the observations.
    ProvidersOnly,
    /// Every subset of at most this size.
    UpToSize(usize),
    /// Exactly these subsets.
    Explicit(Vec<SourceSubset>),
}

pub const DEFAULT_MIN_JOINT_SUPPORT: usize = 1;

/// Estimates a full quality profile: per-source statistics plus joint
/// entries for the requested subsets.
///
/// A requested subset is stored only when its intersection holds at least
/// `min_support` labeled triples and its joint precision is positive;
/// anything else is left to the store's fallback.
pub fn build_profile(
    obs: &ObservationMatrix,
    labels: &LabeledSet,
    alpha: Prior,
    request: &JointRequest,
    min_support: usize,
) -> Result<QualityProfile> {
    let mut sources = Vec::with_capacity(obs.n_sources());
    for s in obs.sources() {
        let precision = estimate_precision(s, obs, labels)?;
        let recall = estimate_recall(s, obs, labels)?;
        let fpr = derive_fpr(precision, recall, alpha)?;
        sources.push(ProfileSource {
            id: obs.source_name(s).to_string(),
            precision,
            recall,
            fpr,
        });
    }
    sources.sort_by(|a, b| a.id.cmp(&b.id));

    let requested: BTreeSet<SourceSubset> = match request {
        JointRequest::ProvidersOnly => obs
            .triples()
            .map(|t| obs.providers(t))
            .filter(|s| s.len() >= 2)
            .collect(),
        JointRequest::UpToSize(k) => subset::subsets_by_size(obs.all_sources())
            .filter(|s| s.len() >= 2 && s.len() <= *k)
            .collect(),
        JointRequest::Explicit(list) => list.iter().copied().filter(|s| s.len() >= 2).collect(),
    };

    let min_support = min_support.max(1);
    let mut joints = Vec::new();
    for s in requested {
        let support = labels
            .labeled()
            .filter(|&(t, _)| s.is_subset_of(obs.providers(t)))
            .count();
        if support < min_support {
            continue;
        }
        let joint_precision = estimate_joint_precision(s, obs, labels)?;
        if joint_precision == 0.0 {
            // Recall is 0 and the derivation cannot produce an fpr; leave
            // the subset to the fallback.
            continue;
        }
        let recall = estimate_joint_recall(s, obs, labels)?;
        let fpr = derive_joint_fpr(joint_precision, recall, alpha)?;
        joints.push(ProfileJoint {
            subset: obs.subset_to_string(s),
            recall,
            fpr,
        });
    }
    joints.sort_by(|a, b| {
        let la = a.subset.split(',').count();
        let lb = b.subset.split(',').count();
        la.cmp(&lb).then_with(|| a.subset.cmp(&b.subset))
    });

    Ok(QualityProfile {
        alpha: alpha.value(),
        sources,
        joints,
    })
}

impl QualityProfile {
    pub fn alpha(&self) -> Result<Prior> {
        Prior::new(self.alpha)
    }

    /// Builds a quality store indexed by the matrix's dense source ids.
    ///
    /// Every source in the matrix must have a profile entry. A profile may
    /// cover more sources than the matrix (trained on a superset); those
    /// singleton entries and any joint entries touching them are
    /// unreachable and get skipped.
    pub fn to_store(
        &self,
        obs: &ObservationMatrix,
        policy: FallbackPolicy,
    ) -> Result<JointQualityStore> {
        let mut singles = vec![None; obs.n_sources()];
        for s in &self.sources {
            if let Ok(id) = obs.source_id(&s.id) {
                singles[id.index()] = Some(SourceQuality {
                    precision: s.precision,
                    recall: s.recall,
                    fpr: s.fpr,
                });
            }
        }
        let singles: Vec<SourceQuality> = singles
            .into_iter()
            .enumerate()
            .map(|(i, q)| q.ok_or(Error::MissingQuality(i)))
            .collect::<Result<_>>()?;
        let mut store = JointQualityStore::new(singles, policy);
        for j in &self.joints {
            if let Ok(subset) = obs.subset_from_string(&j.subset) {
                store.insert_joint(subset, j.recall, j.fpr)?;
            }
        }
        Ok(store)
    }
}
