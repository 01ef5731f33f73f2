//! Joint quality statistics keyed by canonical source subsets.
//!
//! The store holds per-source quality plus joint (recall, false positive
//! rate) entries for explicitly trained subsets. Lookups for subsets without
//! a stored entry either fail or, under the default policy, factor the
//! subset into maximal stored sub-subsets and multiply, assuming
//! independence across the unstored boundaries.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::subset::SourceSubset;

/// Per-source precision, recall, and false positive rate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SourceQuality {
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
}

/// What to do when a joint statistic has no stored entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FallbackPolicy {
    /// Factor into maximal stored sub-subsets and multiply.
    #[default]
    IndependenceProduct,
    /// Report a missing-joint error.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct JointEntry {
    recall: f64,
    fpr: f64,
}

/// Singleton and joint quality statistics with a configurable fallback.
///
/// The fallback cache is fill-once-idempotent: entries are pure functions of
/// the stored tables, so concurrent fills of the same subset write identical
/// values.
#[derive(Debug)]
pub struct JointQualityStore {
    singles: Vec<SourceQuality>,
    joints: HashMap<SourceSubset, JointEntry>,
    /// Stored joint keys ordered by (size desc, bitmask asc); scan order of
    /// the greedy factoring.
    factoring_order: Vec<SourceSubset>,
    policy: FallbackPolicy,
    cache: RwLock<HashMap<SourceSubset, JointEntry>>,
}

impl JointQualityStore {
    pub fn new(singles: Vec<SourceQuality>, policy: FallbackPolicy) -> JointQualityStore {
        JointQualityStore {
            singles,
            joints: HashMap::new(),
            factoring_order: Vec::new(),
            policy,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn n_sources(&self) -> usize {
        self.singles.len()
    }

    pub fn all_sources(&self) -> SourceSubset {
        SourceSubset::all(self.singles.len())
    }

    pub fn quality(&self, index: usize) -> Result<&SourceQuality> {
        self.singles.get(index).ok_or(Error::MissingQuality(index))
    }

    pub fn policy(&self) -> FallbackPolicy {
        self.policy
    }

    /// Stores a joint entry, validating consistency with what is already
    /// present:
    ///
    /// * the empty subset is fixed at (1, 1) and singletons must agree with
    ///   the per-source table;
    /// * intersection monotonicity against stored comparable subsets, for
    ///   both recall and fpr.
    pub fn insert_joint(&mut self, subset: SourceSubset, recall: f64, fpr: f64) -> Result<()> {
        const TOL: f64 = 1e-9;
        if !(0.0..=1.0).contains(&recall) || !(0.0..=1.0).contains(&fpr) {
            return Err(Error::InvalidParams(format!(
                "joint statistics must lie in [0,1], got ({recall}, {fpr})"
            )));
        }
        if !subset.is_subset_of(self.all_sources()) {
            return Err(Error::InvalidParams(
                "joint subset references an unknown source index".into(),
            ));
        }
        if subset.is_empty() {
            if (recall - 1.0).abs() > TOL || (fpr - 1.0).abs() > TOL {
                return Err(Error::InvalidParams(
                    "the empty-subset entry is (1, 1) by convention".into(),
                ));
            }
            return Ok(());
        }
        if subset.len() == 1 {
            let i = subset.iter().next().unwrap();
            let q = &self.singles[i];
            if (q.recall - recall).abs() > TOL || (q.fpr - fpr).abs() > TOL {
                return Err(Error::InvalidParams(format!(
                    "singleton joint entry for source index {i} disagrees with the per-source table"
                )));
            }
            return Ok(());
        }
        for i in subset.iter() {
            let q = &self.singles[i];
            if recall > q.recall + TOL || fpr > q.fpr + TOL {
                return Err(Error::InconsistentJointStats {
                    side: "joint entry above a member singleton",
                    value: recall.max(fpr),
                });
            }
        }
        for (&other, entry) in &self.joints {
            if other.is_subset_of(subset) && (recall > entry.recall + TOL || fpr > entry.fpr + TOL)
                || subset.is_subset_of(other)
                    && (entry.recall > recall + TOL || entry.fpr > fpr + TOL)
            {
                return Err(Error::InconsistentJointStats {
                    side: "intersection monotonicity",
                    value: recall,
                });
            }
        }
        self.joints.insert(subset, JointEntry { recall, fpr });
        self.rebuild_factoring_order();
        Ok(())
    }

    pub fn has_joint(&self, subset: SourceSubset) -> bool {
        self.joints.contains_key(&subset)
    }

    pub fn stored_joints(&self) -> impl Iterator<Item = (SourceSubset, f64, f64)> + '_ {
        self.factoring_order
            .iter()
            .map(|s| (*s, self.joints[s].recall, self.joints[s].fpr))
    }

    pub fn joint_recall(&self, subset: SourceSubset) -> Result<f64> {
        Ok(self.joint(subset)?.0)
    }

    pub fn joint_fpr(&self, subset: SourceSubset) -> Result<f64> {
        Ok(self.joint(subset)?.1)
    }

    /// (joint recall, joint fpr) for a subset, with the empty subset fixed
    /// at (1, 1).
    pub fn joint(&self, subset: SourceSubset) -> Result<(f64, f64)> {
        if subset.is_empty() {
            return Ok((1.0, 1.0));
        }
        if subset.len() == 1 {
            let q = self.quality(subset.iter().next().unwrap())?;
            return Ok((q.recall, q.fpr));
        }
        if let Some(e) = self.joints.get(&subset) {
            return Ok((e.recall, e.fpr));
        }
        if self.policy == FallbackPolicy::Error {
            return Err(Error::MissingJoint(format!("{subset:?}")));
        }
        if let Some(e) = self.cache.read().unwrap().get(&subset) {
            return Ok((e.recall, e.fpr));
        }
        let (entry, used_joint) = self.factorize(subset)?;
        if used_joint {
            // Only decompositions that touched a stored joint are worth
            // caching; pure singleton products are cheaper to recompute than
            // to keep for every subset the engines enumerate.
            self.cache.write().unwrap().entry(subset).or_insert(entry);
        }
        Ok((entry.recall, entry.fpr))
    }

    /// Greedy factoring: repeatedly take the largest stored subset contained
    /// in the remainder (ties by lowest bitmask), then fill with singletons.
    fn factorize(&self, subset: SourceSubset) -> Result<(JointEntry, bool)> {
        let mut remaining = subset;
        let mut recall = 1.0;
        let mut fpr = 1.0;
        let mut used_joint = false;
        for &stored in &self.factoring_order {
            if remaining.len() < 2 {
                break;
            }
            if stored.is_subset_of(remaining) {
                let e = &self.joints[&stored];
                recall *= e.recall;
                fpr *= e.fpr;
                remaining = remaining.difference(stored);
                used_joint = true;
            }
        }
        for i in remaining.iter() {
            let q = self.quality(i)?;
            recall *= q.recall;
            fpr *= q.fpr;
        }
        Ok((JointEntry { recall, fpr }, used_joint))
    }

    fn rebuild_factoring_order(&mut self) {
        let mut keys: Vec<SourceSubset> = self.joints.keys().copied().collect();
        keys.sort_by(|a, b| b.len().cmp(&a.len()).then(a.bits().cmp(&b.bits())));
        self.factoring_order = keys;
        // Stored entries changed; cached decompositions may be stale.
        self.cache.write().unwrap().clear();
    }
}
