//! Shared domain types: identifiers, the observation matrix, priors,
//! likelihood ratios, and the posterior transform used by every engine.
//!
//! Source and triple ids are re-indexed to dense integers at ingestion; the
//! original strings are kept for output. Subset-valued state (provider sets,
//! scope masks) is stored as [`SourceSubset`] bitmasks.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::subset::{SourceSubset, MAX_SOURCES};

/// Dense index of a source within a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceId(pub u32);

/// Dense index of a triple within a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TripleId(pub u32);

impl SourceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TripleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A-priori probability that a candidate triple is true.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior(f64);

impl Prior {
    /// Accepts only values strictly between 0 and 1.
    pub fn new(alpha: f64) -> Result<Prior> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Prior(alpha))
        } else {
            Err(Error::PriorOutOfRange(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Prior odds against: (1 - alpha) / alpha.
    pub fn odds_against(self) -> f64 {
        (1.0 - self.0) / self.0
    }
}

impl Default for Prior {
    /// 0.5 unless estimated from training data.
    fn default() -> Self {
        Prior(0.5)
    }
}

/// Likelihood ratio mu = Pr(observations | true) / Pr(observations | false).
///
/// Kept as an extended real so that a zero false positive rate yields a
/// certain-true sentinel instead of an overflowing float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodRatio {
    Finite(f64),
    PositiveInfinity,
    /// Both conditional probabilities vanished; no information.
    Undefined,
}

impl LikelihoodRatio {
    /// Builds the sentinel-correct ratio from a numerator and denominator
    /// that are each probabilities (>= 0).
    pub fn from_ratio(numerator: f64, denominator: f64) -> LikelihoodRatio {
        match (numerator > 0.0, denominator > 0.0) {
            (true, true) => LikelihoodRatio::Finite(numerator / denominator),
            (true, false) => LikelihoodRatio::PositiveInfinity,
            (false, true) => LikelihoodRatio::Finite(0.0),
            (false, false) => LikelihoodRatio::Undefined,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            LikelihoodRatio::Finite(x) => Some(x),
            _ => None,
        }
    }
}

/// Posterior probability that the triple is true:
/// 1 / (1 + (1-alpha)/alpha * 1/mu).
///
/// Returns `None` when mu is undefined.
pub fn posterior(mu: LikelihoodRatio, alpha: Prior) -> Option<f64> {
    match mu {
        LikelihoodRatio::Finite(x) if x > 0.0 => Some(1.0 / (1.0 + alpha.odds_against() / x)),
        LikelihoodRatio::Finite(_) => Some(0.0),
        LikelihoodRatio::PositiveInfinity => Some(1.0),
        LikelihoodRatio::Undefined => None,
    }
}

/// Classification of a posterior probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthLabel {
    True,
    False,
    Undefined,
}

/// A triple is accepted as true only when its probability is strictly above
/// the threshold; exactly at the threshold classifies false. Undefined
/// probabilities classify as `Undefined`.
pub fn classify(probability: Option<f64>, threshold: f64) -> TruthLabel {
    match probability {
        Some(p) if p > threshold => TruthLabel::True,
        Some(_) => TruthLabel::False,
        None => TruthLabel::Undefined,
    }
}

/// Per-triple fusion result.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub triple: TripleId,
    pub mu: LikelihoodRatio,
    /// `None` exactly when `mu` is undefined.
    pub probability: Option<f64>,
}

impl FusionOutcome {
    pub fn new(triple: TripleId, mu: LikelihoodRatio, alpha: Prior) -> FusionOutcome {
        FusionOutcome {
            triple,
            mu,
            probability: posterior(mu, alpha),
        }
    }
}

/// Which sources provide which triples, with an optional per-triple scope
/// mask restricting which sources count as in-scope non-providers.
#[derive(Debug, Clone)]
pub struct ObservationMatrix {
    source_names: Vec<String>,
    source_index: HashMap<String, SourceId>,
    triple_names: Vec<String>,
    triple_index: HashMap<String, TripleId>,
    providers: Vec<SourceSubset>,
    scope: Vec<Option<SourceSubset>>,
}

impl ObservationMatrix {
    pub fn builder() -> ObservationMatrixBuilder {
        ObservationMatrixBuilder::default()
    }

    pub fn n_sources(&self) -> usize {
        self.source_names.len()
    }

    pub fn n_triples(&self) -> usize {
        self.triple_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triple_names.is_empty()
    }

    pub fn all_sources(&self) -> SourceSubset {
        SourceSubset::all(self.n_sources())
    }

    pub fn source_name(&self, id: SourceId) -> &str {
        &self.source_names[id.index()]
    }

    pub fn triple_name(&self, id: TripleId) -> &str {
        &self.triple_names[id.index()]
    }

    pub fn source_id(&self, name: &str) -> Result<SourceId> {
        self.source_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownSource(name.to_string()))
    }

    pub fn triple_id(&self, name: &str) -> Result<TripleId> {
        self.triple_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownTriple(name.to_string()))
    }

    pub fn triples(&self) -> impl Iterator<Item = TripleId> + '_ {
        (0..self.triple_names.len() as u32).map(TripleId)
    }

    pub fn sources(&self) -> impl Iterator<Item = SourceId> + '_ {
        (0..self.source_names.len() as u32).map(SourceId)
    }

    /// Sources that provide the triple.
    pub fn providers(&self, t: TripleId) -> SourceSubset {
        self.providers[t.index()]
    }

    /// Sources considered relevant for the triple; defaults to all sources.
    pub fn scope(&self, t: TripleId) -> SourceSubset {
        self.scope[t.index()].unwrap_or_else(|| self.all_sources())
    }

    /// In-scope sources that do not provide the triple.
    pub fn non_providers(&self, t: TripleId) -> SourceSubset {
        self.scope(t).difference(self.providers(t))
    }

    pub fn provides(&self, source: SourceId, t: TripleId) -> bool {
        self.providers[t.index()].contains(source.index())
    }

    /// Bitmask for a list of registered source names; order-insensitive and
    /// duplicate-tolerant.
    pub fn canonicalize_subset<S: AsRef<str>>(&self, ids: &[S]) -> Result<SourceSubset> {
        let mut subset = SourceSubset::EMPTY;
        for id in ids {
            subset.insert(self.source_id(id.as_ref())?.index());
        }
        Ok(subset)
    }

    /// Canonical string form: member source ids joined by "," in ascending
    /// (lexicographic) id order.
    pub fn subset_to_string(&self, subset: SourceSubset) -> String {
        let mut names: Vec<&str> = subset
            .iter()
            .map(|i| self.source_names[i].as_str())
            .collect();
        names.sort_unstable();
        names.join(",")
    }

    /// Parses the canonical string form back into a bitmask.
    pub fn subset_from_string(&self, s: &str) -> Result<SourceSubset> {
        if s.is_empty() {
            return Ok(SourceSubset::EMPTY);
        }
        let parts: Vec<&str> = s.split(',').collect();
        self.canonicalize_subset(&parts)
    }
}

/// Incremental construction of an [`ObservationMatrix`] from (triple, source)
/// provision pairs. Duplicate provisions are counted so callers can warn.
#[derive(Debug, Default)]
pub struct ObservationMatrixBuilder {
    source_names: Vec<String>,
    source_index: HashMap<String, SourceId>,
    triple_names: Vec<String>,
    triple_index: HashMap<String, TripleId>,
    providers: Vec<SourceSubset>,
    scope: Vec<Option<SourceSubset>>,
    duplicates: usize,
}

impl ObservationMatrixBuilder {
    pub fn source(&mut self, name: &str) -> SourceId {
        if let Some(&id) = self.source_index.get(name) {
            return id;
        }
        let id = SourceId(self.source_names.len() as u32);
        self.source_names.push(name.to_string());
        self.source_index.insert(name.to_string(), id);
        id
    }

    pub fn triple(&mut self, name: &str) -> TripleId {
        if let Some(&id) = self.triple_index.get(name) {
            return id;
        }
        let id = TripleId(self.triple_names.len() as u32);
        self.triple_names.push(name.to_string());
        self.triple_index.insert(name.to_string(), id);
        self.providers.push(SourceSubset::EMPTY);
        self.scope.push(None);
        id
    }

    pub fn provide(&mut self, triple: &str, source: &str) {
        let s = self.source(source);
        let t = self.triple(triple);
        if self.providers[t.index()].contains(s.index()) {
            self.duplicates += 1;
        } else {
            self.providers[t.index()].insert(s.index());
        }
    }

    /// Restricts the triple's scope; the provider set must stay inside it.
    pub fn set_scope(&mut self, triple: &str, scope: SourceSubset) {
        let t = self.triple(triple);
        self.scope[t.index()] = Some(scope);
    }

    /// Number of duplicate provision rows seen so far.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn build(self) -> Result<ObservationMatrix> {
        if self.source_names.len() > MAX_SOURCES {
            return Err(Error::TooManySources(self.source_names.len()));
        }
        for (i, providers) in self.providers.iter().enumerate() {
            if providers.is_empty() {
                return Err(Error::InvalidParams(format!(
                    "triple `{}` has no providers",
                    self.triple_names[i]
                )));
            }
            if let Some(scope) = self.scope[i] {
                if !providers.is_subset_of(scope) {
                    return Err(Error::InvalidParams(format!(
                        "triple `{}`: provider set is not contained in its scope mask",
                        self.triple_names[i]
                    )));
                }
            }
        }
        Ok(ObservationMatrix {
            source_names: self.source_names,
            source_index: self.source_index,
            triple_names: self.triple_names,
            triple_index: self.triple_index,
            providers: self.providers,
            scope: self.scope,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn matrix_of(n: usize) -> ObservationMatrix {
        let mut b = ObservationMatrix::builder();
        for i in 1..=n {
            b.source(&format!("S{i}"));
        }
        b.provide("t1", "S1");
        b.build().unwrap()
    }

    #[test]
    fn posterior_worked_values() {
        let half = Prior::default();
        // Aggressive-approximation worked value: mu 0.3 at alpha 0.5.
        let p = posterior(LikelihoodRatio::Finite(0.3), half).unwrap();
        assert_abs_diff_eq!(p, 0.2308, epsilon = 1e-4);
        // Symmetric evidence.
        assert_abs_diff_eq!(
            posterior(LikelihoodRatio::Finite(1.0), half).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        // Certain-true sentinel.
        assert_eq!(
            posterior(LikelihoodRatio::PositiveInfinity, half),
            Some(1.0)
        );
        assert_eq!(posterior(LikelihoodRatio::Finite(0.0), half), Some(0.0));
        assert_eq!(posterior(LikelihoodRatio::Undefined, half), None);
    }

    #[test]
    fn classify_uses_strict_threshold() {
        assert_eq!(classify(Some(0.51), 0.5), TruthLabel::True);
        // Exactly at the threshold classifies false.
        assert_eq!(classify(Some(0.5), 0.5), TruthLabel::False);
        assert_eq!(classify(None, 0.5), TruthLabel::Undefined);
    }

    #[test]
    fn canonicalize_is_order_insensitive_and_idempotent() {
        let m = matrix_of(3);
        let a = m.canonicalize_subset(&["S2", "S1"]).unwrap();
        assert_eq!(a, SourceSubset::from_indices([0, 1]));
        let empty: [&str; 0] = [];
        assert_eq!(m.canonicalize_subset(&empty).unwrap(), SourceSubset::EMPTY);
        assert_eq!(
            m.canonicalize_subset(&["S1", "S1"]).unwrap(),
            SourceSubset::singleton(0)
        );
        assert!(matches!(
            m.canonicalize_subset(&["S9"]),
            Err(Error::UnknownSource(_))
        ));
    }

    #[test]
    fn subset_string_round_trip_exhaustive() {
        let m = matrix_of(16);
        for bits in 0u64..(1 << 16) {
            let s = SourceSubset::from_bits(bits);
            let text = m.subset_to_string(s);
            assert_eq!(m.subset_from_string(&text).unwrap(), s);
        }
    }

    #[test]
    fn builder_rejects_provider_outside_scope() {
        let mut b = ObservationMatrix::builder();
        b.provide("t1", "S1");
        b.provide("t1", "S2");
        b.set_scope("t1", SourceSubset::singleton(0));
        assert!(b.build().is_err());
    }

    #[test]
    fn builder_counts_duplicates() {
        let mut b = ObservationMatrix::builder();
        b.provide("t1", "S1");
        b.provide("t1", "S1");
        assert_eq!(b.duplicates(), 1);
        assert!(b.build().is_ok());
    }

    #[test]
    fn non_providers_respect_scope() {
        let mut b = ObservationMatrix::builder();
        b.provide("t1", "S1");
        b.provide("t2", "S2");
        b.source("S3");
        b.set_scope("t1", SourceSubset::from_indices([0, 1]));
        let m = b.build().unwrap();
        let t1 = m.triple_id("t1").unwrap();
        let t2 = m.triple_id("t2").unwrap();
        assert_eq!(m.non_providers(t1), SourceSubset::singleton(1));
        // Default scope is all sources.
        assert_eq!(m.non_providers(t2), SourceSubset::from_indices([0, 2]));
    }

    proptest! {
        // Strictly increasing in mu for fixed alpha, and in alpha for fixed mu.
        #[test]
        fn posterior_monotone(mu in 1e-6..1e6f64, bump in 1e-3..10.0f64, alpha in 0.01..0.99f64) {
            let a = Prior::new(alpha).unwrap();
            let p1 = posterior(LikelihoodRatio::Finite(mu), a).unwrap();
            let p2 = posterior(LikelihoodRatio::Finite(mu * (1.0 + bump)), a).unwrap();
            prop_assert!(p2 > p1);
            let a2 = Prior::new(alpha + (1.0 - alpha) * 0.5).unwrap();
            let p3 = posterior(LikelihoodRatio::Finite(mu), a2).unwrap();
            prop_assert!(p3 > p1);
        }

        // posterior(1/mu, 1-alpha) = 1 - posterior(mu, alpha).
        #[test]
        fn posterior_bayes_symmetry(mu in 1e-6..1e6f64, alpha in 0.01..0.99f64) {
            let p = posterior(LikelihoodRatio::Finite(mu), Prior::new(alpha).unwrap()).unwrap();
            let q = posterior(
                LikelihoodRatio::Finite(1.0 / mu),
                Prior::new(1.0 - alpha).unwrap(),
            )
            .unwrap();
            prop_assert!((p + q - 1.0).abs() < 1e-9);
        }
    }
}
