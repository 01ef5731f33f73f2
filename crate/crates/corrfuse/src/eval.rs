//! Scoring fused outcomes against ground truth, plus the union-k baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::LabeledSet;
use crate::model::{FusionOutcome, LikelihoodRatio, ObservationMatrix};

/// Confusion-matrix metrics at a decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Metrics {
    fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Metrics {
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            tn,
        }
    }

    /// Aligned plain-text rendering for terminal display.
    pub fn table(&self) -> String {
        format!(
            "{:<10} {:>8}\n{:<10} {:>8.4}\n{:<10} {:>8.4}\n{:<10} {:>8.4}\n{:<10} {:>8}\n{:<10} {:>8}\n{:<10} {:>8}\n{:<10} {:>8}\n",
            "metric", "value",
            "precision", self.precision,
            "recall", self.recall,
            "f1", self.f1,
            "tp", self.tp,
            "fp", self.fp,
            "fn", self.fn_,
            "tn", self.tn,
        )
    }
}

/// Scores outcomes against labels: predicted true only when the probability
/// is strictly above the threshold; undefined probabilities count as
/// predicted false.
pub fn score(outcomes: &[FusionOutcome], labels: &LabeledSet, threshold: f64) -> Result<Metrics> {
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for o in outcomes {
        let truth = labels
            .get(o.triple)
            .ok_or_else(|| Error::MissingLabel(format!("triple index {}", o.triple.0)))?;
        let predicted = matches!(o.probability, Some(p) if p > threshold);
        match (predicted, truth) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

/// Baseline that accepts a triple provided by at least `k` sources;
/// `k = ceil(n/2)` is majority voting. Outcomes are degenerate
/// (probability 1 or 0) so they score at any threshold.
pub fn union_k(obs: &ObservationMatrix, k: usize) -> Result<Vec<FusionOutcome>> {
    if k == 0 || k > obs.n_sources() {
        return Err(Error::InvalidK {
            k,
            n_sources: obs.n_sources(),
        });
    }
    Ok(obs
        .triples()
        .map(|t| {
            let accepted = obs.providers(t).len() >= k;
            FusionOutcome {
                triple: t,
                mu: if accepted {
                    LikelihoodRatio::PositiveInfinity
                } else {
                    LikelihoodRatio::Finite(0.0)
                },
                probability: Some(if accepted { 1.0 } else { 0.0 }),
            }
        })
        .collect())
}

/// Majority voting: union-k at k = ceil(n/2).
pub fn majority(obs: &ObservationMatrix) -> Result<Vec<FusionOutcome>> {
    union_k(obs, obs.n_sources().div_ceil(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TripleId;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn outcome(i: u32, probability: Option<f64>) -> FusionOutcome {
        FusionOutcome {
            triple: TripleId(i),
            mu: LikelihoodRatio::Finite(1.0),
            probability,
        }
    }

    fn labels_of(truths: &[bool]) -> LabeledSet {
        let mut l = LabeledSet::new(truths.len());
        for (i, &v) in truths.iter().enumerate() {
            l.set(TripleId(i as u32), v);
        }
        l
    }

    #[test]
    fn perfect_predictions() {
        let outcomes = vec![outcome(0, Some(0.9)), outcome(1, Some(0.1))];
        let m = score(&outcomes, &labels_of(&[true, false]), 0.5).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (1, 0, 0, 1));
    }

    #[test]
    fn hand_confusion_matrix() {
        // Both triples true, one predicted below the threshold.
        let outcomes = vec![outcome(0, Some(0.6)), outcome(1, Some(0.4))];
        let m = score(&outcomes, &labels_of(&[true, true]), 0.5).unwrap();
        assert_eq!(m.precision, 1.0);
        assert_abs_diff_eq!(m.recall, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.f1, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn threshold_is_strict_and_undefined_counts_false() {
        let outcomes = vec![outcome(0, Some(0.5)), outcome(1, None)];
        let m = score(&outcomes, &labels_of(&[true, true]), 0.5).unwrap();
        assert_eq!((m.tp, m.fn_), (0, 2));
    }

    #[test]
    fn missing_label_is_an_error() {
        let outcomes = vec![outcome(3, Some(0.9))];
        assert!(matches!(
            score(&outcomes, &labels_of(&[true]), 0.5),
            Err(Error::MissingLabel(_))
        ));
    }

    fn five_source_matrix() -> ObservationMatrix {
        let mut b = ObservationMatrix::builder();
        for i in 1..=5 {
            b.source(&format!("S{i}"));
        }
        for s in ["S1", "S2", "S3", "S4"] {
            b.provide("t1", s);
        }
        b.provide("t2", "S5");
        b.build().unwrap()
    }

    #[test]
    fn union_k_examples() {
        let obs = five_source_matrix();
        let t1 = obs.triple_id("t1").unwrap();
        let by3 = union_k(&obs, 3).unwrap();
        assert_eq!(by3[t1.index()].probability, Some(1.0));
        // k = 1 accepts every observed triple.
        assert!(union_k(&obs, 1)
            .unwrap()
            .iter()
            .all(|o| o.probability == Some(1.0)));
        assert!(matches!(union_k(&obs, 0), Err(Error::InvalidK { .. })));
        assert!(matches!(union_k(&obs, 6), Err(Error::InvalidK { .. })));
        // Majority over five sources is union-3.
        assert_eq!(majority(&obs).unwrap(), by3);
    }

    #[test]
    fn synthetic_run_matches_rescoring_oracle() {
        use crate::engine::{fuse_all, Engine, EngineConfig};
        use crate::store::{FallbackPolicy, JointQualityStore, SourceQuality};
        use crate::synth::{generate, SynthParams};

        let params = SynthParams::homogeneous(5, 10_000, 0.5, 0.75, 0.75, 0.25, 4);
        let data = generate(&params).unwrap();
        let store = JointQualityStore::new(
            vec![
                SourceQuality {
                    precision: 0.75,
                    recall: 0.75 * 0.75,
                    fpr: 0.75 * 0.25
                };
                5
            ],
            FallbackPolicy::IndependenceProduct,
        );
        let report = fuse_all(&data.obs, &store, &EngineConfig::new(Engine::Independent)).unwrap();
        let metrics = score(&report.outcomes, &data.labels, 0.5).unwrap();

        // Recount the confusion matrix directly from the raw outcomes.
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for o in &report.outcomes {
            let truth = data.labels.get(o.triple).unwrap();
            let predicted = o.probability.unwrap() > 0.5;
            match (predicted, truth) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        assert_eq!(
            (metrics.tp, metrics.fp, metrics.fn_, metrics.tn),
            (tp, fp, fn_, tn)
        );
        let p = tp as f64 / (tp + fp) as f64;
        let r = tp as f64 / (tp + fn_) as f64;
        assert_abs_diff_eq!(metrics.f1, 2.0 * p * r / (p + r), epsilon = 1e-12);
    }

    proptest! {
        // Scoring is invariant under permutation of the outcomes list.
        #[test]
        fn score_permutation_invariant(seed in 0u64..100) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut outcomes: Vec<FusionOutcome> = (0..50)
                .map(|i| outcome(i, Some(f64::from(i % 10) / 10.0)))
                .collect();
            let labels = labels_of(&(0..50).map(|i| i % 3 == 0).collect::<Vec<_>>());
            let before = score(&outcomes, &labels, 0.5).unwrap();
            outcomes.shuffle(&mut rng);
            prop_assert_eq!(before, score(&outcomes, &labels, 0.5).unwrap());
        }

        // The accepted set shrinks as k grows.
        #[test]
        fn union_k_monotone(seed in 0u64..50) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut b = ObservationMatrix::builder();
            for i in 1..=6 {
                b.source(&format!("S{i}"));
            }
            for t in 0..30 {
                let name = format!("t{t}");
                let mut any = false;
                for i in 1..=6 {
                    if rng.gen_bool(0.4) {
                        b.provide(&name, &format!("S{i}"));
                        any = true;
                    }
                }
                if !any {
                    b.provide(&name, "S1");
                }
            }
            let obs = b.build().unwrap();
            let mut previous: Option<Vec<bool>> = None;
            for k in 1..=6 {
                let accepted: Vec<bool> = union_k(&obs, k)
                    .unwrap()
                    .iter()
                    .map(|o| o.probability == Some(1.0))
                    .collect();
                if let Some(prev) = &previous {
                    for (now, before) in accepted.iter().zip(prev) {
                        prop_assert!(!now || *before);
                    }
                }
                previous = Some(accepted);
            }
        }
    }
}
