//! Correlation-aware truth discovery for multi-source data.
//!
//! Given a set of sources that each provide some triples (facts), `corrfuse`
//! decides how likely each triple is to be true. Sources are described by
//! their precision, recall, and false positive rate; correlations between
//! sources are captured by joint recall and joint false positive rates of
//! source subsets.
//!
//! Four fusion engines are provided, trading accuracy for cost:
//!
//! * [`engine::mu_independent`] — treats sources as independent; linear time.
//! * [`engine::mu_exact`] — inclusion–exclusion over non-provider subsets;
//!   exact under correlations, exponential in the number of non-providers.
//! * [`engine::mu_aggressive`] — weighs each source by per-source correlation
//!   factors; linear time, can be badly wrong for replicas or complementary
//!   sources.
//! * [`engine::mu_elastic`] — starts from the aggressive form and corrects
//!   subset terms up to a chosen level, interpolating between the two.
//!
//! Quality statistics are estimated from labeled training data
//! ([`estimate`]), synthetic benchmark worlds with controlled correlation
//! structure are generated by [`synth`], and [`eval`] scores outcomes against
//! ground truth. The `corrfuse` binary wires these into batch commands; the
//! `examples/` directory shows one runnable program per capability.

pub mod commands;
pub mod engine;
pub mod error;
pub mod estimate;
pub mod eval;
pub mod io;
mod kahan;
pub mod model;
pub mod store;
pub mod subset;
pub mod synth;

pub use error::Error;
pub use model::{
    FusionOutcome, LikelihoodRatio, ObservationMatrix, Prior, SourceId, TripleId, TruthLabel,
};
pub use store::{JointQualityStore, SourceQuality};
pub use subset::SourceSubset;
