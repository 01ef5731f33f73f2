//! Full pipeline on synthetic data: generate, estimate, fuse, evaluate.
//!
//! Builds a 10,000-triple world of five independent sources, trains a
//! quality profile from the labels, fuses with the independent engine, and
//! scores it against the union-k baselines.
//!
//! ```sh
//! cargo run --example synth_and_eval
//! ```

use corrfuse::engine::{fuse_all, Engine, EngineConfig};
use corrfuse::estimate::{build_profile, estimate_alpha, JointRequest};
use corrfuse::eval::{score, union_k};
use corrfuse::store::FallbackPolicy;
use corrfuse::synth::{generate, SynthParams};

fn main() {
    let params = SynthParams::homogeneous(5, 10_000, 0.5, 0.75, 0.75, 0.25, 2024);
    let data = generate(&params).unwrap();
    println!(
        "world: {} observed triples ({} true / {} false in the golden set)",
        data.obs.n_triples(),
        data.golden_true,
        data.golden_false
    );

    let alpha = estimate_alpha(&data.labels).unwrap();
    let profile = build_profile(
        &data.obs,
        &data.labels,
        alpha,
        &JointRequest::ProvidersOnly,
        1,
    )
    .unwrap();
    let store = profile
        .to_store(&data.obs, FallbackPolicy::IndependenceProduct)
        .unwrap();

    let mut config = EngineConfig::new(Engine::Independent);
    config.alpha = alpha;
    let report = fuse_all(&data.obs, &store, &config).unwrap();
    println!();
    println!("strategy      precision  recall  f1");
    let fused = score(&report.outcomes, &data.labels, 0.5).unwrap();
    println!(
        "{:<13} {:<10.4} {:<7.4} {:.4}",
        "independent", fused.precision, fused.recall, fused.f1
    );
    for k in 1..=5 {
        let outcomes = union_k(&data.obs, k).unwrap();
        let m = score(&outcomes, &data.labels, 0.5).unwrap();
        let name = if k == 3 {
            "union-3 (maj)".to_string()
        } else {
            format!("union-{k}")
        };
        println!(
            "{name:<13} {:<10.4} {:<7.4} {:.4}",
            m.precision, m.recall, m.f1
        );
    }
}
