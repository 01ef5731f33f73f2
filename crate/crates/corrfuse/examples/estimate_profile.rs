//! Estimating source quality from labeled training data.
//!
//! Reads the sample observation/label CSVs, counts precision and recall per
//! source, derives false positive rates, and prints the resulting quality
//! profile with joint statistics for every observed provider set.
//!
//! ```sh
//! cargo run --example estimate_profile
//! ```

use std::path::Path;

use corrfuse::estimate::{build_profile, JointRequest};
use corrfuse::io::{read_labels, read_observations};
use corrfuse::model::Prior;

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample");
    let (obs, _) = read_observations(&data.join("observations.csv")).unwrap();
    let labels = read_labels(&obs, &data.join("labels.csv")).unwrap();

    let profile = build_profile(
        &obs,
        &labels,
        Prior::default(),
        &JointRequest::ProvidersOnly,
        1,
    )
    .unwrap();

    println!("source  precision  recall  fpr");
    for s in &profile.sources {
        println!(
            "{:<7} {:<10.4} {:<7.4} {:.4}",
            s.id, s.precision, s.recall, s.fpr
        );
    }
    println!();
    println!("joint statistics (trained provider sets):");
    for j in &profile.joints {
        println!(
            "  {{{}}}: recall {:.4}, fpr {:.4}",
            j.subset, j.recall, j.fpr
        );
    }
    println!();
    println!(
        "profile JSON:\n{}",
        serde_json::to_string_pretty(&profile).unwrap()
    );
}
