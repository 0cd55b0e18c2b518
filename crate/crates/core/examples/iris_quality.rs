//! Scores hierarchies of the bundled iris data against its species labels.
//!
//! ```text
//! cargo run --release --example iris_quality
//! ```

use std::error::Error;
use std::path::Path;

use centroid_hac::hac::{run_hac, HacConfig};
use centroid_hac::io::{load_labels, load_points, PointFormat};
use centroid_hac::metrics::{
    best_cut_score, dasgupta_cost, delta_inversions, dendrogram_purity, flatten_at_threshold, CutPolicy,
    FlatMetric, Kernel,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let data = load_points(&dir.join("iris.csv"), PointFormat::Csv)?;
    let truth = load_labels(&dir.join("iris_labels.txt"))?;
    println!("{} points in {} dims, {} classes", data.len(), data.dim(), truth.num_clusters());

    for (name, config) in [
        ("exact", HacConfig::exact()),
        ("heap 0.1", HacConfig::heap(0.1)),
        ("bucket 0.1", HacConfig::bucket(0.1)),
    ] {
        let (dend, _) = run_hac(&data, &config)?;
        let ari = best_cut_score(&dend, &truth, FlatMetric::Ari, CutPolicy::AllThresholds)?;
        let nmi = best_cut_score(&dend, &truth, FlatMetric::Nmi, CutPolicy::LogThresholds { base: 1.1 })?;
        let purity = dendrogram_purity(&dend, &truth)?;
        let cost = dasgupta_cost(&dend, &data, Kernel::InverseDistance)?;
        println!(
            "{name:<10} ARI {:.4} ({} clusters), NMI {:.4}, purity {:.4}, dasgupta {:.1}, inversions {}",
            ari.score,
            ari.clusters,
            nmi.score,
            purity.value,
            cost.value,
            delta_inversions(&dend, 0.0)
        );
        let flat = flatten_at_threshold(&dend, ari.threshold);
        println!("{:<10} best ARI cut at {:.4} gives {} clusters", "", ari.threshold, flat.num_clusters());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
