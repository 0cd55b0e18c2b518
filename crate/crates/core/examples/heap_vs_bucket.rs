//! The two approximate engines side by side on Gaussian blobs: merge
//! quality against the best available pair at each step, and work done.
//!
//! ```text
//! cargo run --release --example heap_vs_bucket
//! ```

use std::error::Error;

use centroid_hac::geometry::Dataset;
use centroid_hac::hac::{audit_merges, run_hac, HacConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn blobs(n: usize, seed: u64) -> Result<Dataset, Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.4)?;
    let centers = [[0.0, 0.0, 0.0], [5.0, 0.0, 1.0], [0.0, 6.0, -2.0], [4.0, 4.0, 4.0]];
    let rows = (0..n)
        .map(|i| centers[i % centers.len()].iter().map(|c| c + noise.sample(&mut rng)).collect())
        .collect();
    Ok(Dataset::new(rows)?)
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let data = blobs(400, 7)?;
    println!("{:<8} {:>5} {:>9} {:>9} {:>8} {:>10}", "engine", "eps", "queries", "requeues", "rounds", "worst");
    for eps in [0.05, 0.2, 0.5] {
        for (name, config) in [("heap", HacConfig::heap(eps)), ("bucket", HacConfig::bucket(eps))] {
            let (dend, stats) = run_hac(&data, &config)?;
            let worst = audit_merges(&data, &dend)?
                .iter()
                .map(|a| a.ratio())
                .fold(1.0, f64::max);
            println!(
                "{name:<8} {eps:>5} {:>9} {:>9} {:>8} {worst:>10.4}",
                stats.nns_queries, stats.requeues, stats.rounds
            );
            assert!(worst <= 1.0 + eps + 1e-9);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
