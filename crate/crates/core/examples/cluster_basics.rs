//! Centroid-linkage clustering of a handful of points, exact and approximate.
//!
//! ```text
//! cargo run --example cluster_basics
//! ```

use std::error::Error;

use centroid_hac::geometry::Dataset;
use centroid_hac::hac::{run_hac, HacConfig};
use centroid_hac::io::dendrogram_csv;

pub fn run() -> Result<(), Box<dyn Error>> {
    // an equilateral triangle plus a far-away pair
    let data = Dataset::new(vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![0.5, 3f64.sqrt() / 2.0],
        vec![10.0, 10.0],
        vec![10.0, 11.5],
    ])?;

    let (exact, _) = run_hac(&data, &HacConfig::exact())?;
    println!("exact merges:");
    for m in exact.merges() {
        println!(
            "  {} + {} -> {} at {:.6} (size {})",
            m.left_id.0, m.right_id.0, m.new_id.0, m.distance, m.new_size
        );
    }

    let (approx, stats) = run_hac(&data, &HacConfig::heap(0.1))?;
    println!(
        "heap eps=0.1: {} merges, {} requeues, {} queries",
        stats.merges, stats.requeues, stats.nns_queries
    );
    assert_eq!(approx.len(), data.len() - 1);

    println!("\nas CSV:");
    dendrogram_csv(&exact, &mut std::io::stdout())?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
