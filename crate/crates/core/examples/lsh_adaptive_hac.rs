//! Clustering through the adaptive LSH store, with every merge audited
//! against the closest pair available at that step.
//!
//! ```text
//! cargo run --release --example lsh_adaptive_hac
//! ```

use std::error::Error;

use centroid_hac::geometry::{compute_bounds, Dataset};
use centroid_hac::hac::{audit_merges, run_hac, HacConfig, LshAdaptivePlan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let data = Dataset::new((0..200).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect())?;

    let (c, eps, lambda) = (2.0, 0.1, 1.5);
    let config = HacConfig::lsh_adaptive(c, eps, lambda, 42);
    let bounds = compute_bounds(&data)?;
    let plan = LshAdaptivePlan::new(&config, bounds)?;
    println!(
        "delta {:.4}, Delta {:.4}, level alpha {:.3}, beta0 {:.5}",
        bounds.delta, bounds.big_delta, plan.level_alpha, plan.beta0
    );

    let (dend, stats) = run_hac(&data, &config)?;
    let audits = audit_merges(&data, &dend)?;
    let over = audits.iter().filter(|a| a.ratio() > c * (1.0 + eps)).count();
    let worst = audits.iter().map(|a| a.ratio()).fold(1.0, f64::max);
    println!(
        "{} merges, {} over c(1+eps), worst ratio {worst:.4}, gamma {:.3}",
        stats.merges,
        over,
        stats.gamma()
    );
    println!(
        "{} queries, {} inserts, {} deletes, {} requeues",
        stats.nns_queries, stats.nns_inserts, stats.nns_deletes, stats.requeues
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
