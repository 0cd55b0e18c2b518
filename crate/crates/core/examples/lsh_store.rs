//! The multi-scale LSH store on its own: tuned parameters, inserts,
//! deletes and approximate queries checked against a linear scan.
//!
//! ```text
//! cargo run --release --example lsh_store
//! ```

use std::error::Error;

use centroid_hac::geometry::{dist, Centroid, CentroidId, Point};
use centroid_hac::lsh::{LshNns, LshTuning};
use centroid_hac::nns::DynamicNns;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, dim) = (300, 6);
    let points: Vec<Centroid> = (0..n)
        .map(|i| {
            let coords = (0..dim).map(|_| rng.random::<f64>()).collect();
            Ok(Centroid::new(CentroidId(i), 1, Point::new(coords)?))
        })
        .collect::<Result<_, Box<dyn Error>>>()?;

    let c = 2.0;
    let params = LshTuning::default().params_for(points.len(), c, 0.01, 3.0, 5);
    println!(
        "K={} L={} scales={} max_probe={}",
        params.k_ands,
        params.l_ors,
        params.num_scales(),
        params.max_probe
    );
    let mut store = LshNns::build(dim, points.clone(), params)?;
    println!("{} tables, {} occupied buckets", store.table_count(), store.occupied_buckets());

    for id in (0..n).step_by(3) {
        store.delete(CentroidId(id))?;
    }
    let live: Vec<&Centroid> = points.iter().filter(|p| store.contains(p.id)).collect();

    let spec = store.approx_spec();
    let mut worst: f64 = 1.0;
    let mut misses = 0;
    for _ in 0..200 {
        let q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let got = store.query(&q, None)?;
        let best = live.iter().map(|p| dist(&q, &p.coords)).fold(f64::INFINITY, f64::min);
        worst = worst.max(got.distance / best);
        if !spec.admits(got.distance, best) {
            misses += 1;
        }
    }
    println!(
        "{} live points; over 200 queries: {misses} outside ({}, {}), worst ratio {worst:.3}, fallbacks {}",
        store.len(),
        spec.alpha,
        spec.beta,
        store.fallback_count()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
