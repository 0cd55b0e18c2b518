//! The adaptive store: queries snap to a covering-net grid before reaching
//! the merge-and-reduce levels, so a caller that picks its next update from
//! earlier answers still gets answers within the advertised bounds.
//!
//! ```text
//! cargo run --release --example adaptive_store
//! ```

use std::error::Error;

use centroid_hac::adaptive::{AdaptiveNns, CoveringNet, ExactLevels, LevelBuilder, LshLevels};
use centroid_hac::geometry::{dist, Centroid, CentroidId, Point};
use centroid_hac::lsh::LshTuning;
use centroid_hac::nns::DynamicNns;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deletes whatever the store returned and inserts a point right next to
/// the query, so every update depends on the previous answer.
fn adversary<B: LevelBuilder>(mut store: AdaptiveNns<B>, rounds: usize) -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut live: Vec<Centroid> = Vec::new();
    let mut next = 0u64;
    let mut insert = |store: &mut AdaptiveNns<B>, live: &mut Vec<Centroid>, coords: Vec<f64>| {
        let c = Centroid::new(CentroidId(next), 1, Point::new(coords).expect("finite"));
        next += 1;
        store.insert(c.clone()).expect("fresh id");
        live.push(c);
    };
    for _ in 0..64 {
        insert(&mut store, &mut live, vec![rng.random(), rng.random()]);
    }

    let spec = store.approx_spec();
    let mut violations = 0;
    for _ in 0..rounds {
        let q = vec![rng.random::<f64>(), rng.random::<f64>()];
        let got = store.query(&q, None)?;
        let best = live.iter().map(|c| dist(&q, &c.coords)).fold(f64::INFINITY, f64::min);
        if !spec.admits(got.distance, best) {
            violations += 1;
        }
        store.delete(got.neighbor.id)?;
        live.retain(|c| c.id != got.neighbor.id);
        insert(&mut store, &mut live, vec![q[0] + 1e-3, q[1]]);
    }
    store.check_invariants()?;
    let k = store.counters();
    println!(
        "  spec ({:.3}, {:.4}): {violations} violations in {rounds} rounds",
        spec.alpha, spec.beta
    );
    println!(
        "  {} inserts, {} deletes, {} movements, {} rebuilds, level sizes {:?}",
        k.inserts,
        k.deletes,
        k.movements,
        k.rebuilds,
        store.level_sizes()
    );
    Ok(())
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let net = || CoveringNet::new(Point::new(vec![0.5, 0.5]).expect("finite"), 1.0, 0.01);
    let shown = net()?;
    println!("net step {:.5}", shown.step());
    println!(
        "snap (0.123456, 0.654321) -> {:?}",
        shown.snap(&[0.123456, 0.654321]).as_slice()
    );

    println!("exact levels:");
    adversary(AdaptiveNns::new(ExactLevels, net()?, 512, 1), 400)?;

    println!("lsh levels:");
    let levels = LshLevels {
        c: 1.5,
        beta: 0.01,
        big_delta: 2.0,
        tuning: LshTuning::default(),
    };
    adversary(AdaptiveNns::new(levels, net()?, 512, 1), 400)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
