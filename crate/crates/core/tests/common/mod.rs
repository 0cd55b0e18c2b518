//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's own algorithms.
#![allow(dead_code)]

use std::collections::HashMap;

use centroid_hac::geometry::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset::new(
        (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect(),
    )
    .unwrap()
}

/// Gaussian blobs around `k` random centers.
pub fn blobs(n: usize, d: usize, k: usize, spread: f64, seed: u64) -> Dataset {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random::<f64>() * 10.0).collect())
        .collect();
    let noise = Normal::new(0.0, spread).unwrap();
    Dataset::new(
        (0..n)
            .map(|i| {
                centers[i % k]
                    .iter()
                    .map(|c| c + noise.sample(&mut rng))
                    .collect()
            })
            .collect(),
    )
    .unwrap()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleMerge {
    pub left: u64,
    pub right: u64,
    pub new: u64,
    pub distance: f64,
}

/// Centroid HAC by rescanning every active pair each step. Ties go to the
/// lexicographically smallest `(distance, min id, max id)`.
pub fn naive_hac(data: &Dataset) -> Vec<OracleMerge> {
    let n = data.len();
    let mut active: Vec<(u64, u64, Vec<f64>)> = (0..n)
        .map(|i| (i as u64, 1, data.point(i).to_vec()))
        .collect();
    let mut next = n as u64;
    let mut out = Vec::new();
    while active.len() > 1 {
        let mut best: Option<(f64, u64, u64, usize, usize)> = None;
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                let d = euclid(&active[i].2, &active[j].2);
                let (lo, hi) = (active[i].0.min(active[j].0), active[i].0.max(active[j].0));
                let better = match best {
                    None => true,
                    Some((bd, bl, bh, _, _)) => (d, lo, hi) < (bd, bl, bh),
                };
                if better {
                    best = Some((d, lo, hi, i, j));
                }
            }
        }
        let (d, lo, hi, i, j) = best.unwrap();
        let (a, b) = (active[i].clone(), active[j].clone());
        let w = a.1 + b.1;
        let coords =
            a.2.iter()
                .zip(&b.2)
                .map(|(x, y)| (a.1 as f64 * x + b.1 as f64 * y) / w as f64)
                .collect();
        active.swap_remove(j);
        active.swap_remove(i);
        active.push((next, w, coords));
        out.push(OracleMerge {
            left: lo,
            right: hi,
            new: next,
            distance: d,
        });
        next += 1;
    }
    out
}

/// For each recorded merge `(left, right)`, the distance between the two
/// merged centroids and the closest active pair just before it, by full
/// rescans.
pub fn replay_step_optimal(data: &Dataset, merges: &[(u64, u64)]) -> Vec<(f64, f64)> {
    let n = data.len();
    let mut cent: HashMap<u64, (u64, Vec<f64>)> = (0..n)
        .map(|i| (i as u64, (1, data.point(i).to_vec())))
        .collect();
    let mut next = n as u64;
    let mut out = Vec::new();
    for &(l, r) in merges {
        let pts: Vec<&Vec<f64>> = cent.values().map(|(_, c)| c).collect();
        let mut opt = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                opt = opt.min(euclid(pts[i], pts[j]));
            }
        }
        let (wa, a) = cent.remove(&l).expect("left child active");
        let (wb, b) = cent.remove(&r).expect("right child active");
        out.push((euclid(&a, &b), opt));
        let w = wa + wb;
        let c = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (wa as f64 * x + wb as f64 * y) / w as f64)
            .collect();
        cent.insert(next, (w, c));
        next += 1;
    }
    out
}

/// A binary tree over `n` leaves as merge pairs, leaves `0..n`, internal
/// nodes numbered `n..` in merge order.
pub type Tree = Vec<(usize, usize)>;

/// Every merge history over `n` leaves (ordered, so trees repeat with
/// different internal numbering).
pub fn all_histories(n: usize) -> Vec<Tree> {
    fn rec(live: Vec<usize>, next: usize, acc: Tree, out: &mut Vec<Tree>) {
        if live.len() == 1 {
            out.push(acc);
            return;
        }
        for i in 0..live.len() {
            for j in i + 1..live.len() {
                let mut l = live.clone();
                let (a, b) = (l[i], l[j]);
                l.remove(j);
                l.remove(i);
                l.push(next);
                let mut acc2 = acc.clone();
                acc2.push((a, b));
                rec(l, next + 1, acc2, out);
            }
        }
    }
    let mut out = Vec::new();
    rec((0..n).collect(), n, Vec::new(), &mut out);
    out
}

pub fn random_history(n: usize, rng: &mut impl Rng) -> Tree {
    let mut live: Vec<usize> = (0..n).collect();
    let mut next = n;
    let mut t = Vec::new();
    while live.len() > 1 {
        let a = live.swap_remove(rng.random_range(0..live.len()));
        let b = live.swap_remove(rng.random_range(0..live.len()));
        t.push((a.min(b), a.max(b)));
        live.push(next);
        next += 1;
    }
    t
}

/// Leaf set of every node.
pub fn leaf_sets(n: usize, tree: &Tree) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &(a, b) in tree {
        let mut s = sets[a].clone();
        s.extend(&sets[b]);
        s.sort();
        sets.push(s);
    }
    sets
}

/// Ancestor chain of each node, nearest first.
pub fn ancestors(n: usize, tree: &Tree) -> Vec<Vec<usize>> {
    let total = n + tree.len();
    let mut parent = vec![None; total];
    for (k, &(a, b)) in tree.iter().enumerate() {
        parent[a] = Some(n + k);
        parent[b] = Some(n + k);
    }
    (0..total)
        .map(|v| {
            let mut chain = Vec::new();
            let mut cur = parent[v];
            while let Some(p) = cur {
                chain.push(p);
                cur = parent[p];
            }
            chain
        })
        .collect()
}

/// Smallest node whose leaf set holds both leaves.
pub fn lca_by_sets(sets: &[Vec<usize>], n: usize, i: usize, j: usize) -> usize {
    (n..sets.len())
        .filter(|&v| sets[v].contains(&i) && sets[v].contains(&j))
        .min_by_key(|&v| sets[v].len())
        .unwrap()
}

/// Adjusted Rand index from raw pair counts.
pub fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut ss, mut sd, mut ds, mut dd) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => ss += 1.0,
                (true, false) => sd += 1.0,
                (false, true) => ds += 1.0,
                (false, false) => dd += 1.0,
            }
        }
    }
    let denom = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if denom == 0.0 {
        return 1.0;
    }
    2.0 * (ss * dd - sd * ds) / denom
}

/// NMI with arithmetic-mean normalization from explicit joint frequencies.
pub fn nmi_by_counts(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut joint = vec![vec![0f64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        joint[x][y] += 1.0;
    }
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum::<f64>() / n).collect();
    let pb: Vec<f64> = (0..kb)
        .map(|j| joint.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let h = |p: &[f64]| {
        -p.iter()
            .filter(|&&x| x > 0.0)
            .map(|x| x * x.ln())
            .sum::<f64>()
    };
    let (ha, hb) = (h(&pa), h(&pb));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let p = joint[x][y] / n;
            if p > 0.0 {
                mi += p * (p / (pa[x] * pb[y])).ln();
            }
        }
    }
    mi / ((ha + hb) / 2.0)
}
