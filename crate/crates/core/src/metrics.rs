//! Flat and hierarchical clustering quality measures.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist, Dataset, Dendrogram};

pub const DEFAULT_EXACT_THRESHOLD: usize = 2000;
pub const DEFAULT_SAMPLE_PAIRS: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dendrogram has {leaves} leaves but {points} points were given")]
    LeafMismatch { leaves: usize, points: usize },
    #[error("log cut base must be > 1, got {0}")]
    InvalidBase(f64),
}

/// Flat cluster assignment with ids `0..k` numbered by first appearance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    labels: Vec<usize>,
}

impl Clustering {
    /// Renumbers arbitrary labels to contiguous ids.
    pub fn from_labels<T: Eq + std::hash::Hash + Clone>(raw: &[T]) -> Self {
        let mut ids: HashMap<T, usize> = HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Clustering { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    fn sizes(&self) -> Vec<u64> {
        let mut s = vec![0u64; self.num_clusters()];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

/// How a threshold cut treats merges that sit above cheaper descendants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlattenRule {
    /// Replay merges in recorded order, applying those with cost `<= tau`
    /// whose children were both formed.
    #[default]
    MergeOrder,
    /// Keep every maximal subtree whose root costs `<= tau`.
    TopDown,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra.max(rb)] = ra.min(rb);
    }
}

pub fn flatten_at_threshold(dend: &Dendrogram, tau: f64) -> Clustering {
    flatten_with(dend, tau, FlattenRule::MergeOrder)
}

pub fn flatten_with(dend: &Dendrogram, tau: f64, rule: FlattenRule) -> Clustering {
    let n = dend.n_leaves();
    let total = n + dend.len();
    let mut uf = UnionFind::new(total);
    match rule {
        FlattenRule::MergeOrder => {
            let mut formed = vec![false; total];
            formed[..n].fill(true);
            for m in dend.merges() {
                let (l, r) = (m.left_id.index(), m.right_id.index());
                if m.distance <= tau && formed[l] && formed[r] {
                    formed[m.new_id.index()] = true;
                    uf.union(l, m.new_id.index());
                    uf.union(r, m.new_id.index());
                }
            }
        }
        FlattenRule::TopDown => {
            let parents = dend.parents();
            // a node stays whole if it costs <= tau or an ancestor stays whole
            let mut whole = vec![false; total];
            for m in dend.merges().iter().rev() {
                let v = m.new_id.index();
                let inherited = parents[v].is_some_and(|p| whole[p]);
                whole[v] = inherited || m.distance <= tau;
                if whole[v] {
                    uf.union(m.left_id.index(), v);
                    uf.union(m.right_id.index(), v);
                }
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
    Clustering::from_labels(&roots)
}

struct Contingency {
    n: u64,
    cells: HashMap<(usize, usize), u64>,
    a: Vec<u64>,
    b: Vec<u64>,
}

fn contingency(a: &Clustering, b: &Clustering) -> Result<Contingency, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut cells = HashMap::new();
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        *cells.entry((x, y)).or_insert(0) += 1;
    }
    Ok(Contingency {
        n: a.len() as u64,
        cells,
        a: a.sizes(),
        b: b.sizes(),
    })
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. Returns 1 when the adjustment is degenerate
/// (both clusterings trivial in the same way).
pub fn ari(a: &Clustering, b: &Clustering) -> Result<f64, MetricsError> {
    let t = contingency(a, b)?;
    let index: f64 = t.cells.values().map(|&c| choose2(c)).sum();
    let sa: f64 = t.a.iter().map(|&c| choose2(c)).sum();
    let sb: f64 = t.b.iter().map(|&c| choose2(c)).sum();
    let total = choose2(t.n);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn entropy(sizes: &[u64], n: f64) -> f64 {
    sizes
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over the arithmetic mean of the two entropies.
/// Two single-cluster labelings score 1.
pub fn nmi(a: &Clustering, b: &Clustering) -> Result<f64, MetricsError> {
    let t = contingency(a, b)?;
    let n = t.n as f64;
    let (ha, hb) = (entropy(&t.a, n), entropy(&t.b, n));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mi: f64 = t
        .cells
        .iter()
        .map(|(&(i, j), &c)| {
            let c = c as f64;
            c / n * (c * n / (t.a[i] as f64 * t.b[j] as f64)).ln()
        })
        .sum();
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// Controls exact evaluation versus pair sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    pub exact_threshold: usize,
    pub sample_pairs: usize,
    pub seed: u64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
            sample_pairs: DEFAULT_SAMPLE_PAIRS,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// `None` for an exact value.
    pub sampled_pairs: Option<usize>,
}

/// Lowest common ancestors by binary lifting. Nodes of different trees in a
/// forest have no common ancestor.
struct Lca {
    up: Vec<Vec<u32>>,
    depth: Vec<u32>,
}

impl Lca {
    fn new(dend: &Dendrogram) -> Self {
        let total = dend.n_leaves() + dend.len();
        let parents = dend.parents();
        let parent: Vec<u32> = (0..total)
            .map(|v| parents[v].map_or(v as u32, |p| p as u32))
            .collect();
        let mut depth = vec![0u32; total];
        // parents always have larger ids, so walk ids downward
        for v in (0..total).rev() {
            if parent[v] as usize != v {
                depth[v] = depth[parent[v] as usize] + 1;
            }
        }
        let levels = (usize::BITS - total.leading_zeros()).max(1) as usize;
        let mut up = vec![parent];
        for k in 1..levels {
            let prev = &up[k - 1];
            let next = prev.iter().map(|&p| prev[p as usize]).collect();
            up.push(next);
        }
        Lca { up, depth }
    }

    fn query(&self, mut a: usize, mut b: usize) -> Option<usize> {
        if self.depth[a] < self.depth[b] {
            std::mem::swap(&mut a, &mut b);
        }
        let mut diff = self.depth[a] - self.depth[b];
        let mut k = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                a = self.up[k][a] as usize;
            }
            diff >>= 1;
            k += 1;
        }
        if a == b {
            return Some(a);
        }
        for k in (0..self.up.len()).rev() {
            let (pa, pb) = (self.up[k][a], self.up[k][b]);
            if pa != pb {
                a = pa as usize;
                b = pb as usize;
            }
        }
        let (pa, pb) = (self.up[0][a] as usize, self.up[0][b] as usize);
        (pa == pb && pa != a).then_some(pa)
    }
}

/// Leaves in depth-first order and the contiguous range each node covers.
fn euler_ranges(dend: &Dendrogram) -> (Vec<usize>, Vec<(usize, usize)>) {
    let n = dend.n_leaves();
    let total = n + dend.len();
    let parents = dend.parents();
    let mut order = Vec::with_capacity(n);
    let mut range = vec![(0, 0); total];
    for root in (0..total).filter(|&v| parents[v].is_none()) {
        let mut stack = vec![(root, false)];
        while let Some((v, done)) = stack.pop() {
            if done {
                range[v].1 = order.len();
                continue;
            }
            range[v].0 = order.len();
            if v < n {
                order.push(v);
                range[v].1 = order.len();
                continue;
            }
            let m = dend.record(v).expect("internal node has a record");
            stack.push((v, true));
            stack.push((m.right_id.index(), false));
            stack.push((m.left_id.index(), false));
        }
    }
    (order, range)
}

/// Mean over same-class point pairs of the fraction of leaves under their
/// lowest common ancestor sharing that class. Pairs in different trees of an
/// incomplete dendrogram score 0. Returns 1 when no class has two members.
pub fn dendrogram_purity(dend: &Dendrogram, truth: &Clustering) -> Result<Estimate, MetricsError> {
    dendrogram_purity_with(dend, truth, &SamplingOptions::default())
}

pub fn dendrogram_purity_with(
    dend: &Dendrogram,
    truth: &Clustering,
    opts: &SamplingOptions,
) -> Result<Estimate, MetricsError> {
    let n = dend.n_leaves();
    if truth.len() != n {
        return Err(MetricsError::LeafMismatch {
            leaves: n,
            points: truth.len(),
        });
    }
    let sizes = truth.sizes();
    let pairs: f64 = sizes.iter().map(|&c| choose2(c)).sum();
    if pairs == 0.0 {
        return Ok(Estimate {
            value: 1.0,
            sampled_pairs: None,
        });
    }
    if n <= opts.exact_threshold {
        return Ok(Estimate {
            value: exact_purity(dend, truth) / pairs,
            sampled_pairs: None,
        });
    }
    let lca = Lca::new(dend);
    let (order, range) = euler_ranges(dend);
    // positions of each class in depth-first leaf order, sorted
    let mut positions: Vec<Vec<usize>> = vec![Vec::new(); sizes.len()];
    for (pos, &leaf) in order.iter().enumerate() {
        positions[truth.labels[leaf]].push(pos);
    }
    let members: Vec<Vec<usize>> = {
        let mut m = vec![Vec::new(); sizes.len()];
        for (i, &l) in truth.labels.iter().enumerate() {
            m[l].push(i);
        }
        m
    };
    let weights: Vec<f64> = sizes.iter().map(|&c| choose2(c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sum = 0.0;
    for _ in 0..opts.sample_pairs {
        let k = pick_weighted(&weights, pairs, &mut rng);
        let group = &members[k];
        let i = rng.random_range(0..group.len());
        let mut j = rng.random_range(0..group.len() - 1);
        if j >= i {
            j += 1;
        }
        if let Some(v) = lca.query(group[i], group[j]) {
            let (lo, hi) = range[v];
            let p = &positions[k];
            let count = p.partition_point(|&x| x < hi) - p.partition_point(|&x| x < lo);
            sum += count as f64 / (hi - lo) as f64;
        }
    }
    Ok(Estimate {
        value: sum / opts.sample_pairs as f64,
        sampled_pairs: Some(opts.sample_pairs),
    })
}

fn pick_weighted(weights: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let mut t = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if t < w {
            return k;
        }
        t -= w;
    }
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("some class has a pair")
}

/// Sum over unordered same-class pairs of their LCA purity, merging sparse
/// per-node class counts small into large.
fn exact_purity(dend: &Dendrogram, truth: &Clustering) -> f64 {
    let n = dend.n_leaves();
    let mut counts: Vec<HashMap<usize, u64>> = (0..n)
        .map(|i| HashMap::from([(truth.labels[i], 1)]))
        .collect();
    let mut sum = 0.0;
    for m in dend.merges() {
        let mut big = std::mem::take(&mut counts[m.left_id.index()]);
        let mut small = std::mem::take(&mut counts[m.right_id.index()]);
        if big.len() < small.len() {
            std::mem::swap(&mut big, &mut small);
        }
        let size = m.new_size as f64;
        for (k, c) in small {
            let e = big.entry(k).or_insert(0);
            if *e > 0 {
                sum += (*e * c) as f64 * (*e + c) as f64 / size;
            }
            *e += c;
        }
        counts.push(big);
    }
    sum
}

/// Pairwise similarity used by the Dasgupta cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `1 / (1 + D)`.
    #[default]
    InverseDistance,
    /// Every pair weighs 1; the cost then depends only on tree shape.
    Unit,
    /// `exp(-D^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
}

impl Kernel {
    pub fn weight(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::InverseDistance => 1.0 / (1.0 + dist(a, b)),
            Kernel::Unit => 1.0,
            Kernel::Gaussian { sigma } => {
                let d = dist(a, b);
                (-d * d / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// Sum over point pairs of `kernel(i, j) * |leaves(lca(i, j))|`. Pairs in
/// different trees of an incomplete dendrogram count with all `n` leaves.
pub fn dasgupta_cost(
    dend: &Dendrogram,
    data: &Dataset,
    kernel: Kernel,
) -> Result<Estimate, MetricsError> {
    dasgupta_cost_with(dend, data, kernel, &SamplingOptions::default())
}

pub fn dasgupta_cost_with(
    dend: &Dendrogram,
    data: &Dataset,
    kernel: Kernel,
    opts: &SamplingOptions,
) -> Result<Estimate, MetricsError> {
    let n = dend.n_leaves();
    if data.len() != n {
        return Err(MetricsError::LeafMismatch {
            leaves: n,
            points: data.len(),
        });
    }
    let pts = data.points();
    if n <= opts.exact_threshold {
        let mut leaves: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut cost = 0.0;
        for m in dend.merges() {
            let mut l = std::mem::take(&mut leaves[m.left_id.index()]);
            let r = std::mem::take(&mut leaves[m.right_id.index()]);
            let cross: f64 = l
                .iter()
                .flat_map(|&i| r.iter().map(move |&j| (i, j)))
                .map(|(i, j)| kernel.weight(&pts[i], &pts[j]))
                .sum();
            cost += m.new_size as f64 * cross;
            l.extend(r);
            leaves.push(l);
        }
        // pairs split across trees of a forest
        let roots: Vec<&Vec<usize>> = leaves.iter().filter(|l| !l.is_empty()).collect();
        for (a, ra) in roots.iter().enumerate() {
            for rb in &roots[a + 1..] {
                for &i in ra.iter() {
                    for &j in rb.iter() {
                        cost += n as f64 * kernel.weight(&pts[i], &pts[j]);
                    }
                }
            }
        }
        return Ok(Estimate {
            value: cost,
            sampled_pairs: None,
        });
    }
    let lca = Lca::new(dend);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sum = 0.0;
    for _ in 0..opts.sample_pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let size = match lca.query(i, j) {
            Some(v) if v >= n => dend.record(v).expect("internal node").new_size as f64,
            _ => n as f64,
        };
        sum += size * kernel.weight(&pts[i], &pts[j]);
    }
    Ok(Estimate {
        value: choose2(n as u64) * sum / opts.sample_pairs as f64,
        sampled_pairs: Some(opts.sample_pairs),
    })
}

/// Fenwick tree over counts.
struct Fenwick(Vec<i64>);

impl Fenwick {
    fn add(&mut self, i: usize, v: i64) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of slots `0..i`.
    fn prefix(&self, mut i: usize) -> i64 {
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i &= i - 1;
        }
        s
    }
}

/// Counts ancestor pairs `(U, V)` among merge nodes, `V` a strict ancestor
/// of `U`, with `cost(U) >= (1 + delta) cost(V)`.
pub fn delta_inversions(dend: &Dendrogram, delta: f64) -> u64 {
    let n = dend.n_leaves();
    let merges = dend.merges();
    let mut sorted: Vec<f64> = merges.iter().map(|m| m.distance).collect();
    sorted.sort_by(f64::total_cmp);
    let rank = |c: f64| sorted.partition_point(|&x| x < c);
    let scale = 1.0 + delta;
    let mut active = Fenwick(vec![0; sorted.len() + 1]);
    let mut count = 0u64;
    let parents = dend.parents();
    for root in (n..n + merges.len()).filter(|&v| parents[v].is_none()) {
        let mut stack = vec![(root, false)];
        while let Some((v, leaving)) = stack.pop() {
            let m = &merges[v - n];
            if leaving {
                active.add(rank(m.distance), -1);
                continue;
            }
            // ancestors V with scale * cost(V) <= cost(U)
            let upto = sorted.partition_point(|&c| scale * c <= m.distance);
            count += active.prefix(upto) as u64;
            active.add(rank(m.distance), 1);
            stack.push((v, true));
            for child in [m.left_id.index(), m.right_id.index()] {
                if child >= n {
                    stack.push((child, false));
                }
            }
        }
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutPolicy {
    /// Every distinct merge cost.
    AllThresholds,
    /// Geometric grid from the smallest positive merge cost up to the largest.
    LogThresholds { base: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatMetric {
    Ari,
    Nmi,
}

impl FlatMetric {
    pub fn score(&self, a: &Clustering, b: &Clustering) -> Result<f64, MetricsError> {
        match self {
            FlatMetric::Ari => ari(a, b),
            FlatMetric::Nmi => nmi(a, b),
        }
    }
}

pub fn cut_thresholds(dend: &Dendrogram, policy: CutPolicy) -> Result<Vec<f64>, MetricsError> {
    let mut costs: Vec<f64> = dend.merges().iter().map(|m| m.distance).collect();
    costs.sort_by(f64::total_cmp);
    costs.dedup();
    match policy {
        CutPolicy::AllThresholds => Ok(costs),
        CutPolicy::LogThresholds { base } => {
            if !(base > 1.0 && base.is_finite()) {
                return Err(MetricsError::InvalidBase(base));
            }
            let Some(&max) = costs.last() else {
                return Ok(Vec::new());
            };
            let Some(&min) = costs.iter().find(|&&c| c > 0.0) else {
                return Ok(vec![max]);
            };
            let mut grid = vec![min];
            while *grid.last().unwrap() < max {
                let next = grid.last().unwrap() * base;
                grid.push(next.min(max));
            }
            Ok(grid)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutScore {
    pub score: f64,
    pub threshold: f64,
    pub clusters: usize,
    pub evaluated: usize,
}

/// Best flat score over the threshold cuts the policy enumerates.
pub fn best_cut_score(
    dend: &Dendrogram,
    truth: &Clustering,
    metric: FlatMetric,
    policy: CutPolicy,
) -> Result<CutScore, MetricsError> {
    best_cut_score_with(dend, truth, metric, policy, FlattenRule::MergeOrder)
}

pub fn best_cut_score_with(
    dend: &Dendrogram,
    truth: &Clustering,
    metric: FlatMetric,
    policy: CutPolicy,
    rule: FlattenRule,
) -> Result<CutScore, MetricsError> {
    if truth.len() != dend.n_leaves() {
        return Err(MetricsError::LeafMismatch {
            leaves: dend.n_leaves(),
            points: truth.len(),
        });
    }
    let thresholds = cut_thresholds(dend, policy)?;
    let mut best = CutScore {
        score: f64::NEG_INFINITY,
        threshold: f64::NAN,
        clusters: 0,
        evaluated: 0,
    };
    for &tau in &thresholds {
        let flat = flatten_with(dend, tau, rule);
        let s = metric.score(&flat, truth)?;
        best.evaluated += 1;
        if s > best.score {
            best.score = s;
            best.threshold = tau;
            best.clusters = flat.num_clusters();
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CentroidId;

    fn dend(n: usize, merges: &[(u64, u64, f64)]) -> Dendrogram {
        let mut d = Dendrogram::new(n);
        for &(a, b, c) in merges {
            d.push(CentroidId(a), CentroidId(b), c);
        }
        d
    }

    fn triangle() -> Dendrogram {
        dend(3, &[(0, 1, 1.0), (2, 3, 0.75f64.sqrt())])
    }

    fn cl(l: &[usize]) -> Clustering {
        Clustering::from_labels(l)
    }

    #[test]
    fn flatten_examples() {
        let d = dend(4, &[(0, 1, 1.0), (2, 3, 2.0), (4, 5, 3.0)]);
        assert_eq!(flatten_at_threshold(&d, 0.5).num_clusters(), 4);
        assert_eq!(flatten_at_threshold(&d, 3.0).num_clusters(), 1);
        assert_eq!(flatten_at_threshold(&d, 2.5).labels(), &[0, 0, 1, 1]);
        // second merge needs the first one's node, which was not formed
        assert_eq!(flatten_at_threshold(&triangle(), 0.9).num_clusters(), 3);
        assert_eq!(
            flatten_with(&triangle(), 0.9, FlattenRule::TopDown).num_clusters(),
            1
        );
        assert_eq!(
            flatten_with(&triangle(), 0.5, FlattenRule::TopDown).num_clusters(),
            3
        );
    }

    #[test]
    fn ari_examples() {
        assert_eq!(ari(&cl(&[0, 0, 1, 1]), &cl(&[1, 1, 0, 0])).unwrap(), 1.0);
        // index 0, expected 2*2/6, max 2
        let v = ari(&cl(&[0, 0, 1, 1]), &cl(&[0, 1, 0, 1])).unwrap();
        assert!((v - (0.0 - 2.0 / 3.0) / (2.0 - 2.0 / 3.0)).abs() < 1e-15);
        assert!((v + 0.5).abs() < 1e-15);
        assert!(ari(&cl(&[0]), &cl(&[0, 1])).is_err());
        assert_eq!(ari(&cl(&[0, 1, 2]), &cl(&[0, 0, 0])).unwrap(), 0.0);
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&cl(&[0, 1, 1, 2]), &cl(&[5, 3, 3, 4])).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&cl(&[0, 1, 2, 3]), &cl(&[0, 0, 0, 0])).unwrap(), 0.0);
        // independent 2x2 split: zero mutual information
        assert!(nmi(&cl(&[0, 0, 1, 1]), &cl(&[0, 1, 0, 1])).unwrap().abs() < 1e-15);
        assert_eq!(nmi(&cl(&[0, 0]), &cl(&[1, 1])).unwrap(), 1.0);
    }

    #[test]
    fn ari_near_zero_for_independent_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut total = 0.0;
        for _ in 0..1000 {
            let a: Vec<usize> = (0..200).map(|_| rng.random_range(0..5)).collect();
            let b: Vec<usize> = (0..200).map(|_| rng.random_range(0..5)).collect();
            total += ari(&cl(&a), &cl(&b)).unwrap();
        }
        assert!((total / 1000.0).abs() <= 0.02);
    }

    #[test]
    fn purity_examples() {
        let d = dend(4, &[(0, 1, 1.0), (2, 3, 1.0), (4, 5, 2.0)]);
        assert_eq!(
            dendrogram_purity(&d, &cl(&[0, 0, 1, 1])).unwrap().value,
            1.0
        );
        assert_eq!(
            dendrogram_purity(&dend(2, &[(0, 1, 3.0)]), &cl(&[4, 4]))
                .unwrap()
                .value,
            1.0
        );
        // caterpillar ((0,2),1),3 with classes a a b b:
        // pair 0-1 meets at {0,2,1}: 2/3; pair 2-3 meets at root: 1/2
        let d = dend(4, &[(0, 2, 1.0), (1, 4, 2.0), (3, 5, 3.0)]);
        let v = dendrogram_purity(&d, &cl(&[0, 0, 1, 1])).unwrap().value;
        assert!((v - (2.0 / 3.0 + 0.5) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_purity_tracks_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 300;
        let mut d = Dendrogram::new(n);
        let mut live: Vec<CentroidId> = (0..n as u64).map(CentroidId).collect();
        while live.len() > 1 {
            let a = live.swap_remove(rng.random_range(0..live.len()));
            let b = live.swap_remove(rng.random_range(0..live.len()));
            live.push(d.push(a, b, 1.0));
        }
        let truth = cl(&(0..n).map(|i| (i * 7) % 4).collect::<Vec<_>>());
        let exact = dendrogram_purity(&d, &truth).unwrap().value;
        let opts = SamplingOptions {
            exact_threshold: 10,
            sample_pairs: 200_000,
            seed: 1,
        };
        let est = dendrogram_purity_with(&d, &truth, &opts).unwrap();
        assert_eq!(est.sampled_pairs, Some(200_000));
        assert!((est.value - exact).abs() < 0.01, "{} vs {exact}", est.value);
    }

    #[test]
    fn dasgupta_examples() {
        let two = Dataset::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let d = dend(2, &[(0, 1, 1.0)]);
        assert_eq!(
            dasgupta_cost(&d, &two, Kernel::InverseDistance)
                .unwrap()
                .value,
            1.0
        );

        let four = Dataset::new((0..4).map(|i| vec![i as f64]).collect()).unwrap();
        // caterpillar: pair (0,1) at size 2; (0,2),(1,2) at 3; three pairs with 3 at 4
        let cat = dend(4, &[(0, 1, 1.0), (2, 4, 2.0), (3, 5, 3.0)]);
        assert_eq!(
            dasgupta_cost(&cat, &four, Kernel::Unit).unwrap().value,
            2.0 + 6.0 + 12.0
        );
        // balanced: two pairs at size 2, four at 4
        let bal = dend(4, &[(0, 1, 1.0), (2, 3, 1.0), (4, 5, 2.0)]);
        assert_eq!(
            dasgupta_cost(&bal, &four, Kernel::Unit).unwrap().value,
            4.0 + 16.0
        );

        let scaled = Dataset::new((0..4).map(|i| vec![2.0 * i as f64]).collect()).unwrap();
        let a = dasgupta_cost(&cat, &four, Kernel::Unit).unwrap().value;
        let b = dasgupta_cost(&cat, &scaled, Kernel::Unit).unwrap().value;
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_dasgupta_tracks_exact() {
        let data = Dataset::new(
            (0..200)
                .map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos()])
                .collect(),
        )
        .unwrap();
        let (d, _) = crate::hac::run_hac(&data, &crate::hac::HacConfig::exact()).unwrap();
        let exact = dasgupta_cost(&d, &data, Kernel::InverseDistance)
            .unwrap()
            .value;
        let opts = SamplingOptions {
            exact_threshold: 10,
            sample_pairs: 400_000,
            seed: 2,
        };
        let est = dasgupta_cost_with(&d, &data, Kernel::InverseDistance, &opts)
            .unwrap()
            .value;
        assert!((est - exact).abs() / exact < 0.02, "{est} vs {exact}");
    }

    #[test]
    fn inversions_examples() {
        assert_eq!(delta_inversions(&triangle(), 0.0), 1);
        assert_eq!(delta_inversions(&triangle(), 0.2), 0);
        let mono = dend(4, &[(0, 1, 1.0), (2, 4, 2.0), (3, 5, 3.0)]);
        for delta in [0.0, 0.5, 3.0] {
            assert_eq!(delta_inversions(&mono, delta), 0);
        }
    }

    #[test]
    fn inversions_match_ancestor_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.random_range(2..30);
            let mut d = Dendrogram::new(n);
            let mut live: Vec<CentroidId> = (0..n as u64).map(CentroidId).collect();
            let mut level = 0.0;
            while live.len() > 1 {
                let a = live.swap_remove(rng.random_range(0..live.len()));
                let b = live.swap_remove(rng.random_range(0..live.len()));
                level += rng.random::<f64>();
                live.push(d.push(a, b, level * (0.5 + rng.random::<f64>())));
            }
            let parents = d.parents();
            for delta in [0.0, 0.1, 0.7] {
                let mut brute = 0;
                for u in n..n + d.len() {
                    let cu = d.record(u).unwrap().distance;
                    let mut v = parents[u];
                    while let Some(p) = v {
                        if cu >= (1.0 + delta) * d.record(p).unwrap().distance {
                            brute += 1;
                        }
                        v = parents[p];
                    }
                }
                assert_eq!(delta_inversions(&d, delta), brute);
            }
        }
    }

    #[test]
    fn cut_policies() {
        let d = dend(4, &[(0, 1, 1.0), (2, 3, 2.0), (4, 5, 3.0)]);
        assert_eq!(
            cut_thresholds(&d, CutPolicy::AllThresholds).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let g = cut_thresholds(&d, CutPolicy::LogThresholds { base: 2.0 }).unwrap();
        assert_eq!(g, vec![1.0, 2.0, 3.0]);
        assert!(cut_thresholds(&d, CutPolicy::LogThresholds { base: 1.0 }).is_err());
        let s = best_cut_score(
            &d,
            &cl(&[0, 0, 1, 1]),
            FlatMetric::Ari,
            CutPolicy::AllThresholds,
        )
        .unwrap();
        assert_eq!(
            (s.score, s.threshold, s.clusters, s.evaluated),
            (1.0, 2.0, 2, 3)
        );
    }
}
