//! Turns a dynamic ANN store that is only correct for oblivious update
//! sequences into one that stays correct when updates depend on earlier
//! answers.
//!
//! Two pieces do the work. Queries are first snapped onto an implicit grid
//! (the covering net) so only a bounded set of query points ever reaches the
//! inner stores. Inserted points live in levels `S_0, S_1, ...` with
//! `|S_i| <= 2^i`; a level that overflows spills wholesale into the next one
//! and the receiving level's store is rebuilt from scratch with fresh
//! randomness. Inner stores are never inserted into after construction, only
//! deleted from.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{dist, Centroid, CentroidId, Point};
use crate::lsh::{LshNns, LshTuning};
use crate::nns::{DynamicNns, ExactNns, NnsApproxSpec, NnsError, QueryResult};

/// Implicit hypergrid `center + (beta / sqrt(d)) * y`, `y` integer.
#[derive(Debug)]
pub struct CoveringNet {
    center: Point,
    radius: f64,
    beta: f64,
    step: f64,
    clamped: AtomicU64,
}

impl CoveringNet {
    pub fn new(center: Point, radius: f64, beta: f64) -> Result<Self, NnsError> {
        if !(radius > 0.0 && radius.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(NnsError::InvalidParameter(format!(
                "covering net needs positive radius and beta, got {radius}, {beta}"
            )));
        }
        // Shave the step by a few ulps so sum of d squared sub-step errors stays <= beta^2.
        let step = beta / (center.dim() as f64).sqrt() * (1.0 - 4.0 * f64::EPSILON);
        Ok(CoveringNet {
            center,
            radius,
            beta,
            step,
            clamped: AtomicU64::new(0),
        })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Queries that fell outside the net's box and were clamped first.
    pub fn clamp_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    fn grid(&self, s: f64, k: f64) -> f64 {
        s + self.step * k
    }

    /// Rounds each coordinate down onto the grid. Out-of-range coordinates
    /// are clamped into `[s_i - radius, s_i + radius]` first.
    pub fn snap(&self, u: &[f64]) -> Point {
        assert_eq!(u.len(), self.center.dim(), "dimension mismatch");
        let mut clamped = false;
        let coords = u
            .iter()
            .zip(self.center.iter())
            .map(|(&x, &s)| {
                let lo = s - self.radius;
                let hi = s + self.radius;
                let x = if x < lo {
                    clamped = true;
                    lo
                } else if x > hi {
                    clamped = true;
                    hi
                } else {
                    x
                };
                // largest k with grid(k) <= x, computed in the same arithmetic
                // that produces the output so snapping is idempotent
                let mut k = ((x - s) / self.step).floor();
                while self.grid(s, k) > x {
                    k -= 1.0;
                }
                while self.grid(s, k + 1.0) <= x {
                    k += 1.0;
                }
                self.grid(s, k)
            })
            .collect();
        if clamped {
            self.clamped.fetch_add(1, Ordering::Relaxed);
        }
        Point::from_vec_unchecked(coords)
    }
}

pub fn net_snap(net: &CoveringNet, u: &[f64]) -> Point {
    net.snap(u)
}

/// Additive slack `delta (lambda - 1) / ((1 + c) lambda)` under which a
/// `(c / lambda, slack)`-approximate store answers every HAC query
/// `c`-approximately.
pub fn hac_query_beta(c: f64, lambda: f64, delta: f64) -> Result<f64, NnsError> {
    if !(lambda > 1.0 && lambda < c && delta > 0.0 && delta.is_finite() && c.is_finite()) {
        return Err(NnsError::InvalidParameter(format!(
            "need 1 < lambda < c and delta > 0, got c={c}, lambda={lambda}, delta={delta}"
        )));
    }
    Ok(delta * (lambda - 1.0) / ((1.0 + c) * lambda))
}

/// Constructs a level store over a fixed point set.
pub trait LevelBuilder {
    type Index: DynamicNns;

    fn build(&self, dim: usize, points: Vec<Centroid>, seed: u64) -> Result<Self::Index, NnsError>;

    /// Contract of the stores this builder produces.
    fn level_spec(&self) -> NnsApproxSpec;
}

/// Exact flat-scan levels. With these the wrapper is deterministic.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactLevels;

impl LevelBuilder for ExactLevels {
    type Index = ExactNns;

    fn build(&self, _dim: usize, points: Vec<Centroid>, _seed: u64) -> Result<ExactNns, NnsError> {
        ExactNns::from_centroids(points)
    }

    fn level_spec(&self) -> NnsApproxSpec {
        NnsApproxSpec::EXACT
    }
}

/// LSH levels, with `K` and `L` tuned to each level's size at build time.
#[derive(Clone, Debug)]
pub struct LshLevels {
    pub c: f64,
    pub beta: f64,
    pub big_delta: f64,
    pub tuning: LshTuning,
}

impl LevelBuilder for LshLevels {
    type Index = LshNns;

    fn build(&self, dim: usize, points: Vec<Centroid>, seed: u64) -> Result<LshNns, NnsError> {
        let params = self
            .tuning
            .params_for(points.len(), self.c, self.beta, self.big_delta, seed);
        LshNns::build(dim, points, params)
    }

    fn level_spec(&self) -> NnsApproxSpec {
        NnsApproxSpec {
            alpha: self.c,
            beta: self.beta,
        }
    }
}

#[derive(Debug)]
struct Level<I> {
    members: BTreeMap<CentroidId, Centroid>,
    index: Option<I>,
    seed: Option<u64>,
}

impl<I> Default for Level<I> {
    fn default() -> Self {
        Level {
            members: BTreeMap::new(),
            index: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdaptiveCounters {
    pub inserts: u64,
    pub deletes: u64,
    pub queries: u64,
    /// Placements into a level: one per insert plus one per point cascaded.
    pub movements: u64,
    pub rebuilds: u64,
}

/// Level partition plus covering net; see the module docs.
#[derive(Debug)]
pub struct AdaptiveNns<B: LevelBuilder> {
    builder: B,
    net: CoveringNet,
    dim: usize,
    capacity: usize,
    levels: Vec<Level<B::Index>>,
    location: HashMap<CentroidId, usize>,
    rng: ChaCha8Rng,
    counters: AdaptiveCounters,
    queries: AtomicU64,
}

impl<B: LevelBuilder> AdaptiveNns<B> {
    /// `capacity` caps the total number of insertions over the lifetime of
    /// the structure and fixes the level count at `ceil(log2 capacity) + 1`.
    pub fn new(builder: B, net: CoveringNet, capacity: usize, seed: u64) -> Self {
        let dim = net.center().dim();
        let capacity = capacity.max(1);
        let num_levels = capacity.next_power_of_two().trailing_zeros() as usize + 1;
        AdaptiveNns {
            builder,
            net,
            dim,
            capacity,
            levels: (0..num_levels).map(|_| Level::default()).collect(),
            location: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            counters: AdaptiveCounters::default(),
            queries: AtomicU64::new(0),
        }
    }

    pub fn net(&self) -> &CoveringNet {
        &self.net
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.members.len()).collect()
    }

    pub fn level_members(&self, i: usize) -> Vec<CentroidId> {
        self.levels[i].members.keys().copied().collect()
    }

    /// Seed each level's store was last built with (`None` when empty).
    pub fn level_seeds(&self) -> Vec<Option<u64>> {
        self.levels.iter().map(|l| l.seed).collect()
    }

    pub fn level_index(&self, i: usize) -> Option<&B::Index> {
        self.levels[i].index.as_ref()
    }

    pub fn counters(&self) -> AdaptiveCounters {
        AdaptiveCounters {
            queries: self.queries.load(Ordering::Relaxed),
            ..self.counters
        }
    }

    fn rebuild(&mut self, i: usize) -> Result<(), NnsError> {
        let level = &mut self.levels[i];
        if level.members.is_empty() {
            level.index = None;
            level.seed = None;
            return Ok(());
        }
        let seed = self.rng.random::<u64>();
        let points = level.members.values().cloned().collect();
        level.index = Some(self.builder.build(self.dim, points, seed)?);
        level.seed = Some(seed);
        self.counters.rebuilds += 1;
        Ok(())
    }

    /// Checks disjointness, coverage of the live set, the size caps and that
    /// each level's store indexes exactly its members.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut total = 0;
        for (i, level) in self.levels.iter().enumerate() {
            let n = level.members.len();
            if n > 1usize << i {
                return Err(format!("level {i} holds {n} > 2^{i} points"));
            }
            match &level.index {
                None if n > 0 => return Err(format!("level {i} has members but no store")),
                Some(idx) if idx.len() != n => {
                    return Err(format!(
                        "level {i} store holds {} of {n} members",
                        idx.len()
                    ))
                }
                Some(idx) => {
                    if let Some(id) = level.members.keys().find(|id| !idx.contains(**id)) {
                        return Err(format!("level {i} store is missing {id}"));
                    }
                }
                None => {}
            }
            for id in level.members.keys() {
                if self.location.get(id) != Some(&i) {
                    return Err(format!("{id} is in level {i} but located elsewhere"));
                }
            }
            total += n;
        }
        if total != self.location.len() {
            return Err(format!(
                "levels hold {total} points, live set has {}",
                self.location.len()
            ));
        }
        Ok(())
    }
}

impl<B: LevelBuilder> DynamicNns for AdaptiveNns<B> {
    fn insert(&mut self, centroid: Centroid) -> Result<(), NnsError> {
        if centroid.dim() != self.dim {
            return Err(NnsError::DimensionMismatch {
                expected: self.dim,
                got: centroid.dim(),
            });
        }
        if self.location.contains_key(&centroid.id) {
            return Err(NnsError::DuplicateId(centroid.id));
        }
        if self.counters.inserts as usize >= self.capacity {
            return Err(NnsError::CapacityExceeded {
                capacity: self.capacity,
            });
        }
        self.counters.inserts += 1;
        self.counters.movements += 1;
        self.location.insert(centroid.id, 0);
        self.levels[0].members.insert(centroid.id, centroid);

        let mut top = 0;
        while self.levels[top].members.len() > 1usize << top {
            if top + 1 == self.levels.len() {
                return Err(NnsError::CapacityExceeded {
                    capacity: self.capacity,
                });
            }
            let spilled = std::mem::take(&mut self.levels[top].members);
            self.counters.movements += spilled.len() as u64;
            for id in spilled.keys() {
                self.location.insert(*id, top + 1);
            }
            self.levels[top + 1].members.extend(spilled);
            self.levels[top].index = None;
            self.levels[top].seed = None;
            top += 1;
        }
        self.rebuild(top)
    }

    fn delete(&mut self, id: CentroidId) -> Result<Centroid, NnsError> {
        let i = self.location.remove(&id).ok_or(NnsError::MissingId(id))?;
        let level = &mut self.levels[i];
        let centroid = level
            .members
            .remove(&id)
            .expect("located point missing from its level");
        if let Some(index) = level.index.as_mut() {
            index.delete(id)?;
        }
        if level.members.is_empty() {
            level.index = None;
            level.seed = None;
        }
        self.counters.deletes += 1;
        Ok(centroid)
    }

    fn query(&self, point: &[f64], excluded: Option<CentroidId>) -> Result<QueryResult, NnsError> {
        if point.len() != self.dim {
            return Err(NnsError::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        self.queries.fetch_add(1, Ordering::Relaxed);
        let snapped = self.net.snap(point);
        let mut best: Option<(f64, Centroid)> = None;
        for index in self.levels.iter().filter_map(|l| l.index.as_ref()) {
            let candidate = match index.query(&snapped, excluded) {
                Ok(r) => r,
                Err(NnsError::Empty) => continue,
                Err(e) => return Err(e),
            };
            let d = candidate.distance;
            let id = candidate.neighbor.id;
            if best
                .as_ref()
                .is_none_or(|(bd, b)| d < *bd || (d == *bd && id < b.id))
            {
                best = Some((d, candidate.neighbor));
            }
        }
        let (_, neighbor) = best.ok_or(NnsError::Empty)?;
        let distance = dist(point, &neighbor.coords);
        Ok(QueryResult { neighbor, distance })
    }

    fn len(&self) -> usize {
        self.location.len()
    }

    fn contains(&self, id: CentroidId) -> bool {
        self.location.contains_key(&id)
    }

    /// `(a, (a + 1) beta_net + b)` for `(a, b)` levels: snapping moves the
    /// query by at most `beta_net`, which costs `a beta_net` against the true
    /// nearest distance and `beta_net` again when measuring from the original.
    fn approx_spec(&self) -> NnsApproxSpec {
        let level = self.builder.level_spec();
        NnsApproxSpec {
            alpha: level.alpha,
            beta: (level.alpha + 1.0) * self.net.beta() + level.beta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    fn c(id: u64, xs: &[f64]) -> Centroid {
        Centroid::new(CentroidId(id), 1, Point::new(xs.to_vec()).unwrap())
    }

    fn exact_wrapper(dim: usize, beta: f64, capacity: usize) -> AdaptiveNns<ExactLevels> {
        let net = CoveringNet::new(Point::new(vec![0.5; dim]).unwrap(), 1.0, beta).unwrap();
        AdaptiveNns::new(ExactLevels, net, capacity, 1)
    }

    #[test]
    fn snap_examples() {
        let net = CoveringNet::new(Point::new(vec![0.0]).unwrap(), 10.0, 1.0).unwrap();
        let s = net.snap(&[2.3]);
        assert!((s[0] - 2.0).abs() < 1e-12);
        assert!(dist(&s, &[2.3]) <= 1.0);
        assert_eq!(net.snap(&s), s);
        // already on the grid
        let on = net.snap(&[-3.0]);
        assert_eq!(net.snap(&on), on);
        assert_eq!(net.clamp_count(), 0);
        net.snap(&[50.0]);
        assert_eq!(net.clamp_count(), 1);
    }

    #[test]
    fn snap_bound_and_idempotence_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for dim in [2, 8, 64] {
            let center: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 3.0 - 1.5).collect();
            let (radius, beta) = (2.0, 0.037);
            let net = CoveringNet::new(Point::new(center.clone()).unwrap(), radius, beta).unwrap();
            for _ in 0..20_000 {
                let dir: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = radius * rng.random::<f64>();
                let u: Vec<f64> = center
                    .iter()
                    .zip(&dir)
                    .map(|(s, x)| s + r * x / norm)
                    .collect();
                let s = net.snap(&u);
                assert!(dist(&u, &s) <= beta);
                assert_eq!(net.snap(&s), s);
            }
        }
    }

    #[test]
    fn hac_query_beta_examples() {
        let b = hac_query_beta(2.0, 1.5, 1.0).unwrap();
        assert!((b - 0.5 / 4.5).abs() < 1e-15);
        assert!(hac_query_beta(2.0, 1.0 + 1e-12, 1.0).unwrap() < 1e-12);
        let c_hat = 1.01 / 1.001;
        let b = hac_query_beta(c_hat, 1.005, 0.5).unwrap();
        // 0.5 * 0.005 / ((1 + c_hat) * 1.005)
        let expected = 0.0025 / ((1.0 + c_hat) * 1.005);
        assert!(b > 0.0 && (b - expected).abs() < 1e-15);
        assert!(hac_query_beta(2.0, 2.5, 1.0).is_err());
        assert!(hac_query_beta(2.0, 1.0, 1.0).is_err());
        assert!(hac_query_beta(2.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn cascade_follows_binary_counter() {
        let mut a = exact_wrapper(1, 0.01, 16);
        let ids = |a: &AdaptiveNns<ExactLevels>, i| {
            a.level_members(i).iter().map(|c| c.0).collect::<Vec<_>>()
        };
        a.insert(c(1, &[0.1])).unwrap();
        assert_eq!(ids(&a, 0), vec![1]);
        a.insert(c(2, &[0.2])).unwrap();
        assert!(ids(&a, 0).is_empty());
        assert_eq!(ids(&a, 1), vec![1, 2]);
        a.insert(c(3, &[0.3])).unwrap();
        assert_eq!(ids(&a, 0), vec![3]);
        assert_eq!(ids(&a, 1), vec![1, 2]);
        a.insert(c(4, &[0.4])).unwrap();
        assert!(ids(&a, 0).is_empty() && ids(&a, 1).is_empty());
        assert_eq!(ids(&a, 2), vec![1, 2, 3, 4]);
        a.check_invariants().unwrap();
    }

    #[test]
    fn fuzz_size_invariant_and_movement_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 1000;
        let mut a = exact_wrapper(2, 0.01, n);
        for i in 0..n as u64 {
            a.insert(c(i, &[rng.random(), rng.random()])).unwrap();
            for (lvl, size) in a.level_sizes().into_iter().enumerate() {
                assert!(size <= 1 << lvl);
            }
        }
        a.check_invariants().unwrap();
        let bound = n as u64 * ((n as f64).log2().floor() as u64 + 1);
        assert!(a.counters().movements <= bound);
        assert_eq!(
            a.insert(c(99_999, &[0.0, 0.0])),
            Err(NnsError::CapacityExceeded { capacity: n })
        );
    }

    #[test]
    fn delete_examples() {
        let mut a = exact_wrapper(1, 0.01, 8);
        a.insert(c(0, &[0.5])).unwrap();
        a.delete(CentroidId(0)).unwrap();
        assert!(a.level_sizes().iter().all(|&s| s == 0));
        assert_eq!(a.query(&[0.5], None), Err(NnsError::Empty));
        assert_eq!(
            a.delete(CentroidId(0)),
            Err(NnsError::MissingId(CentroidId(0)))
        );

        let mut a = exact_wrapper(1, 0.001, 8);
        for i in 0..4 {
            a.insert(c(i, &[0.2 * i as f64])).unwrap();
        }
        assert_eq!(a.level_sizes()[2], 4);
        a.delete(CentroidId(1)).unwrap();
        let r = a.query(&[0.21], None).unwrap();
        assert!(r.neighbor.id == CentroidId(0) || r.neighbor.id == CentroidId(2));
        a.check_invariants().unwrap();
        assert_eq!(
            a.insert(c(2, &[0.9])),
            Err(NnsError::DuplicateId(CentroidId(2)))
        );
    }

    #[test]
    fn random_script_matches_set_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut a = exact_wrapper(2, 0.001, 2000);
        let mut model: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        let mut next = 0;
        for _ in 0..1500 {
            if model.is_empty() || rng.random_bool(0.6) {
                let p = vec![rng.random(), rng.random()];
                a.insert(c(next, &p)).unwrap();
                model.insert(next, p);
                next += 1;
            } else {
                let k = rng.random_range(0..model.len());
                let id = *model.keys().nth(k).unwrap();
                model.remove(&id);
                a.delete(CentroidId(id)).unwrap();
            }
            a.check_invariants().unwrap();
            assert_eq!(a.len(), model.len());
            if let Some(&probe) = model.keys().next() {
                assert!(a.contains(CentroidId(probe)));
            }
        }
    }

    #[test]
    fn exact_levels_equal_global_argmin_at_snapped_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut a = exact_wrapper(2, 0.02, 256);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random(), rng.random()]).collect();
        for (i, p) in pts.iter().enumerate() {
            a.insert(c(i as u64, p)).unwrap();
        }
        for _ in 0..500 {
            let q = [rng.random::<f64>(), rng.random::<f64>()];
            let snapped = a.net().snap(&q);
            let (best, _) = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, dist(&snapped, p)))
                .fold((usize::MAX, f64::INFINITY), |acc, (i, d)| {
                    if d < acc.1 {
                        (i, d)
                    } else {
                        acc
                    }
                });
            let r = a.query(&q, None).unwrap();
            assert_eq!(r.neighbor.id.index(), best);
            assert_eq!(r.distance, dist(&q, &pts[best]));
            let true_nn = pts
                .iter()
                .map(|p| dist(&q, p))
                .fold(f64::INFINITY, f64::min);
            assert!(r.distance <= true_nn + 2.0 * a.net().beta());
        }
    }

    #[test]
    fn cascades_draw_fresh_seeds() {
        let net = CoveringNet::new(Point::new(vec![0.0; 2]).unwrap(), 2.0, 0.01).unwrap();
        let levels = LshLevels {
            c: 2.0,
            beta: 0.01,
            big_delta: 2.0,
            tuning: LshTuning::default(),
        };
        let mut a = AdaptiveNns::new(levels, net, 64, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = std::collections::HashSet::new();
        for i in 0..16 {
            a.insert(c(i, &[rng.random(), rng.random()])).unwrap();
            for s in a.level_seeds().into_iter().flatten() {
                seen.insert(s);
            }
        }
        // one build per insert, each with its own seed
        assert_eq!(a.counters().rebuilds, 16);
        assert_eq!(seen.len(), 16);
        let before = a.level_index(4).unwrap().atom_fingerprint();
        a.insert(c(100, &[0.5, 0.5])).unwrap();
        assert_eq!(
            a.level_index(4).unwrap().atom_fingerprint(),
            before,
            "untouched level keeps its atoms"
        );
        a.insert(c(101, &[0.6, 0.5])).unwrap();
        assert_ne!(a.level_seeds()[1], None);
        a.check_invariants().unwrap();
    }

    /// Level store that records every query point it sees.
    struct Spy {
        inner: ExactNns,
        seen: std::sync::Arc<Mutex<Vec<Vec<f64>>>>,
    }

    impl DynamicNns for Spy {
        fn insert(&mut self, c: Centroid) -> Result<(), NnsError> {
            self.inner.insert(c)
        }
        fn delete(&mut self, id: CentroidId) -> Result<Centroid, NnsError> {
            self.inner.delete(id)
        }
        fn query(&self, p: &[f64], ex: Option<CentroidId>) -> Result<QueryResult, NnsError> {
            self.seen.lock().unwrap().push(p.to_vec());
            self.inner.query(p, ex)
        }
        fn len(&self) -> usize {
            self.inner.len()
        }
        fn contains(&self, id: CentroidId) -> bool {
            self.inner.contains(id)
        }
        fn approx_spec(&self) -> NnsApproxSpec {
            NnsApproxSpec::EXACT
        }
    }

    struct SpyLevels(std::sync::Arc<Mutex<Vec<Vec<f64>>>>);

    impl LevelBuilder for SpyLevels {
        type Index = Spy;
        fn build(&self, _dim: usize, points: Vec<Centroid>, _seed: u64) -> Result<Spy, NnsError> {
            Ok(Spy {
                inner: ExactNns::from_centroids(points)?,
                seen: self.0.clone(),
            })
        }
        fn level_spec(&self) -> NnsApproxSpec {
            NnsApproxSpec::EXACT
        }
    }

    #[test]
    fn levels_only_ever_see_grid_points() {
        let seen = std::sync::Arc::new(Mutex::new(Vec::new()));
        let net = CoveringNet::new(Point::new(vec![0.5, 0.5, 0.5]).unwrap(), 1.0, 0.05).unwrap();
        let mut a = AdaptiveNns::new(SpyLevels(seen.clone()), net, 128, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..100 {
            a.insert(c(i, &[rng.random(), rng.random(), rng.random()]))
                .unwrap();
        }
        let mut raw = Vec::new();
        for _ in 0..200 {
            let q: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            a.query(&q, None).unwrap();
            raw.push(q);
        }
        let seen = seen.lock().unwrap();
        assert!(!seen.is_empty());
        for q in seen.iter() {
            assert_eq!(a.net().snap(q).as_slice(), q.as_slice());
            assert!(!raw.contains(q));
        }
    }
}
