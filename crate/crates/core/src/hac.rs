//! Centroid-linkage HAC driven by a dynamic nearest-neighbor store.
//!
//! The heap engine keeps one queue entry `(l, x, y)` per active centroid `x`,
//! meaning "`y` looked like `x`'s neighbor at distance `l`". Popping the
//! smallest entry gives three cases:
//!
//! 1. `x` and `y` both active: merge them.
//! 2. `x` inactive: drop the entry.
//! 3. only `x` active: query again for `y*` at `l*`. Merge if
//!    `l* <= (1 + eps) l`, otherwise requeue `(l*, x, y*)`.
//!
//! With an exact store every merge is within `1 + eps` of the closest active
//! pair; with a `c`-approximate store, within `c (1 + eps)`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use log::{debug, trace};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptive::{hac_query_beta, AdaptiveNns, CoveringNet, LshLevels};
use crate::geometry::{
    compute_bounds, dist, merge_centroids, Centroid, CentroidId, CoordKey, Dataset, Dendrogram,
    DistanceBounds, GeometryError, Point,
};
use crate::lsh::LshTuning;
use crate::nns::{DynamicNns, ExactNns, NnsApproxSpec, NnsError};

pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Error)]
pub enum HacError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Nns(#[from] NnsError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("engine invariant broken: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HacMode {
    /// Heap engine with `eps = 0` over the exact store.
    Exact,
    HeapApprox,
    /// Threshold rounds growing by `1 + eps`.
    BucketApprox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NnsBackend {
    Exact,
    LshAdaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HacConfig {
    pub epsilon: f64,
    pub mode: HacMode,
    pub nns_backend: NnsBackend,
    /// Overall approximation target for the LSH backend.
    pub c_target: f64,
    /// Splits the target between the store's multiplicative and additive error.
    pub lambda: f64,
    /// Computed from the deduplicated input when absent and needed.
    pub bounds: Option<DistanceBounds>,
    pub seed: u64,
    pub lsh: LshTuning,
}

impl Default for HacConfig {
    fn default() -> Self {
        HacConfig {
            epsilon: DEFAULT_EPSILON,
            mode: HacMode::HeapApprox,
            nns_backend: NnsBackend::Exact,
            c_target: 2.0,
            lambda: 1.5,
            bounds: None,
            seed: 0,
            lsh: LshTuning::default(),
        }
    }
}

impl HacConfig {
    pub fn exact() -> Self {
        HacConfig {
            epsilon: 0.0,
            mode: HacMode::Exact,
            ..HacConfig::default()
        }
    }

    pub fn heap(epsilon: f64) -> Self {
        HacConfig {
            epsilon,
            ..HacConfig::default()
        }
    }

    pub fn bucket(epsilon: f64) -> Self {
        HacConfig {
            epsilon,
            mode: HacMode::BucketApprox,
            ..HacConfig::default()
        }
    }

    pub fn lsh_adaptive(c_target: f64, epsilon: f64, lambda: f64, seed: u64) -> Self {
        HacConfig {
            epsilon,
            nns_backend: NnsBackend::LshAdaptive,
            c_target,
            lambda,
            seed,
            ..HacConfig::default()
        }
    }

    /// `c / (1 + eps)`, the factor left for the store once the queue's
    /// slack is paid for.
    pub fn c_hat(&self) -> f64 {
        self.c_target / (1.0 + self.epsilon)
    }

    pub fn validate(&self) -> Result<(), HacError> {
        let bad = |m: String| Err(HacError::Config(m));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            ));
        }
        match self.mode {
            HacMode::Exact if self.epsilon != 0.0 => {
                return bad(format!(
                    "exact mode requires epsilon = 0, got {}",
                    self.epsilon
                ))
            }
            HacMode::Exact if self.nns_backend != NnsBackend::Exact => {
                return bad("exact mode requires the exact nearest-neighbor backend".into())
            }
            HacMode::BucketApprox if self.epsilon == 0.0 => {
                return bad("bucket mode needs epsilon > 0 to grow its threshold".into())
            }
            _ => {}
        }
        if self.nns_backend == NnsBackend::LshAdaptive {
            if !(self.c_target > 1.0 && self.c_target.is_finite()) {
                return bad(format!("c must be > 1, got {}", self.c_target));
            }
            let c_hat = self.c_hat();
            if !(self.lambda > 1.0 && self.lambda < c_hat) {
                return bad(format!(
                    "lambda must lie in (1, c/(1+eps)) = (1, {c_hat}), got {}",
                    self.lambda
                ));
            }
        }
        Ok(())
    }
}

/// Counters from one run. `merges` counts merges of deduplicated
/// centroids (including identical-centroid absorptions); merges of exact
/// duplicate input points are counted separately.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub n_points: usize,
    pub n_dedup: usize,
    pub merges: u64,
    pub duplicate_point_merges: u64,
    pub identical_centroid_merges: u64,
    /// Popped entries whose source was live but whose target had merged away.
    pub stale_dequeues: u64,
    /// Popped entries whose source had itself merged away.
    pub dead_dequeues: u64,
    pub requeues: u64,
    /// Largest requeue count of any single source centroid.
    pub max_requeues: u64,
    pub nns_queries: u64,
    pub nns_inserts: u64,
    pub nns_deletes: u64,
    /// Most entries with `l < delta` queued at once (0 when no bounds).
    pub max_close_entries: u64,
    /// Threshold rounds (bucket mode only).
    pub rounds: u64,
    pub delta: Option<f64>,
    pub big_delta: Option<f64>,
}

impl RunStats {
    /// Stale entries per merge.
    pub fn gamma(&self) -> f64 {
        if self.merges == 0 {
            0.0
        } else {
            self.stale_dequeues as f64 / self.merges as f64
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    l: f64,
    x: CentroidId,
    y: CentroidId,
}

impl Entry {
    fn key(&self) -> (f64, CentroidId, CentroidId, CentroidId) {
        (self.l, self.x.min(self.y), self.x.max(self.y), self.x)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    }
}

/// Folds exact duplicates into weighted centroids. Leaves keep their input
/// index; each duplicate group is merged at distance 0 up front and the
/// group's node stands in for it.
fn initial_centroids(data: &Dataset, dend: &mut Dendrogram) -> (Vec<Centroid>, u64) {
    let mut centroids = Vec::new();
    let mut dup_merges = 0;
    for group in data.duplicate_groups() {
        let mut id = CentroidId(group[0] as u64);
        for &other in &group[1..] {
            id = dend.push(id, CentroidId(other as u64), 0.0);
            dup_merges += 1;
        }
        centroids.push(Centroid::new(
            id,
            group.len() as u64,
            data.point(group[0]).clone(),
        ));
    }
    (centroids, dup_merges)
}

fn dedup_dataset(centroids: &[Centroid]) -> Result<Dataset, GeometryError> {
    Dataset::new(centroids.iter().map(|c| c.coords.to_vec()).collect())
}

struct Engine<N> {
    nns: N,
    active: HashMap<CentroidId, Centroid>,
    by_coords: HashMap<CoordKey, CentroidId>,
    queue: BinaryHeap<Reverse<Entry>>,
    dend: Dendrogram,
    stats: RunStats,
    requeues: HashMap<CentroidId, u64>,
    close_below: Option<f64>,
    close_entries: u64,
}

impl<N: DynamicNns> Engine<N> {
    fn new(nns: N, dend: Dendrogram, stats: RunStats) -> Self {
        Engine {
            nns,
            active: HashMap::new(),
            by_coords: HashMap::new(),
            queue: BinaryHeap::new(),
            dend,
            close_below: stats.delta,
            stats,
            requeues: HashMap::new(),
            close_entries: 0,
        }
    }

    fn activate(&mut self, c: Centroid) -> Result<(), HacError> {
        self.nns.insert(c.clone())?;
        self.stats.nns_inserts += 1;
        self.by_coords.insert(c.coords.canonical_key(), c.id);
        self.active.insert(c.id, c);
        Ok(())
    }

    fn deactivate(&mut self, id: CentroidId) -> Result<Centroid, HacError> {
        let c = self
            .active
            .remove(&id)
            .ok_or_else(|| HacError::Internal(format!("merge of inactive centroid {id}")))?;
        self.by_coords.remove(&c.coords.canonical_key());
        self.nns.delete(id)?;
        self.stats.nns_deletes += 1;
        Ok(c)
    }

    /// Nearest other active centroid, distance measured exactly.
    fn nearest(&mut self, id: CentroidId) -> Result<(f64, CentroidId), HacError> {
        let coords = &self.active[&id].coords;
        let r = self.nns.query(coords, Some(id))?;
        self.stats.nns_queries += 1;
        if r.neighbor.id == id || !self.active.contains_key(&r.neighbor.id) {
            return Err(HacError::Internal(format!(
                "store answered {} for {id}, which is not another active centroid",
                r.neighbor.id
            )));
        }
        Ok((dist(coords, &r.neighbor.coords), r.neighbor.id))
    }

    fn push(&mut self, l: f64, x: CentroidId, y: CentroidId) {
        if self.close_below.is_some_and(|d| l < d) {
            self.close_entries += 1;
            self.stats.max_close_entries = self.stats.max_close_entries.max(self.close_entries);
        }
        self.queue.push(Reverse(Entry { l, x, y }));
    }

    fn pop(&mut self) -> Option<Entry> {
        let Reverse(e) = self.queue.pop()?;
        if self.close_below.is_some_and(|d| e.l < d) {
            self.close_entries -= 1;
        }
        Some(e)
    }

    /// Merges two active centroids, absorbs any live centroid sitting at
    /// exactly the new coordinates, and activates the result.
    fn merge(&mut self, x: CentroidId, y: CentroidId) -> Result<CentroidId, HacError> {
        let cx = self.deactivate(x)?;
        let cy = self.deactivate(y)?;
        let d = dist(&cx.coords, &cy.coords);
        let new_id = self.dend.push(x, y, d);
        let mut z = merge_centroids(&cx, &cy, new_id)?;
        self.stats.merges += 1;
        trace!("merge {x} + {y} -> {new_id} at {d}");
        while let Some(&twin) = self.by_coords.get(&z.coords.canonical_key()) {
            let t = self.deactivate(twin)?;
            let id = self.dend.push(z.id, twin, 0.0);
            z = Centroid::new(id, z.weight + t.weight, z.coords);
            self.stats.merges += 1;
            self.stats.identical_centroid_merges += 1;
        }
        let id = z.id;
        self.activate(z)?;
        Ok(id)
    }

    fn enqueue_nearest(&mut self, id: CentroidId) -> Result<(), HacError> {
        let (l, y) = self.nearest(id)?;
        self.push(l, id, y);
        Ok(())
    }

    fn run_heap(&mut self, epsilon: f64) -> Result<(), HacError> {
        let mut ids: Vec<CentroidId> = self.active.keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            self.enqueue_nearest(id)?;
        }
        while self.active.len() > 1 {
            let Entry { l, x, y } = self
                .pop()
                .ok_or_else(|| HacError::Internal("queue ran dry with clusters left".into()))?;
            if !self.active.contains_key(&x) {
                self.stats.dead_dequeues += 1;
                continue;
            }
            let z = if self.active.contains_key(&y) {
                self.merge(x, y)?
            } else {
                self.stats.stale_dequeues += 1;
                let (l_star, y_star) = self.nearest(x)?;
                if l_star <= (1.0 + epsilon) * l {
                    self.merge(x, y_star)?
                } else {
                    self.stats.requeues += 1;
                    let count = self.requeues.entry(x).or_insert(0);
                    *count += 1;
                    self.stats.max_requeues = self.stats.max_requeues.max(*count);
                    self.push(l_star, x, y_star);
                    continue;
                }
            };
            if self.active.len() > 1 {
                self.enqueue_nearest(z)?;
            }
        }
        Ok(())
    }

    fn run_bucket(&mut self, epsilon: f64, delta: f64) -> Result<(), HacError> {
        let mut threshold = delta;
        while self.active.len() > 1 {
            self.stats.rounds += 1;
            loop {
                let mut merged = false;
                let mut ids: Vec<CentroidId> = self.active.keys().copied().collect();
                ids.sort_unstable();
                for id in ids {
                    if self.active.len() < 2 || !self.active.contains_key(&id) {
                        continue;
                    }
                    let (l, y) = self.nearest(id)?;
                    if l > threshold {
                        continue;
                    }
                    merged = true;
                    let mut z = self.merge(id, y)?;
                    // merging can pull the new centroid closer to others
                    while self.active.len() > 1 {
                        let (l, y) = self.nearest(z)?;
                        if l > threshold {
                            break;
                        }
                        z = self.merge(z, y)?;
                    }
                }
                if !merged {
                    break;
                }
            }
            debug!(
                "bucket round {} at threshold {threshold}: {} left",
                self.stats.rounds,
                self.active.len()
            );
            threshold *= 1.0 + epsilon;
        }
        Ok(())
    }
}

/// Parameters handed to the LSH levels of the adaptive store.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LshAdaptivePlan {
    pub c_hat: f64,
    /// Additive slack the whole store may use.
    pub beta0: f64,
    /// Multiplicative factor of each level, `c_hat / lambda`.
    pub level_alpha: f64,
    pub net_beta: f64,
    pub level_beta: f64,
}

impl LshAdaptivePlan {
    /// Splits `beta0` so the adaptive store's `(a + 1) net + level` slack
    /// comes out at exactly `beta0`.
    pub fn new(config: &HacConfig, bounds: DistanceBounds) -> Result<Self, HacError> {
        let c_hat = config.c_hat();
        let beta0 = hac_query_beta(c_hat, config.lambda, bounds.delta)?;
        let level_alpha = c_hat / config.lambda;
        let share = beta0 / (level_alpha + 2.0);
        Ok(LshAdaptivePlan {
            c_hat,
            beta0,
            level_alpha,
            net_beta: share,
            level_beta: share,
        })
    }

    pub fn spec(&self) -> NnsApproxSpec {
        NnsApproxSpec {
            alpha: self.level_alpha,
            beta: self.beta0,
        }
    }
}

/// The adaptive LSH store the engine uses for `NnsBackend::LshAdaptive`.
pub fn lsh_adaptive_store(
    config: &HacConfig,
    bounds: DistanceBounds,
    center: Point,
    capacity: usize,
) -> Result<AdaptiveNns<LshLevels>, HacError> {
    let plan = LshAdaptivePlan::new(config, bounds)?;
    let net = CoveringNet::new(center, bounds.big_delta, plan.net_beta)?;
    let levels = LshLevels {
        c: plan.level_alpha,
        beta: plan.level_beta,
        // snapped queries sit within 2 big_delta + beta0 of any centroid
        big_delta: 2.0 * bounds.big_delta + plan.beta0,
        tuning: config.lsh.clone(),
    };
    Ok(AdaptiveNns::new(levels, net, capacity, config.seed))
}

fn resolve_bounds(config: &HacConfig, centroids: &[Centroid]) -> Result<DistanceBounds, HacError> {
    match config.bounds {
        Some(b) => Ok(b),
        None => Ok(compute_bounds(&dedup_dataset(centroids)?)?),
    }
}

/// Runs the engine configured by `config`, building its store.
pub fn run_hac(data: &Dataset, config: &HacConfig) -> Result<(Dendrogram, RunStats), HacError> {
    config.validate()?;
    match config.nns_backend {
        NnsBackend::Exact => run_hac_with(data, config, ExactNns::new()),
        NnsBackend::LshAdaptive => {
            let mut scratch = Dendrogram::new(data.len());
            let (centroids, _) = initial_centroids(data, &mut scratch);
            if centroids.len() < 2 {
                return Err(GeometryError::TooFewPoints {
                    needed: 2,
                    got: centroids.len(),
                }
                .into());
            }
            let bounds = resolve_bounds(config, &centroids)?;
            let center = data.bounding_box_center();
            let store = lsh_adaptive_store(config, bounds, center, 2 * centroids.len())?;
            let config = HacConfig {
                bounds: Some(bounds),
                ..config.clone()
            };
            run_hac_with(data, &config, store)
        }
    }
}

/// Runs the engine over a caller-supplied empty store. `config.nns_backend`
/// is ignored.
pub fn run_hac_with<N: DynamicNns>(
    data: &Dataset,
    config: &HacConfig,
    nns: N,
) -> Result<(Dendrogram, RunStats), HacError> {
    config.validate()?;
    if !nns.is_empty() {
        return Err(HacError::Config("the store must start empty".into()));
    }
    let mut dend = Dendrogram::new(data.len());
    let (centroids, dup_merges) = initial_centroids(data, &mut dend);
    if centroids.len() < 2 {
        return Err(GeometryError::TooFewPoints {
            needed: 2,
            got: centroids.len(),
        }
        .into());
    }
    let bounds = match (config.mode, config.bounds) {
        (_, Some(b)) => Some(b),
        (HacMode::BucketApprox, None) => Some(resolve_bounds(config, &centroids)?),
        _ => None,
    };
    let stats = RunStats {
        n_points: data.len(),
        n_dedup: centroids.len(),
        duplicate_point_merges: dup_merges,
        delta: bounds.map(|b| b.delta),
        big_delta: bounds.map(|b| b.big_delta),
        ..RunStats::default()
    };
    let mut engine = Engine::new(nns, dend, stats);
    for c in centroids {
        engine.activate(c)?;
    }
    match config.mode {
        HacMode::Exact | HacMode::HeapApprox => engine.run_heap(config.epsilon)?,
        HacMode::BucketApprox => {
            let delta = bounds.expect("bucket mode resolves bounds").delta;
            engine.run_bucket(config.epsilon, delta)?
        }
    }
    debug!(
        "hac done: {} merges, {} stale, {} requeues, {} queries",
        engine.stats.merges,
        engine.stats.stale_dequeues,
        engine.stats.requeues,
        engine.stats.nns_queries
    );
    if !engine.dend.is_complete() {
        return Err(HacError::Internal(
            "dendrogram incomplete after the run".into(),
        ));
    }
    Ok((engine.dend, engine.stats))
}

/// Exact centroid-linkage HAC.
pub fn exact_hac(data: &Dataset) -> Result<Dendrogram, HacError> {
    run_hac(data, &HacConfig::exact()).map(|(d, _)| d)
}

/// Bucket-based baseline.
pub fn run_hac_bucket(
    data: &Dataset,
    config: &HacConfig,
) -> Result<(Dendrogram, RunStats), HacError> {
    run_hac(
        data,
        &HacConfig {
            mode: HacMode::BucketApprox,
            ..config.clone()
        },
    )
}

/// One replayed merge: the distance between the merged centroids and the
/// closest pair of centroids active just before it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeAudit {
    pub step: usize,
    pub recorded: f64,
    pub distance: f64,
    pub optimal: f64,
}

impl MergeAudit {
    /// `distance / optimal`, 1 when both are zero.
    pub fn ratio(&self) -> f64 {
        if self.optimal == 0.0 {
            if self.distance == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.distance / self.optimal
        }
    }
}

/// Replays a dendrogram from its input points, recomputing every centroid,
/// and reports each merge against the closest active pair at that moment.
pub fn audit_merges(data: &Dataset, dend: &Dendrogram) -> Result<Vec<MergeAudit>, HacError> {
    if dend.n_leaves() != data.len() {
        return Err(HacError::Config(format!(
            "dendrogram has {} leaves, dataset has {} points",
            dend.n_leaves(),
            data.len()
        )));
    }
    dend.validate()
        .map_err(|e| HacError::Internal(e.to_string()))?;
    let total = data.len() + dend.len();
    let mut coords: Vec<Option<Centroid>> = Vec::with_capacity(total);
    for (i, p) in data.points().iter().enumerate() {
        coords.push(Some(Centroid::new(CentroidId(i as u64), 1, p.clone())));
    }
    let mut active: Vec<usize> = (0..data.len()).collect();
    let mut nn: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); total];
    let scan = |coords: &[Option<Centroid>], active: &[usize], i: usize| {
        let ci = coords[i].as_ref().unwrap();
        active
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| (dist(&ci.coords, &coords[j].as_ref().unwrap().coords), j))
            .fold(
                (f64::INFINITY, usize::MAX),
                |a, b| if b.0 < a.0 { b } else { a },
            )
    };
    for &i in &active {
        nn[i] = scan(&coords, &active, i);
    }
    let mut out = Vec::with_capacity(dend.len());
    for (step, m) in dend.merges().iter().enumerate() {
        let optimal = active
            .iter()
            .map(|&i| nn[i].0)
            .fold(f64::INFINITY, f64::min);
        let (a, b) = (m.left_id.index(), m.right_id.index());
        let ca = coords[a].take().unwrap();
        let cb = coords[b].take().unwrap();
        let distance = dist(&ca.coords, &cb.coords);
        out.push(MergeAudit {
            step,
            recorded: m.distance,
            distance,
            optimal,
        });
        let z = m.new_id.index();
        coords.push(Some(merge_centroids(&ca, &cb, m.new_id)?));
        active.retain(|&i| i != a && i != b);
        let zc = coords[z].clone().unwrap();
        let mut rescan = Vec::new();
        for &i in &active {
            if nn[i].1 == a || nn[i].1 == b {
                rescan.push(i);
            } else {
                let d = dist(&coords[i].as_ref().unwrap().coords, &zc.coords);
                if d < nn[i].0 {
                    nn[i] = (d, z);
                }
            }
        }
        active.push(z);
        for i in rescan {
            nn[i] = scan(&coords, &active, i);
        }
        nn[z] = scan(&coords, &active, z);
    }
    Ok(out)
}
