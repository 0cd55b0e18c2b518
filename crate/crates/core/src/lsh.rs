//! Multi-scale Euclidean LSH ("L ors of K ands") as a dynamic approximate
//! nearest-neighbor store for oblivious update sequences.
//!
//! Each scale `i` covers radius `r = 2^i` for `ceil(log2 beta) <= i <= ceil(log2 big_delta)`.
//! A scale holds `L` tables; a table keys points by `K` p-stable atoms
//! `h(x) = floor((a.x + b) / w)` with `a ~ N(0, I)`, `b ~ U[0, w)` and
//! `w = bucket_width * r`. A query walks the scales upward and answers with
//! the closest collider at the first scale where anything collides. The whole
//! table set is repeated `repetitions` times with independent atoms and the
//! closest of the per-repetition answers wins.

use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};
use std::ops::RangeInclusive;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{dist, Centroid, CentroidId};
use crate::nns::{DynamicNns, NnsApproxSpec, NnsError, QueryResult};

pub const DEFAULT_BUCKET_WIDTH: f64 = 4.0;
pub const DEFAULT_PROBE_FACTOR: usize = 64;
/// Monte-Carlo draws used to estimate the far-pair collision rate.
pub const COLLISION_SAMPLES: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LshParams {
    /// Approximation target.
    pub c: f64,
    /// Additive slack; sets the finest scale.
    pub beta: f64,
    /// Radius of the data; sets the coarsest scale.
    pub big_delta: f64,
    pub k_ands: usize,
    pub l_ors: usize,
    pub repetitions: usize,
    /// Quantization width in units of the scale radius.
    pub bucket_width: f64,
    /// Most distinct candidates examined per scale per repetition.
    pub max_probe: usize,
    pub seed: u64,
}

impl LshParams {
    pub fn validate(&self) -> Result<(), NnsError> {
        let bad = |msg: &str| Err(NnsError::InvalidParameter(msg.to_string()));
        if !(self.c > 1.0 && self.c.is_finite()) {
            return bad("c must be > 1");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be > 0");
        }
        if !(self.big_delta > 0.0 && self.big_delta.is_finite()) {
            return bad("big_delta must be > 0");
        }
        if self.k_ands == 0 || self.l_ors == 0 || self.repetitions == 0 || self.max_probe == 0 {
            return bad("K, L, repetitions and max_probe must be positive");
        }
        if !(self.bucket_width > 0.0 && self.bucket_width.is_finite()) {
            return bad("bucket_width must be > 0");
        }
        Ok(())
    }

    /// Scale exponents `i` with `beta <= 2^i <= 2 big_delta`.
    pub fn scales(&self) -> RangeInclusive<i32> {
        let lo = self.beta.log2().ceil() as i32;
        let hi = (self.big_delta.log2().ceil() as i32).max(lo);
        lo..=hi
    }

    pub fn num_scales(&self) -> usize {
        self.scales().count()
    }
}

/// How `K` and `L` are chosen when not fixed by hand.
///
/// `L = ceil(n^(1/c^2) * kappa_l * ln n)` and
/// `K = ceil((kappa_k ln n + ln L + ln ln(big_delta/beta)) / ln(1/p2))`, with
/// `p2` the Monte-Carlo collision rate of one atom for a pair at distance `c r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LshTuning {
    pub kappa_l: f64,
    pub kappa_k: f64,
    pub bucket_width: f64,
    pub repetitions: usize,
    pub probe_factor: usize,
    pub k_ands: Option<usize>,
    pub l_ors: Option<usize>,
}

impl Default for LshTuning {
    fn default() -> Self {
        LshTuning {
            kappa_l: 1.0,
            kappa_k: 1.0,
            bucket_width: DEFAULT_BUCKET_WIDTH,
            repetitions: 1,
            probe_factor: DEFAULT_PROBE_FACTOR,
            k_ands: None,
            l_ors: None,
        }
    }
}

impl LshTuning {
    pub fn params_for(&self, n: usize, c: f64, beta: f64, big_delta: f64, seed: u64) -> LshParams {
        let n_eff = n.max(2) as f64;
        let ln_n = n_eff.ln();
        let l_ors = self.l_ors.unwrap_or_else(|| {
            ((n_eff.powf(1.0 / (c * c)) * self.kappa_l * ln_n).ceil() as usize).max(1)
        });
        let k_ands = self.k_ands.unwrap_or_else(|| {
            let p2 = far_collision_rate(self.bucket_width / c).clamp(1e-9, 1.0 - 1e-9);
            let aspect = (big_delta / beta).ln().max(1.0);
            let numerator = self.kappa_k * ln_n + (l_ors as f64).ln() + aspect.ln();
            ((numerator / (1.0 / p2).ln()).ceil() as usize).max(1)
        });
        LshParams {
            c,
            beta,
            big_delta,
            k_ands,
            l_ors,
            repetitions: self.repetitions.max(1),
            bucket_width: self.bucket_width,
            max_probe: self.probe_factor.max(1) * l_ors,
            seed,
        }
    }
}

/// [`estimate_collision_probability`] under a fixed seed, memoized per width.
fn far_collision_rate(width_over_distance: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = width_over_distance.to_bits();
    if let Some(&p) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return p;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15);
    let p = estimate_collision_probability(width_over_distance, COLLISION_SAMPLES, &mut rng);
    cache
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(key, p);
    p
}

/// `floor(t)` as an integer. Baseline x86-64 has no rounding instruction and
/// `f64::floor` becomes a libm call, which dominates hashing.
#[inline]
fn floor_i64(t: f64) -> i64 {
    let q = t as i64;
    q - ((q as f64) > t) as i64
}

/// Monte-Carlo estimate of `Pr[h(u) = h(v)]` for one atom when
/// `|u - v| = 1` and the quantization width is `width_over_distance`.
///
/// `a.(u - v)` is `N(0, 1)` for a Gaussian direction, so the draw is
/// one-dimensional: place `u` at the origin with offset `b ~ U[0, w)`.
pub fn estimate_collision_probability(
    width_over_distance: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> f64 {
    let w = width_over_distance;
    let mut hits = 0usize;
    for _ in 0..samples {
        let proj: f64 = rng.sample(StandardNormal);
        let b = rng.random::<f64>() * w;
        if (b / w).floor() == ((b + proj) / w).floor() {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

/// One p-stable hash `floor((a.x + b) / w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HashAtom {
    pub direction: Vec<f64>,
    pub offset: f64,
    pub width: f64,
}

impl HashAtom {
    pub fn sample(dim: usize, width: f64, rng: &mut impl Rng) -> Self {
        let direction = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let offset = rng.random::<f64>() * width;
        HashAtom {
            direction,
            offset,
            width,
        }
    }

    pub fn hash(&self, x: &[f64]) -> i64 {
        let dot: f64 = self.direction.iter().zip(x).map(|(a, b)| a * b).sum();
        floor_i64((dot + self.offset) / self.width)
    }
}

/// Multiply-rotate hasher for keys that are already well mixed or small ids.
#[derive(Clone, Copy, Default)]
struct MixHasher(u64);

impl Hasher for MixHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }
}

type MixMap<K, V> = HashMap<K, V, BuildHasherDefault<MixHasher>>;
type MixSet<K> = HashSet<K, BuildHasherDefault<MixHasher>>;

/// A table's `K` atoms laid out flat: directions row-major, one offset each.
/// Buckets are keyed by a 64-bit mix of the `K` hash values; two tuples that
/// mix to the same key only add candidates, which are distance-checked anyway.
#[derive(Clone, Debug)]
struct Table {
    directions: Vec<f64>,
    offsets: Vec<f64>,
    width: f64,
    buckets: MixMap<u64, Vec<CentroidId>>,
}

impl Table {
    /// Draws `k` atoms in the same order as repeated [`HashAtom::sample`].
    fn sample(dim: usize, k: usize, width: f64, rng: &mut impl Rng) -> Self {
        let mut directions = Vec::with_capacity(k * dim);
        let mut offsets = Vec::with_capacity(k);
        for _ in 0..k {
            directions.extend((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
            offsets.push(rng.random::<f64>() * width);
        }
        Table {
            directions,
            offsets,
            width,
            buckets: MixMap::default(),
        }
    }

    fn key(&self, x: &[f64]) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for (dir, b) in self.directions.chunks_exact(x.len()).zip(&self.offsets) {
            let dot: f64 = dir.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = floor_i64((dot + b) / self.width);
            h = (h ^ v as u64)
                .wrapping_mul(0x0000_0100_0000_01b3)
                .rotate_left(29);
        }
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^ (h >> 33)
    }
}

#[derive(Clone, Debug)]
struct Scale {
    tables: Vec<Table>,
}

/// The LSH store. Atoms are drawn once, at construction, from `params.seed`.
#[derive(Debug)]
pub struct LshNns {
    params: LshParams,
    dim: usize,
    repetitions: Vec<Vec<Scale>>,
    points: MixMap<CentroidId, Centroid>,
    /// Each live point's bucket key in every table, in table order.
    keys: MixMap<CentroidId, Vec<u64>>,
    fallbacks: AtomicU64,
}

impl LshNns {
    pub fn new(dim: usize, params: LshParams) -> Result<Self, NnsError> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let repetitions = (0..params.repetitions)
            .map(|_| {
                params
                    .scales()
                    .map(|i| {
                        let width = params.bucket_width * 2f64.powi(i);
                        Scale {
                            tables: (0..params.l_ors)
                                .map(|_| Table::sample(dim, params.k_ands, width, &mut rng))
                                .collect(),
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(LshNns {
            params,
            dim,
            repetitions,
            points: MixMap::default(),
            keys: MixMap::default(),
            fallbacks: AtomicU64::new(0),
        })
    }

    pub fn build(dim: usize, points: Vec<Centroid>, params: LshParams) -> Result<Self, NnsError> {
        let mut nns = LshNns::new(dim, params)?;
        for p in points {
            nns.insert(p)?;
        }
        Ok(nns)
    }

    pub fn params(&self) -> &LshParams {
        &self.params
    }

    /// Total ids stored across every bucket of every table.
    pub fn bucket_entries(&self) -> usize {
        self.tables()
            .map(|t| t.buckets.values().map(Vec::len).sum::<usize>())
            .sum()
    }

    /// Number of non-empty buckets across all tables.
    pub fn occupied_buckets(&self) -> usize {
        self.tables().map(|t| t.buckets.len()).sum()
    }

    pub fn table_count(&self) -> usize {
        self.tables().count()
    }

    /// Queries answered by the linear-scan fallback.
    pub fn fallback_count(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    /// The first atom's direction and offset, for checking that two stores
    /// drew different randomness.
    pub fn atom_fingerprint(&self) -> Option<(Vec<f64>, f64)> {
        let dim = self.dim;
        self.tables()
            .next()
            .filter(|t| !t.offsets.is_empty())
            .map(|t| (t.directions[..dim].to_vec(), t.offsets[0]))
    }

    /// How many tables hold `id` in the bucket its coordinates hash to.
    pub fn membership_count(&self, id: CentroidId) -> usize {
        let Some(c) = self.points.get(&id) else {
            return 0;
        };
        self.tables()
            .filter(|t| {
                t.buckets
                    .get(&t.key(&c.coords))
                    .is_some_and(|b| b.contains(&id))
            })
            .count()
    }

    fn tables(&self) -> impl Iterator<Item = &Table> {
        self.repetitions
            .iter()
            .flatten()
            .flat_map(|s| s.tables.iter())
    }

    fn check_dim(&self, got: usize) -> Result<(), NnsError> {
        if got != self.dim {
            return Err(NnsError::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    fn query_repetition(
        &self,
        scales: &[Scale],
        point: &[f64],
        excluded: Option<CentroidId>,
        seen: &mut MixSet<CentroidId>,
    ) -> Option<(f64, CentroidId)> {
        for scale in scales {
            seen.clear();
            let mut best: Option<(f64, CentroidId)> = None;
            'tables: for table in &scale.tables {
                let Some(bucket) = table.buckets.get(&table.key(point)) else {
                    continue;
                };
                for &id in bucket {
                    if Some(id) == excluded || !seen.insert(id) {
                        continue;
                    }
                    let d = dist(point, &self.points[&id].coords);
                    if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                        best = Some((d, id));
                    }
                    if seen.len() >= self.params.max_probe {
                        break 'tables;
                    }
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    fn linear_scan(
        &self,
        point: &[f64],
        excluded: Option<CentroidId>,
    ) -> Option<(f64, CentroidId)> {
        let mut best: Option<(f64, CentroidId)> = None;
        for (&id, c) in &self.points {
            if Some(id) == excluded {
                continue;
            }
            let d = dist(point, &c.coords);
            if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                best = Some((d, id));
            }
        }
        best
    }
}

impl DynamicNns for LshNns {
    fn insert(&mut self, centroid: Centroid) -> Result<(), NnsError> {
        self.check_dim(centroid.dim())?;
        if self.points.contains_key(&centroid.id) {
            return Err(NnsError::DuplicateId(centroid.id));
        }
        let mut keys = Vec::with_capacity(self.table_count());
        for table in self
            .repetitions
            .iter_mut()
            .flatten()
            .flat_map(|s| s.tables.iter_mut())
        {
            let key = table.key(&centroid.coords);
            table.buckets.entry(key).or_default().push(centroid.id);
            keys.push(key);
        }
        self.keys.insert(centroid.id, keys);
        self.points.insert(centroid.id, centroid);
        Ok(())
    }

    fn delete(&mut self, id: CentroidId) -> Result<Centroid, NnsError> {
        let centroid = self.points.remove(&id).ok_or(NnsError::MissingId(id))?;
        let keys = self.keys.remove(&id).expect("live point without keys");
        let tables = self
            .repetitions
            .iter_mut()
            .flatten()
            .flat_map(|s| s.tables.iter_mut());
        for (table, key) in tables.zip(keys) {
            let bucket = table
                .buckets
                .get_mut(&key)
                .expect("live point missing from its bucket");
            let pos = bucket
                .iter()
                .position(|&x| x == id)
                .expect("live point missing from its bucket");
            bucket.swap_remove(pos);
            if bucket.is_empty() {
                table.buckets.remove(&key);
            }
        }
        Ok(centroid)
    }

    fn query(&self, point: &[f64], excluded: Option<CentroidId>) -> Result<QueryResult, NnsError> {
        self.check_dim(point.len())?;
        let mut seen = MixSet::default();
        let mut best: Option<(f64, CentroidId)> = None;
        for rep in &self.repetitions {
            if let Some((d, id)) = self.query_repetition(rep, point, excluded, &mut seen) {
                if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                    best = Some((d, id));
                }
            }
        }
        if best.is_none() {
            best = self.linear_scan(point, excluded);
            if best.is_some() {
                self.fallbacks.fetch_add(1, Ordering::Relaxed);
            }
        }
        let (distance, id) = best.ok_or(NnsError::Empty)?;
        Ok(QueryResult {
            neighbor: self.points[&id].clone(),
            distance,
        })
    }

    fn len(&self) -> usize {
        self.points.len()
    }

    fn contains(&self, id: CentroidId) -> bool {
        self.points.contains_key(&id)
    }

    fn approx_spec(&self) -> NnsApproxSpec {
        NnsApproxSpec {
            alpha: self.params.c,
            beta: self.params.beta,
        }
    }
}
