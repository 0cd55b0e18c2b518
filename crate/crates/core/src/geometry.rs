//! Points, weighted centroids, the Euclidean kernel, dendrograms and the
//! distance bounds (`delta`, `big_delta`) the engine's analysis relies on.

use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Datasets at or below this size get exact O(n^2) bounds.
pub const DEFAULT_BOUND_EXACT_THRESHOLD: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("points must have at least one coordinate")]
    ZeroDimension,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("points {first} and {second} are identical (minimum pairwise distance is 0)")]
    DuplicatePoints { first: usize, second: usize },
    #[error("{n} points exceeds the exact-bounds threshold {threshold}; supply delta explicitly")]
    DeltaRequired { n: usize, threshold: usize },
    #[error("invalid distance bounds: delta={delta}, big_delta={big_delta}")]
    InvalidBounds { delta: f64, big_delta: f64 },
    #[error("cannot merge centroid {0} with itself")]
    SelfMerge(CentroidId),
}

/// A point in R^d with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite { index: 0 });
        }
        Ok(Point(coords))
    }

    /// Wraps coordinates already known to be finite and non-empty.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Bit pattern of the coordinates with `-0.0` folded into `0.0`, used to
    /// detect coordinate-identical points exactly.
    pub fn canonical_key(&self) -> CoordKey {
        canonical_key(&self.0)
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Exact coordinate identity key (see [`Point::canonical_key`]).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoordKey(Vec<u64>);

pub fn canonical_key(coords: &[f64]) -> CoordKey {
    CoordKey(
        coords
            .iter()
            .map(|&c| if c == 0.0 { 0u64 } else { c.to_bits() })
            .collect(),
    )
}

/// Euclidean distance, checking dimensions.
pub fn euclidean_dist(a: &[f64], b: &[f64]) -> Result<f64, GeometryError> {
    if a.len() != b.len() {
        return Err(GeometryError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(dist(a, b))
}

/// Euclidean distance for inputs of validated equal dimension.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dimension mismatch");
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Identifier of a cluster. Leaves use `0..n`, merged clusters continue
/// from `n` in merge order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CentroidId(pub u64);

impl CentroidId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CentroidId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The mean of a cluster of input points, with the cluster's multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub id: CentroidId,
    pub weight: u64,
    pub coords: Point,
}

impl Centroid {
    pub fn new(id: CentroidId, weight: u64, coords: Point) -> Self {
        assert!(weight >= 1, "centroid weight must be positive");
        Centroid { id, weight, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.dim()
    }
}

/// Weighted mean of two centroids: `(w_x x + w_y y) / (w_x + w_y)`.
pub fn merge_centroids(
    x: &Centroid,
    y: &Centroid,
    new_id: CentroidId,
) -> Result<Centroid, GeometryError> {
    if x.id == y.id {
        return Err(GeometryError::SelfMerge(x.id));
    }
    if x.dim() != y.dim() {
        return Err(GeometryError::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let weight = x.weight + y.weight;
    let (wx, wy, wz) = (x.weight as f64, y.weight as f64, weight as f64);
    let coords = x
        .coords
        .iter()
        .zip(y.coords.iter())
        .map(|(a, b)| (wx * a + wy * b) / wz)
        .collect();
    Ok(Centroid {
        id: new_id,
        weight,
        coords: Point::from_vec_unchecked(coords),
    })
}

/// A validated list of points sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    points: Vec<Point>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len());
        for (index, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(GeometryError::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            let p = Point::new(row).map_err(|e| match e {
                GeometryError::NonFinite { .. } => GeometryError::NonFinite { index },
                other => other,
            })?;
            points.push(p);
        }
        Ok(Dataset { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    /// Groups exactly identical points. Groups are ordered by first
    /// appearance and each lists its original indices ascending.
    pub fn duplicate_groups(&self) -> Vec<Vec<usize>> {
        let mut slot: HashMap<CoordKey, usize> = HashMap::with_capacity(self.len());
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            match slot.entry(p.canonical_key()) {
                std::collections::hash_map::Entry::Occupied(e) => groups[*e.get()].push(i),
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(groups.len());
                    groups.push(vec![i]);
                }
            }
        }
        groups
    }

    fn bounding_box_diagonal(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in &self.points {
            for (k, &c) in p.iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        dist(&lo, &hi)
    }

    /// Midpoint of the axis-aligned bounding box.
    pub fn bounding_box_center(&self) -> Point {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in &self.points {
            for (k, &c) in p.iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        Point::from_vec_unchecked(lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect())
    }
}

/// One binary merge. `left_id < right_id` by convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub left_id: CentroidId,
    pub right_id: CentroidId,
    pub new_id: CentroidId,
    pub distance: f64,
    pub new_size: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DendrogramError {
    #[error("merge {index}: new id {got} should be {expected}")]
    BadNewId {
        index: usize,
        got: CentroidId,
        expected: CentroidId,
    },
    #[error("merge {index}: child {child} does not exist yet")]
    UnknownChild { index: usize, child: CentroidId },
    #[error("merge {index}: child {child} already merged")]
    ChildReused { index: usize, child: CentroidId },
    #[error("merge {index}: size {got} should be {expected}")]
    BadSize {
        index: usize,
        got: u64,
        expected: u64,
    },
    #[error("merge {index}: invalid distance {distance}")]
    BadDistance { index: usize, distance: f64 },
    #[error("merge {index}: identical children")]
    SelfMerge { index: usize },
    #[error("expected {expected} merges for a complete dendrogram, found {got}")]
    Incomplete { expected: usize, got: usize },
}

/// Ordered merge log over `n_leaves` input points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    n_leaves: usize,
    merges: Vec<MergeRecord>,
    #[serde(skip)]
    sizes: Vec<u64>,
}

impl Dendrogram {
    pub fn new(n_leaves: usize) -> Self {
        Dendrogram {
            n_leaves,
            merges: Vec::with_capacity(n_leaves.saturating_sub(1)),
            sizes: vec![1; n_leaves],
        }
    }

    /// Rebuilds from raw records without validating; call [`validate`] after.
    ///
    /// [`validate`]: Dendrogram::validate
    pub fn from_records(n_leaves: usize, merges: Vec<MergeRecord>) -> Self {
        let mut sizes = vec![1; n_leaves];
        sizes.extend(merges.iter().map(|m| m.new_size));
        Dendrogram {
            n_leaves,
            merges,
            sizes,
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn merges(&self) -> &[MergeRecord] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn next_id(&self) -> CentroidId {
        CentroidId((self.n_leaves + self.merges.len()) as u64)
    }

    pub fn is_complete(&self) -> bool {
        self.merges.len() + 1 == self.n_leaves
    }

    /// Number of leaves under `id`.
    pub fn size_of(&self, id: CentroidId) -> u64 {
        self.sizes[id.index()]
    }

    /// Appends a merge of two existing clusters and returns the new id.
    pub fn push(&mut self, a: CentroidId, b: CentroidId, distance: f64) -> CentroidId {
        let new_id = self.next_id();
        let new_size = self.sizes[a.index()] + self.sizes[b.index()];
        self.merges.push(MergeRecord {
            left_id: a.min(b),
            right_id: a.max(b),
            new_id,
            distance,
            new_size,
        });
        self.sizes.push(new_size);
        new_id
    }

    /// Checks the structural invariants of a merge log.
    pub fn validate(&self) -> Result<(), DendrogramError> {
        let total = self.n_leaves + self.merges.len();
        let mut size = vec![1u64; self.n_leaves];
        size.resize(total, 0);
        let mut used = vec![false; total];
        for (index, m) in self.merges.iter().enumerate() {
            let expected = CentroidId((self.n_leaves + index) as u64);
            if m.new_id != expected {
                return Err(DendrogramError::BadNewId {
                    index,
                    got: m.new_id,
                    expected,
                });
            }
            if m.left_id == m.right_id {
                return Err(DendrogramError::SelfMerge { index });
            }
            if !(m.distance >= 0.0 && m.distance.is_finite()) {
                return Err(DendrogramError::BadDistance {
                    index,
                    distance: m.distance,
                });
            }
            for child in [m.left_id, m.right_id] {
                if child >= expected {
                    return Err(DendrogramError::UnknownChild { index, child });
                }
                if used[child.index()] {
                    return Err(DendrogramError::ChildReused { index, child });
                }
                used[child.index()] = true;
            }
            let want = size[m.left_id.index()] + size[m.right_id.index()];
            if m.new_size != want {
                return Err(DendrogramError::BadSize {
                    index,
                    got: m.new_size,
                    expected: want,
                });
            }
            size[expected.index()] = want;
        }
        Ok(())
    }

    pub fn validate_complete(&self) -> Result<(), DendrogramError> {
        self.validate()?;
        if !self.is_complete() {
            return Err(DendrogramError::Incomplete {
                expected: self.n_leaves.saturating_sub(1),
                got: self.merges.len(),
            });
        }
        Ok(())
    }

    /// Parent of every node (`None` for roots), indexed by node id.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.n_leaves + self.merges.len()];
        for m in &self.merges {
            parent[m.left_id.index()] = Some(m.new_id.index());
            parent[m.right_id.index()] = Some(m.new_id.index());
        }
        parent
    }

    /// Merge record that created internal node `id`.
    pub fn record(&self, id: usize) -> Option<&MergeRecord> {
        id.checked_sub(self.n_leaves)
            .and_then(|k| self.merges.get(k))
    }
}

/// Lower bound on the minimum and upper bound on the maximum pairwise
/// input distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceBounds {
    pub delta: f64,
    pub big_delta: f64,
}

impl DistanceBounds {
    pub fn new(delta: f64, big_delta: f64) -> Result<Self, GeometryError> {
        if !(delta > 0.0 && delta.is_finite() && big_delta.is_finite() && delta <= big_delta) {
            return Err(GeometryError::InvalidBounds { delta, big_delta });
        }
        Ok(DistanceBounds { delta, big_delta })
    }

    /// `log_{1+eps}(2 big_delta / delta)` rounded up: the most times one
    /// centroid can be requeued. Infinite for `eps == 0`.
    pub fn requeue_cap(&self, epsilon: f64) -> f64 {
        if epsilon <= 0.0 {
            return f64::INFINITY;
        }
        ((2.0 * self.big_delta / self.delta).ln() / epsilon.ln_1p()).ceil()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsOptions {
    pub exact_threshold: usize,
    pub delta: Option<f64>,
    pub big_delta: Option<f64>,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        BoundsOptions {
            exact_threshold: DEFAULT_BOUND_EXACT_THRESHOLD,
            delta: None,
            big_delta: None,
        }
    }
}

/// Exact bounds by all-pairs scan, for datasets of at least two points.
pub fn compute_bounds(data: &Dataset) -> Result<DistanceBounds, GeometryError> {
    compute_bounds_with(data, &BoundsOptions::default())
}

/// Bounds with caller overrides. Above the exact threshold `big_delta`
/// falls back to the bounding-box diagonal and `delta` must be supplied.
pub fn compute_bounds_with(
    data: &Dataset,
    opts: &BoundsOptions,
) -> Result<DistanceBounds, GeometryError> {
    let n = data.len();
    if n < 2 {
        return Err(GeometryError::TooFewPoints { needed: 2, got: n });
    }
    let (delta, big_delta) = match (opts.delta, opts.big_delta) {
        (Some(d), Some(b)) => (d, b),
        _ if n <= opts.exact_threshold => {
            let (min, max, pair) = exact_extremes(data);
            if min == 0.0 && opts.delta.is_none() {
                return Err(GeometryError::DuplicatePoints {
                    first: pair.0,
                    second: pair.1,
                });
            }
            (opts.delta.unwrap_or(min), opts.big_delta.unwrap_or(max))
        }
        (Some(d), None) => (d, data.bounding_box_diagonal()),
        (None, _) => {
            return Err(GeometryError::DeltaRequired {
                n,
                threshold: opts.exact_threshold,
            })
        }
    };
    DistanceBounds::new(delta, big_delta)
}

fn exact_extremes(data: &Dataset) -> (f64, f64, (usize, usize)) {
    let pts = data.points();
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    let mut pair = (0, 1);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = dist(&pts[i], &pts[j]);
            if d < min {
                min = d;
                pair = (i, j);
            }
            max = max.max(d);
        }
    }
    (min, max, pair)
}
