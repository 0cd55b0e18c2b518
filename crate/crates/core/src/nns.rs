//! The dynamic `(alpha, beta)`-approximate nearest-neighbor interface shared by
//! every backend, and the exact flat-scan backend.
//!
//! A query names the centroid to exclude by id rather than by coordinates, so
//! self-exclusion stays correct when two live centroids momentarily share a
//! location.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist, Centroid, CentroidId, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnsError {
    #[error("centroid {0} is already present")]
    DuplicateId(CentroidId),
    #[error("centroid {0} is not present")]
    MissingId(CentroidId),
    #[error("no candidate: store is empty apart from the excluded id")]
    Empty,
    #[error("dimension mismatch: store holds {expected}-d points, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("capacity of {capacity} insertions exceeded")]
    CapacityExceeded { capacity: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Guarantee of a backend: answers lie within `alpha * d* + beta` of the
/// query, where `d*` is the true nearest distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnsApproxSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl NnsApproxSpec {
    pub const EXACT: NnsApproxSpec = NnsApproxSpec {
        alpha: 1.0,
        beta: 0.0,
    };

    pub fn new(alpha: f64, beta: f64) -> Result<Self, NnsError> {
        if !(alpha >= 1.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(NnsError::InvalidParameter(format!(
                "need alpha >= 1 and beta >= 0, got ({alpha}, {beta})"
            )));
        }
        Ok(NnsApproxSpec { alpha, beta })
    }

    /// Whether an answer at `returned` distance honours the contract when the
    /// true nearest distance is `optimal`.
    pub fn admits(&self, returned: f64, optimal: f64) -> bool {
        returned <= self.alpha * optimal + self.beta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub neighbor: Centroid,
    /// Distance from the query point to `neighbor.coords`.
    pub distance: f64,
}

/// A dynamic nearest-neighbor store over centroids.
///
/// Queries take `&self` and may run concurrently; updates need exclusive
/// access.
pub trait DynamicNns {
    fn insert(&mut self, centroid: Centroid) -> Result<(), NnsError>;

    /// Removes the centroid with this id and hands it back.
    fn delete(&mut self, id: CentroidId) -> Result<Centroid, NnsError>;

    /// Approximate nearest live centroid to `point`, never `excluded`.
    fn query(&self, point: &[f64], excluded: Option<CentroidId>) -> Result<QueryResult, NnsError>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn contains(&self, id: CentroidId) -> bool;

    fn approx_spec(&self) -> NnsApproxSpec;
}

/// Exact nearest neighbor by full scan over a flat coordinate array.
/// Ties go to the smallest id.
#[derive(Clone, Debug, Default)]
pub struct ExactNns {
    dim: Option<usize>,
    coords: Vec<f64>,
    items: Vec<(CentroidId, u64)>,
    slot: HashMap<CentroidId, usize>,
}

impl ExactNns {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_centroids(centroids: impl IntoIterator<Item = Centroid>) -> Result<Self, NnsError> {
        let mut nns = ExactNns::new();
        for c in centroids {
            nns.insert(c)?;
        }
        Ok(nns)
    }

    fn row(&self, i: usize) -> &[f64] {
        let d = self.dim.unwrap_or(0);
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn ids(&self) -> impl Iterator<Item = CentroidId> + '_ {
        self.items.iter().map(|(id, _)| *id)
    }
}

impl DynamicNns for ExactNns {
    fn insert(&mut self, centroid: Centroid) -> Result<(), NnsError> {
        let d = *self.dim.get_or_insert(centroid.dim());
        if centroid.dim() != d {
            return Err(NnsError::DimensionMismatch {
                expected: d,
                got: centroid.dim(),
            });
        }
        if self.slot.contains_key(&centroid.id) {
            return Err(NnsError::DuplicateId(centroid.id));
        }
        self.slot.insert(centroid.id, self.items.len());
        self.items.push((centroid.id, centroid.weight));
        self.coords.extend_from_slice(&centroid.coords);
        Ok(())
    }

    fn delete(&mut self, id: CentroidId) -> Result<Centroid, NnsError> {
        let i = self.slot.remove(&id).ok_or(NnsError::MissingId(id))?;
        let d = self.dim.unwrap_or(0);
        let last = self.items.len() - 1;
        let coords = self.row(i).to_vec();
        let (_, weight) = self.items.swap_remove(i);
        if i != last {
            let (moved, tail) = self.coords.split_at_mut(last * d);
            moved[i * d..(i + 1) * d].copy_from_slice(&tail[..d]);
            self.slot.insert(self.items[i].0, i);
        }
        self.coords.truncate(last * d);
        Ok(Centroid::new(id, weight, Point::from_vec_unchecked(coords)))
    }

    fn query(&self, point: &[f64], excluded: Option<CentroidId>) -> Result<QueryResult, NnsError> {
        if let Some(d) = self.dim {
            if point.len() != d {
                return Err(NnsError::DimensionMismatch {
                    expected: d,
                    got: point.len(),
                });
            }
        }
        let mut best: Option<(f64, CentroidId, usize)> = None;
        for (i, &(id, _)) in self.items.iter().enumerate() {
            if Some(id) == excluded {
                continue;
            }
            let d = dist(point, self.row(i));
            let better = match best {
                None => true,
                Some((bd, bid, _)) => d < bd || (d == bd && id < bid),
            };
            if better {
                best = Some((d, id, i));
            }
        }
        let (distance, id, i) = best.ok_or(NnsError::Empty)?;
        let neighbor = Centroid::new(
            id,
            self.items[i].1,
            Point::from_vec_unchecked(self.row(i).to_vec()),
        );
        Ok(QueryResult { neighbor, distance })
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn contains(&self, id: CentroidId) -> bool {
        self.slot.contains_key(&id)
    }

    fn approx_spec(&self) -> NnsApproxSpec {
        NnsApproxSpec::EXACT
    }
}
