//! Points, weighted point sets, center sets and the two clustering prices.
//!
//! Point sets are stored flat (`dim` consecutive coordinates per point) so the
//! hot loops below walk contiguous memory. Ties are always broken towards the
//! lowest index.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ClusterError, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

/// Point counts above which per-point work is spread over the rayon pool.
const PAR_THRESHOLD: usize = 4096;

/// Read-only access shared by every flat point container.
pub trait PointAccess {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn point(&self, i: usize) -> &[f64];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A single point in R^d with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_coords(&coords)?;
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_coords(coords: &[f64]) -> Result<()> {
    if coords.is_empty() || coords.len() > MAX_DIM {
        return Err(invalid(format!(
            "dimension must be in 1..={MAX_DIM}, got {}",
            coords.len()
        )));
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(invalid("coordinates must be finite"));
    }
    Ok(())
}

/// Which clustering price is being measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    /// Sum of weighted distances.
    Median,
    /// Sum of weighted squared distances.
    Means,
}

impl CostKind {
    /// Contribution of a single unit-weight point at distance `dist`.
    #[inline]
    pub fn apply(self, dist: f64) -> f64 {
        match self {
            CostKind::Median => dist,
            CostKind::Means => dist * dist,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CostKind::Median => "median",
            CostKind::Means => "means",
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostKind {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(CostKind::Median),
            "means" => Ok(CostKind::Means),
            other => Err(invalid(format!("unknown cost kind {other:?}"))),
        }
    }
}

/// Weighted points: the currency every module consumes and produces.
///
/// Weights are positive integers; duplicates are allowed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedPointSet {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<u64>,
}

impl WeightedPointSet {
    pub fn new(dim: usize) -> Self {
        WeightedPointSet {
            dim,
            coords: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds a unit-weight set from rows of coordinates.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or(ClusterError::EmptyInput("point set"))?;
        let mut set = WeightedPointSet::new(dim);
        for r in rows {
            set.push(r.as_ref(), 1)?;
        }
        Ok(set)
    }

    /// Builds a weighted set from `(coords, weight)` rows.
    pub fn from_weighted_rows<R: AsRef<[f64]>>(rows: &[(R, u64)]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|(r, _)| r.as_ref().len())
            .ok_or(ClusterError::EmptyInput("point set"))?;
        let mut set = WeightedPointSet::new(dim);
        for (r, w) in rows {
            set.push(r.as_ref(), *w)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, coords: &[f64], weight: u64) -> Result<()> {
        if self.dim == 0 && self.weights.is_empty() {
            self.dim = coords.len();
        }
        if coords.len() != self.dim {
            return Err(ClusterError::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        check_coords(coords)?;
        if weight == 0 {
            return Err(invalid("weights must be positive"));
        }
        self.coords.extend_from_slice(coords);
        self.weights.push(weight);
        Ok(())
    }

    /// Appends without validation; callers guarantee the invariants.
    pub(crate) fn push_unchecked(&mut self, coords: &[f64], weight: u64) {
        debug_assert_eq!(coords.len(), self.dim);
        debug_assert!(weight > 0);
        self.coords.extend_from_slice(coords);
        self.weights.push(weight);
    }

    pub fn weight(&self, i: usize) -> u64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], u64)> + '_ {
        self.coords
            .chunks_exact(self.dim.max(1))
            .zip(self.weights.iter().copied())
    }

    /// Items restricted to `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> WeightedPointSet {
        let mut out = WeightedPointSet::new(self.dim);
        for &i in indices {
            out.push_unchecked(self.point(i), self.weights[i]);
        }
        out
    }

    /// Appends all items of `other` (dimensions must agree).
    pub fn extend_from(&mut self, other: &WeightedPointSet) -> Result<()> {
        if other.is_empty() {
            return Ok(());
        }
        if self.is_empty() && self.dim == 0 {
            self.dim = other.dim;
        }
        if self.dim != other.dim {
            return Err(ClusterError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        self.coords.extend_from_slice(&other.coords);
        self.weights.extend_from_slice(&other.weights);
        Ok(())
    }

    /// Distinct locations with aggregated weights, in order of first appearance.
    pub fn distinct(&self) -> WeightedPointSet {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut out = WeightedPointSet::new(self.dim);
        for (p, w) in self.iter() {
            match index.get(&coord_key(p)) {
                Some(&j) => out.weights[j] += w,
                None => {
                    index.insert(coord_key(p), out.len());
                    out.push_unchecked(p, w);
                }
            }
        }
        out
    }

    pub fn distinct_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        (0..self.len()).filter(|&i| seen.insert(coord_key(self.point(i)))).count()
    }

    /// Axis-aligned bounding box as `(lo, hi)` per axis.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        bounding_box(self)
    }

    /// Locations only, as a center set (weights dropped, duplicates kept).
    pub fn to_centers(&self) -> CenterSet {
        CenterSet {
            dim: self.dim,
            coords: self.coords.clone(),
        }
    }
}

impl PointAccess for WeightedPointSet {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.weights.len()
    }
    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// An unweighted sequence of points: centers, candidate sets, NN sites.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CenterSet {
    dim: usize,
    coords: Vec<f64>,
}

impl CenterSet {
    pub fn new(dim: usize) -> Self {
        CenterSet {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or(ClusterError::EmptyInput("center set"))?;
        let mut set = CenterSet::new(dim);
        for r in rows {
            set.push(r.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, coords: &[f64]) -> Result<()> {
        if self.dim == 0 && self.coords.is_empty() {
            self.dim = coords.len();
        }
        if coords.len() != self.dim {
            return Err(ClusterError::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        check_coords(coords)?;
        self.coords.extend_from_slice(coords);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, coords: &[f64]) {
        debug_assert_eq!(coords.len(), self.dim);
        self.coords.extend_from_slice(coords);
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.iter().any(|c| c == p)
    }

    /// Removes repeated locations, keeping first occurrences.
    pub fn dedup(&self) -> CenterSet {
        let mut seen = std::collections::HashSet::new();
        let mut out = CenterSet::new(self.dim);
        for c in self.iter() {
            if seen.insert(coord_key(c)) {
                out.push_unchecked(c);
            }
        }
        out
    }

    pub fn select(&self, indices: &[usize]) -> CenterSet {
        let mut out = CenterSet::new(self.dim);
        for &i in indices {
            out.push_unchecked(self.point(i));
        }
        out
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

impl PointAccess for CenterSet {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }
    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Hashable identity of a location (`-0.0` and `0.0` coincide).
pub fn coord_key(p: &[f64]) -> Vec<u64> {
    p.iter()
        .map(|&c| if c == 0.0 { 0u64 } else { c.to_bits() })
        .collect()
}

pub fn bounding_box<P: PointAccess + ?Sized>(points: &P) -> Option<(Vec<f64>, Vec<f64>)> {
    if points.is_empty() {
        return None;
    }
    let mut lo = points.point(0).to_vec();
    let mut hi = lo.clone();
    for i in 1..points.len() {
        for (a, &c) in points.point(i).iter().enumerate() {
            lo[a] = lo[a].min(c);
            hi[a] = hi[a].max(c);
        }
    }
    Some((lo, hi))
}

#[inline]
pub fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    sq_distance(a, b).sqrt()
}

/// Chebyshev (L-infinity) distance.
#[inline]
pub fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Nearest site to `q` by brute force; lowest index on ties. `sites` must be non-empty.
#[inline]
pub(crate) fn nearest<P: PointAccess + ?Sized>(q: &[f64], sites: &P) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut best_i = 0;
    for i in 0..sites.len() {
        let d = sq_distance(q, sites.point(i));
        if d < best {
            best = d;
            best_i = i;
        }
    }
    (best.sqrt(), best_i)
}

fn check_query(dim: usize, centers: &CenterSet) -> Result<()> {
    if centers.is_empty() {
        return Err(ClusterError::EmptyInput("center set"));
    }
    if centers.dim() != dim {
        return Err(ClusterError::DimensionMismatch {
            expected: centers.dim(),
            got: dim,
        });
    }
    Ok(())
}

/// Distance from `q` to the closest center, with the index of that center.
pub fn point_set_distance(q: &[f64], centers: &CenterSet) -> Result<(f64, usize)> {
    check_query(q.len(), centers)?;
    Ok(nearest(q, centers))
}

/// Exact nearest-center distances for every point of `points`.
pub(crate) fn brute_force_nearest<P: PointAccess + Sync + ?Sized>(
    points: &P,
    centers: &CenterSet,
) -> Vec<(f64, usize)> {
    if points.len() >= PAR_THRESHOLD {
        (0..points.len())
            .into_par_iter()
            .map(|i| nearest(points.point(i), centers))
            .collect()
    } else {
        (0..points.len())
            .map(|i| nearest(points.point(i), centers))
            .collect()
    }
}

/// Weighted k-median (`Median`) or k-means (`Means`) price of `centers` on `points`.
///
/// Terms are accumulated sequentially in input order.
pub fn clustering_cost(points: &WeightedPointSet, centers: &CenterSet, kind: CostKind) -> Result<f64> {
    if points.is_empty() {
        return Ok(0.0);
    }
    check_query(points.dim(), centers)?;
    Ok(cost_unchecked(points, centers, kind))
}

pub(crate) fn cost_unchecked(points: &WeightedPointSet, centers: &CenterSet, kind: CostKind) -> f64 {
    let nn = brute_force_nearest(points, centers);
    nn.iter()
        .zip(points.weights())
        .fold(0.0, |acc, (&(d, _), &w)| acc + w as f64 * kind.apply(d))
}

/// Output of the farthest-point k-center routine.
#[derive(Debug, Clone)]
pub struct KCenter {
    pub centers: CenterSet,
    /// Input indices of the chosen centers, in selection order.
    pub center_indices: Vec<usize>,
    /// Input index of a point realizing `radius`.
    pub furthest_index: usize,
    /// Largest distance from any input point to the centers.
    pub radius: f64,
}

impl KCenter {
    pub fn furthest<'a>(&self, points: &'a WeightedPointSet) -> &'a [f64] {
        points.point(self.furthest_index)
    }
}

/// Gonzalez farthest-point k-center seeding, starting at `seed_index`.
///
/// Weights are ignored. Stops early once every distinct location is a center,
/// in which case `radius` is zero and fewer than `k` centers may be returned.
pub fn gonzalez_kcenter(points: &WeightedPointSet, k: usize, seed_index: usize) -> Result<KCenter> {
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    if points.is_empty() {
        return Err(ClusterError::EmptyInput("point set"));
    }
    if seed_index >= points.len() {
        return Err(invalid(format!(
            "seed index {seed_index} out of range for {} points",
            points.len()
        )));
    }
    let n = points.len();
    let seed = points.point(seed_index);
    let mut dist: Vec<f64> = (0..n).map(|i| distance(points.point(i), seed)).collect();
    let mut indices = vec![seed_index];
    loop {
        let (far, far_d) = argmax(&dist);
        if indices.len() == k || far_d == 0.0 {
            return Ok(KCenter {
                centers: points.select(&indices).to_centers(),
                center_indices: indices,
                furthest_index: far,
                radius: far_d,
            });
        }
        indices.push(far);
        let c = points.point(far);
        for (i, d) in dist.iter_mut().enumerate() {
            let nd = distance(points.point(i), c);
            if nd < *d {
                *d = nd;
            }
        }
    }
}

fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Assignment of every input point to a center of `A`.
#[derive(Debug, Clone)]
pub struct Assignment {
    /// Center index per input point.
    pub center_of: Vec<usize>,
    /// Distance from each input point to its assigned center.
    pub distance: Vec<f64>,
    pub num_centers: usize,
}

impl Assignment {
    /// Input indices grouped by center, each group in input order.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.num_centers];
        for (i, &c) in self.center_of.iter().enumerate() {
            parts[c].push(i);
        }
        parts
    }
}

/// Work above which assignments switch from brute force to batched fuzzy NN.
pub const BRUTE_FORCE_WORK: usize = 100_000_000;

/// Assigns each point to a center within `slack` times its true distance to `A`.
///
/// With `slack == 1` the assignment is the exact nearest center (lowest index
/// on ties). Larger slack permits the batched approximate route on big inputs.
pub fn assign_to_centers(points: &WeightedPointSet, centers: &CenterSet, slack: f64) -> Result<Assignment> {
    if !(1.0..=2.0).contains(&slack) {
        return Err(invalid(format!("slack must lie in [1,2], got {slack}")));
    }
    if points.is_empty() {
        return Ok(Assignment {
            center_of: Vec::new(),
            distance: Vec::new(),
            num_centers: centers.len(),
        });
    }
    check_query(points.dim(), centers)?;
    let work = points.len().saturating_mul(centers.len());
    let nn = if slack > 1.0 && work > BRUTE_FORCE_WORK {
        crate::fuzzy_nn::batch_nn(points, centers, (slack - 1.0).min(0.5), 0x5eed)?
            .into_iter()
            .map(|m| (m.distance, m.site))
            .collect()
    } else {
        brute_force_nearest(points, centers)
    };
    let (distance, center_of) = nn.into_iter().unzip();
    Ok(Assignment {
        center_of,
        distance,
        num_centers: centers.len(),
    })
}
