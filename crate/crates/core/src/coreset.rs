//! Coresets by snapping to exponential grids around a constant-factor center set.
//!
//! Around every center `x_i` the plane is cut into square rings: ring 0 is the
//! cube of side `R` centred at `x_i`, ring `j` is the cube of side `R 2^j`
//! minus the cube of side `R 2^(j-1)`. Ring `j` is tiled by cells of side
//! `eps R 2^j / (10 c d)`. Every input point is snapped to the cell of the
//! grid of its assigned center; one input point per non-empty cell survives,
//! carrying the total weight of its cell.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{invalid, ClusterError, Result};
use crate::geometry::{
    assign_to_centers, chebyshev, clustering_cost, CenterSet, CostKind, PointAccess, WeightedPointSet,
};

/// Approximation factor assumed for center sets coming from the bicriteria stage.
pub const DEFAULT_APPROX_FACTOR: f64 = 32.0;

/// Extra rings beyond `ceil(2 lg(c W))`, covering the factor-2 assignment slack.
pub const RING_SLACK: u32 = 2;

/// Assignment slack used when partitioning points among centers.
pub const ASSIGNMENT_SLACK: f64 = 2.0;

/// Ring structure around one center.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialGrid {
    pub center: Vec<f64>,
    /// Side of the innermost cube.
    pub radius: f64,
    /// Index of the outermost ring.
    pub outer_ring: u32,
    pub approx_factor: f64,
    pub eps: f64,
}

/// Identity of one grid cell: (center, ring, integer lattice coordinates).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridCellKey {
    pub center: usize,
    pub ring: u32,
    pub lattice: Vec<i64>,
}

impl ExponentialGrid {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// True when `radius == 0`: every point collapses onto one cell.
    pub fn is_degenerate(&self) -> bool {
        self.radius == 0.0
    }

    /// Cell side in ring `j`.
    pub fn cell_side(&self, ring: u32) -> f64 {
        self.eps * self.radius * 2f64.powi(ring as i32) / (10.0 * self.approx_factor * self.dim() as f64)
    }

    /// Half the side of the cube bounding ring `j`.
    pub fn ring_half_extent(&self, ring: u32) -> f64 {
        self.radius * 2f64.powi(ring as i32) / 2.0
    }

    /// Ring containing a point at Chebyshev distance `cheb` from the center.
    pub fn ring_of(&self, cheb: f64) -> Option<u32> {
        if cheb <= self.ring_half_extent(0) {
            return Some(0);
        }
        let mut j = (2.0 * cheb / self.radius).log2().ceil().max(0.0) as u32;
        // log2/ceil may be off by one near powers of two
        while j > 0 && cheb <= self.ring_half_extent(j - 1) {
            j -= 1;
        }
        while j <= self.outer_ring && cheb > self.ring_half_extent(j) {
            j += 1;
        }
        (j <= self.outer_ring).then_some(j)
    }
}

/// Builds the ring structure around `center`.
///
/// The outermost ring index is `ceil(2 lg(c * total_weight)) + RING_SLACK`.
pub fn build_exponential_grid(
    center: &[f64],
    radius: f64,
    eps: f64,
    approx_factor: f64,
    total_weight: u64,
) -> Result<ExponentialGrid> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(invalid(format!("grid radius must be finite and >= 0, got {radius}")));
    }
    if approx_factor < 1.0 {
        return Err(invalid(format!("approximation factor must be >= 1, got {approx_factor}")));
    }
    let scale = approx_factor * total_weight.max(1) as f64;
    let outer_ring = (2.0 * scale.log2()).ceil().max(0.0) as u32 + RING_SLACK;
    Ok(ExponentialGrid {
        center: center.to_vec(),
        radius,
        outer_ring,
        approx_factor,
        eps,
    })
}

/// Cell of `grid` containing `p`; `center_index` tags the key.
///
/// Errors if `p` lies outside the outermost ring, which means the caller broke
/// the distance bound the grid was sized for.
pub fn snap_cell(grid: &ExponentialGrid, center_index: usize, p: &[f64]) -> Result<GridCellKey> {
    if p.len() != grid.dim() {
        return Err(ClusterError::DimensionMismatch {
            expected: grid.dim(),
            got: p.len(),
        });
    }
    if grid.is_degenerate() {
        return Ok(GridCellKey {
            center: center_index,
            ring: 0,
            lattice: vec![0; grid.dim()],
        });
    }
    let cheb = chebyshev(p, &grid.center);
    let ring = grid.ring_of(cheb).ok_or_else(|| {
        ClusterError::Internal(format!(
            "point at Chebyshev distance {cheb} lies outside ring {} (radius {})",
            grid.outer_ring, grid.radius
        ))
    })?;
    let side = grid.cell_side(ring);
    let lattice = p
        .iter()
        .zip(&grid.center)
        .map(|(x, c)| ((x - c) / side).floor() as i64)
        .collect();
    Ok(GridCellKey {
        center: center_index,
        ring,
        lattice,
    })
}

/// A weighted subset of some input that prices every k-center set within `1 +- eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coreset {
    pub set: WeightedPointSet,
    pub k: usize,
    pub eps: f64,
    pub kind: CostKind,
    pub source_total_weight: u64,
}

impl Coreset {
    /// The input itself, viewed as a zero-error coreset.
    pub fn exact(points: &WeightedPointSet, k: usize, kind: CostKind) -> Coreset {
        Coreset {
            set: points.clone(),
            k,
            eps: 0.0,
            kind,
            source_total_weight: points.total_weight(),
        }
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

impl std::ops::Deref for Coreset {
    type Target = WeightedPointSet;
    fn deref(&self) -> &WeightedPointSet {
        &self.set
    }
}

/// Coreset together with the construction details tests and reports look at.
#[derive(Debug, Clone)]
pub struct CoresetBuild {
    pub coreset: Coreset,
    /// Coreset item representing each input point.
    pub representative: Vec<usize>,
    /// Grid scale `R` (zero on the degenerate path).
    pub radius: f64,
    /// Price of the supplied center set on the input.
    pub center_cost: f64,
    /// Distance of each input point to its assigned center.
    pub assigned_distance: Vec<f64>,
    pub outer_ring: u32,
}

/// Summary used in JSON reports.
#[derive(Debug, Clone, Serialize)]
pub struct CoresetSummary {
    pub kind: CostKind,
    pub k: usize,
    pub eps: f64,
    pub input_points: usize,
    pub input_weight: u64,
    pub centers: usize,
    pub size: usize,
    pub radius: f64,
    pub outer_ring: u32,
    pub center_cost: f64,
}

impl CoresetBuild {
    pub fn summary(&self, input: &WeightedPointSet, centers: usize) -> CoresetSummary {
        CoresetSummary {
            kind: self.coreset.kind,
            k: self.coreset.k,
            eps: self.coreset.eps,
            input_points: input.len(),
            input_weight: input.total_weight(),
            centers,
            size: self.coreset.len(),
            radius: self.radius,
            outer_ring: self.outer_ring,
            center_cost: self.center_cost,
        }
    }
}

/// Builds a `(k, eps)`-coreset of `points` from a `c`-approximate center set.
pub fn build_coreset(
    points: &WeightedPointSet,
    centers: &CenterSet,
    approx_factor: f64,
    k: usize,
    eps: f64,
    kind: CostKind,
) -> Result<Coreset> {
    build_coreset_detailed(points, centers, approx_factor, k, eps, kind).map(|b| b.coreset)
}

/// [`build_coreset`], also returning the per-point representative map.
pub fn build_coreset_detailed(
    points: &WeightedPointSet,
    centers: &CenterSet,
    approx_factor: f64,
    k: usize,
    eps: f64,
    kind: CostKind,
) -> Result<CoresetBuild> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    if approx_factor < 1.0 {
        return Err(invalid(format!("approximation factor must be >= 1, got {approx_factor}")));
    }
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    let total_weight = points.total_weight();
    if points.is_empty() {
        return Ok(CoresetBuild {
            coreset: Coreset {
                set: WeightedPointSet::new(centers.dim()),
                k,
                eps,
                kind,
                source_total_weight: 0,
            },
            representative: Vec::new(),
            radius: 0.0,
            center_cost: 0.0,
            assigned_distance: Vec::new(),
            outer_ring: 0,
        });
    }
    let center_cost = clustering_cost(points, centers, kind)?;
    let assignment = assign_to_centers(points, centers, ASSIGNMENT_SLACK)?;

    let cw = approx_factor * total_weight as f64;
    let radius = match kind {
        CostKind::Median => center_cost / cw,
        CostKind::Means => (center_cost / cw).sqrt(),
    };

    let mut cells: HashMap<GridCellKey, usize> = HashMap::new();
    let mut set = WeightedPointSet::new(points.dim());
    let mut representative = vec![0usize; points.len()];
    let mut outer_ring = 0;

    if center_cost == 0.0 {
        // every point sits on a center: keep distinct locations exactly
        let mut by_location: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut weights: Vec<u64> = Vec::new();
        for i in 0..points.len() {
            let key = crate::geometry::coord_key(points.point(i));
            let slot = *by_location.entry(key).or_insert_with(|| {
                set.push_unchecked(points.point(i), 1);
                weights.push(0);
                set.len() - 1
            });
            weights[slot] += points.weight(i);
            representative[i] = slot;
        }
        set = rebuild_with_weights(&set, &weights);
    } else {
        let mut grids = Vec::with_capacity(centers.len());
        for c in centers.iter() {
            let g = build_exponential_grid(c, radius, eps, approx_factor, total_weight)?;
            outer_ring = g.outer_ring;
            grids.push(g);
        }
        let mut weights: Vec<u64> = Vec::new();
        // center-major order keeps the output independent of hash iteration
        for (ci, members) in assignment.partition().into_iter().enumerate() {
            for i in members {
                let key = snap_cell(&grids[ci], ci, points.point(i))?;
                let slot = *cells.entry(key).or_insert_with(|| {
                    set.push_unchecked(points.point(i), 1);
                    weights.push(0);
                    set.len() - 1
                });
                weights[slot] += points.weight(i);
                representative[i] = slot;
            }
        }
        set = rebuild_with_weights(&set, &weights);
    }

    debug_assert_eq!(set.total_weight(), total_weight);
    Ok(CoresetBuild {
        coreset: Coreset {
            set,
            k,
            eps,
            kind,
            source_total_weight: total_weight,
        },
        representative,
        radius,
        center_cost,
        assigned_distance: assignment.distance,
        outer_ring,
    })
}

fn rebuild_with_weights(set: &WeightedPointSet, weights: &[u64]) -> WeightedPointSet {
    let mut out = WeightedPointSet::new(set.dim());
    for (i, &w) in weights.iter().enumerate() {
        out.push_unchecked(set.point(i), w);
    }
    out
}

/// Upper bound on `|p - rep(p)|` that the snapping guarantees.
///
/// A point in ring `j >= 1` is at Chebyshev distance above `R 2^(j-2)` from its
/// center, and a cell has diameter `eps R 2^j / (10 c sqrt(d))`, so the
/// displacement is at most `eps/(10c) * max(R, (4 slack / sqrt(d)) * dist(p, A))`.
pub fn displacement_bound(eps: f64, approx_factor: f64, dim: usize, radius: f64, dist_to_centers: f64) -> f64 {
    let far_factor = 4.0 * ASSIGNMENT_SLACK / (dim as f64).sqrt();
    eps / (10.0 * approx_factor) * radius.max(far_factor * dist_to_centers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distance;

    #[test]
    fn cell_side_formula() {
        let g = build_exponential_grid(&[0.0, 0.0], 1.0, 0.1, 32.0, 10).unwrap();
        approx::assert_relative_eq!(g.cell_side(3), 0.00125, max_relative = 1e-12);
        assert_eq!(g.cell_side(4), 2.0 * g.cell_side(3));
    }

    #[test]
    fn outer_ring_formula() {
        let g = build_exponential_grid(&[0.0], 1.0, 0.5, 32.0, 1024).unwrap();
        assert_eq!(g.outer_ring, 32);
    }

    #[test]
    fn grid_rejects_bad_eps() {
        assert!(build_exponential_grid(&[0.0], 1.0, 1.0, 32.0, 4).is_err());
        assert!(build_exponential_grid(&[0.0], 1.0, 0.0, 32.0, 4).is_err());
    }

    #[test]
    fn degenerate_grid_collapses() {
        let g = build_exponential_grid(&[1.0, 2.0], 0.0, 0.5, 32.0, 8).unwrap();
        assert!(g.is_degenerate());
        let a = snap_cell(&g, 0, &[5.0, 5.0]).unwrap();
        let b = snap_cell(&g, 0, &[-3.0, 1.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lattice, vec![0, 0]);
    }

    #[test]
    fn snap_ring_rule() {
        let g = build_exponential_grid(&[0.0], 1.0, 0.5, 32.0, 8).unwrap();
        let k = snap_cell(&g, 0, &[0.0]).unwrap();
        assert_eq!((k.ring, k.lattice.as_slice()), (0, &[0i64][..]));
        assert_eq!(snap_cell(&g, 0, &[0.9]).unwrap().ring, 1);
        assert_eq!(snap_cell(&g, 0, &[0.5]).unwrap().ring, 0);
        assert_eq!(snap_cell(&g, 0, &[-1.0]).unwrap().ring, 1);
        assert_eq!(snap_cell(&g, 0, &[1.0000001]).unwrap().ring, 2);
        let far = g.ring_half_extent(g.outer_ring) * 1.5;
        assert!(matches!(snap_cell(&g, 0, &[far]), Err(ClusterError::Internal(_))));
    }

    #[test]
    fn cost_zero_path_keeps_distinct_points() {
        let p = WeightedPointSet::from_weighted_rows(&[(vec![0.0, 0.0], 2), (vec![1.0, 1.0], 1), (vec![0.0, 0.0], 3)])
            .unwrap();
        let a = p.to_centers().dedup();
        let s = build_coreset(&p, &a, 32.0, 2, 0.2, CostKind::Median).unwrap();
        assert_eq!(s.set.len(), 2);
        assert_eq!(s.set.weights(), &[5, 1]);
        let probe = CenterSet::from_rows(&[[0.3, -2.0]]).unwrap();
        // aggregated weights change only the rounding of the sum
        for kind in [CostKind::Median, CostKind::Means] {
            approx::assert_relative_eq!(
                clustering_cost(&p, &probe, kind).unwrap(),
                clustering_cost(&s.set, &probe, kind).unwrap(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn single_point_keeps_weight() {
        let p = WeightedPointSet::from_weighted_rows(&[(vec![4.0, -1.0], 7)]).unwrap();
        let a = CenterSet::from_rows(&[[0.0, 0.0], [9.0, 9.0]]).unwrap();
        for kind in [CostKind::Median, CostKind::Means] {
            let s = build_coreset(&p, &a, 32.0, 1, 0.3, kind).unwrap();
            assert_eq!(s.set, p);
        }
    }

    #[test]
    fn displacement_and_weights_on_small_cloud() {
        let mut p = WeightedPointSet::new(2);
        for i in 0..60 {
            let t = i as f64 * 0.37;
            p.push(&[t.sin() * 3.0 + (i % 3) as f64 * 10.0, t.cos() * 2.0], 1 + (i % 4) as u64)
                .unwrap();
        }
        let a = CenterSet::from_rows(&[[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]]).unwrap();
        let eps = 0.5;
        let b = build_coreset_detailed(&p, &a, 1.0, 3, eps, CostKind::Median).unwrap();
        assert_eq!(b.coreset.set.total_weight(), p.total_weight());
        for i in 0..p.len() {
            let rep = b.coreset.set.point(b.representative[i]);
            let bound = displacement_bound(eps, 1.0, 2, b.radius, b.assigned_distance[i]);
            assert!(distance(p.point(i), rep) <= bound * (1.0 + 1e-12));
        }
    }
}
