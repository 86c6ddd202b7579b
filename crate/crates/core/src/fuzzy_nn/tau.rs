use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::filter::{for_each_neighbor, lattice_cell};
use crate::error::{ClusterError, Result};
use crate::geometry::{coord_key, nearest, CenterSet, PointAccess};
use crate::rng::seeded;

/// Estimate `l` with `l / (2 sqrt d) <= max_p d(p, X) <= 2 sqrt d * l`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TauEstimate {
    pub l: f64,
    /// Times the marked grid was rebuilt.
    pub rebuilds: usize,
}

/// Marked cells of a grid of side `side` around every site.
enum Marks {
    /// `side == 0`: only exact site locations count.
    Exact(HashSet<Vec<u64>>),
    Grid { side: f64, cells: HashSet<Vec<i128>> },
}

impl Marks {
    fn build(sites: &CenterSet, side: f64) -> Marks {
        if side == 0.0 {
            return Marks::Exact(sites.iter().map(coord_key).collect());
        }
        let mut cells = HashSet::new();
        for s in sites.iter() {
            for_each_neighbor(&lattice_cell(s, None, side), |c| {
                cells.insert(c.to_vec());
                false
            });
        }
        Marks::Grid { side, cells }
    }

    fn covers(&self, p: &[f64]) -> bool {
        match self {
            Marks::Exact(set) => set.contains(&coord_key(p)),
            Marks::Grid { side, cells } => cells.contains(&lattice_cell(p, None, *side)),
        }
    }
}

/// Estimates the largest distance from a point of `points` to `sites`.
pub fn estimate_tau<P: PointAccess + ?Sized>(points: &P, sites: &CenterSet, seed: u64) -> Result<f64> {
    estimate_tau_detailed(points, sites, seed).map(|t| t.l)
}

/// [`estimate_tau`] also reporting the rebuild count.
pub fn estimate_tau_detailed<P: PointAccess + ?Sized>(points: &P, sites: &CenterSet, seed: u64) -> Result<TauEstimate> {
    if points.is_empty() {
        return Err(ClusterError::EmptyInput("point set"));
    }
    if sites.is_empty() {
        return Err(ClusterError::EmptyInput("site set"));
    }
    if points.dim() != sites.dim() {
        return Err(ClusterError::DimensionMismatch {
            expected: sites.dim(),
            got: points.dim(),
        });
    }
    let scale = 2.0 * (sites.dim() as f64).sqrt();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(&mut seeded(seed));

    let mut l = scale * nearest(points.point(order[0]), sites).0;
    let mut marks = Marks::build(sites, l);
    let mut rebuilds = 1;
    for &i in &order[1..] {
        let p = points.point(i);
        if marks.covers(p) {
            continue;
        }
        l = scale * nearest(p, sites).0;
        marks = Marks::build(sites, l);
        rebuilds += 1;
    }
    Ok(TauEstimate { l, rebuilds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WeightedPointSet;

    #[test]
    fn sites_equal_points() {
        let p = WeightedPointSet::from_rows(&[[0.0, 1.0], [3.0, 3.0]]).unwrap();
        assert_eq!(estimate_tau(&p, &p.to_centers(), 5).unwrap(), 0.0);
    }

    #[test]
    fn line_example() {
        let p = WeightedPointSet::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let x = CenterSet::from_rows(&[[0.0]]).unwrap();
        for seed in 0..20 {
            let l = estimate_tau(&p, &x, seed).unwrap();
            assert!(l / 2.0 <= 3.0 && 3.0 <= 2.0 * l, "l = {l}");
        }
    }
}
