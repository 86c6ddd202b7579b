use std::collections::HashSet;

use crate::geometry::{CenterSet, PointAccess};

/// Integer lattice cell of `p` for a grid of side `side` anchored at `origin`.
pub(crate) fn lattice_cell(p: &[f64], origin: Option<&[f64]>, side: f64) -> Vec<i128> {
    p.iter()
        .enumerate()
        .map(|(a, &x)| {
            let rel = match origin {
                Some(o) => x - o[a],
                None => x,
            };
            (rel / side).floor() as i128
        })
        .collect()
}

/// Calls `f` on each of the `3^d` lattice cells adjacent to (or equal to) `cell`.
pub(crate) fn for_each_neighbor(cell: &[i128], mut f: impl FnMut(&[i128]) -> bool) -> bool {
    let d = cell.len();
    let mut offset = vec![-1i128; d];
    let mut probe = cell.to_vec();
    loop {
        for a in 0..d {
            probe[a] = cell[a] + offset[a];
        }
        if f(&probe) {
            return true;
        }
        let mut a = 0;
        loop {
            if a == d {
                return false;
            }
            if offset[a] < 1 {
                offset[a] += 1;
                break;
            }
            offset[a] = -1;
            a += 1;
        }
    }
}

/// Filtering grid side for parameters `delta` and `eps` in dimension `dim`.
pub fn filter_spacing(delta: f64, eps: f64, dim: usize) -> f64 {
    delta * eps / (10.0 * dim as f64)
}

/// Well-spaced subset of `points`: indices of the kept points, in input order.
///
/// A point is dropped when its filtering cell or a neighbouring cell already
/// holds a kept point. Kept points are at least one grid side apart; every
/// dropped point is within two cell diagonals of a kept one.
pub fn filter_wellspaced(points: &CenterSet, delta: f64, eps: f64) -> Vec<usize> {
    let all: Vec<usize> = (0..points.len()).collect();
    filter_subset(points, &all, None, filter_spacing(delta, eps, points.dim()))
}

pub(crate) fn filter_subset(points: &CenterSet, subset: &[usize], origin: Option<&[f64]>, side: f64) -> Vec<usize> {
    let mut occupied: HashSet<Vec<i128>> = HashSet::new();
    let mut kept = Vec::new();
    for &i in subset {
        let cell = lattice_cell(points.point(i), origin, side);
        if for_each_neighbor(&cell, |c| occupied.contains(c)) {
            continue;
        }
        occupied.insert(cell);
        kept.push(i);
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbor_count() {
        let mut n = 0;
        for_each_neighbor(&[0, 0, 0], |_| {
            n += 1;
            false
        });
        assert_eq!(n, 27);
    }

    #[test]
    fn identical_points_collapse() {
        let p = CenterSet::from_rows(&[[1.0, 1.0]; 5]).unwrap();
        assert_eq!(filter_wellspaced(&p, 0.1, 0.5), vec![0]);
    }

    #[test]
    fn widely_spaced_points_survive() {
        let rows: Vec<[f64; 2]> = (0..25).map(|i| [(i % 5) as f64, (i / 5) as f64]).collect();
        let p = CenterSet::from_rows(&rows).unwrap();
        assert_eq!(filter_wellspaced(&p, 0.1, 0.5).len(), 25);
    }
}
