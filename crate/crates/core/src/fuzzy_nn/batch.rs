use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{build_index, FuzzyConfig, FuzzyNNIndex, DEFAULT_R};
use crate::error::{ClusterError, Result};
use crate::geometry::{brute_force_nearest, coord_key, CenterSet, PointAccess};

/// Site matched to one input point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NnMatch {
    pub site: usize,
    pub distance: f64,
}

fn check<P: PointAccess + ?Sized>(points: &P, sites: &CenterSet, eps: f64) -> Result<()> {
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
    if !(eps > 0.0) {
        return Err(crate::error::invalid(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Approximate nearest site for every point:
/// `|p x_p| <= (1 + eps) d(p, X) + tau / n^3` with `tau = max_p d(p, X)`.
pub fn batch_nn<P: PointAccess + Sync + ?Sized>(
    points: &P,
    sites: &CenterSet,
    eps: f64,
    seed: u64,
) -> Result<Vec<NnMatch>> {
    check(points, sites, eps)?;
    let l = super::estimate_tau(points, sites, seed)?;
    if l == 0.0 {
        let mut at: HashMap<Vec<u64>, usize> = HashMap::new();
        for (i, s) in sites.iter().enumerate() {
            at.entry(coord_key(s)).or_insert(i);
        }
        return (0..points.len())
            .map(|i| {
                at.get(&coord_key(points.point(i)))
                    .map(|&site| NnMatch { site, distance: 0.0 })
                    .ok_or_else(|| ClusterError::Internal("zero tau estimate with an uncovered point".into()))
            })
            .collect();
    }
    let d = sites.dim() as f64;
    let n = points.len() as f64;
    let big_delta = 2.0 * d.sqrt() * l;
    let delta = (l / (4.0 * d * d * n.powi(5))).min(eps.min(1.0) * big_delta / 2.0);
    batch_nn_with(points, sites, eps, delta, big_delta)
}

/// Capped variant: points within `cap` of `X` satisfy
/// `|p x_p| <= (1 + eps) d(p, X) + cap / n^4`; others get an arbitrary site.
pub fn batch_nn_capped<P: PointAccess + Sync + ?Sized>(
    points: &P,
    sites: &CenterSet,
    eps: f64,
    cap: f64,
) -> Result<Vec<NnMatch>> {
    check(points, sites, eps)?;
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(crate::error::invalid(format!("cap must be positive, got {cap}")));
    }
    let n = points.len() as f64;
    let delta = (cap / (2.0 * n.powi(4))).min(eps.min(1.0) * cap / 2.0);
    batch_nn_with(points, sites, eps, delta, cap)
}

/// Answers every point with a fuzzy index built for `(delta, big_delta, eps)`.
///
/// When the trees would exceed the node budget, `r` is doubled; past `r = 64`
/// the exact linear scan is used instead.
pub fn batch_nn_with<P: PointAccess + Sync + ?Sized>(
    points: &P,
    sites: &CenterSet,
    eps: f64,
    delta: f64,
    big_delta: f64,
) -> Result<Vec<NnMatch>> {
    let mut r = DEFAULT_R;
    let index: Option<FuzzyNNIndex> = loop {
        let cfg = FuzzyConfig::new(delta, big_delta, eps, r)?;
        match build_index(sites, cfg) {
            Ok(ix) => break Some(ix),
            Err(ClusterError::InvalidParameter(_)) if r < 64 => r *= 2,
            Err(ClusterError::InvalidParameter(_)) => break None,
            Err(e) => return Err(e),
        }
    };
    let Some(index) = index else {
        return Ok(brute_force_nearest(points, sites)
            .into_iter()
            .map(|(distance, site)| NnMatch { site, distance })
            .collect());
    };
    Ok((0..points.len())
        .into_par_iter()
        .map(|i| {
            let a = index.query(points.point(i));
            NnMatch {
                site: a.site,
                distance: a.distance,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WeightedPointSet;

    #[test]
    fn self_match() {
        let p = WeightedPointSet::from_rows(&[[0.0, 1.0], [3.0, 3.0], [0.0, 1.0]]).unwrap();
        let m = batch_nn(&p, &p.to_centers(), 0.5, 1).unwrap();
        assert_eq!(m.iter().map(|m| m.site).collect::<Vec<_>>(), vec![0, 1, 0]);
        assert!(m.iter().all(|m| m.distance == 0.0));
    }

    #[test]
    fn small_line_is_accurate() {
        let p = WeightedPointSet::from_rows(&(0..50).map(|i| [i as f64 * 0.37]).collect::<Vec<_>>()).unwrap();
        let x = CenterSet::from_rows(&[[0.0], [5.0], [11.0], [17.5]]).unwrap();
        let eps = 0.3;
        let m = batch_nn(&p, &x, eps, 3).unwrap();
        let exact = brute_force_nearest(&p, &x);
        let tau = exact.iter().map(|e| e.0).fold(0.0, f64::max);
        for (got, want) in m.iter().zip(&exact) {
            assert!(got.distance <= (1.0 + eps) * want.0 + tau / 50f64.powi(3));
        }
    }
}
