//! Single-swap local search over the points of a (coreset) set.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, ClusterError, Result};
use crate::geometry::{gonzalez_kcenter, sq_distance, CenterSet, CostKind, PointAccess, WeightedPointSet};
use crate::rng::clamped_log2;

/// Default improvement threshold `t`: a swap must cut the price by `t/k`.
pub const DEFAULT_SWAP_THRESHOLD: f64 = 0.01;

#[inline]
fn price(kind: CostKind, a: &[f64], b: &[f64]) -> f64 {
    let sq = sq_distance(a, b);
    match kind {
        CostKind::Median => sq.sqrt(),
        CostKind::Means => sq,
    }
}

/// Outcome of a local-search run.
#[derive(Debug, Clone, Serialize)]
pub struct LocalSearchResult {
    #[serde(skip)]
    pub centers: CenterSet,
    pub cost: f64,
    pub initial_cost: f64,
    pub accepted_swaps: usize,
    pub sweeps: usize,
    /// Price after each accepted swap.
    pub trace: Vec<f64>,
}

/// Default sweep cap `4 k ceil(lg W)`.
pub fn default_max_sweeps(k: usize, total_weight: u64) -> usize {
    4 * k * clamped_log2(total_weight as f64).ceil() as usize
}

/// Local search started from farthest-point seeding of the distinct points.
pub fn local_search(
    set: &WeightedPointSet,
    k: usize,
    kind: CostKind,
    swap_threshold: f64,
    max_sweeps: usize,
) -> Result<LocalSearchResult> {
    let distinct = set.distinct();
    check(&distinct, k, swap_threshold)?;
    let init = gonzalez_kcenter(&distinct, k, 0)?.center_indices;
    run(&distinct, init, kind, swap_threshold, max_sweeps)
}

/// Local search from an explicit initial center set (each must be a point of `set`).
pub fn local_search_from(
    set: &WeightedPointSet,
    init: &CenterSet,
    kind: CostKind,
    swap_threshold: f64,
    max_sweeps: usize,
) -> Result<LocalSearchResult> {
    let distinct = set.distinct();
    let k = init.len();
    check(&distinct, k, swap_threshold)?;
    let mut idx = Vec::with_capacity(k);
    for c in init.iter() {
        let i = (0..distinct.len())
            .find(|&i| distinct.point(i) == c)
            .ok_or_else(|| invalid("initial centers must be points of the set"))?;
        if idx.contains(&i) {
            return Err(invalid("initial centers must be distinct"));
        }
        idx.push(i);
    }
    run(&distinct, idx, kind, swap_threshold, max_sweeps)
}

fn check(distinct: &WeightedPointSet, k: usize, swap_threshold: f64) -> Result<()> {
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    if distinct.is_empty() {
        return Err(ClusterError::EmptyInput("point set"));
    }
    if distinct.len() < k {
        return Err(invalid(format!(
            "need at least k={k} distinct points, found {}",
            distinct.len()
        )));
    }
    if !(swap_threshold > 0.0 && swap_threshold < 1.0) {
        return Err(invalid(format!("swap threshold must lie in (0,1), got {swap_threshold}")));
    }
    Ok(())
}

/// Nearest and second-nearest current center of every point.
struct Cache {
    near: Vec<(f64, usize)>,
    second: Vec<f64>,
}

impl Cache {
    fn build(points: &WeightedPointSet, current: &[usize], kind: CostKind) -> Cache {
        let (near, second) = (0..points.len())
            .map(|p| {
                let mut best = (f64::INFINITY, usize::MAX);
                let mut next = f64::INFINITY;
                for (slot, &c) in current.iter().enumerate() {
                    let v = price(kind, points.point(p), points.point(c));
                    if v < best.0 {
                        next = best.0;
                        best = (v, slot);
                    } else if v < next {
                        next = v;
                    }
                }
                (best, next)
            })
            .unzip();
        Cache { near, second }
    }

    fn cost(&self, points: &WeightedPointSet) -> f64 {
        self.near
            .iter()
            .zip(points.weights())
            .fold(0.0, |acc, (&(v, _), &w)| acc + w as f64 * v)
    }

    /// Price after replacing the center in `slot` by point `s`.
    fn swapped_cost(&self, points: &WeightedPointSet, slot: usize, s: usize, kind: CostKind) -> f64 {
        let q = points.point(s);
        let mut acc = 0.0;
        for p in 0..points.len() {
            let (v, owner) = self.near[p];
            let keep = if owner == slot { self.second[p] } else { v };
            acc += points.weight(p) as f64 * keep.min(price(kind, points.point(p), q));
        }
        acc
    }
}

fn run(
    points: &WeightedPointSet,
    mut current: Vec<usize>,
    kind: CostKind,
    swap_threshold: f64,
    max_sweeps: usize,
) -> Result<LocalSearchResult> {
    let k = current.len();
    let m = points.len();
    let factor = 1.0 - swap_threshold / k as f64;
    let mut cache = Cache::build(points, &current, kind);
    let mut cost = cache.cost(points);
    let initial_cost = cost;
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut in_current = vec![false; m];
    for &c in &current {
        in_current[c] = true;
    }
    while sweeps < max_sweeps && cost > 0.0 {
        sweeps += 1;
        let target = factor * cost;
        let flags = &in_current;
        let cache_ref = &cache;
        // first acceptable (slot, candidate) pair in slot-major order
        let hit = (0..k * m).into_par_iter().position_first(|pair| {
            let (slot, s) = (pair / m, pair % m);
            !flags[s] && cache_ref.swapped_cost(points, slot, s, kind) <= target
        });
        let Some(pair) = hit else { break };
        let (slot, s) = (pair / m, pair % m);
        in_current[current[slot]] = false;
        in_current[s] = true;
        current[slot] = s;
        cache = Cache::build(points, &current, kind);
        cost = cache.cost(points);
        trace.push(cost);
    }
    Ok(LocalSearchResult {
        centers: points.select(&current).to_centers(),
        cost,
        initial_cost,
        accepted_swaps: trace.len(),
        sweeps,
        trace,
    })
}
