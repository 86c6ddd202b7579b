//! Centroid sets and the exhaustive k-subset endgame.
//!
//! A centroid set is a finite candidate pool guaranteed to contain a
//! near-optimal k-subset. Candidates are lattice points of exponential grids
//! built around every coreset point, so each coreset point is itself a
//! candidate. The best k-subset is found by enumeration, priced on the coreset.

use rayon::prelude::*;
use serde::Serialize;

use crate::bicriteria::{bicriteria_centers, DEFAULT_GAMMA};
use crate::coreset::{build_coreset, build_exponential_grid, Coreset, DEFAULT_APPROX_FACTOR};
use crate::error::{invalid, ClusterError, Result};
use crate::geometry::{
    assign_to_centers, bounding_box, clustering_cost, coord_key, distance, CenterSet, CostKind,
    PointAccess, WeightedPointSet,
};
use crate::local_search::{default_max_sweeps, local_search, DEFAULT_SWAP_THRESHOLD};
use crate::rng::derive_seed;

/// Default cap on evaluated k-subsets.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// Candidate pools are coarsened until they yield at most this many k-subsets.
pub const CANDIDATE_SUBSET_TARGET: u64 = 200_000;

/// Distance tables are precomputed up to this many entries.
const TABLE_LIMIT: usize = 4_000_000;

/// Candidate pool for the enumeration endgame.
#[derive(Debug, Clone)]
pub struct CentroidSet {
    pub candidates: CenterSet,
    /// Every candidate is an input point.
    pub discrete: bool,
    pub k: usize,
    /// Precision requested.
    pub eps: f64,
    /// Precision of the grids actually built (after coarsening).
    pub eps_used: f64,
    pub kind: CostKind,
    pub coarsenings: u32,
    pub warnings: Vec<String>,
}

impl CentroidSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// `C(m, k)`, saturating.
pub fn binomial(m: usize, k: usize) -> u64 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Largest pool size whose k-subsets stay within `target`.
pub fn candidate_cap(k: usize, target: u64) -> usize {
    let mut m = k.max(1);
    while binomial(m + 1, k) <= target {
        m += 1;
        if m > 50_000_000 {
            break;
        }
    }
    m
}

/// Lattice parameters of one ring around one anchor.
struct Ring {
    side: f64,
    outer: i128,
    /// Inner excluded half-width, `None` for ring 0.
    inner: Option<i128>,
}

struct GridPlan<'a> {
    anchors: &'a WeightedPointSet,
    lo: Vec<f64>,
    hi: Vec<f64>,
    radius: f64,
    approx_factor: f64,
    total_weight: u64,
}

impl GridPlan<'_> {
    fn rings(&self, anchor: &[f64], eps: f64) -> Result<Vec<Ring>> {
        // ring count does not depend on eps; coarsened eps may exceed 1, so cell
        // sides are computed here rather than by the grid
        let grid = build_exponential_grid(anchor, self.radius, 0.5, self.approx_factor, self.total_weight)?;
        let unit = eps * self.radius / (10.0 * self.approx_factor * anchor.len() as f64);
        // Chebyshev distance to the farthest bounding-box corner
        let reach = self
            .lo
            .iter()
            .zip(&self.hi)
            .zip(anchor)
            .fold(0.0f64, |m, ((l, h), c)| m.max((c - l).abs()).max((h - c).abs()));
        let mut out = Vec::new();
        for j in 0..=grid.outer_ring {
            let side = unit * 2f64.powi(j as i32);
            let half = grid.ring_half_extent(j);
            let outer = (half / side).floor() as i128;
            let inner = (j > 0).then(|| (grid.ring_half_extent(j - 1) / side).floor() as i128);
            out.push(Ring { side, outer, inner });
            if half >= reach {
                break;
            }
        }
        Ok(out)
    }

    /// Per-axis lattice index range inside the bounding box.
    fn clip(&self, anchor: &[f64], side: f64, m: i128) -> Vec<(i128, i128)> {
        (0..anchor.len())
            .map(|a| {
                let lo = ((self.lo[a] - anchor[a]) / side).ceil() as i128;
                let hi = ((self.hi[a] - anchor[a]) / side).floor() as i128;
                (lo.max(-m), hi.min(m))
            })
            .collect()
    }

    fn box_count(ranges: &[(i128, i128)]) -> u128 {
        ranges
            .iter()
            .fold(1u128, |acc, &(l, h)| acc.saturating_mul(if h >= l { (h - l + 1) as u128 } else { 0 }))
    }

    fn ring_count(&self, anchor: &[f64], ring: &Ring) -> u128 {
        let outer = Self::box_count(&self.clip(anchor, ring.side, ring.outer));
        match ring.inner {
            None => outer,
            Some(m) => outer - Self::box_count(&self.clip(anchor, ring.side, m)),
        }
    }

    fn count(&self, eps: f64) -> Result<u128> {
        let mut total = 0u128;
        for (a, _) in self.anchors.iter() {
            for ring in self.rings(a, eps)? {
                total = total.saturating_add(self.ring_count(a, &ring));
            }
        }
        Ok(total)
    }

    fn generate(&self, eps: f64, out: &mut CenterSet) -> Result<()> {
        let mut z = vec![0i128; self.anchors.dim()];
        let mut p = vec![0.0; self.anchors.dim()];
        for (a, _) in self.anchors.iter() {
            for ring in self.rings(a, eps)? {
                if self.ring_count(a, &ring) == 0 {
                    continue;
                }
                let ranges = self.clip(a, ring.side, ring.outer);
                emit(0, &ranges, ring.inner, true, &mut z, &mut |z| {
                    for (i, zi) in z.iter().enumerate() {
                        p[i] = a[i] + *zi as f64 * ring.side;
                    }
                    out.push_unchecked(&p);
                });
            }
        }
        Ok(())
    }
}

/// Visits lattice points of `ranges` outside the inner box `[-inner, inner]^d`.
fn emit(
    axis: usize,
    ranges: &[(i128, i128)],
    inner: Option<i128>,
    inside: bool,
    z: &mut Vec<i128>,
    f: &mut impl FnMut(&[i128]),
) {
    let (lo, hi) = ranges[axis];
    let last = axis + 1 == ranges.len();
    let mut v = lo;
    while v <= hi {
        let in_inner = inner.is_some_and(|m| v.abs() <= m);
        if last && inside && in_inner {
            // jump over the excluded interval
            v = inner.unwrap_or(0) + 1;
            continue;
        }
        z[axis] = v;
        if last {
            f(z);
        } else {
            emit(axis + 1, ranges, inner, inside && in_inner, z, f);
        }
        v += 1;
    }
}

/// Candidate lattice around every anchor with grid scale `radius`.
///
/// `eps` is doubled (with a warning) until the pool implies at most
/// [`CANDIDATE_SUBSET_TARGET`] k-subsets or cannot shrink further.
#[allow(clippy::too_many_arguments)]
pub fn centroid_set_around(
    anchors: &WeightedPointSet,
    bbox_of: &WeightedPointSet,
    radius: f64,
    eps: f64,
    approx_factor: f64,
    total_weight: u64,
    k: usize,
    kind: CostKind,
) -> Result<CentroidSet> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    let anchors_d = anchors.distinct();
    let mut set = CentroidSet {
        candidates: CenterSet::new(anchors.dim()),
        discrete: false,
        k,
        eps,
        eps_used: eps,
        kind,
        coarsenings: 0,
        warnings: Vec::new(),
    };
    if anchors_d.is_empty() {
        return Ok(set);
    }
    if radius == 0.0 {
        set.candidates = anchors_d.to_centers();
        return Ok(set);
    }
    let (lo, hi) = bounding_box(bbox_of).ok_or(ClusterError::EmptyInput("point set"))?;
    let plan = GridPlan {
        anchors: &anchors_d,
        lo,
        hi,
        radius,
        approx_factor,
        total_weight,
    };
    let cap = candidate_cap(k, CANDIDATE_SUBSET_TARGET) as u128;
    let floor = anchors_d.len() as u128;
    let mut e = eps;
    let mut count = plan.count(e)?;
    while count > cap && count > floor && set.coarsenings < 64 {
        e *= 2.0;
        set.coarsenings += 1;
        count = plan.count(e)?;
    }
    if set.coarsenings > 0 {
        set.warnings.push(format!(
            "candidate grid coarsened {} times: eps {eps} -> {e} ({count} candidates)",
            set.coarsenings
        ));
    }
    set.eps_used = e;
    let mut raw = CenterSet::new(anchors.dim());
    plan.generate(e, &mut raw)?;
    set.candidates = raw.dedup();
    Ok(set)
}

fn lattice_for(
    anchors: &WeightedPointSet,
    bbox_of: &WeightedPointSet,
    radius: f64,
    eps: f64,
    total_weight: u64,
    k: usize,
    kind: CostKind,
) -> Result<CentroidSet> {
    centroid_set_around(anchors, bbox_of, radius, eps, DEFAULT_APPROX_FACTOR, total_weight, k, kind)
}

/// Constant-factor k centers for `set`, from local search over its points.
fn warm_start(set: &WeightedPointSet, k: usize, kind: CostKind) -> Result<(CenterSet, usize)> {
    let distinct = set.distinct();
    if distinct.len() <= k {
        return Ok((distinct.to_centers(), 0));
    }
    let ls = local_search(
        &distinct,
        k,
        kind,
        DEFAULT_SWAP_THRESHOLD,
        default_max_sweeps(k, set.total_weight()),
    )?;
    Ok((ls.centers, ls.accepted_swaps))
}

fn grid_radius(points: &WeightedPointSet, b: &CenterSet, kind: CostKind) -> Result<f64> {
    let w = points.total_weight().max(1) as f64;
    let c = clustering_cost(points, b, kind)?;
    Ok(match kind {
        CostKind::Median => c / w,
        CostKind::Means => (c / w).sqrt(),
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    Ok(())
}

/// Continuous k-median centroid set of `points`.
pub fn median_centroid_set(points: &WeightedPointSet, k: usize, eps: f64, seed: u64) -> Result<CentroidSet> {
    check_eps(eps)?;
    if points.is_empty() {
        return Err(ClusterError::EmptyInput("point set"));
    }
    let a = bicriteria_centers(points, k, DEFAULT_GAMMA, seed)?;
    let s = build_coreset(points, &a, DEFAULT_APPROX_FACTOR, k, eps / 12.0, CostKind::Median)?;
    let (b, _) = warm_start(&s.set, k, CostKind::Median)?;
    let radius = grid_radius(points, &b, CostKind::Median)?;
    lattice_for(&s.set, points, radius, eps, points.total_weight(), k, CostKind::Median)
}

/// Discrete k-median centroid set: a subset of `points`.
pub fn discrete_median_centroid_set(points: &WeightedPointSet, k: usize, eps: f64, seed: u64) -> Result<CentroidSet> {
    check_eps(eps)?;
    let d = median_centroid_set(points, k, eps / 4.0, seed)?;
    let mut out = snap_to_inputs(points, &d.candidates)?;
    out.discrete = true;
    out.k = k;
    out.eps = eps;
    out.eps_used = d.eps_used * 4.0;
    out.kind = CostKind::Median;
    out.coarsenings = d.coarsenings;
    out.warnings = d.warnings;
    Ok(out)
}

/// For each candidate with at least one point snapped to it, the first such input point.
fn snap_to_inputs(points: &WeightedPointSet, candidates: &CenterSet) -> Result<CentroidSet> {
    let asg = assign_to_centers(points, candidates, 1.0)?;
    let mut rep = vec![usize::MAX; candidates.len()];
    for (i, &c) in asg.center_of.iter().enumerate() {
        if rep[c] == usize::MAX {
            rep[c] = i;
        }
    }
    let mut firsts: Vec<usize> = rep.into_iter().filter(|&i| i != usize::MAX).collect();
    firsts.sort_unstable();
    Ok(CentroidSet {
        candidates: points.select(&firsts).to_centers().dedup(),
        discrete: true,
        k: 0,
        eps: 0.0,
        eps_used: 0.0,
        kind: CostKind::Median,
        coarsenings: 0,
        warnings: Vec::new(),
    })
}

/// k-means centroid set built around the points of a coreset.
pub fn means_centroid_set(coreset: &Coreset, k: usize, eps: f64) -> Result<CentroidSet> {
    check_eps(eps)?;
    if coreset.is_empty() {
        return Err(ClusterError::EmptyInput("coreset"));
    }
    let (b, _) = warm_start(&coreset.set, k, CostKind::Means)?;
    let radius = grid_radius(&coreset.set, &b, CostKind::Means)?;
    lattice_for(
        &coreset.set,
        &coreset.set,
        radius,
        eps,
        coreset.set.total_weight(),
        k,
        CostKind::Means,
    )
}

/// Best k-subset found by enumeration.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub centers: CenterSet,
    /// Candidate indices, ascending.
    pub indices: Vec<usize>,
    pub cost: f64,
    pub subsets: u64,
}

/// Lexicographically first cheapest k-subset of `candidates`, priced on `set`.
pub fn solve_by_enumeration(
    candidates: &CenterSet,
    set: &WeightedPointSet,
    k: usize,
    kind: CostKind,
) -> Result<Enumeration> {
    solve_by_enumeration_with_budget(candidates, set, k, kind, ENUMERATION_BUDGET)
}

pub fn solve_by_enumeration_with_budget(
    candidates: &CenterSet,
    set: &WeightedPointSet,
    k: usize,
    kind: CostKind,
    budget: u64,
) -> Result<Enumeration> {
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    if candidates.is_empty() {
        return Err(ClusterError::EmptyInput("candidate set"));
    }
    if !set.is_empty() && set.dim() != candidates.dim() {
        return Err(ClusterError::DimensionMismatch {
            expected: candidates.dim(),
            got: set.dim(),
        });
    }
    let m = candidates.len();
    if m <= k {
        let indices: Vec<usize> = (0..m).collect();
        let cost = clustering_cost(set, candidates, kind)?;
        return Ok(Enumeration {
            centers: candidates.clone(),
            indices,
            cost,
            subsets: 1,
        });
    }
    let subsets = binomial(m, k);
    if subsets > budget {
        return Err(ClusterError::BudgetExceeded {
            candidates: m,
            k,
            budget,
        });
    }
    let n = set.len();
    let table: Option<Vec<f64>> = (m.saturating_mul(n) <= TABLE_LIMIT).then(|| {
        (0..m)
            .into_par_iter()
            .flat_map_iter(|u| (0..n).map(move |s| kind.apply(distance(candidates.point(u), set.point(s)))))
            .collect()
    });
    let price = |u: usize, s: usize| -> f64 {
        match &table {
            Some(t) => t[u * n + s],
            None => kind.apply(distance(candidates.point(u), set.point(s))),
        }
    };
    let weights: Vec<f64> = set.weights().iter().map(|&w| w as f64).collect();

    let best = (0..=m - k)
        .into_par_iter()
        .map(|first| {
            let mut partial = vec![vec![0.0; n]; k];
            for s in 0..n {
                partial[0][s] = price(first, s);
            }
            let mut combo = vec![first; k];
            let mut best: Option<(f64, Vec<usize>)> = None;
            search(1, first + 1, m, k, n, &mut combo, &mut partial, &price, &weights, &mut best);
            best.expect("every first index has at least one completion")
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
        .expect("non-empty range");

    let (cost, indices) = best;
    Ok(Enumeration {
        centers: candidates.select(&indices),
        indices,
        cost,
        subsets,
    })
}

fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

#[allow(clippy::too_many_arguments)]
fn search(
    depth: usize,
    start: usize,
    m: usize,
    k: usize,
    n: usize,
    combo: &mut Vec<usize>,
    partial: &mut Vec<Vec<f64>>,
    price: &(impl Fn(usize, usize) -> f64 + Sync),
    weights: &[f64],
    best: &mut Option<(f64, Vec<usize>)>,
) {
    if depth == k {
        let cost = partial[k - 1].iter().zip(weights).fold(0.0, |acc, (v, w)| acc + w * v);
        if best.as_ref().is_none_or(|b| cost < b.0) {
            *best = Some((cost, combo.clone()));
        }
        return;
    }
    for u in start..=m - (k - depth) {
        combo[depth] = u;
        let (done, rest) = partial.split_at_mut(depth);
        let prev = &done[depth - 1];
        let cur = &mut rest[0];
        for s in 0..n {
            cur[s] = prev[s].min(price(u, s));
        }
        search(depth + 1, u + 1, m, k, n, combo, partial, price, weights, best);
    }
}

/// Precision split between the coreset and the centroid set.
pub const EPS_SHARE: f64 = 5.0;

/// Worst-case ratio implied by a coreset of precision `ec` and a centroid set of precision `es`.
pub fn ledger_factor(ec: f64, es: f64) -> f64 {
    (1.0 + ec) * (1.0 + es) / (1.0 - ec)
}

/// Which endgame a pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Median,
    Means,
    DiscreteMedian,
}

impl Variant {
    pub fn kind(self) -> CostKind {
        match self {
            Variant::Median | Variant::DiscreteMedian => CostKind::Median,
            Variant::Means => CostKind::Means,
        }
    }
}

/// Everything a pipeline run reports.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub variant: Variant,
    pub k: usize,
    pub eps: f64,
    pub eps_coreset: f64,
    pub eps_centroid: f64,
    pub ledger_factor: f64,
    pub bicriteria_centers: usize,
    pub coreset_size: usize,
    pub warm_start_cost: f64,
    pub warm_start_swaps: usize,
    pub candidates: usize,
    pub eps_centroid_used: f64,
    pub coarsenings: u32,
    pub subsets: u64,
    pub coreset_cost: f64,
    pub cost: f64,
    pub candidate_method: &'static str,
    pub endgame: &'static str,
    pub warnings: Vec<String>,
}

/// Centers plus report.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub centers: CenterSet,
    pub report: PipelineReport,
}

/// Runs a pipeline on an already-built coreset of `points` (or of a stream).
///
/// `points` supplies the grid scale and bounding box; pass the coreset itself
/// when the original input is not available.
pub fn solve_on_coreset(
    points: &WeightedPointSet,
    coreset: &WeightedPointSet,
    k: usize,
    eps_centroid: f64,
    variant: Variant,
) -> Result<(CenterSet, PipelineReport)> {
    let kind = variant.kind();
    let (b, swaps) = warm_start(coreset, k, kind)?;
    let warm_cost = clustering_cost(coreset, &b, kind)?;
    let radius = grid_radius(points, &b, kind)?;
    let total = points.total_weight();
    let u = match variant {
        Variant::Median | Variant::Means => lattice_for(coreset, points, radius, eps_centroid, total, k, kind)?,
        Variant::DiscreteMedian => {
            let cont = lattice_for(coreset, points, radius, eps_centroid / 4.0, total, k, kind)?;
            let mut d = snap_to_inputs(points, &cont.candidates)?;
            d.eps_used = cont.eps_used * 4.0;
            d.coarsenings = cont.coarsenings;
            d.warnings = cont.warnings;
            d
        }
    };
    let best = solve_by_enumeration(&u.candidates, coreset, k, kind)?;
    let cost = clustering_cost(points, &best.centers, kind)?;
    let report = PipelineReport {
        variant,
        k,
        eps: 0.0,
        eps_coreset: 0.0,
        eps_centroid,
        ledger_factor: 0.0,
        bicriteria_centers: 0,
        coreset_size: coreset.len(),
        warm_start_cost: warm_cost,
        warm_start_swaps: swaps,
        candidates: u.candidates.len(),
        eps_centroid_used: u.eps_used,
        coarsenings: u.coarsenings,
        subsets: best.subsets,
        coreset_cost: best.cost,
        cost,
        candidate_method: "exponential-grid lattice around coreset points",
        endgame: "exhaustive k-subset enumeration",
        warnings: u.warnings,
    };
    Ok((best.centers, report))
}

/// Full pipeline: bicriteria, coreset, warm start, centroid set, enumeration.
pub fn approx_clustering(
    points: &WeightedPointSet,
    k: usize,
    eps: f64,
    variant: Variant,
    seed: u64,
) -> Result<PipelineResult> {
    check_eps(eps)?;
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    if points.is_empty() {
        return Err(ClusterError::EmptyInput("point set"));
    }
    let kind = variant.kind();
    let ec = eps / EPS_SHARE;
    let es = eps / EPS_SHARE;
    let factor = ledger_factor(ec, es);
    if factor > 1.0 + eps {
        return Err(ClusterError::Internal(format!(
            "precision ledger {factor} exceeds 1 + eps = {}",
            1.0 + eps
        )));
    }
    let a = bicriteria_centers(points, k, DEFAULT_GAMMA, derive_seed(seed, 11))?;
    let s = build_coreset(points, &a, DEFAULT_APPROX_FACTOR, k, ec, kind)?;
    let (centers, mut report) = solve_on_coreset(points, &s.set, k, es, variant)?;
    report.eps = eps;
    report.eps_coreset = ec;
    report.ledger_factor = factor;
    report.bicriteria_centers = a.len();
    Ok(PipelineResult { centers, report })
}

pub fn kmedian_approx(points: &WeightedPointSet, k: usize, eps: f64, seed: u64) -> Result<PipelineResult> {
    approx_clustering(points, k, eps, Variant::Median, seed)
}

pub fn kmeans_approx(points: &WeightedPointSet, k: usize, eps: f64, seed: u64) -> Result<PipelineResult> {
    approx_clustering(points, k, eps, Variant::Means, seed)
}

pub fn discrete_kmedian_approx(points: &WeightedPointSet, k: usize, eps: f64, seed: u64) -> Result<PipelineResult> {
    approx_clustering(points, k, eps, Variant::DiscreteMedian, seed)
}

/// Coordinate-keyed membership test used by tests and the CLI.
pub fn is_subset_of(candidates: &CenterSet, points: &WeightedPointSet) -> bool {
    let keys: std::collections::HashSet<Vec<u64>> = points.iter().map(|(p, _)| coord_key(p)).collect();
    candidates.iter().all(|c| keys.contains(&coord_key(c)))
}
