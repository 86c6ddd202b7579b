//! Constant-factor clustering with `O(k log^3 n)` centers.
//!
//! One round seeds `k` farthest-point centers, adds a weight-proportional
//! random sample, buckets the points by their distance to that set and keeps
//! the distance classes below the last heavy one. Those points are served;
//! the rest go to the next round.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::{
    brute_force_nearest, gonzalez_kcenter, CenterSet, PointAccess, WeightedPointSet, BRUTE_FORCE_WORK,
};
use crate::rng::{clamped_log2, derive_seed, seeded};

/// Default sampling constant.
pub const DEFAULT_GAMMA: f64 = 4.0;

/// Retries for a round that serves less than half the remaining weight.
pub const ROUND_RETRIES: usize = 3;

/// Number of sampled points for a set of total weight `w`.
pub fn sample_size(k: usize, gamma: f64, total_weight: u64) -> usize {
    let lg = clamped_log2(total_weight as f64);
    (gamma * k as f64 * lg * lg).ceil() as usize
}

/// Weight-proportional sample with replacement, de-duplicated by location.
///
/// Returns every point of `points` when the sample would be at least as large
/// as the input.
pub fn sample_centers(points: &WeightedPointSet, k: usize, gamma: f64, seed: u64) -> Result<CenterSet> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    if points.is_empty() {
        return Ok(CenterSet::new(points.dim()));
    }
    let rho = sample_size(k, gamma, points.total_weight());
    if rho >= points.len() {
        return Ok(points.to_centers());
    }
    let picks = sample_indices(points, rho, seed)?;
    Ok(points.select(&picks).to_centers().dedup())
}

/// `count` input indices drawn with replacement, proportionally to weight.
pub fn sample_indices(points: &WeightedPointSet, count: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(points.weights()).map_err(|e| invalid(e.to_string()))?;
    let mut rng = seeded(seed);
    Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
}

/// Distance class of a point relative to `(X, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistanceClass {
    Finite(usize),
    Infinite,
}

/// Points bucketed by distance to a center set.
#[derive(Debug, Clone)]
pub struct DistanceClassPartition {
    pub class_of: Vec<DistanceClass>,
    /// Distance of each point to the center set.
    pub distance: Vec<f64>,
    /// Total weight of classes `0..=max_class`.
    pub class_weight: Vec<u64>,
    pub infinite_weight: u64,
    /// Largest finite class index, `2 ceil(lg n) + 3`.
    pub max_class: usize,
}

impl DistanceClassPartition {
    /// Input indices in the given class.
    pub fn members(&self, class: DistanceClass) -> Vec<usize> {
        (0..self.class_of.len()).filter(|&i| self.class_of[i] == class).collect()
    }
}

/// Classifies `r` given `L` and the size parameter `n`.
pub fn distance_class(r: f64, l: f64, n: f64, max_class: usize) -> DistanceClass {
    if l == 0.0 {
        return DistanceClass::Finite(0);
    }
    let unit = l / n;
    if r >= 2.0 * l * n {
        return DistanceClass::Infinite;
    }
    if r < unit / 4.0 {
        return DistanceClass::Finite(0);
    }
    if r < unit {
        return DistanceClass::Finite(1);
    }
    // smallest i with r < 2^i * unit
    let mut i = ((r / unit).log2().floor() as i64 + 1).max(1) as usize;
    while i > 1 && r < unit * 2f64.powi(i as i32 - 1) {
        i -= 1;
    }
    while r >= unit * 2f64.powi(i as i32) {
        i += 1;
    }
    DistanceClass::Finite(i.min(max_class))
}

/// Largest finite class index for size parameter `n`.
pub fn max_class_index(n: f64) -> usize {
    2 * clamped_log2(n).ceil() as usize + 3
}

/// Exact distances to `centers` unless the work is too large, then batched fuzzy NN.
pub(crate) fn distances_to(points: &WeightedPointSet, centers: &CenterSet, seed: u64) -> Result<Vec<f64>> {
    if points.len().saturating_mul(centers.len()) <= BRUTE_FORCE_WORK {
        Ok(brute_force_nearest(points, centers).into_iter().map(|(d, _)| d).collect())
    } else {
        Ok(crate::fuzzy_nn::batch_nn(points, centers, 1.0, seed)?
            .into_iter()
            .map(|m| m.distance)
            .collect())
    }
}

/// Buckets `points` by exact distance to `centers`; `n` is the total weight.
pub fn partition_by_distance(points: &WeightedPointSet, centers: &CenterSet, l: f64) -> Result<DistanceClassPartition> {
    if centers.is_empty() {
        return Err(crate::error::ClusterError::EmptyInput("center set"));
    }
    if !(l >= 0.0) {
        return Err(invalid(format!("L must be >= 0, got {l}")));
    }
    let r: Vec<f64> = brute_force_nearest(points, centers).into_iter().map(|(d, _)| d).collect();
    Ok(partition_from_distances(points, r, l))
}

fn partition_from_distances(points: &WeightedPointSet, distance: Vec<f64>, l: f64) -> DistanceClassPartition {
    let n = points.total_weight().max(1) as f64;
    let max_class = max_class_index(n);
    let mut class_weight = vec![0u64; max_class + 1];
    let mut infinite_weight = 0;
    let class_of: Vec<DistanceClass> = distance
        .iter()
        .zip(points.weights())
        .map(|(&r, &w)| {
            let c = distance_class(r, l, n, max_class);
            match c {
                DistanceClass::Finite(i) => class_weight[i] += w,
                DistanceClass::Infinite => infinite_weight += w,
            }
            c
        })
        .collect();
    DistanceClassPartition {
        class_of,
        distance,
        class_weight,
        infinite_weight,
        max_class,
    }
}

/// Heavy-class threshold parameter `beta = W / (20 lg W)`.
pub fn beta(total_weight: u64) -> f64 {
    let w = total_weight as f64;
    w / (20.0 * clamped_log2(w))
}

/// Output of one good-subset round.
#[derive(Debug, Clone)]
pub struct GoodSubsetResult {
    /// Served points (P').
    pub served: WeightedPointSet,
    /// Input indices of the served points, ascending.
    pub served_indices: Vec<usize>,
    /// The round's center set X.
    pub centers: CenterSet,
    /// Farthest-point seeds V (prefix of `centers`).
    pub seeds: CenterSet,
    /// Distance of the furthest point from V.
    pub l: f64,
    pub alpha: usize,
    pub partition: DistanceClassPartition,
}

/// One round: finds centers serving at least half the weight with high probability.
pub fn good_subset(points: &WeightedPointSet, k: usize, gamma: f64, seed: u64) -> Result<GoodSubsetResult> {
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    if points.is_empty() {
        return Err(crate::error::ClusterError::EmptyInput("point set"));
    }
    let kc = gonzalez_kcenter(points, k, 0)?;
    let mut seeds = kc.centers.clone();
    if kc.radius > 0.0 {
        seeds.push_unchecked(kc.furthest(points));
    }
    let sample = sample_centers(points, k, gamma, derive_seed(seed, 1))?;
    let mut centers = seeds.clone();
    for c in sample.iter() {
        centers.push_unchecked(c);
    }
    let centers = centers.dedup();

    let r = distances_to(points, &centers, derive_seed(seed, 2))?;
    let partition = partition_from_distances(points, r, kc.radius);
    let two_beta = 2.0 * beta(points.total_weight());
    let alpha = (0..=partition.max_class)
        .rev()
        .find(|&i| partition.class_weight[i] as f64 > two_beta)
        .unwrap_or(0);
    let served_indices: Vec<usize> = (0..points.len())
        .filter(|&i| matches!(partition.class_of[i], DistanceClass::Finite(c) if c <= alpha))
        .collect();
    Ok(GoodSubsetResult {
        served: points.select(&served_indices),
        served_indices,
        centers,
        seeds,
        l: kc.radius,
        alpha,
        partition,
    })
}

/// Per-round record for reports.
#[derive(Debug, Clone, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub attempts: usize,
    pub remaining_points: usize,
    pub remaining_weight: u64,
    pub centers: usize,
    pub served_weight: u64,
    pub alpha: usize,
    pub l: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BicriteriaReport {
    pub rounds: Vec<RoundReport>,
    /// Points absorbed as centers at the end.
    pub absorbed: usize,
    pub total_centers: usize,
}

/// Remainder size below which every left-over point becomes a center.
pub fn remainder_cutoff(k: usize) -> usize {
    (2 * k).max(64)
}

/// Union of per-round center sets, 32-approximate for both prices w.h.p.
pub fn bicriteria_centers(points: &WeightedPointSet, k: usize, gamma: f64, seed: u64) -> Result<CenterSet> {
    bicriteria_centers_report(points, k, gamma, seed).map(|(c, _)| c)
}

/// [`bicriteria_centers`] together with the round-by-round report.
pub fn bicriteria_centers_report(
    points: &WeightedPointSet,
    k: usize,
    gamma: f64,
    seed: u64,
) -> Result<(CenterSet, BicriteriaReport)> {
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    let mut out = CenterSet::new(points.dim());
    let mut rounds = Vec::new();
    let max_rounds = clamped_log2(points.total_weight() as f64).ceil() as usize + 1;
    let mut remaining = points.clone();
    while !remaining.is_empty() && remaining.len() > remainder_cutoff(k) && rounds.len() < max_rounds {
        let round = rounds.len();
        let half = remaining.total_weight().div_ceil(2);
        let mut attempt = 0;
        let (result, ok) = loop {
            let r = good_subset(&remaining, k, gamma, derive_seed(seed, (round * 16 + attempt) as u64))?;
            let served: u64 = r.served.total_weight();
            if served >= half || attempt == ROUND_RETRIES {
                break (r, served >= half);
            }
            attempt += 1;
        };
        rounds.push(RoundReport {
            round,
            attempts: attempt + 1,
            remaining_points: remaining.len(),
            remaining_weight: remaining.total_weight(),
            centers: result.centers.len(),
            served_weight: result.served.total_weight(),
            alpha: result.alpha,
            l: result.l,
        });
        for c in result.centers.iter() {
            out.push_unchecked(c);
        }
        if !ok {
            break;
        }
        let mut keep = vec![true; remaining.len()];
        for &i in &result.served_indices {
            keep[i] = false;
        }
        let rest: Vec<usize> = (0..remaining.len()).filter(|&i| keep[i]).collect();
        remaining = remaining.select(&rest);
    }
    let absorbed = remaining.len();
    for (p, _) in remaining.iter() {
        out.push_unchecked(p);
    }
    let out = out.dedup();
    let report = BicriteriaReport {
        rounds,
        absorbed,
        total_centers: out.len(),
    };
    Ok((out, report))
}
