//! Brute-force oracles, the coreset certifier and instance generators.

use itertools::Itertools;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coreset::Coreset;
use crate::centroid::binomial;
use crate::error::{invalid, ClusterError, Result};
use crate::geometry::{clustering_cost, gonzalez_kcenter, CenterSet, CostKind, PointAccess, WeightedPointSet};
use crate::rng::{derive_seed, seeded};

/// Largest number of k-subsets the discrete oracle will enumerate.
pub const ORACLE_BUDGET: u64 = 1_000_000;

/// Optimal k-subset of the distinct input locations, with its price.
///
/// Ties go to the lexicographically first subset of first-appearance indices.
pub fn brute_force_discrete(points: &WeightedPointSet, k: usize, kind: CostKind) -> Result<(CenterSet, f64)> {
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    if points.is_empty() {
        return Err(ClusterError::EmptyInput("point set"));
    }
    let distinct = points.distinct();
    let m = distinct.len();
    if k >= m {
        return Ok((distinct.to_centers(), 0.0));
    }
    if binomial(m, k) > ORACLE_BUDGET {
        return Err(ClusterError::BudgetExceeded {
            candidates: m,
            k,
            budget: ORACLE_BUDGET,
        });
    }
    let all = distinct.to_centers();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for combo in (0..m).combinations(k) {
        let c = all.select(&combo);
        let cost = clustering_cost(points, &c, kind)?;
        if best.as_ref().is_none_or(|b| cost < b.0) {
            best = Some((cost, combo));
        }
    }
    let (cost, combo) = best.expect("at least one subset");
    Ok((all.select(&combo), cost))
}

/// Weighted center of mass.
pub fn weighted_centroid(points: &WeightedPointSet) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(ClusterError::EmptyInput("point set"));
    }
    let w = points.total_weight() as f64;
    let mut acc = vec![0.0; points.dim()];
    for (p, pw) in points.iter() {
        for (a, x) in acc.iter_mut().zip(p) {
            *a += pw as f64 * x;
        }
    }
    Ok(acc.into_iter().map(|a| a / w).collect())
}

/// Center-set families the certifier draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeFamily {
    UniformBox,
    JitteredInput,
    Gonzalez,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub family: ProbeFamily,
    pub trials: usize,
    pub failures: usize,
    pub max_deviation: f64,
}

/// Outcome of a certification run.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub kind: CostKind,
    pub k: usize,
    pub eps: f64,
    pub trials: usize,
    pub passed: usize,
    pub max_deviation: f64,
    pub families: Vec<FamilyReport>,
    pub pass: bool,
}

/// Relative price deviation of `coreset` against `points` on `centers`.
pub fn relative_deviation(
    points: &WeightedPointSet,
    coreset: &WeightedPointSet,
    centers: &CenterSet,
    kind: CostKind,
) -> Result<f64> {
    let full = clustering_cost(points, centers, kind)?;
    let approx = clustering_cost(coreset, centers, kind)?;
    Ok(if full == 0.0 {
        if approx == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (approx - full).abs() / full
    })
}

/// Draws one probe center set of size `k` from `family`.
pub fn probe_centers(points: &WeightedPointSet, k: usize, family: ProbeFamily, seed: u64) -> Result<CenterSet> {
    let (lo, hi) = points.bounding_box().ok_or(ClusterError::EmptyInput("point set"))?;
    let mut rng = seeded(seed);
    let dim = points.dim();
    let mut out = CenterSet::new(dim);
    match family {
        ProbeFamily::UniformBox => {
            for _ in 0..k {
                let c: Vec<f64> = (0..dim)
                    .map(|a| if hi[a] > lo[a] { rng.random_range(lo[a]..=hi[a]) } else { lo[a] })
                    .collect();
                out.push(&c)?;
            }
        }
        ProbeFamily::JitteredInput => {
            let diag = lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt();
            let scale = if diag > 0.0 { diag } else { 1.0 };
            // jitter magnitude itself varies over four orders of magnitude
            let sigma = scale * 10f64.powf(rng.random_range(-4.0..-1.0));
            let noise = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
            for _ in 0..k {
                let p = points.point(rng.random_range(0..points.len()));
                let c: Vec<f64> = p.iter().map(|x| x + noise.sample(&mut rng)).collect();
                out.push(&c)?;
            }
        }
        ProbeFamily::Gonzalez => {
            let start = rng.random_range(0..points.len());
            out = gonzalez_kcenter(points, k, start)?.centers;
        }
    }
    Ok(out)
}

/// Samples `trials` center sets of size `k` and checks the coreset price
/// stays within `1 +- eps` of the input price on each.
pub fn certify_coreset(
    points: &WeightedPointSet,
    coreset: &Coreset,
    k: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<CertifyReport> {
    if trials < 1 {
        return Err(invalid("trials must be >= 1"));
    }
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    let families = [ProbeFamily::UniformBox, ProbeFamily::JitteredInput, ProbeFamily::Gonzalez];
    let mut per: Vec<FamilyReport> = families
        .iter()
        .map(|&family| FamilyReport {
            family,
            trials: 0,
            failures: 0,
            max_deviation: 0.0,
        })
        .collect();
    let mut passed = 0;
    let mut max_dev: f64 = 0.0;
    for t in 0..trials {
        let fi = t % families.len();
        let c = probe_centers(points, k, families[fi], derive_seed(seed, t as u64))?;
        let dev = relative_deviation(points, &coreset.set, &c, coreset.kind)?;
        let fr = &mut per[fi];
        fr.trials += 1;
        fr.max_deviation = fr.max_deviation.max(dev);
        max_dev = max_dev.max(dev);
        if dev <= eps {
            passed += 1;
        } else {
            fr.failures += 1;
        }
    }
    Ok(CertifyReport {
        kind: coreset.kind,
        k,
        eps,
        trials,
        passed,
        max_deviation: max_dev,
        families: per,
        pass: passed == trials,
    })
}

/// Shape of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// Uniform in `[0, side]^d`.
    Uniform { side: f64 },
    /// Gaussian blobs with centers `separation` apart along the first axis.
    Blobs { blobs: usize, separation: f64, sigma: f64 },
    /// `clusters` locations, each repeated.
    Coincident { clusters: usize, separation: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub shape: Shape,
}

/// Seeded synthetic instance; unit weights.
pub fn generate_instance(spec: &InstanceSpec) -> Result<WeightedPointSet> {
    if spec.n < 1 {
        return Err(invalid("n must be >= 1"));
    }
    if spec.dim < 1 || spec.dim > crate::geometry::MAX_DIM {
        return Err(invalid(format!("dimension must be in 1..={}", crate::geometry::MAX_DIM)));
    }
    let mut rng = seeded(spec.seed);
    let mut out = WeightedPointSet::new(spec.dim);
    match spec.shape {
        Shape::Uniform { side } => {
            if !(side > 0.0 && side.is_finite()) {
                return Err(invalid("side must be positive"));
            }
            for _ in 0..spec.n {
                let p: Vec<f64> = (0..spec.dim).map(|_| rng.random_range(0.0..side)).collect();
                out.push(&p, 1)?;
            }
        }
        Shape::Blobs { blobs, separation, sigma } => {
            if blobs < 1 || !(sigma > 0.0) || !(separation >= 0.0) {
                return Err(invalid("blobs need count >= 1, sigma > 0 and separation >= 0"));
            }
            let noise = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
            for i in 0..spec.n {
                let b = i % blobs;
                let p: Vec<f64> = (0..spec.dim)
                    .map(|a| if a == 0 { b as f64 * separation } else { 0.0 } + noise.sample(&mut rng))
                    .collect();
                out.push(&p, 1)?;
            }
        }
        Shape::Coincident { clusters, separation } => {
            if clusters < 1 || !(separation > 0.0) {
                return Err(invalid("coincident instances need clusters >= 1 and separation > 0"));
            }
            let sites: Vec<Vec<f64>> = (0..clusters)
                .map(|c| (0..spec.dim).map(|a| if a == 0 { c as f64 * separation } else { 0.0 }).collect())
                .collect();
            for _ in 0..spec.n {
                out.push(&sites[rng.random_range(0..clusters)], 1)?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_oracle_line() {
        let p = WeightedPointSet::from_rows(&[[0.0], [1.0], [10.0]]).unwrap();
        let (c, cost) = brute_force_discrete(&p, 2, CostKind::Median).unwrap();
        assert_eq!(cost, 1.0);
        assert!(c.contains(&[10.0]));
        let (_, cost) = brute_force_discrete(&p, 3, CostKind::Means).unwrap();
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn discrete_oracle_budget() {
        let rows: Vec<[f64; 1]> = (0..200).map(|i| [i as f64]).collect();
        let p = WeightedPointSet::from_rows(&rows).unwrap();
        assert!(matches!(
            brute_force_discrete(&p, 4, CostKind::Median),
            Err(ClusterError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn centroid_examples() {
        let p = WeightedPointSet::from_weighted_rows(&[(vec![0.0, 0.0], 1), (vec![2.0, 0.0], 3)]).unwrap();
        assert_eq!(weighted_centroid(&p).unwrap(), vec![1.5, 0.0]);
        let one = WeightedPointSet::from_rows(&[[4.0, -2.0]]).unwrap();
        assert_eq!(weighted_centroid(&one).unwrap(), vec![4.0, -2.0]);
    }

    #[test]
    fn trivial_coreset_certifies() {
        let p = generate_instance(&InstanceSpec {
            n: 200,
            dim: 2,
            seed: 3,
            shape: Shape::Uniform { side: 1.0 },
        })
        .unwrap();
        let s = Coreset::exact(&p, 3, CostKind::Means);
        let r = certify_coreset(&p, &s, 3, 0.0, 30, 1).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn generator_is_seeded() {
        let spec = InstanceSpec {
            n: 90,
            dim: 2,
            seed: 11,
            shape: Shape::Blobs {
                blobs: 3,
                separation: 100.0,
                sigma: 1.0,
            },
        };
        let a = generate_instance(&spec).unwrap();
        assert_eq!(a, generate_instance(&spec).unwrap());
        let modes: std::collections::BTreeSet<i64> = a.iter().map(|(p, _)| (p[0] / 100.0).round() as i64).collect();
        assert_eq!(modes.len(), 3);
    }
}
