//! Insertion-only coreset maintenance with a binary-counter bucket ladder.
//!
//! Points collect in a buffer of `M_base` items. A full buffer becomes a rank-1
//! bucket; two buckets of equal rank are merged, re-compressed and promoted.
//! Rank `r` summarises `2^(r-1) M_base` points at precision `rho_r`, and keeps a
//! coarser side coreset used for extraction.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bicriteria::{bicriteria_centers, DEFAULT_GAMMA};
use crate::centroid::{ledger_factor, solve_on_coreset, PipelineReport, Variant};
use crate::coreset::{build_coreset, Coreset, DEFAULT_APPROX_FACTOR};
use crate::error::{invalid, ClusterError, Result};
use crate::geometry::{CenterSet, CostKind, PointAccess, WeightedPointSet, MAX_DIM};
use crate::rng::derive_seed;

/// Default schedule constant `c` in `rho_j = eps / (c (j+1)^2)`.
pub const DEFAULT_SCHEDULE_CONSTANT: f64 = 10.0;

/// Ranks covered by the schedule check.
pub const SCHEDULE_HORIZON: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamConfig {
    pub k: usize,
    pub eps: f64,
    pub dim: usize,
    pub kind: CostKind,
    pub m_base: usize,
    pub c_sched: f64,
    pub seed: u64,
}

impl StreamConfig {
    /// Config with the default base size `max(ceil(k / eps^d), 64)` and schedule constant.
    pub fn new(k: usize, eps: f64, dim: usize, kind: CostKind, seed: u64) -> Result<StreamConfig> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
        }
        let m = (k as f64 / eps.powi(dim as i32)).ceil();
        let m_base = if m > 1e9 { 1_000_000_000 } else { (m as usize).max(64) };
        StreamConfig::with_base(k, eps, dim, kind, m_base, DEFAULT_SCHEDULE_CONSTANT, seed)
    }

    pub fn with_base(
        k: usize,
        eps: f64,
        dim: usize,
        kind: CostKind,
        m_base: usize,
        c_sched: f64,
        seed: u64,
    ) -> Result<StreamConfig> {
        if k < 1 {
            return Err(invalid("k must be >= 1"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
        }
        if dim < 1 || dim > MAX_DIM {
            return Err(invalid(format!("dimension must be in 1..={MAX_DIM}, got {dim}")));
        }
        if m_base < 1 {
            return Err(invalid("base size must be >= 1"));
        }
        let cfg = StreamConfig {
            k,
            eps,
            dim,
            kind,
            m_base,
            c_sched,
            seed,
        };
        let product = cfg.schedule_product();
        if !(c_sched > 0.0) || product > 1.0 + eps / 2.0 {
            return Err(invalid(format!(
                "schedule constant {c_sched} gives precision product {product} > 1 + eps/2"
            )));
        }
        Ok(cfg)
    }

    /// `rho_j`.
    pub fn rho(&self, j: usize) -> f64 {
        self.eps / (self.c_sched * ((j + 1) * (j + 1)) as f64)
    }

    /// `prod_{l=0..=64} (1 + rho_l)`.
    pub fn schedule_product(&self) -> f64 {
        (0..=SCHEDULE_HORIZON).map(|l| 1.0 + self.rho(l)).product()
    }

    /// Precision of every side coreset.
    pub fn side_eps(&self) -> f64 {
        self.eps / 6.0
    }
}

#[derive(Debug, Clone)]
pub struct Bucket {
    pub rank: usize,
    pub q: WeightedPointSet,
    pub r: WeightedPointSet,
    pub represented: u64,
    /// Accumulated `(1 + delta)` factor of `q` against its raw points.
    pub factor: f64,
}

#[derive(Debug, Clone)]
pub struct StreamState {
    cfg: StreamConfig,
    buffer: WeightedPointSet,
    buckets: BTreeMap<usize, Bucket>,
    inserted: u64,
    inserted_weight: u64,
    merges: u64,
}

/// Per-bucket summary for snapshots.
#[derive(Debug, Clone, Serialize)]
pub struct BucketSummary {
    pub rank: usize,
    pub q_size: usize,
    pub r_size: usize,
    pub represented: u64,
    pub factor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StreamSnapshot {
    pub inserted: u64,
    pub buffer: usize,
    pub merges: u64,
    pub buckets: Vec<BucketSummary>,
    pub extract_size: usize,
}

impl StreamState {
    pub fn new(cfg: StreamConfig) -> StreamState {
        StreamState {
            cfg,
            buffer: WeightedPointSet::new(cfg.dim),
            buckets: BTreeMap::new(),
            inserted: 0,
            inserted_weight: 0,
            merges: 0,
        }
    }

    pub fn config(&self) -> &StreamConfig {
        &self.cfg
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn buffer(&self) -> &WeightedPointSet {
        &self.buffer
    }

    pub fn buckets(&self) -> impl Iterator<Item = &Bucket> + '_ {
        self.buckets.values()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.buckets.keys().copied().collect()
    }

    /// Inserts one unit-weight point.
    pub fn insert(&mut self, p: &[f64]) -> Result<()> {
        self.insert_weighted(p, 1)
    }

    /// Inserts one point carrying `weight`; it occupies a single buffer slot.
    pub fn insert_weighted(&mut self, p: &[f64], weight: u64) -> Result<()> {
        if p.len() != self.cfg.dim {
            return Err(ClusterError::DimensionMismatch {
                expected: self.cfg.dim,
                got: p.len(),
            });
        }
        self.buffer.push(p, weight)?;
        self.inserted += 1;
        self.inserted_weight += weight;
        if self.buffer.len() == self.cfg.m_base {
            self.cascade_merge()?;
        }
        Ok(())
    }

    fn compress(&self, set: &WeightedPointSet, eps: f64, tag: u64) -> Result<WeightedPointSet> {
        let seed = derive_seed(self.cfg.seed, tag);
        let a = bicriteria_centers(set, self.cfg.k, DEFAULT_GAMMA, seed)?;
        Ok(build_coreset(set, &a, DEFAULT_APPROX_FACTOR, self.cfg.k, eps, self.cfg.kind)?.set)
    }

    /// Promotes the full buffer, merging equal ranks upward.
    pub fn cascade_merge(&mut self) -> Result<()> {
        if self.buffer.len() != self.cfg.m_base {
            return Err(invalid("cascade requires a full buffer"));
        }
        let mut q = std::mem::replace(&mut self.buffer, WeightedPointSet::new(self.cfg.dim));
        let mut factor: f64 = 1.0;
        let mut represented = self.cfg.m_base as u64;
        let mut rank = 1;
        while let Some(b) = self.buckets.remove(&rank) {
            let mut union = b.q;
            union.extend_from(&q)?;
            self.merges += 1;
            let rho = self.cfg.rho(rank + 1);
            q = self.compress(&union, rho, self.merges)?;
            factor = factor.max(b.factor) * (1.0 + rho);
            represented += b.represented;
            rank += 1;
        }
        let r = self.compress(&q, self.cfg.side_eps(), self.merges.wrapping_add(1 << 40))?;
        self.buckets.insert(
            rank,
            Bucket {
                rank,
                q,
                r,
                represented,
                factor,
            },
        );
        Ok(())
    }

    /// Union of the buffer and every side coreset.
    pub fn extract_coreset(&self) -> Coreset {
        let mut set = self.buffer.clone();
        for b in self.buckets.values() {
            // dimensions agree by construction
            let _ = set.extend_from(&b.r);
        }
        Coreset {
            set,
            k: self.cfg.k,
            eps: self.cfg.eps,
            kind: self.cfg.kind,
            source_total_weight: self.inserted_weight,
        }
    }

    /// Worst `(1 + error)` factor of the extracted union against the stream.
    pub fn maintenance_factor(&self) -> f64 {
        self.buckets
            .values()
            .map(|b| b.factor * (1.0 + self.cfg.side_eps()))
            .fold(1.0, f64::max)
    }

    /// Checks the binary-counter law and weight conservation.
    pub fn check_invariants(&self) -> Result<()> {
        let m = self.cfg.m_base as u64;
        let full = self.inserted / m;
        let mut expect = Vec::new();
        for bit in 0..64 {
            if full >> bit & 1 == 1 {
                expect.push(bit + 1);
            }
        }
        if self.ranks() != expect {
            return Err(ClusterError::Internal(format!(
                "occupied ranks {:?} do not match {full} full buffers",
                self.ranks()
            )));
        }
        let mut represented = self.buffer.len() as u64;
        let mut weight = self.buffer.total_weight();
        for b in self.buckets.values() {
            if b.represented != (1u64 << (b.rank - 1)) * m {
                return Err(ClusterError::Internal(format!("rank {} represents {}", b.rank, b.represented)));
            }
            if b.q.total_weight() != b.r.total_weight() {
                return Err(ClusterError::Internal(format!("rank {} side coreset lost weight", b.rank)));
            }
            represented += b.represented;
            weight += b.q.total_weight();
        }
        if represented != self.inserted || weight != self.inserted_weight {
            return Err(ClusterError::Internal(format!(
                "represented {represented} / weight {weight} vs inserted {} / {}",
                self.inserted, self.inserted_weight
            )));
        }
        Ok(())
    }

    pub fn snapshot(&self) -> StreamSnapshot {
        StreamSnapshot {
            inserted: self.inserted,
            buffer: self.buffer.len(),
            merges: self.merges,
            buckets: self
                .buckets
                .values()
                .map(|b| BucketSummary {
                    rank: b.rank,
                    q_size: b.q.len(),
                    r_size: b.r.len(),
                    represented: b.represented,
                    factor: b.factor,
                })
                .collect(),
            extract_size: self.buffer.len() + self.buckets.values().map(|b| b.r.len()).sum::<usize>(),
        }
    }

    /// Precision left for the clustering step.
    pub fn query_eps(&self) -> Result<f64> {
        let ec = self.maintenance_factor() - 1.0;
        let eps = self.cfg.eps;
        let avail = (eps / 2.0).min((1.0 + eps) * (1.0 - ec) / (1.0 + ec) - 1.0);
        if !(avail > 0.0) {
            return Err(invalid(format!("maintenance error {ec} leaves no precision for clustering")));
        }
        debug_assert!(ledger_factor(ec, avail) <= 1.0 + eps + 1e-12);
        Ok(avail)
    }

    /// Clustering of everything inserted so far.
    pub fn query_clustering(&self, kind: CostKind) -> Result<(CenterSet, PipelineReport)> {
        if kind != self.cfg.kind {
            return Err(invalid(format!(
                "stream maintains a {} coreset, cannot answer a {} query",
                self.cfg.kind, kind
            )));
        }
        let extracted = self.extract_coreset();
        if extracted.is_empty() {
            return Err(ClusterError::EmptyInput("stream"));
        }
        let es = self.query_eps()?;
        let variant = match kind {
            CostKind::Median => Variant::Median,
            CostKind::Means => Variant::Means,
        };
        let (centers, mut report) = solve_on_coreset(&extracted.set, &extracted.set, self.cfg.k, es, variant)?;
        report.eps = self.cfg.eps;
        report.eps_coreset = self.maintenance_factor() - 1.0;
        report.ledger_factor = ledger_factor(report.eps_coreset, es);
        Ok((centers, report))
    }
}
