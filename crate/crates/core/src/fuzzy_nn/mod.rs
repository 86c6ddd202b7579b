//! `(delta, Delta, eps)`-fuzzy nearest neighbor search.
//!
//! A query `q` with `d(q, X)` in `[delta, Delta]` gets a `(1 + eps)`-approximate
//! nearest site. Closer queries get some site within about `delta`, farther
//! ones get an arbitrary site. Sites are bucketed in a grid of side `Delta`;
//! each bucket is thinned to a well-spaced subset and indexed by a quadtree
//! whose leaves sit on every `alpha`-th level, so a query costs a binary search
//! over a handful of hashed levels in each of the `3^d` surrounding buckets.

mod batch;
mod filter;
mod quadtree;
mod tau;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, ClusterError, Result};
use crate::geometry::{distance, CenterSet, PointAccess};

pub use batch::{batch_nn, batch_nn_capped, batch_nn_with, NnMatch};
pub use filter::{filter_spacing, filter_wellspaced};
pub use quadtree::{KeyBits, NodeKey, MAX_LEVEL};
pub use tau::{estimate_tau, estimate_tau_detailed, TauEstimate};

use filter::{filter_subset, for_each_neighbor, lattice_cell};
use quadtree::{CellTree, TreeParams};

/// Default number of leaf-level groups parameter.
pub const DEFAULT_R: u32 = 8;

/// Upper limit on hashed nodes per index.
pub const NODE_BUDGET: usize = 8_000_000;

/// Validated index parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuzzyConfig {
    pub delta: f64,
    pub big_delta: f64,
    pub eps: f64,
    pub r: u32,
}

impl FuzzyConfig {
    pub fn new(delta: f64, big_delta: f64, eps: f64, r: u32) -> Result<FuzzyConfig> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("delta must be positive, got {delta}")));
        }
        if !(big_delta > delta && big_delta.is_finite()) {
            return Err(invalid(format!("Delta must exceed delta, got {big_delta} <= {delta}")));
        }
        if !(eps > 0.0) {
            return Err(invalid(format!("eps must be positive, got {eps}")));
        }
        if r < 1 {
            return Err(invalid("r must be >= 1"));
        }
        let cfg = FuzzyConfig {
            delta,
            big_delta,
            eps,
            r,
        };
        if eps * cfg.rho() < 1.0 {
            return Err(invalid(format!(
                "eps * Delta / delta must be >= 1, got {}",
                eps * cfg.rho()
            )));
        }
        Ok(cfg)
    }

    pub fn rho(&self) -> f64 {
        self.big_delta / self.delta
    }

    /// Leaf-level stride `ceil(lg rho / (20 d r))`, at least 1.
    pub fn alpha(&self, dim: usize) -> u32 {
        ((self.rho().log2() / (20.0 * dim as f64 * self.r as f64)).ceil() as u32).max(1)
    }

    /// Precision used inside the trees and the filter.
    fn inner_eps(&self) -> f64 {
        self.eps.min(1.0) / 2.0
    }
}

/// Largest number of hash probes one query may use.
pub fn probe_bound(dim: usize, r: u32) -> usize {
    3usize.pow(dim as u32) * ((r as f64).log2().ceil() as usize + 1)
}

#[derive(Debug, Clone)]
struct TopCell {
    /// Sites in the bucket, input order.
    members: Vec<usize>,
    /// Well-spaced subset of `members`.
    kept: Vec<usize>,
    tree: CellTree,
}

/// Immutable fuzzy NN index over a site set.
#[derive(Debug, Clone)]
pub struct FuzzyNNIndex {
    cfg: FuzzyConfig,
    sites: CenterSet,
    cells: Vec<TopCell>,
    cell_of: HashMap<Vec<i128>, usize>,
}

/// Result of one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuzzyAnswer {
    /// Index of the returned site.
    pub site: usize,
    /// Exact distance from the query to that site.
    pub distance: f64,
    /// Hash lookups performed.
    pub probes: usize,
}

/// Size figures of a built index.
#[derive(Debug, Clone, Serialize)]
pub struct IndexStats {
    pub sites: usize,
    pub cells: usize,
    pub kept_sites: usize,
    pub hashed_nodes: usize,
    pub max_depth: u32,
    pub max_hashed_levels: u32,
    pub alpha: u32,
}

/// Builds the index; fails if the configuration is inconsistent or the trees
/// would exceed [`NODE_BUDGET`].
pub fn build_index(sites: &CenterSet, cfg: FuzzyConfig) -> Result<FuzzyNNIndex> {
    build_index_with_budget(sites, cfg, NODE_BUDGET)
}

pub(crate) fn build_index_with_budget(sites: &CenterSet, cfg: FuzzyConfig, budget: usize) -> Result<FuzzyNNIndex> {
    if sites.is_empty() {
        return Err(ClusterError::EmptyInput("site set"));
    }
    let d = sites.dim();
    let mut cell_of: HashMap<Vec<i128>, usize> = HashMap::new();
    let mut buckets: Vec<(Vec<i128>, Vec<usize>)> = Vec::new();
    for i in 0..sites.len() {
        let key = lattice_cell(sites.point(i), None, cfg.big_delta);
        let slot = *cell_of.entry(key.clone()).or_insert_with(|| {
            buckets.push((key, Vec::new()));
            buckets.len() - 1
        });
        buckets[slot].1.push(i);
    }
    let eps = cfg.inner_eps();
    let params = TreeParams {
        eps,
        delta: cfg.delta,
        big_delta: cfg.big_delta,
        alpha: cfg.alpha(d),
        r: cfg.r,
    };
    let spacing = filter_spacing(cfg.delta, eps, d);
    let cells: Vec<Option<TopCell>> = buckets
        .par_iter()
        .map(|(key, members)| {
            let corner: Vec<f64> = key.iter().map(|&c| c as f64 * cfg.big_delta).collect();
            let kept = filter_subset(sites, members, Some(&corner), spacing);
            let origin: Vec<f64> = corner.iter().map(|c| c - cfg.big_delta).collect();
            let tree = CellTree::build(sites, &kept, origin, 3.0 * cfg.big_delta, params, budget).ok()?;
            Some(TopCell {
                members: members.clone(),
                kept,
                tree,
            })
        })
        .collect();
    let mut out = Vec::with_capacity(cells.len());
    let mut total = 0usize;
    for c in cells {
        let c = c.ok_or_else(|| over_budget(budget))?;
        total += c.tree.node_count();
        out.push(c);
    }
    if total > budget {
        return Err(over_budget(budget));
    }
    Ok(FuzzyNNIndex {
        cfg,
        sites: sites.clone(),
        cells: out,
        cell_of,
    })
}

fn over_budget(budget: usize) -> ClusterError {
    invalid(format!("fuzzy index would exceed {budget} nodes; increase r or delta"))
}

impl FuzzyNNIndex {
    pub fn config(&self) -> &FuzzyConfig {
        &self.cfg
    }

    pub fn sites(&self) -> &CenterSet {
        &self.sites
    }

    /// Fuzzy nearest site of `q`.
    pub fn query(&self, q: &[f64]) -> FuzzyAnswer {
        debug_assert_eq!(q.len(), self.sites.dim());
        let home = lattice_cell(q, None, self.cfg.big_delta);
        let mut probes = 0;
        let mut best: Option<(f64, usize)> = None;
        for_each_neighbor(&home, |key| {
            if let Some(&ci) = self.cell_of.get(key) {
                if let Some(s) = self.cells[ci].tree.lookup(q, &mut probes) {
                    let dist = distance(q, self.sites.point(s));
                    if best.is_none_or(|(bd, bs)| dist < bd || (dist == bd && s < bs)) {
                        best = Some((dist, s));
                    }
                }
            }
            false
        });
        let (distance, site) = best.unwrap_or_else(|| (distance(q, self.sites.point(0)), 0));
        FuzzyAnswer { site, distance, probes }
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            sites: self.sites.len(),
            cells: self.cells.len(),
            kept_sites: self.cells.iter().map(|c| c.kept.len()).sum(),
            hashed_nodes: self.cells.iter().map(|c| c.tree.node_count()).sum(),
            max_depth: self.cells.iter().map(|c| c.tree.depth).max().unwrap_or(0),
            max_hashed_levels: self.cells.iter().map(|c| c.tree.hashed_levels).max().unwrap_or(0),
            alpha: self.cfg.alpha(self.sites.dim()),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// `(bucket size, kept size)` per top-level cell.
    pub fn cell_sizes(&self) -> Vec<(usize, usize)> {
        self.cells.iter().map(|c| (c.members.len(), c.kept.len())).collect()
    }

    /// Kept sites of cell `cell`.
    pub fn kept_sites(&self, cell: usize) -> &[usize] {
        &self.cells[cell].kept
    }

    /// Sites of cell `cell` before filtering.
    pub fn cell_members(&self, cell: usize) -> &[usize] {
        &self.cells[cell].members
    }

    /// Leaf stride actually used by cell `cell`.
    pub fn leaf_stride(&self, cell: usize) -> u32 {
        self.cells[cell].tree.alpha_eff
    }

    /// Stored leaves of cell `cell`: key and representative site.
    pub fn leaves(&self, cell: usize) -> Vec<(NodeKey, usize)> {
        let mut v: Vec<(NodeKey, usize)> = self.cells[cell].tree.leaves().map(|(k, s)| (k.clone(), s)).collect();
        if let Some(s) = self.cells[cell].tree.root_leaf {
            v.push((NodeKey::from_indices(0, &vec![0; self.sites.dim()]), s));
        }
        v
    }

    /// Key of the level-`level` node of cell `cell` containing `q`.
    pub fn node_key(&self, cell: usize, q: &[f64], level: u32) -> NodeKey {
        self.cells[cell].tree.key_for(q, level)
    }

    /// Lower corner and side of the region of `key` in cell `cell`.
    pub fn region(&self, cell: usize, key: &NodeKey) -> (Vec<f64>, f64) {
        self.cells[cell].tree.region(key)
    }
}

/// Free-function form of [`FuzzyNNIndex::query`].
pub fn fuzzy_query(index: &FuzzyNNIndex, q: &[f64]) -> FuzzyAnswer {
    index.query(q)
}
