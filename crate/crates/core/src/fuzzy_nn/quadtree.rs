//! Per-cell quadtree with leaves aligned to multiples of a level stride and
//! node hashing on those levels.

use std::collections::HashMap;

use crate::geometry::{sq_distance, CenterSet, PointAccess};

/// Deepest level the construction descends to.
pub const MAX_LEVEL: u32 = 100;

/// Per-axis cell indices at one level, packed when they fit in 128 bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum KeyBits {
    Packed(u128),
    Wide(Box<[u128]>),
}

/// Hash key of a quadtree node: level plus the per-axis `level`-bit prefixes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeKey {
    pub level: u32,
    pub bits: KeyBits,
}

impl NodeKey {
    pub fn from_indices(level: u32, idx: &[u128]) -> NodeKey {
        let bits = if idx.len() as u32 * level <= 128 {
            let mut packed = 0u128;
            for (a, &v) in idx.iter().enumerate() {
                if level > 0 {
                    packed |= v << (a as u32 * level);
                }
            }
            KeyBits::Packed(packed)
        } else {
            KeyBits::Wide(idx.to_vec().into_boxed_slice())
        };
        NodeKey { level, bits }
    }

    /// Per-axis indices this key encodes.
    pub fn indices(&self, dim: usize) -> Vec<u128> {
        match &self.bits {
            KeyBits::Wide(v) => v.to_vec(),
            KeyBits::Packed(p) => {
                if self.level == 0 {
                    return vec![0; dim];
                }
                let mask = if self.level >= 128 { u128::MAX } else { (1u128 << self.level) - 1 };
                (0..dim).map(|a| (p >> (a as u32 * self.level)) & mask).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Node {
    Internal,
    Leaf(usize),
}

/// Parameters shared by every cell tree of one index.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub eps: f64,
    pub delta: f64,
    pub big_delta: f64,
    pub alpha: u32,
    pub r: u32,
}

/// Tree exceeded its node allowance.
#[derive(Debug)]
pub(crate) struct OverBudget;

#[derive(Debug, Clone)]
pub(crate) struct CellTree {
    pub origin: Vec<f64>,
    pub side: f64,
    /// Raw (unrefined) depth.
    pub depth: u32,
    pub alpha_eff: u32,
    /// Number of hashed levels `alpha_eff, 2 alpha_eff, ...`.
    pub hashed_levels: u32,
    pub root_leaf: Option<usize>,
    pub nodes: HashMap<NodeKey, Node>,
}

struct Raw {
    level: u32,
    idx: Vec<u128>,
    leaf: Option<usize>,
}

impl CellTree {
    /// Builds the tree over sites `z` (indices into `sites`) for the region
    /// `[origin, origin + side)^d`.
    pub fn build(
        sites: &CenterSet,
        z: &[usize],
        origin: Vec<f64>,
        side: f64,
        p: TreeParams,
        budget: usize,
    ) -> Result<CellTree, OverBudget> {
        let d = sites.dim();
        let sqrt_d = (d as f64).sqrt();
        let mut raw: Vec<Raw> = Vec::new();
        let mut stack: Vec<(u32, Vec<u128>, Vec<usize>)> = vec![(0, vec![0; d], z.to_vec())];
        let mut center = vec![0.0; d];
        while let Some((level, idx, parent)) = stack.pop() {
            let cell = side / 2f64.powi(level as i32);
            for a in 0..d {
                center[a] = origin[a] + (idx[a] as f64 + 0.5) * cell;
            }
            let diam = cell * sqrt_d;
            let dist: Vec<f64> = parent.iter().map(|&s| sq_distance(sites.point(s), &center).sqrt()).collect();
            let (mut d1, mut z1) = (f64::INFINITY, usize::MAX);
            for (&s, &v) in parent.iter().zip(&dist) {
                if v < d1 {
                    d1 = v;
                    z1 = s;
                }
            }
            let cands: Vec<usize> = parent
                .iter()
                .zip(&dist)
                .filter(|&(_, &v)| v <= d1 + diam)
                .map(|(&s, _)| s)
                .collect();
            let leaf = cands.len() == 1
                || d1 >= diam * (2.0 + p.eps) / (2.0 * p.eps)
                || diam <= p.eps * p.delta
                || d1 - diam / 2.0 > 2.0 * p.big_delta
                || level >= MAX_LEVEL;
            if leaf {
                raw.push(Raw {
                    level,
                    idx,
                    leaf: Some(z1),
                });
            } else {
                for child in (0..1usize << d).rev() {
                    let cidx: Vec<u128> = (0..d).map(|a| idx[a] * 2 + ((child >> a) & 1) as u128).collect();
                    stack.push((level + 1, cidx, cands.clone()));
                }
                raw.push(Raw { level, idx, leaf: None });
            }
            if raw.len() > budget {
                return Err(OverBudget);
            }
        }

        let depth = raw.iter().filter(|n| n.leaf.is_some()).map(|n| n.level).max().unwrap_or(0);
        if depth == 0 {
            return Ok(CellTree {
                origin,
                side,
                depth,
                alpha_eff: p.alpha,
                hashed_levels: 0,
                root_leaf: raw[0].leaf,
                nodes: HashMap::new(),
            });
        }
        let max_levels = (2 * p.r - 1).max(1);
        let alpha_eff = p.alpha * depth.div_ceil(max_levels * p.alpha);
        let hashed_levels = depth.div_ceil(alpha_eff);

        let mut total = 0usize;
        for n in &raw {
            total += match n.leaf {
                None => usize::from(n.level % alpha_eff == 0 && n.level > 0),
                Some(_) => {
                    let shift = n.level.div_ceil(alpha_eff) * alpha_eff - n.level;
                    1usize.checked_shl(shift * d as u32).unwrap_or(usize::MAX)
                }
            };
            if total > budget {
                return Err(OverBudget);
            }
        }

        let mut nodes = HashMap::with_capacity(total);
        for n in raw {
            match n.leaf {
                None => {
                    if n.level % alpha_eff == 0 && n.level > 0 {
                        nodes.insert(NodeKey::from_indices(n.level, &n.idx), Node::Internal);
                    }
                }
                Some(rep) => {
                    let target = n.level.div_ceil(alpha_eff) * alpha_eff;
                    let shift = target - n.level;
                    let span = 1u128 << shift;
                    let base: Vec<u128> = n.idx.iter().map(|&v| v << shift).collect();
                    let mut off = vec![0u128; d];
                    loop {
                        let idx: Vec<u128> = base.iter().zip(&off).map(|(b, o)| b + o).collect();
                        nodes.insert(NodeKey::from_indices(target, &idx), Node::Leaf(rep));
                        let mut a = 0;
                        while a < d {
                            off[a] += 1;
                            if off[a] < span {
                                break;
                            }
                            off[a] = 0;
                            a += 1;
                        }
                        if a == d {
                            break;
                        }
                    }
                }
            }
        }
        Ok(CellTree {
            origin,
            side,
            depth,
            alpha_eff,
            hashed_levels,
            root_leaf: None,
            nodes,
        })
    }

    /// Key of the level-`level` node containing `q`.
    pub fn key_for(&self, q: &[f64], level: u32) -> NodeKey {
        let scale = 2f64.powi(level as i32);
        let top = if level == 0 { 0 } else { (1u128 << level) - 1 };
        let idx: Vec<u128> = q
            .iter()
            .zip(&self.origin)
            .map(|(x, o)| {
                let t = ((x - o) / self.side).clamp(0.0, 1.0);
                ((t * scale).floor() as u128).min(top)
            })
            .collect();
        NodeKey::from_indices(level, &idx)
    }

    /// Lower corner and side of the region of `key`.
    pub fn region(&self, key: &NodeKey) -> (Vec<f64>, f64) {
        let cell = self.side / 2f64.powi(key.level as i32);
        let lo = key
            .indices(self.origin.len())
            .iter()
            .zip(&self.origin)
            .map(|(&i, o)| o + i as f64 * cell)
            .collect();
        (lo, cell)
    }

    /// Representative site for `q`, by binary search over the hashed levels.
    pub fn lookup(&self, q: &[f64], probes: &mut usize) -> Option<usize> {
        if let Some(s) = self.root_leaf {
            return Some(s);
        }
        let (mut lo, mut hi) = (0u32, self.hashed_levels);
        let mut found = None;
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            *probes += 1;
            match self.nodes.get(&self.key_for(q, mid * self.alpha_eff)) {
                Some(&node) => {
                    lo = mid;
                    found = Some(node);
                }
                None => hi = mid - 1,
            }
        }
        match found {
            Some(Node::Leaf(s)) => Some(s),
            _ => None,
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&NodeKey, usize)> + '_ {
        self.nodes.iter().filter_map(|(k, n)| match n {
            Node::Leaf(s) => Some((k, *s)),
            Node::Internal => None,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len() + usize::from(self.root_leaf.is_some())
    }
}
