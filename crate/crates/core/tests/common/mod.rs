#![allow(dead_code)]

use kcoreset::{CenterSet, WeightedPointSet};
use proptest::prelude::*;

/// Weighted sets with coordinates in a box; weights 1..=4.
pub fn weighted_set(dim: usize, max_len: usize, span: f64) -> impl Strategy<Value = WeightedPointSet> {
    prop::collection::vec((prop::collection::vec(-span..span, dim), 1u64..=4), 1..=max_len)
        .prop_map(|rows| WeightedPointSet::from_weighted_rows(&rows).unwrap())
}

/// Sets on a coarse integer lattice, so repeated locations are common.
pub fn lattice_set(dim: usize, max_len: usize, cells: i32) -> impl Strategy<Value = WeightedPointSet> {
    prop::collection::vec((prop::collection::vec(-cells..=cells, dim), 1u64..=3), 1..=max_len).prop_map(|rows| {
        let rows: Vec<(Vec<f64>, u64)> = rows
            .into_iter()
            .map(|(p, w)| (p.into_iter().map(f64::from).collect(), w))
            .collect();
        WeightedPointSet::from_weighted_rows(&rows).unwrap()
    })
}

pub fn centers(dim: usize, max_len: usize, span: f64) -> impl Strategy<Value = CenterSet> {
    prop::collection::vec(prop::collection::vec(-span..span, dim), 1..=max_len)
        .prop_map(|rows| CenterSet::from_rows(&rows).unwrap())
}

pub fn unit_rows(rows: &[Vec<f64>]) -> WeightedPointSet {
    WeightedPointSet::from_rows(rows).unwrap()
}
