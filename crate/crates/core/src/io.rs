//! Text point files.
//!
//! One point per line, coordinates separated by whitespace and/or commas,
//! optionally followed by a positive integer weight. Lines starting with `#`
//! are comments; comment tokens of the form `key=value` are collected as
//! metadata. A `# dim=N` header fixes the dimension, which is how a weight
//! column is told apart from a coordinate column.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::coreset::Coreset;
use crate::error::{ClusterError, Result};
use crate::geometry::{CostKind, PointAccess, WeightedPointSet};

/// A parsed point file.
#[derive(Debug, Clone)]
pub struct PointFile {
    pub points: WeightedPointSet,
    pub metadata: BTreeMap<String, String>,
}

/// Parses point-file text. `dim` overrides any `dim=` header.
///
/// Without a dimension hint, a file whose rows all have the same field count
/// is read as unweighted coordinates; rows with one extra field carry a weight.
pub fn parse_points(text: &str, dim: Option<usize>) -> Result<PointFile> {
    let mut metadata = BTreeMap::new();
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for tok in comment.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    metadata.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        rows.push((lineno + 1, fields));
    }

    let header_dim = match metadata.get("dim") {
        Some(v) => Some(v.parse::<usize>().map_err(|_| ClusterError::Parse {
            line: 0,
            message: format!("bad dim header {v:?}"),
        })?),
        None => None,
    };
    let dim = match dim.or(header_dim) {
        Some(d) => d,
        None => rows.iter().map(|(_, f)| f.len()).min().unwrap_or(0),
    };

    let mut points = WeightedPointSet::new(dim);
    for (line, fields) in rows {
        let wrong = || ClusterError::Parse {
            line,
            message: format!("expected {dim} coordinates and an optional weight, found {} fields", fields.len()),
        };
        let weight = if fields.len() == dim + 1 {
            let w = fields[dim];
            w.parse::<u64>().ok().filter(|&w| w > 0).ok_or_else(|| ClusterError::Parse {
                line,
                message: format!("weight must be a positive integer, got {w:?}"),
            })?
        } else if fields.len() == dim {
            1
        } else {
            return Err(wrong());
        };
        let mut coords = Vec::with_capacity(dim);
        for f in &fields[..dim] {
            let c: f64 = f.parse().map_err(|_| ClusterError::Parse {
                line,
                message: format!("not a number: {f:?}"),
            })?;
            coords.push(c);
        }
        points.push(&coords, weight).map_err(|e| ClusterError::Parse {
            line,
            message: e.to_string(),
        })?;
    }
    Ok(PointFile { points, metadata })
}

/// Formats a weighted set with a `dim` header and an explicit weight column.
pub fn format_points(points: &WeightedPointSet, header: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in header {
        let _ = writeln!(out, "# {k}={v}");
    }
    let _ = writeln!(out, "# dim={}", points.dim());
    for (p, w) in points.iter() {
        for c in p {
            let _ = write!(out, "{c} ");
        }
        let _ = writeln!(out, "{w}");
    }
    out
}

/// Formats a coreset; the header records its parameters.
pub fn format_coreset(coreset: &Coreset) -> String {
    format_points(
        &coreset.set,
        &[
            ("k", coreset.k.to_string()),
            ("eps", coreset.eps.to_string()),
            ("kind", coreset.kind.to_string()),
            ("source_total_weight", coreset.source_total_weight.to_string()),
        ],
    )
}

/// Parses a coreset file written by [`format_coreset`].
pub fn parse_coreset(text: &str) -> Result<Coreset> {
    let file = parse_points(text, None)?;
    let get = |key: &str| {
        file.metadata.get(key).cloned().ok_or_else(|| ClusterError::Parse {
            line: 0,
            message: format!("coreset header missing {key}"),
        })
    };
    let bad = |key: &str| ClusterError::Parse {
        line: 0,
        message: format!("coreset header has malformed {key}"),
    };
    let k = get("k")?.parse().map_err(|_| bad("k"))?;
    let eps = get("eps")?.parse().map_err(|_| bad("eps"))?;
    let kind: CostKind = get("kind")?.parse().map_err(|_| bad("kind"))?;
    let source_total_weight = get("source_total_weight")?
        .parse()
        .map_err(|_| bad("source_total_weight"))?;
    Ok(Coreset {
        set: file.points,
        k,
        eps,
        kind,
        source_total_weight,
    })
}
