use std::fs;
use std::path::{Path, PathBuf};

use kcoreset::bicriteria::{bicriteria_centers_report, DEFAULT_GAMMA};
use kcoreset::coreset::{build_coreset_detailed, DEFAULT_APPROX_FACTOR};
use kcoreset::fuzzy_nn::probe_bound;
use kcoreset::harness::ORACLE_BUDGET;
use kcoreset::io::{format_coreset, format_points, parse_coreset, parse_points};
use kcoreset::rng::derive_seed;
use kcoreset::{
    approx_clustering, brute_force_discrete, build_index, certify_coreset, clustering_cost, generate_instance,
    CenterSet, CostKind, FuzzyConfig, InstanceSpec, PointAccess, Shape, StreamConfig, StreamState, Variant,
    WeightedPointSet,
};
use serde_json::{json, Value};

use crate::args::*;
use crate::{CliError, SCHEMA_VERSION};

type CliResult<T> = std::result::Result<T, CliError>;

pub fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Coreset(a) => coreset(a),
        Command::Cluster(a) => cluster(a),
        Command::Stream(a) => stream(a),
        Command::Verify(a) => verify(a),
        Command::FuzzyNn(FuzzyCommand::Bench(a)) => fuzzy_bench(a),
        Command::Gen(a) => gen(a),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn load_points(path: &Path) -> CliResult<WeightedPointSet> {
    let text = read(path)?;
    let file = parse_points(&text, None).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if file.points.is_empty() {
        return Err(CliError::usage(format!("{}: no points", path.display())));
    }
    Ok(file.points)
}

fn load_centers(path: &Path) -> CliResult<CenterSet> {
    Ok(load_points(path)?.to_centers())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Emits a report; the layout is fixed so equal inputs give equal bytes.
fn emit(command: &str, body: Value, target: Option<&PathBuf>) -> CliResult<()> {
    let mut doc = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    if let (Value::Object(doc), Value::Object(body)) = (&mut doc, body) {
        doc.extend(body);
    }
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::usage(e.to_string()))?;
    text.push('\n');
    match target {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn coreset(a: CoresetArgs) -> CliResult<()> {
    let points = load_points(&a.common.input)?;
    let kind: CostKind = a.kind.into();
    let (centers, bicrit) = bicriteria_centers_report(&points, a.k, DEFAULT_GAMMA, derive_seed(a.common.seed, 11))?;
    let build = build_coreset_detailed(&points, &centers, DEFAULT_APPROX_FACTOR, a.k, a.eps, kind)?;
    write(&a.out, &format_coreset(&build.coreset))?;
    emit(
        "coreset",
        json!({
            "input": path_str(&a.common.input),
            "output": path_str(&a.out),
            "seed": a.common.seed,
            "coreset": to_value(&build.summary(&points, centers.len())),
            "bicriteria": to_value(&bicrit),
        }),
        a.common.report.as_ref(),
    )
}

fn cluster(a: ClusterArgs) -> CliResult<()> {
    let points = load_points(&a.common.input)?;
    let variant = match (a.kind, a.discrete) {
        (KindArg::Median, false) => Variant::Median,
        (KindArg::Median, true) => Variant::DiscreteMedian,
        (KindArg::Means, false) => Variant::Means,
        (KindArg::Means, true) => return Err(CliError::usage("--discrete is only available with --kind median")),
    };
    let res = approx_clustering(&points, a.k, a.eps, variant, a.common.seed)?;
    if let Some(p) = &a.centers_out {
        let as_points = WeightedPointSet::from_rows(&res.centers.rows())?;
        write(p, &format_points(&as_points, &[("kind", variant.kind().to_string())]))?;
    }
    emit(
        "cluster",
        json!({
            "input": path_str(&a.common.input),
            "seed": a.common.seed,
            "centers": res.centers.rows(),
            "cost": res.report.cost,
            "report": to_value(&res.report),
        }),
        a.common.report.as_ref(),
    )
}

fn stream(a: StreamArgs) -> CliResult<()> {
    if a.chunk < 1 {
        return Err(CliError::usage("--chunk must be >= 1"));
    }
    let points = load_points(&a.common.input)?;
    let kind: CostKind = a.kind.into();
    let cfg = match a.m_base {
        Some(m) => StreamConfig::with_base(
            a.k,
            a.eps,
            points.dim(),
            kind,
            m,
            kcoreset::streaming::DEFAULT_SCHEDULE_CONSTANT,
            a.common.seed,
        )?,
        None => StreamConfig::new(a.k, a.eps, points.dim(), kind, a.common.seed)?,
    };
    let mut state = StreamState::new(cfg);
    let mut snapshots = Vec::new();
    let mut next_snapshot = a.snapshot_every;
    let mut start = 0;
    while start < points.len() {
        let end = (start + a.chunk).min(points.len());
        for i in start..end {
            state.insert_weighted(points.point(i), points.weight(i))?;
        }
        state
            .check_invariants()
            .map_err(|e| CliError::verify(format!("after {end} insertions: {e}")))?;
        if a.snapshot_every > 0 && end >= next_snapshot {
            snapshots.push(to_value(&state.snapshot()));
            next_snapshot = (end / a.snapshot_every + 1) * a.snapshot_every;
        }
        start = end;
    }
    let extracted = state.extract_coreset();
    if let Some(p) = &a.out {
        write(p, &format_coreset(&extracted))?;
    }
    let query = if a.query {
        let (centers, report) = state.query_clustering(kind)?;
        json!({
            "centers": centers.rows(),
            "full_cost": clustering_cost(&points, &centers, kind)?,
            "report": to_value(&report),
        })
    } else {
        Value::Null
    };
    emit(
        "stream",
        json!({
            "input": path_str(&a.common.input),
            "seed": a.common.seed,
            "config": to_value(state.config()),
            "chunk": a.chunk,
            "maintenance_factor": state.maintenance_factor(),
            "extract_weight": extracted.set.total_weight(),
            "snapshots": snapshots,
            "final": to_value(&state.snapshot()),
            "query": query,
        }),
        a.common.report.as_ref(),
    )
}

fn verify(a: VerifyArgs) -> CliResult<()> {
    if a.coreset.is_none() && !a.brute {
        return Err(CliError::usage("verify needs --coreset or --brute"));
    }
    let points = load_points(&a.common.input)?;
    let mut body = json!({ "input": path_str(&a.common.input), "seed": a.common.seed });
    let mut failures = Vec::new();

    let mut coreset_k = None;
    if let Some(path) = &a.coreset {
        let text = read(path)?;
        let s = parse_coreset(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let k = a.k.unwrap_or(s.k);
        coreset_k = Some((k, s.kind));
        let eps = a.eps.unwrap_or(s.eps);
        let report = certify_coreset(&points, &s, k, eps, a.trials, a.common.seed)?;
        if !report.pass {
            failures.push(format!(
                "coreset failed {} of {} center sets (max deviation {})",
                report.trials - report.passed,
                report.trials,
                report.max_deviation
            ));
        }
        body["coreset"] = json!(path_str(path));
        body["certify"] = to_value(&report);
    }

    if a.brute {
        let (k, kind) = match (a.k, coreset_k) {
            (Some(k), _) => (k, a.kind.into()),
            (None, Some(kk)) => kk,
            (None, None) => return Err(CliError::usage("--brute needs --k")),
        };
        let (opt_centers, opt) = brute_force_discrete(&points, k, kind)?;
        let mut brute = json!({
            "kind": kind,
            "k": k,
            "budget": ORACLE_BUDGET,
            "discrete_opt": opt,
            "opt_centers": opt_centers.rows(),
        });
        if let Some(path) = &a.centers {
            let c = load_centers(path)?;
            let cost = clustering_cost(&points, &c, kind)?;
            let pass = cost <= a.factor * opt;
            if !pass {
                failures.push(format!("centers cost {cost} exceeds {} x discrete optimum {opt}", a.factor));
            }
            brute["centers"] = json!(path_str(path));
            brute["centers_cost"] = json!(cost);
            brute["factor"] = json!(a.factor);
            brute["ratio"] = if opt > 0.0 { json!(cost / opt) } else { Value::Null };
            brute["pass"] = json!(pass);
        }
        body["brute"] = brute;
    }

    body["pass"] = json!(failures.is_empty());
    emit("verify", body, a.common.report.as_ref())?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::verify(failures.join("; ")))
    }
}

fn fuzzy_bench(a: FuzzyBenchArgs) -> CliResult<()> {
    let sites = load_centers(&a.sites)?;
    let queries = load_points(&a.queries)?;
    if queries.dim() != sites.dim() {
        return Err(CliError::usage(format!(
            "query dimension {} differs from site dimension {}",
            queries.dim(),
            sites.dim()
        )));
    }
    let big_delta = match a.big_delta {
        Some(v) => v,
        None => {
            let mut all = WeightedPointSet::from_rows(&sites.rows())?;
            all.extend_from(&queries)?;
            let (lo, hi) = all.bounding_box().expect("non-empty");
            let diag = kcoreset::distance(&lo, &hi);
            if diag > 0.0 {
                2.0 * diag
            } else {
                1.0
            }
        }
    };
    let delta = a.delta.unwrap_or(big_delta * 1e-4);
    let cfg = FuzzyConfig::new(delta, big_delta, a.eps, a.r)?;
    let index = build_index(&sites, cfg)?;
    let bound = probe_bound(sites.dim(), a.r);

    let (mut below, mut in_band, mut above) = (0usize, 0usize, 0usize);
    let (mut exact_hits, mut violations, mut probe_violations) = (0usize, 0usize, 0usize);
    let (mut max_probes, mut total_probes) = (0usize, 0usize);
    let mut worst_ratio: f64 = 1.0;
    for i in 0..queries.len() {
        let q = queries.point(i);
        let (exact, _) = kcoreset::point_set_distance(q, &sites)?;
        let ans = index.query(q);
        total_probes += ans.probes;
        max_probes = max_probes.max(ans.probes);
        if ans.probes > bound {
            probe_violations += 1;
        }
        if ans.distance == exact {
            exact_hits += 1;
        }
        if exact < delta {
            below += 1;
        } else if exact <= big_delta {
            in_band += 1;
            worst_ratio = worst_ratio.max(ans.distance / exact);
            if ans.distance > (1.0 + a.eps) * exact {
                violations += 1;
            }
        } else {
            above += 1;
        }
    }
    let n = queries.len();
    emit(
        "fuzzy-nn bench",
        json!({
            "sites": path_str(&a.sites),
            "queries": path_str(&a.queries),
            "config": to_value(index.config()),
            "index": to_value(&index.stats()),
            "query_count": n,
            "below_delta": below,
            "in_band": in_band,
            "above_big_delta": above,
            "recall": exact_hits as f64 / n as f64,
            "in_band_violations": violations,
            "worst_in_band_ratio": worst_ratio,
            "probe_bound": bound,
            "max_probes": max_probes,
            "mean_probes": total_probes as f64 / n as f64,
            "probe_violations": probe_violations,
            "pass": violations == 0 && probe_violations == 0,
        }),
        a.report.as_ref(),
    )?;
    if violations > 0 || probe_violations > 0 {
        return Err(CliError::verify(format!(
            "{violations} in-band violations, {probe_violations} queries over the probe bound"
        )));
    }
    Ok(())
}

fn gen(a: GenArgs) -> CliResult<()> {
    let shape = match a.shape {
        ShapeArg::Uniform => Shape::Uniform { side: a.side },
        ShapeArg::Blobs => Shape::Blobs {
            blobs: a.clusters,
            separation: a.separation,
            sigma: a.sigma,
        },
        ShapeArg::Coincident => Shape::Coincident {
            clusters: a.clusters,
            separation: a.separation,
        },
    };
    let spec = InstanceSpec {
        n: a.n,
        dim: a.dim,
        seed: a.seed,
        shape,
    };
    let points = generate_instance(&spec)?;
    write(&a.out, &format_points(&points, &[("seed", a.seed.to_string())]))?;
    emit(
        "gen",
        json!({
            "output": path_str(&a.out),
            "spec": to_value(&spec),
            "points": points.len(),
            "distinct": points.distinct_count(),
            "total_weight": points.total_weight(),
        }),
        a.report.as_ref(),
    )
}
