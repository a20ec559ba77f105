//! `partition`, `alg enumerate | chains | run` and `round sr`.

use anyhow::{bail, Result};
use bipoint_core::alg::chains::{builtin, coverage_grid, generate_chains, greedy_cover, iterative_addition, ChainSpec, Universe};
use bipoint_core::alg::exec::{backup_holds, execute, instance_point};
use bipoint_core::alg::expr::point_q;
use bipoint_core::alg::spec::{enumerate_algm, fractional_count, is_valid};
use bipoint_core::bound::GridNlp;
use bipoint_core::instance::{connection_cost, BiPointSolution};
use bipoint_core::num::{fmt_q, parse_q, to_f64, Q};
use bipoint_core::partition::{build_partition, build_stars, classify_clients};
use bipoint_core::rounding::{sr_cost_bound, star_round_traced, t_from_eps};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::report::Report;
use crate::source::{trial_rng, SourceArgs};

pub fn parse_qs(items: &[String]) -> Result<Vec<Q>> {
    items.iter().map(|s| parse_q(s).map_err(|e| anyhow::anyhow!("{s:?}: {e}"))).collect()
}

/// Interior thresholds: given, or the shipped table's for `m`.
fn thresholds(m: usize, g: &[String]) -> Result<Vec<Q>> {
    if !g.is_empty() {
        return parse_qs(g);
    }
    if m == 1 {
        return Ok(vec![]);
    }
    Ok(builtin(&format!("alg{m}"))?.g)
}

pub fn partition(m: usize, g: &[String], src: &SourceArgs, seed: u64) -> Result<Report> {
    let l = src.load(seed)?;
    let g = thresholds(m, g)?;
    if g.len() + 1 != m {
        bail!("m = {m} needs {} thresholds, got {}", m - 1, g.len());
    }
    let forest = build_stars(&l.sol)?;
    let part = build_partition(&l.sol, &forest, &g)?;
    let (classes, profile) = classify_clients(&l.sol, &part)?;
    let summary = json!({
        "m": m,
        "b": fmt_q(&l.sol.b),
        "k": l.sol.k(),
        "d1": l.sol.d1,
        "d2": l.sol.d2,
        "partition": part,
        "profile": profile,
    });
    Ok(Report::new("partition", summary).rows(&classes).seed(seed).instance(l.sha256))
}

pub fn enumerate(m: usize, b: &str, gamma: &[String]) -> Result<Report> {
    let b = parse_q(b).map_err(|e| anyhow::anyhow!("--b: {e}"))?;
    let ga = parse_qs(gamma)?;
    if ga.len() != m {
        bail!("--gamma needs m = {m} values gamma_A1..gamma_Am, got {}", ga.len());
    }
    let pt = point_q(b, ga);
    let algs = enumerate_algm(m, &pt);
    let rows: Vec<_> = algs
        .iter()
        .enumerate()
        .map(|(i, a)| json!({ "id": format!("E{}", i + 1), "p": a.p.iter().map(fmt_q).collect::<Vec<_>>(), "fractional": fractional_count(a) }))
        .collect();
    let summary = json!({ "m": m, "b": fmt_q(&pt.b), "gamma_a": pt.ga.iter().map(fmt_q).collect::<Vec<_>>(), "gamma_c": pt.gc.iter().map(fmt_q).collect::<Vec<_>>(), "count": algs.len() });
    Ok(Report::new("alg enumerate", summary).rows(&rows))
}

pub fn chains(m: usize, greedy: bool, iterative: bool, per_axis: i128) -> Result<Report> {
    let (pool, stats) = generate_chains(m);
    let mut chosen: Option<Vec<usize>> = None;
    let mut summary = json!({ "m": m, "generated": pool.len(), "stats": stats });
    if greedy {
        let u = Universe::build(m, coverage_grid(m, per_axis));
        let c = greedy_cover(&pool, &u);
        summary["greedy"] = json!({ "chosen": c.chosen.len(), "universe": c.universe, "uncovered": c.uncovered, "grid_points": u.points.len() });
        chosen = Some(c.chosen);
    }
    if iterative {
        let g: Vec<f64> = thresholds(m, &[])?.iter().map(to_f64).collect();
        let gammas: Vec<f64> = (1..=8).map(|i| i as f64 / 4.0).collect();
        let h = GridNlp::new(m, &g, 20, &gammas);
        let picked = iterative_addition(&pool, &h, chosen.clone().unwrap_or_default());
        summary["iterative"] = json!({ "chosen": picked.len() });
        chosen = Some(picked);
    }
    let rows: Vec<_> = match &chosen {
        Some(ix) => ix.iter().map(|&i| pool[i].to_json()).collect(),
        None => pool.iter().map(ChainSpec::to_json).collect(),
    };
    Ok(Report::new("alg chains", summary).rows(&rows))
}

#[derive(Serialize)]
pub struct RunRow {
    pub trial: u64,
    pub k: usize,
    pub executed: usize,
    pub invalid: usize,
    pub exact_k: usize,
    pub k_minus_1: usize,
    pub other_size: usize,
    pub backup_failures: usize,
}

/// Instance for trial `t`: the given one, or a fresh random one.
fn trial_instance(src: &SourceArgs, seed: u64, t: u64) -> Result<BiPointSolution> {
    if src.instance.is_some() || src.golden.is_some() {
        return Ok(src.load(seed)?.sol);
    }
    let spec = src.random.clone().unwrap_or_else(|| vec![40, 8, 20, 12]);
    Ok(SourceArgs { random: Some(spec), ..Default::default() }.load(seed.wrapping_add(t))?.sol)
}

pub fn run(table: &str, trials: u64, src: &SourceArgs, seed: u64) -> Result<Report> {
    let t = builtin(table)?;
    let rows: Vec<RunRow> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<RunRow> {
            let sol = trial_instance(src, seed, trial)?;
            let mut rng = trial_rng(seed, trial);
            let forest = build_stars(&sol)?;
            let part = build_partition(&sol, &forest, &t.g)?;
            let k = sol.k();
            let mut row = RunRow { trial, k, executed: 0, invalid: 0, exact_k: 0, k_minus_1: 0, other_size: 0, backup_failures: 0 };
            let Some(pt) = instance_point(&sol, &part) else { return Ok(row) };
            for ch in &t.chains {
                let spec = ch.instantiate(&pt);
                if !is_valid(&spec, &pt) {
                    row.invalid += 1;
                    continue;
                }
                let out = execute(&spec, &part, &mut rng);
                row.executed += 1;
                match out.open.len() {
                    n if n == k => row.exact_k += 1,
                    n if n + 1 == k && out.slack > 0 => row.k_minus_1 += 1,
                    _ => row.other_size += 1,
                }
                if !backup_holds(&sol, &part, &out.open) {
                    row.backup_failures += 1;
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let executed: usize = rows.iter().map(|r| r.executed).sum();
    let km1: usize = rows.iter().map(|r| r.k_minus_1).sum();
    let other: usize = rows.iter().map(|r| r.other_size).sum();
    let backup: usize = rows.iter().map(|r| r.backup_failures).sum();
    let summary = json!({
        "table": table,
        "trials": trials,
        "executions": executed,
        "invalid": rows.iter().map(|r| r.invalid).sum::<usize>(),
        "exact_k": rows.iter().map(|r| r.exact_k).sum::<usize>(),
        "k_minus_1": km1,
        "k_minus_1_rate": if executed > 0 { km1 as f64 / executed as f64 } else { 0.0 },
        "other_size": other,
        "backup_failures": backup,
    });
    Ok(Report::new("alg run", summary).rows(&rows).ok(other == 0 && backup == 0).seed(seed))
}

#[derive(Serialize)]
pub struct SrRow {
    pub trial: u64,
    pub cost: f64,
    pub facilities: usize,
    pub fractional: usize,
}

pub fn round_sr(eps: f64, trials: u64, src: &SourceArgs, seed: u64) -> Result<Report> {
    let src = if src.instance.is_none() && src.random.is_none() && src.golden.is_none() { SourceArgs::random([40, 8, 20, 12]) } else { src.clone() };
    let l = src.load(seed)?;
    let sol = &l.sol;
    let t = t_from_eps(eps)?;
    let rows: Vec<SrRow> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<SrRow> {
            let mut rng = trial_rng(seed, trial);
            let (open, trace) = star_round_traced(sol, eps, &mut rng)?;
            Ok(SrRow { trial, cost: connection_cost(&sol.instance, &open)?, facilities: open.len(), fractional: trace.fractional_count })
        })
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.cost).sum::<f64>() / n.max(1.0);
    let var = if rows.len() > 1 { rows.iter().map(|r| (r.cost - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let sd = var.sqrt();
    let bound = sr_cost_bound(sol, eps);
    let slack = 3.0 * sd / n.max(1.0).sqrt();
    let max_fac = rows.iter().map(|r| r.facilities).max().unwrap_or(0);
    let budget = sol.k() + 2 * t;
    let mean_ok = rows.is_empty() || mean <= bound + slack;
    let summary = json!({
        "eps": eps, "t": t, "trials": trials,
        "k": sol.k(), "b": fmt_q(&sol.b), "d1": sol.d1, "d2": sol.d2, "fractional_cost": sol.cost(),
        "mean_cost": mean, "sd": sd, "bound": bound, "slack": slack, "mean_within_bound": mean_ok,
        "max_facilities": max_fac, "facility_budget": budget, "budget_respected": max_fac <= budget,
    });
    Ok(Report::new("round sr", summary).rows(&rows).ok(mean_ok && max_fac <= budget).seed(seed).instance(l.sha256))
}
