//! Monte Carlo harness: best-of on random bi-point instances.

use anyhow::Result;
use bipoint_core::alg::exec::best_of;
use bipoint_core::gap::{brute_force_opt, build_golden};
use bipoint_core::instance::synthesize_random_bipoint;
use bipoint_core::num::{fmt_q, to_f64};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::report::{sha256_hex, Report};
use crate::source::{instance_sha, trial_rng};

/// The factor the family is claimed to reach.
pub const CLAIMED_FACTOR: f64 = 1.3064;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub instance: u64,
    pub sha256: String,
    pub clients: usize,
    pub f1: usize,
    pub f2: usize,
    pub k: usize,
    pub b: String,
    pub fractional_cost: f64,
    pub cost: f64,
    pub ratio: f64,
    pub source: String,
    pub size: usize,
}

pub struct SuiteArgs {
    pub instances: u64,
    pub eps: f64,
    pub golden_k: Option<usize>,
}

pub fn run(a: &SuiteArgs, seed: u64) -> Result<Report> {
    let rows: Vec<SuiteRow> = (0..a.instances)
        .into_par_iter()
        .map(|i| -> Result<SuiteRow> {
            // stream 2i draws the instance, stream 2i+1 drives the algorithms
            let mut gen = trial_rng(seed, 2 * i);
            let f1 = gen.gen_range(3..=10);
            let f2 = gen.gen_range(f1 + 2..=f1 + 14);
            let k = gen.gen_range(f1 + 1..f2);
            let clients = gen.gen_range(15..=60);
            let sol = synthesize_random_bipoint(clients, f1, f2, k, gen.gen())?;
            let mut rng = trial_rng(seed, 2 * i + 1);
            let best = best_of(&sol, a.eps, &mut rng)?;
            let frac = sol.cost();
            Ok(SuiteRow {
                instance: i,
                sha256: instance_sha(&sol),
                clients,
                f1,
                f2,
                k,
                b: fmt_q(&sol.b),
                fractional_cost: frac,
                cost: best.cost,
                ratio: best.cost / frac,
                source: best.source,
                size: best.open.len(),
            })
        })
        .collect::<Result<_>>()?;
    let threshold = CLAIMED_FACTOR * (1.0 + a.eps);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let mean_ratio = if rows.is_empty() { 0.0 } else { rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64 };
    let over = rows.iter().filter(|r| r.ratio > threshold).count();
    let golden = match a.golden_k {
        Some(k) => {
            let sol = build_golden(k)?.to_bipoint(20_000)?;
            let mut rng = trial_rng(seed, u64::MAX);
            let best = best_of(&sol, a.eps, &mut rng)?;
            // optimum with as many facilities as the chosen solution opened
            let n = best.open.len().min(sol.instance.facilities.len());
            let opt = brute_force_opt(&sol.instance, n, 1 << 24, true)?;
            let opt_cost = to_f64(opt.cost_exact.as_ref().expect("exact instance"));
            Some(json!({
                "k": k, "sha256": instance_sha(&sol), "best_of": best.cost, "source": best.source, "size": n,
                "brute_force": opt_cost, "not_below_optimum": best.cost >= opt_cost - 1e-12,
            }))
        }
        None => None,
    };
    let golden_ok = golden.as_ref().map_or(true, |g| g["not_below_optimum"] == json!(true));
    let summary = json!({
        "instances": a.instances,
        "eps": a.eps,
        "threshold": threshold,
        "max_ratio": max_ratio,
        "mean_ratio": mean_ratio,
        "over_threshold": over,
        "golden": golden,
    });
    let digest = sha256_hex(rows.iter().map(|r| r.sha256.as_str()).collect::<Vec<_>>().join("\n").as_bytes());
    Ok(Report::new("suite", summary).rows(&rows).ok(over == 0 && golden_ok).seed(seed).instance(digest))
}
