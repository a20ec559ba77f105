//! `gap build | verify | brute`.

use std::path::Path;

use anyhow::Result;
use bipoint_core::gap::{brute_force_opt, build_golden, extreme_points, gap_lower_bound, Constants, Golden, GoldenInstance, SolutionProfile};
use bipoint_core::instance::write_instance;
use bipoint_core::num::{fmt_q, to_f64, Scalar, Q};
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::json;

use crate::report::{sha256_hex, Report};
use crate::source::instance_sha;

/// Explicit instances larger than this are refused.
pub const MAX_POINTS: usize = 20_000;

fn descriptor_sha(g: &GoldenInstance) -> String {
    let r = &g.consts.rational;
    sha256_hex(format!("golden k={} |A|={} |C|={} ell={} a={} b={}", g.k(), g.n_a, g.n_c, fmt_q(&r.ell), fmt_q(&r.a), fmt_q(&r.b)).as_bytes())
}

pub fn build(k: usize, out: &Path) -> Result<Report> {
    let g = build_golden(k)?;
    let sol = g.to_bipoint(MAX_POINTS)?;
    let text = write_instance(&sol);
    std::fs::write(out, &text)?;
    let summary = json!({
        "k": k,
        "out": out.display().to_string(),
        "points": sol.instance.n(),
        "facilities": sol.instance.facilities.len(),
        "clients": sol.instance.clients.len(),
        "fractional_cost": fmt_q(&sol.cost_exact().expect("exact instance")),
    });
    Ok(Report::new("gap build", summary).instance(sha256_hex(text.as_bytes())))
}

#[derive(Serialize)]
struct VertexRow {
    x_a: String,
    x_b: String,
    x_c: String,
    value: String,
    value_f64: f64,
    at_sqrt_phi: bool,
}

fn vertex_rows(c: &Constants<Golden>) -> Vec<VertexRow> {
    let s = Golden::s();
    extreme_points(c)
        .into_iter()
        .map(|v| VertexRow {
            x_a: v.profile.x_a.to_decimal(20),
            x_b: v.profile.x_b.to_decimal(20),
            x_c: v.profile.x_c.to_decimal(20),
            value_f64: v.value.as_f64(),
            at_sqrt_phi: v.value == s,
            value: v.value.to_decimal(50),
        })
        .collect()
}

/// The algebraic facts the gap argument rests on, each checked exactly.
fn identities(c: &Constants<Golden>) -> serde_json::Value {
    let one = Golden::one();
    let two = Golden::from_i64(2);
    let s = Golden::s();
    let d1 = two.clone() - c.ell.clone() + two.clone() * c.a.clone() * c.ell.clone();
    json!({
        "phi^2-phi-1=0": (c.phi.clone() * c.phi.clone() - c.phi.clone() - one.clone()).is_zero(),
        "unit_cost": two.clone() * c.a.clone() + c.ell.clone() * (one.clone() - two.clone() * c.a.clone() * c.b.clone()) == one,
        "facility_ratio=omega": c.r_b.clone() / (c.r_b.clone() + c.r_c.clone()) == c.omega,
        "cost_ratio=omega": c.ell.clone() / d1 == c.omega,
        "2*omega*phi=1+omega^2": two.clone() * c.omega.clone() * c.phi.clone() == one + c.omega.clone() * c.omega.clone(),
        "l+2a=sqrt_phi": c.ell.clone() + two * c.a.clone() == s,
    })
}

pub fn verify(k: usize, surplus: Option<usize>) -> Result<Report> {
    let g = build_golden(k)?;
    let val = g.validate();
    let costs = g.costs();
    let frac = g.fractional_cost();
    let tol = 10.0 / k as f64;
    let cost_ok = (to_f64(&frac) - 1.0).abs() <= tol;
    let exact = &g.consts.exact;
    let rows = vertex_rows(exact);
    let min_exact = gap_lower_bound(exact, &Golden::zero()).expect("plane meets the cube");
    let sqrt_phi = Golden::s();
    let min_is_sqrt_phi = min_exact == sqrt_phi;
    let ids = identities(exact);
    let ids_ok = ids.as_object().unwrap().values().all(|v| v.as_bool() == Some(true));
    let rat = &g.consts.rational;
    let rational_min = gap_lower_bound(rat, &Q::zero()).expect("plane meets the cube");
    let surplus_json = surplus.map(|s| {
        let frac_s = Q::new(s.into(), k.into());
        let exact_v = gap_lower_bound(exact, &Golden::from_q(frac_s.clone()));
        let rat_v = gap_lower_bound(rat, &frac_s);
        json!({
            "surplus": s,
            "exact": exact_v.as_ref().map(|v| v.to_decimal(30)),
            "rational": rat_v.as_ref().map(to_f64),
        })
    });
    let errors: serde_json::Map<String, serde_json::Value> = g.consts.errors().into_iter().map(|(n, e)| (n.to_string(), json!(e))).collect();
    let summary = json!({
        "k": k,
        "sizes": { "A": g.n_a, "B": g.n_a, "C": g.n_c, "F1": g.n_a, "F2": g.n_a + g.n_c, "clients": g.n_clients() },
        "constants": {
            "a": fmt_q(&rat.a), "b": fmt_q(&rat.b), "ell": fmt_q(&rat.ell),
            "r_B": fmt_q(&rat.r_b), "r_C": fmt_q(&rat.r_c), "abs_error": errors,
        },
        "validity": val.checks.iter().map(|c| (c.name.clone(), json!(c.pass))).collect::<serde_json::Map<_, _>>(),
        "validity_detail": val.checks,
        "fractional_cost": { "exact": fmt_q(&frac), "f64": to_f64(&frac), "tolerance": tol, "within": cost_ok, "by_class": costs },
        "vertices": rows,
        "vertex_count": rows.len(),
        "extra_vertex": rows.len() != 5,
        "min_value": min_exact.to_decimal(50),
        "sqrt_phi": sqrt_phi.to_decimal(50),
        "min_equals_sqrt_phi": min_is_sqrt_phi,
        "identities": ids,
        "rational_min_value": to_f64(&rational_min),
        "surplus": surplus_json,
    });
    let ok = val.pass && cost_ok && min_is_sqrt_phi && ids_ok && costs.third_nearest_ok;
    Ok(Report::new("gap verify", summary).ok(ok).instance(descriptor_sha(&g)))
}

pub fn brute(k: usize, kprime: Option<usize>, budget: u128, prune: bool, cross_check: bool) -> Result<Report> {
    let g = build_golden(k)?;
    let sol = g.to_bipoint(MAX_POINTS)?;
    let kp = kprime.unwrap_or(k);
    let r = brute_force_opt(&sol.instance, kp, budget, prune)?;
    let opt = r.cost_exact.clone().expect("exact instance");
    let frac = g.fractional_cost();
    // the plane uses |S| = k'
    let surplus = Q::new((kp as i64 - k as i64).into(), k.into());
    let lb = gap_lower_bound(&g.consts.rational, &surplus);
    let dominates = lb.as_ref().map_or(true, |lb| opt >= *lb);
    let is_open = |i: usize| r.open.facilities.binary_search(&i).is_ok();
    let count = |range: std::ops::Range<usize>| range.filter(|&i| is_open(i)).count();
    let (na, nc) = (g.n_a, g.n_c);
    let xa = Q::new(count(0..na).into(), na.into());
    let xb = Q::new(count(na..2 * na).into(), na.into());
    let xc = Q::new(count(2 * na..2 * na + nc).into(), nc.into());
    let mut profile = SolutionProfile::from_marginals(xa, xb, xc);
    let pairs = |want_a: bool, want_b: bool| (0..na).filter(|&i| is_open(i) == want_a && is_open(na + i) == want_b).count();
    profile.x00 = Q::new(pairs(false, false).into(), na.into());
    profile.x01 = Q::new(pairs(false, true).into(), na.into());
    profile.x10 = Q::new(pairs(true, false).into(), na.into());
    profile.x11 = Q::new(pairs(true, true).into(), na.into());
    let unpruned = if cross_check && prune {
        let u = brute_force_opt(&sol.instance, kp, budget, false)?;
        Some(json!({ "cost": fmt_q(u.cost_exact.as_ref().unwrap()), "matches": u.cost_exact == r.cost_exact, "visited": u.visited }))
    } else {
        None
    };
    let cross_ok = unpruned.as_ref().map_or(true, |u| u["matches"] == json!(true));
    let ratio = to_f64(&opt) / to_f64(&frac);
    let summary = json!({
        "k": k,
        "k_prime": kp,
        "facilities": sol.instance.facilities.len(),
        "subsets": r.subsets.to_string(),
        "visited": r.visited,
        "open": r.open.facilities,
        "cost": fmt_q(&opt),
        "cost_f64": r.cost,
        "fractional_cost": fmt_q(&frac),
        "ratio": ratio,
        "sqrt_phi": Golden::s().as_f64(),
        "ratio_minus_sqrt_phi": ratio - Golden::s().as_f64(),
        "vertex_bound": lb.as_ref().map(fmt_q),
        "vertex_bound_f64": lb.as_ref().map(to_f64),
        "dominates": dominates,
        "profile": profile.map(fmt_q),
        "unpruned": unpruned,
    });
    Ok(Report::new("gap brute", summary).ok(dominates && cross_ok).instance(instance_sha(&sol)))
}
