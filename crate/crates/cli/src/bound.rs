//! `bound` runs, point checks and certificate audits.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bipoint_core::alg::chains::builtin;
use bipoint_core::bound::{audit_certificate, branch_and_bound, evaluate_point, preset, read_certificate, write_certificate, BnbConfig, CertStatus, NlpModel, PointAssignment};
use bipoint_core::num::to_f64;
use serde_json::json;

use crate::report::{sha256_hex, Report};

/// Default table for `m`: the published one.
pub fn default_table(m: usize) -> String {
    format!("alg{m}")
}

pub fn model(m: usize, g: Option<&[f64]>, table: Option<&str>) -> Result<NlpModel> {
    let name = table.map(str::to_string).unwrap_or_else(|| default_table(m));
    let t = builtin(&name)?;
    if t.m != m {
        bail!("table {name} has m = {}, asked for m = {m}", t.m);
    }
    let g: Vec<f64> = match g {
        Some(g) => g.to_vec(),
        None => t.g.iter().map(to_f64).collect(),
    };
    Ok(NlpModel::new(m, &g, t.chains)?)
}

pub struct RunArgs<'a> {
    pub m: usize,
    pub g: Option<&'a [f64]>,
    pub table: Option<&'a str>,
    pub target: f64,
    pub budget_boxes: usize,
    pub checkpoint: Option<PathBuf>,
    pub resume: bool,
    pub cert: Option<PathBuf>,
}

pub fn run(a: RunArgs) -> Result<Report> {
    let model = model(a.m, a.g, a.table)?;
    let mut cfg = BnbConfig::new(a.target, a.budget_boxes);
    cfg.checkpoint = a.checkpoint.clone();
    let cert = branch_and_bound(&model, &cfg, a.resume)?;
    let path = a.cert.unwrap_or_else(|| PathBuf::from(format!("bound-m{}-{}.ndjson", a.m, a.target)));
    {
        let w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        write_certificate(&cert, w)?;
    }
    let bytes = std::fs::read(&path)?;
    let summary = json!({
        "m": cert.m,
        "g": cert.g,
        "chains": cert.chains.len(),
        "target": cert.target,
        "delta": cert.delta,
        "status": cert.status,
        "processed": cert.processed,
        "leaves": cert.leaves.len(),
        "max_depth": cert.max_depth,
        "max_leaf_lp": cert.max_leaf_lp,
        "worst": cert.worst,
        "certificate": path.display().to_string(),
        "certificate_sha256": sha256_hex(&bytes),
    });
    Ok(Report::new("bound", summary).ok(cert.status == CertStatus::Certified))
}

pub fn point(name: Option<&str>, file: Option<&Path>) -> Result<Report> {
    let (pa, src): (PointAssignment, String) = match (name, file) {
        (Some(n), None) => (preset(n)?, format!("preset:{n}")),
        (None, Some(f)) => {
            let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
            (serde_json::from_str(&text).with_context(|| format!("parsing {}", f.display()))?, sha256_hex(text.as_bytes()))
        }
        _ => bail!("give exactly one of --preset or --file"),
    };
    let r = evaluate_point(&pa)?;
    let summary = json!({ "source": src, "point": pa, "report": r });
    Ok(Report::new("bound point", summary).ok(r.feasible).instance(sha256_hex(serde_json::to_string(&pa)?.as_bytes())))
}

pub fn audit(cert_path: &Path, table: Option<&str>) -> Result<Report> {
    let f = File::open(cert_path).with_context(|| format!("opening {}", cert_path.display()))?;
    let cert = read_certificate(BufReader::new(f))?;
    let model = model(cert.m, Some(&cert.g), table)?;
    let names: Vec<String> = model.chains.iter().map(|c| c.name.clone()).collect();
    if names != cert.chains {
        bail!("certificate chains {:?} do not match the table's {:?}", cert.chains, names);
    }
    let r = audit_certificate(&model, &cert);
    let summary = json!({ "certificate": cert_path.display().to_string(), "target": cert.target, "status": cert.status, "audit": r });
    Ok(Report::new("bound audit", summary).ok(r.ok))
}
