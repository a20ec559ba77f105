//! Best-first branch and bound over boxes of `(b, gamma_{A_2}, .., gamma_{A_m})`.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Ordering;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::enclose::IntervalBox;
use super::interval::Interval;
use super::model::{box_value, NlpModel, DELTA};
use crate::error::{Error, Result};

/// Split point of unbounded `gamma` ranges; `[N, inf)` is never divided.
pub const TAIL_N: f64 = 2.0;

/// A box in split coordinates `[b, gamma_{A_2}, .., gamma_{A_m}]`; `None`
/// as an upper end means `+inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxNode {
    pub path: Vec<u32>,
    pub lo: Vec<f64>,
    pub hi: Vec<Option<f64>>,
    /// LP value of the parent; the search priority.
    pub prio: f64,
}

impl BoxNode {
    pub fn root(m: usize) -> Self {
        let mut hi = vec![None; m];
        hi[0] = Some(1.0);
        BoxNode { path: vec![], lo: vec![0.0; m], hi, prio: f64::INFINITY }
    }

    pub fn to_box(&self) -> IntervalBox {
        let m = self.lo.len();
        let mut vars = vec![Interval::new(0.0, f64::INFINITY); m + 1];
        vars[0] = Interval::new(self.lo[0], self.hi[0].unwrap_or(f64::INFINITY));
        for t in 1..m {
            vars[t + 1] = Interval::new(self.lo[t], self.hi[t].unwrap_or(f64::INFINITY));
        }
        IntervalBox { vars }
    }

    /// Halves of each coordinate; `[0, inf)` splits at `N`, tails stay whole.
    fn halves(&self, i: usize) -> Vec<(f64, Option<f64>)> {
        match self.hi[i] {
            Some(h) => {
                let mid = 0.5 * (self.lo[i] + h);
                vec![(self.lo[i], Some(mid)), (mid, Some(h))]
            }
            None if self.lo[i] < TAIL_N => vec![(self.lo[i], Some(TAIL_N)), (TAIL_N, None)],
            None => vec![(self.lo[i], None)],
        }
    }

    pub fn children(&self, prio: f64) -> Vec<BoxNode> {
        let d = self.lo.len();
        let hv: Vec<_> = (0..d).map(|i| self.halves(i)).collect();
        let n: usize = hv.iter().map(|h| h.len()).product();
        (0..n)
            .map(|mut c| {
                let idx = c as u32;
                let mut lo = Vec::with_capacity(d);
                let mut hi = Vec::with_capacity(d);
                for h in &hv {
                    let (l, u) = h[c % h.len()];
                    c /= h.len();
                    lo.push(l);
                    hi.push(u);
                }
                let mut path = self.path.clone();
                path.push(idx);
                BoxNode { path, lo, hi, prio }
            })
            .collect()
    }

    /// Width of the finite coordinates.
    pub fn finite_width(&self) -> f64 {
        self.lo.iter().zip(&self.hi).filter_map(|(l, h)| h.map(|h| h - l)).fold(0.0, f64::max)
    }
}

struct Prio(BoxNode);

impl PartialEq for Prio {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Prio {}
impl PartialOrd for Prio {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Prio {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.prio.total_cmp(&o.0.prio).then_with(|| o.0.path.cmp(&self.0.path))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafRecord {
    pub path: Vec<u32>,
    pub lo: Vec<f64>,
    pub hi: Vec<Option<f64>>,
    pub lp: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertStatus {
    Certified,
    ExhaustedBudget,
    CounterexampleBox,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub m: usize,
    pub g: Vec<f64>,
    pub chains: Vec<String>,
    pub target: f64,
    pub delta: f64,
    pub status: CertStatus,
    pub processed: usize,
    pub max_depth: usize,
    /// Largest LP value among certified leaves.
    pub max_leaf_lp: f64,
    /// The worst surviving box when not certified.
    pub worst: Option<LeafRecord>,
    pub leaves: Vec<LeafRecord>,
}

#[derive(Clone, Debug)]
pub struct BnbConfig {
    pub target: f64,
    pub budget_boxes: usize,
    /// Boxes whose finite sides are all below this are not split further.
    pub min_width: f64,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_every: usize,
    pub batch: usize,
}

impl BnbConfig {
    pub fn new(target: f64, budget_boxes: usize) -> Self {
        BnbConfig { target, budget_boxes, min_width: 1.0 / 16384.0, checkpoint: None, checkpoint_every: 10_000, batch: 64 }
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    m: usize,
    g: Vec<f64>,
    chains: Vec<String>,
    target: f64,
    processed: usize,
    max_depth: usize,
    work: Vec<BoxNode>,
    leaves: Vec<LeafRecord>,
}

fn interior_g(model: &NlpModel) -> Vec<f64> {
    model.g_full[1..model.m].to_vec()
}

fn chain_names(model: &NlpModel) -> Vec<String> {
    model.chains.iter().map(|c| c.name.clone()).collect()
}

fn leaf(node: &BoxNode, lp: f64) -> LeafRecord {
    LeafRecord { path: node.path.clone(), lo: node.lo.clone(), hi: node.hi.clone(), lp }
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec(ck)?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs the search from `Omega`, or from the checkpoint when `resume` is set
/// and the file exists.
pub fn branch_and_bound(model: &NlpModel, cfg: &BnbConfig, resume: bool) -> Result<BoundCertificate> {
    if !(cfg.target > 1.0) {
        return Err(Error::Arg(format!("target must exceed 1, got {}", cfg.target)));
    }
    let m = model.m;
    let mut heap = BinaryHeap::new();
    let mut leaves = Vec::new();
    let mut processed = 0usize;
    let mut max_depth = 0usize;
    let loaded = match (&cfg.checkpoint, resume) {
        (Some(p), true) if p.exists() => {
            let ck: Checkpoint = serde_json::from_slice(&std::fs::read(p)?)?;
            if ck.m != m || ck.g != interior_g(model) || ck.chains != chain_names(model) || ck.target != cfg.target {
                return Err(Error::Arg(format!("checkpoint {} was written for a different model or target", p.display())));
            }
            processed = ck.processed;
            max_depth = ck.max_depth;
            leaves = ck.leaves;
            heap.extend(ck.work.into_iter().map(Prio));
            true
        }
        _ => false,
    };
    if !loaded {
        heap.push(Prio(BoxNode::root(m)));
    }
    let mut status = CertStatus::Certified;
    let mut worst: Option<LeafRecord> = None;
    let mut since_ck = 0usize;
    while !heap.is_empty() {
        if processed >= cfg.budget_boxes {
            status = CertStatus::ExhaustedBudget;
            let top = &heap.peek().unwrap().0;
            worst = Some(leaf(top, top.prio));
            break;
        }
        let take = cfg.batch.min(cfg.budget_boxes - processed).min(heap.len());
        let batch: Vec<BoxNode> = (0..take).map(|_| heap.pop().unwrap().0).collect();
        let vals: Vec<f64> = batch.par_iter().map(|n| box_value(model, &n.to_box())).collect();
        processed += batch.len();
        since_ck += batch.len();
        let mut stop = None;
        for (node, v) in batch.into_iter().zip(vals) {
            max_depth = max_depth.max(node.path.len());
            if v + DELTA <= cfg.target {
                leaves.push(leaf(&node, v));
            } else if node.finite_width() <= cfg.min_width {
                if stop.is_none() {
                    stop = Some(leaf(&node, v));
                }
                heap.push(Prio(BoxNode { prio: v, ..node }));
            } else {
                heap.extend(node.children(v).into_iter().map(Prio));
            }
        }
        if let Some(s) = stop {
            status = CertStatus::CounterexampleBox;
            worst = Some(s);
            break;
        }
        if let Some(p) = &cfg.checkpoint {
            if since_ck >= cfg.checkpoint_every {
                since_ck = 0;
                let ck = Checkpoint {
                    version: 1,
                    m,
                    g: interior_g(model),
                    chains: chain_names(model),
                    target: cfg.target,
                    processed,
                    max_depth,
                    work: heap.iter().map(|p| p.0.clone()).collect(),
                    leaves: leaves.clone(),
                };
                write_checkpoint(p, &ck)?;
            }
        }
    }
    if let (Some(p), CertStatus::Certified) = (&cfg.checkpoint, status) {
        let _ = std::fs::remove_file(p);
    }
    leaves.sort_by(|a, b| a.path.cmp(&b.path));
    let max_leaf_lp = leaves.iter().map(|l| l.lp).fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundCertificate {
        m,
        g: interior_g(model),
        chains: chain_names(model),
        target: cfg.target,
        delta: DELTA,
        status,
        processed,
        max_depth,
        max_leaf_lp,
        worst,
        leaves,
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    m: usize,
    g: Vec<f64>,
    chains: Vec<String>,
    target: f64,
    delta: f64,
    status: CertStatus,
    processed: usize,
    max_depth: usize,
    max_leaf_lp: f64,
    worst: Option<LeafRecord>,
}

/// One JSON header line, then one line per leaf box.
pub fn write_certificate<W: Write>(cert: &BoundCertificate, mut w: W) -> Result<()> {
    let h = Header {
        m: cert.m,
        g: cert.g.clone(),
        chains: cert.chains.clone(),
        target: cert.target,
        delta: cert.delta,
        status: cert.status,
        processed: cert.processed,
        max_depth: cert.max_depth,
        max_leaf_lp: cert.max_leaf_lp,
        worst: cert.worst.clone(),
    };
    writeln!(w, "{}", serde_json::to_string(&h)?)?;
    for l in &cert.leaves {
        writeln!(w, "{}", serde_json::to_string(l)?)?;
    }
    Ok(())
}

pub fn read_certificate<R: BufRead>(r: R) -> Result<BoundCertificate> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty certificate".into() })??;
    let h: Header = serde_json::from_str(&first).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    let mut leaves = Vec::new();
    for (i, l) in lines.enumerate() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        leaves.push(serde_json::from_str(&l).map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() })?);
    }
    Ok(BoundCertificate {
        m: h.m,
        g: h.g,
        chains: h.chains,
        target: h.target,
        delta: h.delta,
        status: h.status,
        processed: h.processed,
        max_depth: h.max_depth,
        max_leaf_lp: h.max_leaf_lp,
        worst: h.worst,
        leaves,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub leaves: usize,
    /// Leaves form a complete subdivision of `Omega` and match their paths.
    pub covers_omega: bool,
    pub max_lp: f64,
    /// Leaves whose re-solved value plus margin exceeds the target.
    pub failures: Vec<Vec<u32>>,
    pub ok: bool,
}

/// Re-solves every leaf LP and checks that the leaves tile `Omega`.
pub fn audit_certificate(model: &NlpModel, cert: &BoundCertificate) -> AuditReport {
    let vals: Vec<f64> = cert.leaves.par_iter().map(|l| {
        let n = BoxNode { path: l.path.clone(), lo: l.lo.clone(), hi: l.hi.clone(), prio: 0.0 };
        box_value(model, &n.to_box())
    }).collect();
    let failures: Vec<Vec<u32>> = cert.leaves.iter().zip(&vals).filter(|(_, v)| **v + DELTA > cert.target).map(|(l, _)| l.path.clone()).collect();
    let max_lp = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let covers_omega = tiles(model.m, &cert.leaves);
    AuditReport { leaves: cert.leaves.len(), covers_omega, max_lp, ok: covers_omega && failures.is_empty() && cert.status == CertStatus::Certified, failures }
}

fn tiles(m: usize, leaves: &[LeafRecord]) -> bool {
    let set: std::collections::BTreeMap<&[u32], &LeafRecord> = leaves.iter().map(|l| (l.path.as_slice(), l)).collect();
    if set.len() != leaves.len() {
        return false;
    }
    let prefixes: BTreeSet<&[u32]> = leaves.iter().flat_map(|l| (0..l.path.len()).map(move |k| &l.path[..k])).collect();
    let mut stack = vec![BoxNode::root(m)];
    let mut seen = 0usize;
    while let Some(n) = stack.pop() {
        if let Some(l) = set.get(n.path.as_slice()) {
            if prefixes.contains(n.path.as_slice()) || l.lo != n.lo || l.hi != n.hi {
                return false;
            }
            seen += 1;
        } else if prefixes.contains(n.path.as_slice()) {
            stack.extend(n.children(0.0));
        } else {
            return false;
        }
    }
    seen == leaves.len()
}

/// Wall-clock helper for reports.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed().as_secs_f64())
}
