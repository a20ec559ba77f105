use bipoint_core::alg::cost::CostProfile;
use bipoint_core::bound::{audit_certificate, branch_and_bound, evaluate_point, preset, BnbConfig, CertStatus, NlpModel, PointAssignment, DELTA};

fn sorted_paths(c: &bipoint_core::bound::BoundCertificate) -> Vec<Vec<u32>> {
    let mut p: Vec<_> = c.leaves.iter().map(|l| l.path.clone()).collect();
    p.sort();
    p
}

#[test]
fn resume_reaches_the_same_certificate() {
    let model = NlpModel::from_table("alg2").unwrap();
    let fresh = branch_and_bound(&model, &BnbConfig::new(1.35, 200_000), false).unwrap();
    assert_eq!(fresh.status, CertStatus::Certified);

    let dir = std::env::temp_dir().join(format!("bipoint-resume-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut cfg = BnbConfig::new(1.35, 300);
    cfg.checkpoint = Some(dir.join("ck.json"));
    cfg.checkpoint_every = 100;
    let partial = branch_and_bound(&model, &cfg, false).unwrap();
    assert_eq!(partial.status, CertStatus::ExhaustedBudget);
    cfg.budget_boxes = 200_000;
    let resumed = branch_and_bound(&model, &cfg, true).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();

    assert_eq!(resumed.status, CertStatus::Certified);
    assert_eq!(resumed.processed, fresh.processed);
    assert_eq!(sorted_paths(&resumed), sorted_paths(&fresh));
    let a = audit_certificate(&model, &resumed);
    assert!(a.ok && a.covers_omega);
}

#[test]
fn below_the_optimum_is_never_certified() {
    let model = NlpModel::from_table("alg2").unwrap();
    for target in [1.25, 1.29] {
        let c = branch_and_bound(&model, &BnbConfig::new(target, 3_000), false).unwrap();
        assert_ne!(c.status, CertStatus::Certified, "target {target}");
        let w = c.worst.expect("a surviving box");
        assert!(w.lp + DELTA > target);
    }
}

#[test]
fn certified_leaves_clear_the_target() {
    let model = NlpModel::from_table("alg2").unwrap();
    let c = branch_and_bound(&model, &BnbConfig::new(1.35, 200_000), false).unwrap();
    assert!(c.leaves.iter().all(|l| l.lp + DELTA <= 1.35));
    assert!(c.max_leaf_lp + DELTA <= 1.35);
}

/// The hard point embedded at level `m`: its facilities sit in the top
/// level, so lower levels are empty.
fn hard_point_at(m: usize, g_low: &[f64]) -> PointAssignment {
    let base = preset("hard-point-s3").unwrap();
    let d2 = &base.d;
    let top = m - 1;
    let mut d = CostProfile::zeros(m);
    // y: B_2 -> B_top, C_1 -> C_1, C_2 -> C_top
    d.db1[top][top] = d2.db1[1][1];
    d.db2[top][top] = d2.db2[1][1];
    d.dc1[top][0] += d2.dc1[1][0];
    d.dc1[top][top] += d2.dc1[1][1];
    d.dc2[top][0] += d2.dc2[1][0];
    d.dc2[top][top] += d2.dc2[1][1];
    let mut ga = vec![0.0; m];
    ga[top] = 0.7478;
    let mut gc = vec![0.0; m];
    gc[0] += 1.0 - 0.3291;
    gc[top] += 0.3291;
    let mut g_full = vec![0.0];
    g_full.extend_from_slice(g_low);
    if m > 1 {
        g_full.push(1.0);
        g_full.push(1.0 + 1e-6);
    } else {
        g_full.push(1.0);
    }
    PointAssignment { m, g: vec![], g_full: Some(g_full), ga, gc: Some(gc), d, table: None, ..base }
}

#[test]
fn hard_point_holds_at_every_level() {
    let cases: Vec<(usize, Vec<f64>)> = vec![(1, vec![]), (2, vec![]), (3, vec![0.2]), (3, vec![0.5]), (3, vec![0.8])];
    for (m, g) in cases {
        let r = evaluate_point(&hard_point_at(m, &g)).unwrap();
        assert!(r.feasible, "m={m} g={g:?}: {:?}", r.violations);
        assert!(r.objective >= 1.294, "m={m} g={g:?}: {}", r.objective);
    }
}
