use bipoint_core::gap::*;
use bipoint_core::instance::{connection_cost, synthesize_random_bipoint, validate_bipoint, OpenSet};
use bipoint_core::num::{fmt_q, q, to_f64, Scalar, Q};
use num_traits::One;

// 50-digit values from an independent decimal computation
const SQRT_PHI: &str = "1.27201964951406896425242246173749149171560804184009";
const R_B: &str = "0.44013703852159740211739421321481230351842091987205";
const R_C: &str = "0.83188261099247156213502824852267918819718712196803";
const B: &str = "0.67300716961791294197608218631407331300235056898283";
const F_V5: &str = "1.42640472176453111675287767478283221220717165509273";

#[test]
fn constants_to_50_digits() {
    let c = Constants::exact();
    assert_eq!(Golden::s().to_decimal(50), SQRT_PHI);
    assert_eq!(c.r_b.to_decimal(50), R_B);
    assert_eq!(c.r_c.to_decimal(50), R_C);
    assert_eq!(c.b.to_decimal(50), B);
    assert_eq!(c.b.clone(), (Golden::one() + c.omega.clone()) / Golden::from_i64(2));
}

#[test]
fn algebraic_identities() {
    let c = Constants::exact();
    let one = Golden::one();
    let two = Golden::from_i64(2);
    // phi^2 - phi - 1 = 0
    assert_eq!(c.phi.clone() * c.phi.clone() - c.phi.clone() - one.clone(), Golden::from_i64(0));
    // |F1|/|F2| = omega
    assert_eq!(c.r_b.clone() / (c.r_b.clone() + c.r_c.clone()), c.omega);
    // unit cost: 2a + l(1 - 2ab) = 1
    let cost = two.clone() * c.a.clone() + c.ell.clone() * (one.clone() - two.clone() * c.a.clone() * c.b.clone());
    assert_eq!(cost, one);
    // D2/D1 = omega with D1 = 2 - l + 2al, D2 = l
    let d1 = two.clone() - c.ell.clone() + two * c.a.clone() * c.ell.clone();
    assert_eq!(c.ell.clone() / d1, c.omega);
}

#[test]
fn vertex_table() {
    let c = Constants::exact();
    let vs = extreme_points(&c);
    assert_eq!(vs.len(), 5, "no sixth vertex for the exact constants");
    let one = Golden::one();
    let zero = Golden::from_i64(0);
    let two_minus_phi = Golden::from_i64(2) - c.phi.clone();
    let find = |xa: &Golden, xb: &Golden, xc: &Golden| {
        vs.iter().find(|v| &v.profile.x_a == xa && &v.profile.x_b == xb && &v.profile.x_c == xc).map(|v| v.value.clone())
    };
    let s = Golden::s();
    assert_eq!(find(&one, &zero, &c.b), Some(s.clone()));
    assert_eq!(find(&zero, &one, &c.b), Some(s.clone()));
    let v3c = (one.clone() - Golden::from_i64(2) * c.r_b.clone()) / c.r_c.clone();
    assert_eq!(find(&one, &one, &v3c), Some(s.clone()));
    assert_eq!(find(&zero, &two_minus_phi, &one), Some(s.clone()));
    let v5 = find(&two_minus_phi, &zero, &one).unwrap();
    let closed = Golden::from_i64(3) / c.phi.clone() + Golden::from_i64(2) / s.clone() - Golden::from_i64(2);
    assert_eq!(v5, closed);
    assert_eq!(v5.to_decimal(50), F_V5);
    assert_eq!(gap_lower_bound(&c, &Golden::from_i64(0)).unwrap(), s);
}

#[test]
fn surplus_is_continuous() {
    let c = Constants::exact();
    let v = gap_lower_bound(&c, &Golden::from_q(q(1, 100))).unwrap();
    assert!(v >= Golden::s() - Golden::from_q(q(5, 100)));
    assert!(v <= Golden::s());
    let all = c.r_b.clone() + c.r_b.clone() + c.r_c.clone() - Golden::one();
    assert_eq!(gap_lower_bound(&c, &all).unwrap(), c.ell);
}

#[test]
fn golden_k_10000() {
    let g = build_golden(10_000).unwrap();
    assert_eq!((g.n_a, g.n_c), (4401, 8319));
    let v = g.validate();
    assert!(v.pass, "{v:?}");
    let costs = g.costs();
    assert!((costs.cost_f64 - 1.0).abs() <= 10.0 / 10_000.0, "{costs:?}");
    assert!(costs.third_nearest_ok);
    assert_eq!(fmt_q(&g.fractional_cost()), costs.cost);
    for (name, err) in g.consts.errors() {
        assert!(err <= 1e-4, "{name}: {err}");
    }
}

#[test]
fn explicit_small_instance_validates() {
    for k in 2..=12 {
        let g = build_golden(k).unwrap();
        let sol = g.to_bipoint(2000).unwrap();
        assert!(validate_bipoint(&sol).pass, "k={k}");
        assert_eq!(sol.cost_exact().unwrap(), g.fractional_cost());
    }
}

#[test]
fn brute_dominates_vertex_bound() {
    for k in 2..=8 {
        let g = build_golden(k).unwrap();
        let sol = g.to_bipoint(2000).unwrap();
        let r = brute_force_opt(&sol.instance, k, 1 << 20, true).unwrap();
        let lb = gap_lower_bound(&g.consts.rational, &Q::from_integer(0.into())).unwrap();
        let opt = r.cost_exact.unwrap();
        assert!(opt >= lb, "k={k}: brute {} < vertex bound {}", to_f64(&opt), to_f64(&lb));
        if k == 8 {
            assert_eq!(r.subsets, 6435);
            let ratio = to_f64(&opt) / to_f64(&g.fractional_cost());
            assert!((ratio - Golden::s().as_f64()).abs() <= 0.15, "ratio {ratio}");
        }
    }
}

#[test]
fn brute_all_open_is_nearest_cost() {
    let g = build_golden(5).unwrap();
    let sol = g.to_bipoint(2000).unwrap();
    let nf = sol.instance.facilities.len();
    let r = brute_force_opt(&sol.instance, nf, 10, true).unwrap();
    let all = OpenSet::new(sol.instance.facilities.clone(), None);
    assert_eq!(r.cost, connection_cost(&sol.instance, &all).unwrap());
}

#[test]
fn brute_five_points_matches_scan() {
    let sol = synthesize_random_bipoint(6, 2, 3, 2, 42).unwrap();
    let inst = &sol.instance;
    assert_eq!(inst.facilities.len(), 5);
    let r = brute_force_opt(inst, 2, 100, true).unwrap();
    let mut best = f64::INFINITY;
    let f = &inst.facilities;
    for i in 0..5 {
        for j in i + 1..5 {
            best = best.min(connection_cost(inst, &OpenSet::new(vec![f[i], f[j]], None)).unwrap());
        }
    }
    assert_eq!(r.subsets, 10);
    assert_eq!(r.cost, best);
}

#[test]
fn k_too_small_is_rejected() {
    assert!(build_golden(1).is_err());
    assert!(build_golden(0).is_err());
}
