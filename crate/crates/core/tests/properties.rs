use bipoint_core::alg::chains::builtin;
use bipoint_core::alg::expr::{point_q, Point};
use bipoint_core::alg::spec::{enumerate_algm, fractional_count, is_valid, mass_gap};
use bipoint_core::bound::interval::{gamma_c_nodes, param_node};
use bipoint_core::bound::{box_value, BoxNode, Enclosure, NlpModel, DELTA};
use bipoint_core::gap::{build_golden, extreme_points_rhs};
use bipoint_core::instance::{connection_cost, parse_instance, synthesize_random_bipoint, validate_bipoint, write_instance, BiPointSolution, OpenSet};
use bipoint_core::num::{q, Q};
use bipoint_core::partition::{build_partition, build_stars, g_value};
use bipoint_core::rounding::{build_star_set, srdr, star_round_traced, weighted_sum};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance() -> impl Strategy<Value = BiPointSolution> {
    (4usize..30, 1usize..7, 1usize..9, any::<u64>())
        .prop_flat_map(|(c, f1, extra, seed)| (Just(c), Just(f1), Just(f1 + extra), f1..=f1 + extra, Just(seed)))
        .prop_map(|(c, f1, f2, k, seed)| synthesize_random_bipoint(c, f1, f2, k, seed).unwrap())
}

/// Strictly increasing interior thresholds `j/20`.
fn thresholds() -> impl Strategy<Value = Vec<Q>> {
    proptest::collection::btree_set(1i64..20, 0..3).prop_map(|s| s.into_iter().map(|j| q(j, 20)).collect())
}

fn rational01() -> impl Strategy<Value = Q> {
    (0i64..=12, 1i64..=12).prop_map(|(n, d)| q(n.min(d), d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_text_roundtrip(sol in instance()) {
        prop_assert!(validate_bipoint(&sol).pass);
        prop_assert!(sol.instance.audit_metric().is_ok());
        let text = write_instance(&sol);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(write_instance(&back), text);
        prop_assert_eq!(back.k(), sol.k());
        prop_assert_eq!(connection_cost(&sol.instance, &OpenSet::new(sol.f1.clone(), None)).unwrap(), sol.d1);
        prop_assert_eq!(connection_cost(&sol.instance, &OpenSet::new(sol.f2.clone(), None)).unwrap(), sol.d2);
    }

    #[test]
    fn partition_invariants(sol in instance(), g in thresholds()) {
        let forest = build_stars(&sol).unwrap();
        let inst = &sol.instance;
        for (p, &i) in sol.f1.iter().enumerate() {
            let sb = forest.sigma_b[p];
            prop_assert!(sol.f2.iter().all(|&j| inst.d(i, sb) <= inst.d(i, j)));
        }
        let Ok(part) = build_partition(&sol, &forest, &g) else {
            // only refused when C is empty and levels are needed
            prop_assert!(!forest.secondary_available && !g.is_empty());
            return Ok(());
        };
        prop_assert_eq!(part.a.iter().map(Vec::len).sum::<usize>(), sol.f1.len());
        if forest.secondary_available {
            let total: Q = part.gamma_c.iter().cloned().sum();
            prop_assert!(total.is_one());
            let mut full = vec![Q::zero()];
            full.extend(g.iter().cloned());
            full.push(Q::one());
            for p in 0..sol.f1.len() {
                let gv = g_value(&sol, &forest, p).unwrap();
                prop_assert!(gv >= Q::zero() && gv <= Q::one());
                let t = part.level_of[p];
                prop_assert!(full[t] <= gv && gv <= full[t + 1]);
                // ties go to the lower level
                if t > 0 {
                    prop_assert!(gv > full[t]);
                }
            }
        }
    }

    #[test]
    fn srdr_preserves_sum_exactly(
        x in proptest::collection::vec(rational01(), 1..30),
        w in proptest::collection::vec(-5i64..=5, 30),
        t in 1usize..6,
        seed in any::<u64>(),
    ) {
        let a: Vec<Q> = x.iter().zip(&w).map(|(_, &v)| Q::from_integer(v.into())).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = srdr(&x, &a, t, &mut rng).unwrap();
        prop_assert_eq!(weighted_sum(&out.x, &a), weighted_sum(&x, &a));
        prop_assert!(out.fractional_count <= t);
        prop_assert!(out.x.iter().all(|v| *v >= Q::zero() && *v <= Q::one()));
        // integral inputs stay put
        for (xi, yi) in x.iter().zip(&out.x) {
            if xi.is_zero() || xi.is_one() {
                prop_assert_eq!(xi, yi);
            }
        }
    }

    #[test]
    fn star_rounding_budget_and_exclusion(sol in instance(), eps in 0.05f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (open, trace) = star_round_traced(&sol, eps, &mut rng).unwrap();
        prop_assert!(open.len() <= sol.k() + 2 * trace.t);
        let stars = build_star_set(&sol).unwrap();
        for (p, leaves) in stars.leaves.iter().enumerate() {
            if trace.x[p] == "1" {
                prop_assert!(!open.facilities.contains(&sol.f1[p]));
                prop_assert!(leaves.iter().all(|l| open.facilities.contains(l)));
            }
        }
    }

    #[test]
    fn enumerated_members_are_valid(m in 1usize..=2, b in rational01(), ga in proptest::collection::vec((0i64..=24, 1i64..=8), 2)) {
        let ga: Vec<Q> = ga.iter().take(m).map(|&(n, d)| q(n, d)).collect();
        let pt = point_q(b, ga);
        for spec in enumerate_algm(m, &pt) {
            prop_assert!(is_valid(&spec, &pt));
            prop_assert!(fractional_count(&spec) <= 1);
            prop_assert!(mass_gap(&spec, &pt).is_zero());
        }
    }

    #[test]
    fn shipped_chains_valid(b in rational01(), g2 in (0i64..=40, 1i64..=10), g3 in (0i64..=40, 1i64..=10)) {
        let pt2 = point_q(b.clone(), vec![Q::one(), q(g2.0, g2.1)]);
        for c in builtin("alg2").unwrap().chains {
            prop_assert!(is_valid(&c.instantiate(&pt2), &pt2), "{} at {:?}", c.name, pt2);
        }
        let pt3 = point_q(b, vec![Q::one(), q(g2.0, g2.1), q(g3.0, g3.1)]);
        for c in builtin("alg3").unwrap().chains {
            prop_assert!(is_valid(&c.instantiate(&pt3), &pt3), "{} at {:?}", c.name, pt3);
        }
    }

    #[test]
    fn vertices_on_plane(num in 0i64..=20) {
        let c = build_golden(1000).unwrap().consts.rational;
        let rhs = Q::one() + q(num, 40);
        for v in extreme_points_rhs(&c, &rhs) {
            let p = &v.profile;
            prop_assert_eq!(&c.r_b * &p.x_a + &c.r_b * &p.x_b + &c.r_c * &p.x_c, rhs.clone());
            let frac = [&p.x_a, &p.x_b, &p.x_c].iter().filter(|x| !x.is_zero() && !x.is_one()).count();
            prop_assert!(frac <= 1);
            prop_assert!([&p.x_a, &p.x_b, &p.x_c].iter().all(|x| **x >= Q::zero() && **x <= Q::one()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn splitting_never_raises_value(path in proptest::collection::vec(0usize..16, 0..5)) {
        let model = NlpModel::from_table("alg2").unwrap();
        let mut node = BoxNode::root(2);
        for c in path {
            let ch = node.children(0.0);
            node = ch[c % ch.len()].clone();
        }
        let parent = box_value(&model, &node.to_box());
        for ch in node.children(parent) {
            prop_assert!(box_value(&model, &ch.to_box()) <= parent + DELTA);
        }
    }

    #[test]
    fn chain_enclosures_contain_point_values(path in proptest::collection::vec(0usize..16, 0..8), u in proptest::collection::vec(0.0f64..1.0, 3)) {
        let gc = gamma_c_nodes(2);
        let mut node = BoxNode::root(2);
        for c in path {
            let ch = node.children(0.0);
            node = ch[c % ch.len()].clone();
        }
        let bx = node.to_box();
        let x: Vec<f64> = bx.vars.iter().zip(&u).map(|(iv, t)| if iv.hi.is_finite() { iv.lo + t * iv.width() } else { iv.lo + t / (1.0 - t) }).collect();
        let pt = Point::from_ga(x[0], vec![x[1], x[2]]);
        for c in builtin("alg2").unwrap().chains {
            for p in &c.params {
                let v = p.eval(&pt);
                if let Enclosure::Range(r) = param_node(p, &gc).interval_eval(&bx.vars) {
                    prop_assert!(r.contains(v), "{}: {v} outside {r:?}", c.name);
                }
            }
        }
    }
}
