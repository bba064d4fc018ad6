use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::data::{DataSet, RelationSchema, Truth};
use crate::formula::{parse_model, Model, RelationKind};
use crate::math::{bernoulli_mle_ll, logit};

const LATENT: &str = "input node/1; input community/1; input u/2 numeric [0, inf] learnable;
    prob link/2; param alpha;
    link(V, W) <- COMBINE alpha, COMBINE u(V, C) * u(W, C) WITH sum
        FORALL C WHERE community(C) & node(V) & node(W) & V != W WITH l-reg;";

/// `n` nodes on a ring plus `c` community objects, all pairs observed.
fn ring(n: u32, c: u32) -> DataSet {
    let mut labels: Vec<alloc::string::String> = (0..n).map(|i| alloc::format!("v{i}")).collect();
    labels.extend((0..c).map(|i| alloc::format!("c{i}")));
    let mut d = DataSet::new(labels).unwrap();
    d.add_relation(RelationSchema::new("node", 1, RelationKind::BooleanInput)).unwrap();
    d.add_relation(RelationSchema::new("community", 1, RelationKind::BooleanInput)).unwrap();
    d.add_relation(RelationSchema::new("link", 2, RelationKind::Probabilistic).undirected()).unwrap();
    for v in 0..n {
        d.set_input("node", &[v], 1.0).unwrap();
    }
    for k in 0..c {
        d.set_input("community", &[n + k], 1.0).unwrap();
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let edge = (a + 1) % n == b || (b + 1) % n == a || (a == 0 && b == n / 2);
                d.set_observation(0, "link", &[a, b], Truth::from_bool(edge)).unwrap();
            }
        }
    }
    d
}

fn leaves_from(g: &LikelihoodGraph, seed: u64) -> LeafValues {
    // small deterministic pseudo-random values
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut l = g.initial_leaves();
    for (p, leaf) in l.params.iter_mut().zip(g.params()) {
        let r = leaf.range;
        *p = if r.min.is_finite() && r.max.is_finite() {
            // stay clear of the bounds so finite differences are valid
            r.min + (0.1 + 0.8 * next()) * (r.max - r.min)
        } else {
            r.project(2.0 * next() - 1.0)
        };
    }
    for v in l.numerics.iter_mut() {
        *v = 1.5 * next();
    }
    for b in l.indicators.iter_mut() {
        *b = next() < 0.5;
    }
    l
}

fn build(m: &Model, d: &DataSet) -> LikelihoodGraph {
    LikelihoodGraph::build(m, d, &BuildOptions::default()).unwrap()
}

#[test]
fn coin_model_log_likelihood() {
    let m = parse_model("input fair/1; prob heads/1; heads(T) <- WIF fair(T) THEN 0.5 ELSE 0.9;").unwrap();
    let mut d = DataSet::new(["t"]).unwrap();
    d.add_relation(RelationSchema::new("fair", 1, RelationKind::BooleanInput)).unwrap();
    d.add_relation(RelationSchema::new("heads", 1, RelationKind::Probabilistic)).unwrap();
    d.set_input("fair", &[0], 1.0).unwrap();
    d.set_observation(0, "heads", &[0], Truth::True).unwrap();
    let g = build(&m, &d);
    assert_eq!(g.len(), 0);
    assert_eq!(g.stats(), GraphStats { nodes: 1, edges: 0, params: 0, numeric_leaves: 0, indicators: 0 });
    let mut e = Evaluator::new(&g);
    assert!((e.log_likelihood().unwrap() - libm::log(0.5)).abs() < 1e-15);
}

#[test]
fn constant_model_without_folding_keeps_nodes() {
    let m = parse_model("prob r/1; r(X) <- 0.3;").unwrap();
    let mut d = DataSet::new(["a", "b"]).unwrap();
    d.add_relation(RelationSchema::new("r", 1, RelationKind::Probabilistic)).unwrap();
    d.set_observation(0, "r", &[0], Truth::True).unwrap();
    d.set_observation(0, "r", &[1], Truth::False).unwrap();
    let opts = BuildOptions { disable_folding: true, ..Default::default() };
    let g = LikelihoodGraph::build(&m, &d, &opts).unwrap();
    // one shared constant, two atoms
    assert_eq!(g.len(), 3);
    let expect = libm::log(0.3) + libm::log(0.7);
    assert!((Evaluator::new(&g).log_likelihood().unwrap() - expect).abs() < 1e-15);
    let folded = build(&m, &d);
    assert!((folded.constant_log_likelihood() - expect).abs() < 1e-15);
}

#[test]
fn erdos_renyi_optimum_is_stationary() {
    let m = parse_model("prob link/2; param alpha; link(V, W) <- COMBINE alpha WITH l-reg;").unwrap();
    let mut d = ring(12, 0);
    d = d.clone();
    let g = build(&m, &d);
    let ones = d.sample(0).atoms(2).filter(|(_, t)| *t == Truth::True).count();
    let zeros = 132 - ones;
    let mut e = Evaluator::new(&g);
    e.set_param(0, logit(ones as f64 / 132.0));
    let (ll, grad) = e.gradient().unwrap();
    assert!((ll - bernoulli_mle_ll(ones, zeros)).abs() < 1e-9);
    assert!(grad.params[0].abs() < 1e-8);
}

#[test]
fn latent_model_node_count() {
    let m = parse_model(LATENT).unwrap();
    let g = build(&m, &ring(10, 2));
    // atom, l-reg, sum and two products per ordered pair, plus leaves
    assert_eq!(g.len(), 90 * 5 + 20 + 1);
    let s = g.stats();
    assert_eq!((s.params, s.numeric_leaves, s.indicators), (1, 20, 0));
    assert_eq!(s.nodes, g.len() + 1);
    assert_eq!(s.edges, 90 * (1 + 2 + 2 + 2 + 2) + 90);
}

fn finite_difference_check(m: &Model, d: &DataSet, opts: &BuildOptions, seed: u64) {
    let g = LikelihoodGraph::build(m, d, opts).unwrap();
    let mut e = Evaluator::new(&g);
    e.set_leaves(leaves_from(&g, seed));
    let (_, grad) = e.gradient().unwrap();
    let h = 1e-5;
    let targets = (0..g.params().len()).map(|i| (true, i)).chain((0..g.numerics().len()).map(|i| (false, i)));
    for (is_param, i) in targets.collect::<Vec<_>>() {
        let set = |e: &mut Evaluator<'_>, v: f64| if is_param { e.set_param(i, v) } else { e.set_numeric(i, v) };
        let (x, analytic) = if is_param {
            (e.leaves().params[i], grad.params[i])
        } else {
            (e.leaves().numerics[i], grad.numerics[i])
        };
        set(&mut e, x + h);
        let up = e.log_likelihood().unwrap();
        set(&mut e, x - h);
        let down = e.log_likelihood().unwrap();
        set(&mut e, x);
        let numeric = (up - down) / (2.0 * h);
        let scale = numeric.abs().max(analytic.abs()).max(1e-3);
        assert!((numeric - analytic).abs() / scale < 1e-4, "fd {numeric} vs {analytic}");
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let m = parse_model(LATENT).unwrap();
    let d = ring(7, 2);
    for seed in 0..5 {
        finite_difference_check(&m, &d, &BuildOptions::default(), seed);
    }
}

const MIXED: &str = "input up/2; input w/2 numeric [0, inf] learnable; prob p/1; prob q/1;
    param a; param b [0, 1];
    p(S) <- WIF b THEN COMBINE a, COMBINE WIF p(V) THEN w(V, S) ELSE 0.1 WITH sum FORALL V WHERE up(V, S) WITH l-reg
            ELSE COMBINE 0.2 * b, COMBINE w(V, S) * b WITH l-reg FORALL V WHERE up(V, S) WITH noisy-or;
    q(S) <- WIF p(S) THEN b ELSE COMBINE 1 - b, b * 0.5 WITH mean;";

fn mixed_data(unknown: &[u32]) -> DataSet {
    let mut d = DataSet::new(["s0", "s1", "s2", "s3"]).unwrap();
    d.add_relation(RelationSchema::new("up", 2, RelationKind::BooleanInput)).unwrap();
    d.add_relation(RelationSchema::new("w", 2, RelationKind::NumericInput { range: crate::formula::Interval::NON_NEGATIVE, learnable: true })).unwrap();
    d.add_relation(RelationSchema::new("p", 1, RelationKind::Probabilistic)).unwrap();
    d.add_relation(RelationSchema::new("q", 1, RelationKind::Probabilistic)).unwrap();
    for (x, y) in [(0, 1), (1, 2), (0, 2), (2, 3)] {
        d.set_input("up", &[x, y], 1.0).unwrap();
    }
    d.set_sample_count(2).unwrap();
    for s in 0..2 {
        for v in 0..4u32 {
            let t = if unknown.contains(&v) { Truth::Unknown } else { Truth::from_bool((v + s as u32).is_multiple_of(2)) };
            d.set_observation(s, "p", &[v], t).unwrap();
            d.set_observation(s, "q", &[v], Truth::from_bool(v % 3 == 0)).unwrap();
        }
    }
    d
}

#[test]
fn mixed_model_gradient_and_indicators() {
    let m = parse_model(MIXED).unwrap();
    for unknown in [&[][..], &[1], &[0, 2]] {
        let d = mixed_data(unknown);
        for seed in 0..4 {
            finite_difference_check(&m, &d, &BuildOptions::default(), seed);
            finite_difference_check(&m, &d, &BuildOptions { disable_folding: true, ..Default::default() }, seed);
        }
    }
}

#[test]
fn graph_matches_reference_with_and_without_folding() {
    let m = parse_model(MIXED).unwrap();
    for unknown in [&[][..], &[1], &[0, 2]] {
        let d = mixed_data(unknown);
        let plain = BuildOptions { disable_folding: true, ..Default::default() };
        let keep = BuildOptions { keep_unreferenced_unknowns: true, ..Default::default() };
        for opts in [BuildOptions::default(), plain, keep] {
            let g = LikelihoodGraph::build(&m, &d, &opts).unwrap();
            for seed in 0..4 {
                let leaves = leaves_from(&g, seed);
                let mut e = Evaluator::new(&g);
                e.set_leaves(leaves.clone());
                let ll = e.log_likelihood().unwrap();
                let naive = reference_log_likelihood(&m, &d, &opts, &g, &leaves).unwrap();
                assert!((ll - naive).abs() < 1e-9, "{ll} vs {naive}");
            }
        }
    }
}

#[test]
fn folding_does_not_change_values() {
    let m = parse_model(MIXED).unwrap();
    let d = mixed_data(&[1]);
    let a = build(&m, &d);
    let b = LikelihoodGraph::build(&m, &d, &BuildOptions { disable_folding: true, ..Default::default() }).unwrap();
    assert!(b.len() > a.len());
    let leaves = leaves_from(&a, 3);
    let mut ea = Evaluator::new(&a);
    ea.set_leaves(leaves.clone());
    let mut eb = Evaluator::new(&b);
    eb.set_leaves(leaves);
    let (la, ga) = ea.gradient().unwrap();
    let (lb, gb) = eb.gradient().unwrap();
    assert!((la - lb).abs() < 1e-9);
    for (x, y) in ga.params.iter().zip(&gb.params).chain(ga.numerics.iter().zip(&gb.numerics)) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn unreferenced_unknowns_are_pruned() {
    let m = parse_model(MIXED).unwrap();
    // p(s3) feeds nothing, p(s1) feeds p(s2)
    let d = mixed_data(&[1, 3]);
    let g = build(&m, &d);
    // p(s1) in both samples, plus q(s*) references p(S) for every S
    assert!(g.indicators().iter().all(|i| g.kind(i.atom_node) == NodeKind::MarginalizedAtom));
    assert_eq!(g.indicators().len(), 4);
    let all = LikelihoodGraph::build(&m, &d, &BuildOptions { keep_unreferenced_unknowns: true, ..Default::default() }).unwrap();
    assert_eq!(all.indicators().len(), 4);
}

#[test]
fn indicator_flip_dirties_only_ancestors() {
    let m = parse_model(LATENT.replace("param alpha;", "param alpha; prob hub/1;").as_str().replace(
        "WITH l-reg;",
        "WITH l-reg;\n hub(V) <- COMBINE WIF link(V, W) THEN 0.9 ELSE 0.1 WITH mean FORALL W WHERE node(W) & V != W;",
    ).as_str()).unwrap();
    let mut d = ring(6, 1);
    d.add_relation(RelationSchema::new("hub", 1, RelationKind::Probabilistic)).unwrap();
    d.set_observation(0, "link", &[0, 1], Truth::Unknown).unwrap();
    d.set_observation(0, "hub", &[0], Truth::True).unwrap();
    let g = build(&m, &d);
    // link(1, 0) is unknown too but nothing depends on it
    assert_eq!(g.indicators().len(), 1);
    let mut e = Evaluator::new(&g);
    e.log_likelihood().unwrap();
    assert_eq!(e.dirty_count(), 0);
    let i = g.indicator(0, m.relation_id("link").unwrap(), &[0, 1]).unwrap();
    e.set_indicator(i, true);
    // the two Wif nodes of link(0,1) feed the mean, which feeds the hub atom
    assert!(e.dirty_count() <= 4 && e.dirty_count() >= 2, "{}", e.dirty_count());
    assert!(e.dirty_count() < g.len() / 10);
    let fast = e.log_likelihood().unwrap();
    let mut fresh = Evaluator::new(&g);
    fresh.set_leaves(e.leaves().clone());
    assert_eq!(fast, fresh.log_likelihood().unwrap());
    assert!(matches!(e.set_indicator_atom(0, 0, &[5], true), Err(GraphError::NoIndicator(_))));
}

#[test]
fn gradient_pass_is_linear_in_edges() {
    let m = parse_model(LATENT).unwrap();
    let g = build(&m, &ring(9, 3));
    let mut e = Evaluator::new(&g);
    e.set_leaves(leaves_from(&g, 1));
    e.gradient().unwrap();
    assert!(e.edge_visits() <= 3 * g.stats().edges as u64);
}

#[test]
fn cyclic_dependencies_are_rejected() {
    let m = parse_model("input up/2; prob p/1; p(S) <- COMBINE WIF p(V) THEN 0.9 ELSE 0.1 WITH mean FORALL V WHERE up(V, S);").unwrap();
    let mut d = DataSet::new(["a", "b"]).unwrap();
    d.add_relation(RelationSchema::new("up", 2, RelationKind::BooleanInput)).unwrap();
    d.add_relation(RelationSchema::new("p", 1, RelationKind::Probabilistic)).unwrap();
    d.set_input("up", &[0, 1], 1.0).unwrap();
    d.set_input("up", &[1, 0], 1.0).unwrap();
    d.set_observation(0, "p", &[0], Truth::True).unwrap();
    assert!(matches!(LikelihoodGraph::build(&m, &d, &BuildOptions::default()), Err(GraphError::Cycle(_))));
}

#[test]
fn fixed_and_frozen_leaves() {
    let m = parse_model(LATENT).unwrap();
    let mut d = ring(5, 1);
    d.add_relation(RelationSchema::new("u", 2, RelationKind::NumericInput { range: crate::formula::Interval::NON_NEGATIVE, learnable: true })).unwrap();
    for v in 0..5 {
        d.set_input("u", &[v, 5], 0.5).unwrap();
    }
    let mut opts = BuildOptions::default();
    opts.fixed_params.insert("alpha".into(), -1.0);
    opts.frozen_relations.insert("u".into());
    let g = LikelihoodGraph::build(&m, &d, &opts).unwrap();
    assert_eq!(g.num_learnable(), 0);
    let expect = 10.0 * libm::log(crate::math::logistic(-0.75)) + 10.0 * libm::log(1.0 - crate::math::logistic(-0.75));
    assert!((g.constant_log_likelihood() - expect).abs() < 1e-9);
    opts.fixed_params.insert("beta".into(), 1.0);
    assert_eq!(LikelihoodGraph::build(&m, &d, &opts).unwrap_err(), GraphError::UnknownParameter("beta".into()));
    let _ = vec![0];
}

#[test]
fn out_of_range_probability_is_reported() {
    let m = parse_model("prob r/0; param a; r() <- a;").unwrap();
    let mut d = DataSet::new(["x"]).unwrap();
    d.add_relation(RelationSchema::new("r", 0, RelationKind::Probabilistic)).unwrap();
    d.set_observation(0, "r", &[], Truth::True).unwrap();
    let g = build(&m, &d);
    let mut e = Evaluator::new(&g);
    e.set_param(0, 1.5);
    assert!(matches!(e.log_likelihood(), Err(GraphError::ProbabilityOutOfRange { .. })));
    e.set_param(0, 0.25);
    assert!((e.log_likelihood().unwrap() - libm::log(0.25)).abs() < 1e-15);
}

#[test]
fn dot_export_mentions_every_node() {
    let m = parse_model(LATENT).unwrap();
    let g = build(&m, &ring(4, 1));
    let dot = g.to_dot();
    assert!(dot.starts_with("digraph"));
    assert!(dot.matches(" [label=").count() >= g.len());
}
