//! Randomized checks of the community models, sub-sampling and matching.

use proptest::prelude::*;
use rbn_core::community::{er_baseline, likelihood_gain, match_communities, CommunitySpec, Matrix, Variant};
use rbn_core::data::{DataSet, ObjectId, RelationSchema, Truth};
use rbn_core::formula::RelationKind;
use rbn_core::graph::{BuildOptions, Evaluator, LikelihoodGraph};
use rbn_core::learn::{fit, FitConfig};

/// Random graphs on `n` nodes with `k` relations; relation 0 is directed
/// when `directed`, the others undirected.
#[derive(Clone, Debug)]
struct Links {
    n: usize,
    edges: Vec<Vec<bool>>,
    directed: bool,
}

fn links(k: usize) -> impl Strategy<Value = Links> {
    (3usize..7, any::<bool>()).prop_flat_map(move |(n, directed)| {
        prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.35), n * n), k)
            .prop_map(move |edges| Links { n, edges, directed })
    })
}

fn dataset(l: &Links) -> DataSet {
    let mut d = DataSet::new((0..l.n).map(|i| format!("v{i}"))).unwrap();
    for (r, e) in l.edges.iter().enumerate() {
        let name = format!("link{r}");
        let schema = RelationSchema::new(name.clone(), 2, RelationKind::Probabilistic);
        let undirected = !(r == 0 && l.directed);
        d.add_relation(if undirected { schema.undirected() } else { schema }).unwrap();
        for a in 0..l.n {
            for b in 0..l.n {
                if a == b {
                    continue;
                }
                let on = if undirected { e[a.min(b) * l.n + a.max(b)] } else { e[a * l.n + b] };
                d.set_observation(0, &name, &[a as ObjectId, b as ObjectId], Truth::from_bool(on)).unwrap();
            }
        }
    }
    d
}

fn relations(l: &Links) -> Vec<String> {
    (0..l.edges.len()).map(|r| format!("link{r}")).collect()
}

fn matrix(rows: usize, cols: usize, values: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m.set(r, c, values[(r * cols + c) % values.len()]);
        }
    }
    m
}

/// Graph with the latent values held fixed and the intercepts set.
fn frozen(spec: &CommunitySpec, d: &DataSet, u: &Matrix, t: Option<&Matrix>, alphas: &[f64]) -> (LikelihoodGraph, f64) {
    let model = spec.model().unwrap();
    let aug = spec.augment_with_values(d, u, t).unwrap();
    let opts = BuildOptions { frozen_relations: spec.latent_relations(), ..Default::default() };
    let g = LikelihoodGraph::build(&model, &aug, &opts).unwrap();
    let mut e = Evaluator::new(&g);
    let mut lv = e.graph().initial_leaves();
    for (i, a) in alphas.iter().enumerate() {
        if let Some(j) = g.param_leaf_by_name(&spec.alpha_name(i)) {
            lv.params[j] = *a;
        }
    }
    e.set_leaves(lv);
    let ll = e.log_likelihood().unwrap();
    (g, ll)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multi_relational_scale_invariance(
        l in links(3),
        vals in prop::collection::vec(0.0f64..2.0, 8),
        ts in prop::collection::vec(-2.0f64..2.0, 6),
        alphas in prop::collection::vec(-3.0f64..1.0, 3),
    ) {
        let d = dataset(&l);
        let spec = CommunitySpec::new(2, relations(&l), Variant::MultiRelational);
        let u = matrix(l.n, 2, &vals);
        let t = matrix(3, 2, &ts);
        let (_, base) = frozen(&spec, &d, &u, Some(&t), &alphas);
        for c in [0.1, 2.0, 10.0] {
            let mut us = u.clone();
            us.data.iter_mut().for_each(|x| *x /= f64::sqrt(c));
            let mut tc = t.clone();
            tc.data.iter_mut().for_each(|x| *x *= c);
            let (_, ll) = frozen(&spec, &d, &us, Some(&tc), &alphas);
            prop_assert!((ll - base).abs() <= 1e-9 * base.abs().max(1.0), "c={}: {} vs {}", c, ll, base);
        }
    }

    #[test]
    fn undirected_links_get_symmetric_probabilities(
        l in links(1),
        vals in prop::collection::vec(-2.0f64..2.0, 9),
        alpha in -3.0f64..1.0,
        variant in prop_oneof![Just(Variant::InnerProduct), Just(Variant::Distance)],
        sign in prop_oneof![Just(-1.0), Just(1.0)],
    ) {
        let l = Links { directed: false, ..l };
        let d = dataset(&l);
        let mut spec = CommunitySpec::new(3, relations(&l), variant);
        spec.distance_sign = sign;
        let mut u = matrix(l.n, 3, &vals);
        if variant == Variant::InnerProduct {
            u.data.iter_mut().for_each(|x| *x = x.abs());
        }
        let (g, _) = frozen(&spec, &d, &u, None, &[alpha]);
        let mut e = Evaluator::new(&g);
        let mut lv = g.initial_leaves();
        lv.params[g.param_leaf_by_name("alpha").unwrap()] = alpha;
        e.set_leaves(lv);
        e.log_likelihood().unwrap();
        for t in g.terms() {
            let twin = g.terms().iter().find(|s| s.args == [t.args[1], t.args[0]]).unwrap();
            prop_assert!((e.value(t.node) - e.value(twin.node)).abs() < 1e-15);
        }
    }

    #[test]
    fn no_communities_is_the_baseline(l in links(1), seed in 0u64..100) {
        let d = dataset(&l);
        let rels = relations(&l);
        let base = er_baseline(&d, &rels).unwrap();
        prop_assume!(base.alphas[0].abs() < 10.0);
        let spec = CommunitySpec::new(0, rels, Variant::InnerProduct);
        let g = LikelihoodGraph::build(&spec.model().unwrap(), &spec.augment(&d).unwrap(), &BuildOptions::default())
            .unwrap();
        let r = fit(&g, &FitConfig { restarts: 2, max_iter: 20000, tol: 1e-12, seed, ..Default::default() }).unwrap();
        prop_assert!((r.best_ll - base.ll).abs() < 1e-6, "{} vs {}", r.best_ll, base.ll);
    }

    #[test]
    fn zero_column_has_no_gain(l in links(2)) {
        let d = dataset(&l);
        let rels = relations(&l);
        let base = er_baseline(&d, &rels).unwrap();
        prop_assume!(base.alphas.iter().all(|a| a.abs() < 10.0));
        let cfg = FitConfig { restarts: 1, max_iter: 20000, tol: 1e-12, ..Default::default() };
        let gain = likelihood_gain(&d, &rels, &vec![0.0; l.n], &cfg, fit).unwrap();
        prop_assert!(gain.abs() < 1e-6, "{}", gain);
        let column: Vec<f64> = (0..l.n).map(|i| (i % 3) as f64).collect();
        let gain = likelihood_gain(&d, &rels, &column, &cfg, fit).unwrap();
        prop_assert!(gain >= -1e-6, "{}", gain);
    }

    #[test]
    fn subsampling_keeps_truths_and_a_share_of_falses(l in links(2), q in 1.0f64..=100.0, seed in 0u64..1000) {
        let d = dataset(&l);
        let rels = relations(&l);
        let names: Vec<&str> = rels.iter().map(String::as_str).collect();
        let s = d.subsample_false_links(&names, q, seed).unwrap();
        for (r, name) in rels.iter().enumerate() {
            let ri = d.relation_index(name).unwrap();
            let undirected = d.relations()[ri].symmetric();
            let (mut falses, mut kept) = (0usize, 0usize);
            for (args, before) in d.sample(0).atoms(ri) {
                let after = s.sample(0).get(ri, args).unwrap();
                match before {
                    Truth::True => prop_assert_eq!(after, Truth::True),
                    Truth::False => prop_assert!(after == Truth::False || after == Truth::Unknown),
                    Truth::Unknown => prop_assert_eq!(after, Truth::Unknown),
                }
                if undirected {
                    prop_assert_eq!(after, s.sample(0).get(ri, &[args[1], args[0]]).unwrap());
                }
                if before == Truth::False && (!undirected || args[0] < args[1]) {
                    falses += 1;
                    kept += usize::from(after == Truth::False);
                }
            }
            prop_assert_eq!(kept, (q / 100.0 * falses as f64).ceil() as usize, "relation {}", r);
        }
    }

    #[test]
    fn matching_is_the_best_permutation(
        c in 1usize..5,
        rows in 4usize..9,
        a in prop::collection::vec(0.0f64..1.0, 40),
        b in prop::collection::vec(0.0f64..1.0, 40),
    ) {
        let r = matrix(rows, c, &a[..rows.min(40)]);
        let mut o = Matrix::zeros(rows, c);
        for i in 0..rows {
            for j in 0..c {
                o.set(i, j, b[(i * c + j) % b.len()]);
            }
        }
        let m = match_communities(&r, &o).unwrap();
        let corr = |k: usize, j: usize| pearson(&r.column(k), &o.column(j));
        for k in 0..c {
            for j in 0..c {
                prop_assert!((m.correlations[k][j] - corr(k, j)).abs() < 1e-12);
            }
        }
        let best = permutations(c)
            .iter()
            .map(|p| (0..c).map(|k| corr(k, p[k])).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let got: f64 = m.permutation.iter().enumerate().map(|(k, &j)| corr(k, j)).sum();
        prop_assert!((got - best).abs() < 1e-12);
        let mut sorted = m.permutation.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..c).collect::<Vec<_>>());

        // a column-permuted copy is matched back with correlation one;
        // duplicated columns make the permutation itself ambiguous
        let perm: Vec<usize> = (0..c).rev().collect();
        let mut shuffled = Matrix::zeros(rows, c);
        for i in 0..rows {
            for (j, &pj) in perm.iter().enumerate() {
                shuffled.set(i, pj, r.get(i, j));
            }
        }
        let m = match_communities(&r, &shuffled).unwrap();
        for k in 0..c {
            if r.column(k).iter().any(|x| *x != r.get(0, k)) {
                prop_assert!((m.matched()[k] - 1.0).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn water_scale_invariance(lambda in prop_oneof![Just(0.1), Just(2.0), Just(10.0)], alpha in -4.0f64..0.0, beta in 0.5f64..3.0, seed in 0u64..100) {
        let model = rbn_core::parse_model(WATER).unwrap();
        let mut d = DataSet::new((0..5).map(|i| format!("s{i}"))).unwrap();
        d.add_relation(RelationSchema::new("upstream", 2, RelationKind::BooleanInput)).unwrap();
        d.add_relation(RelationSchema::new(
            "invdistance",
            2,
            RelationKind::NumericInput { range: rbn_core::formula::Interval::NON_NEGATIVE, learnable: true },
        ))
        .unwrap();
        d.add_relation(RelationSchema::new("polluted", 1, RelationKind::Probabilistic)).unwrap();
        let arcs = [(0u32, 2u32, 1.2), (1, 2, 0.7), (2, 3, 1.5), (3, 4, 0.4), (1, 4, 2.0)];
        for (a, b, w) in arcs {
            d.set_input("upstream", &[a, b], 1.0).unwrap();
            d.set_input("invdistance", &[a, b], w).unwrap();
        }
        d.set_sample_count(3).unwrap();
        for s in 0..3usize {
            for i in 0..5u32 {
                let t = match (s as u64 * 7 + u64::from(i) * 3 + seed) % 3 {
                    0 => Truth::True,
                    1 => Truth::False,
                    _ => Truth::Unknown,
                };
                d.set_observation(s, "polluted", &[i], t).unwrap();
            }
        }
        let g = LikelihoodGraph::build(&model, &d, &BuildOptions::default()).unwrap();
        let ll = |beta: f64, scale: f64, flips: &[bool]| {
            let mut e = Evaluator::new(&g);
            let mut lv = g.initial_leaves();
            lv.params[g.param_leaf_by_name("alpha").unwrap()] = alpha;
            lv.params[g.param_leaf_by_name("beta").unwrap()] = beta;
            lv.numerics.iter_mut().for_each(|x| *x *= scale);
            lv.indicators.copy_from_slice(flips);
            e.set_leaves(lv);
            e.log_likelihood().unwrap()
        };
        let k = g.indicators().len();
        for mask in 0..1u32 << k.min(6) {
            let flips: Vec<bool> = (0..k).map(|i| mask >> (i % 6) & 1 == 1).collect();
            let a = ll(beta, 1.0, &flips);
            let b = ll(lambda * beta, 1.0 / lambda, &flips);
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{} vs {}", a, b);
        }
    }
}

const WATER: &str = "input upstream/2;
input invdistance/2 numeric [0, inf] learnable;
prob polluted/1;
param alpha;
param beta;
polluted(S) <- WIF 0.6 THEN COMBINE alpha, COMBINE WIF polluted(V) THEN beta * invdistance(V, S) ELSE 0.0
    WITH sum FORALL V WHERE upstream(V, S) WITH l-reg ELSE 0.2;";
