//! Latent-feature network models. Every node gets a learnable centrality
//! degree `u(V, C)` per community `C`; the probability of a link is the
//! logistic of an intercept plus a sum of community terms.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::data::{DataError, DataSet, ObjectId, RelationSchema};
use crate::formula::{parse_model, Interval, Model, ParseError, RelationKind};
use crate::graph::{BuildOptions, GraphError, LikelihoodGraph};
use crate::learn::{FitConfig, FitError, FitResult};
use crate::math::{bernoulli_mle_ll, clamp_probability, logit, pearson};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `u(V, C) * u(W, C)`
    InnerProduct,
    /// `sign * (u(V, C) - u(W, C))^2`
    Distance,
    /// `u(V, C) * u(W, C) * t_i(C)`, one `t_i` per relation
    MultiRelational,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::InnerProduct => "inner-product",
            Variant::Distance => "distance",
            Variant::MultiRelational => "multi-relational",
        }
    }

    pub fn from_name(s: &str) -> Option<Variant> {
        match s {
            "inner-product" => Some(Variant::InnerProduct),
            "distance" => Some(Variant::Distance),
            "multi-relational" => Some(Variant::MultiRelational),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommunitySpec {
    pub communities: usize,
    /// Names of the link relations.
    pub relations: Vec<String>,
    pub variant: Variant,
    /// Sign of the squared distance (distance variant only).
    pub distance_sign: f64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CommunityError {
    #[error("the {0} variant models a single relation")]
    SingleRelational(&'static str),
    #[error("no link relations given")]
    NoRelations,
    #[error("distance sign must be +1 or -1")]
    BadSign,
    #[error("`{0}` is already used in the data")]
    NameClash(String),
    #[error("relation `{0}` has no known atoms")]
    EmptyRelation(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

pub const U: &str = "u";
pub const NODE: &str = "node";
pub const COMMUNITY: &str = "community";

impl CommunitySpec {
    pub fn new(communities: usize, relations: Vec<String>, variant: Variant) -> CommunitySpec {
        CommunitySpec { communities, relations, variant, distance_sign: -1.0 }
    }

    pub fn validate(&self) -> Result<(), CommunityError> {
        if self.relations.is_empty() {
            return Err(CommunityError::NoRelations);
        }
        if self.variant != Variant::MultiRelational && self.relations.len() > 1 {
            return Err(CommunityError::SingleRelational(self.variant.name()));
        }
        if self.distance_sign != 1.0 && self.distance_sign != -1.0 {
            return Err(CommunityError::BadSign);
        }
        Ok(())
    }

    pub fn alpha_name(&self, rel: usize) -> String {
        if self.variant == Variant::MultiRelational {
            format!("alpha_{}", self.relations[rel])
        } else {
            String::from("alpha")
        }
    }

    pub fn t_name(&self, rel: usize) -> String {
        format!("t_{}", self.relations[rel])
    }

    pub fn community_label(k: usize) -> String {
        format!("C{}", k + 1)
    }

    /// Range of the centrality degrees.
    pub fn u_range(&self) -> Interval {
        if self.variant == Variant::Distance {
            Interval::UNBOUNDED
        } else {
            Interval::NON_NEGATIVE
        }
    }

    /// The model in the formula language.
    pub fn model_text(&self) -> Result<String, CommunityError> {
        self.validate()?;
        let mut s = String::new();
        let u_decl = if self.variant == Variant::Distance { "numeric" } else { "numeric [0, inf]" };
        let _ = writeln!(s, "input {NODE}/1;\ninput {COMMUNITY}/1;\ninput {U}/2 {u_decl} learnable;");
        for i in 0..self.relations.len() {
            if self.variant == Variant::MultiRelational {
                let _ = writeln!(s, "input {}/1 numeric learnable;", self.t_name(i));
            }
            let _ = writeln!(s, "prob {}/2;", self.relations[i]);
            if i == 0 || self.variant == Variant::MultiRelational {
                let _ = writeln!(s, "param {};", self.alpha_name(i));
            }
        }
        for (i, rel) in self.relations.iter().enumerate() {
            let body = match self.variant {
                Variant::InnerProduct => format!("{U}(V, C) * {U}(W, C)"),
                Variant::Distance => {
                    let sign = if self.distance_sign < 0.0 { "-1" } else { "1" };
                    format!("{sign} * ({U}(V, C) - {U}(W, C)) * ({U}(V, C) - {U}(W, C))")
                }
                Variant::MultiRelational => format!("{U}(V, C) * {U}(W, C) * {}(C)", self.t_name(i)),
            };
            let _ = writeln!(
                s,
                "{rel}(V, W) <- COMBINE {}, COMBINE {body} WITH sum\n    FORALL C WHERE {COMMUNITY}(C) & {NODE}(V) & {NODE}(W) & V != W WITH l-reg;",
                self.alpha_name(i)
            );
        }
        Ok(s)
    }

    pub fn model(&self) -> Result<Model, CommunityError> {
        Ok(parse_model(&self.model_text()?)?)
    }

    /// Adds community objects `C1..` and the `node`/`community` facts.
    pub fn augment(&self, data: &DataSet) -> Result<DataSet, CommunityError> {
        let mut d = data.clone();
        let n = data.num_objects();
        for name in [NODE, COMMUNITY, U] {
            if d.relation_index(name).is_some() {
                return Err(CommunityError::NameClash(name.to_string()));
            }
        }
        for k in 0..self.communities {
            let label = Self::community_label(k);
            if d.object(&label).is_ok() {
                return Err(CommunityError::NameClash(label));
            }
            d.add_object(label)?;
        }
        d.add_relation(RelationSchema::new(NODE, 1, RelationKind::BooleanInput))?;
        d.add_relation(RelationSchema::new(COMMUNITY, 1, RelationKind::BooleanInput))?;
        for v in 0..n as ObjectId {
            d.set_input(NODE, &[v], 1.0)?;
        }
        for k in 0..self.communities {
            d.set_input(COMMUNITY, &[(n + k) as ObjectId], 1.0)?;
        }
        Ok(d)
    }

    /// `augment` plus stored values for `u` and (multi-relational) `t_i`,
    /// so that a graph built with these relations frozen uses them.
    pub fn augment_with_values(&self, data: &DataSet, u: &Matrix, t: Option<&Matrix>) -> Result<DataSet, CommunityError> {
        let n = data.num_objects();
        check_dim(n, u.rows)?;
        check_dim(self.communities, u.cols)?;
        let mut d = self.augment(data)?;
        d.add_relation(RelationSchema::new(U, 2, RelationKind::NumericInput { range: self.u_range(), learnable: true }))?;
        for v in 0..n {
            for k in 0..self.communities {
                d.set_input(U, &[v as ObjectId, (n + k) as ObjectId], u.get(v, k))?;
            }
        }
        if self.variant == Variant::MultiRelational {
            let t = t.ok_or(CommunityError::Dimension { expected: self.relations.len(), found: 0 })?;
            check_dim(self.relations.len(), t.rows)?;
            check_dim(self.communities, t.cols)?;
            for i in 0..self.relations.len() {
                let name = self.t_name(i);
                d.add_relation(RelationSchema::new(
                    name.clone(),
                    1,
                    RelationKind::NumericInput { range: Interval::UNBOUNDED, learnable: true },
                ))?;
                for k in 0..self.communities {
                    d.set_input(&name, &[(n + k) as ObjectId], t.get(i, k))?;
                }
            }
        }
        Ok(d)
    }

    /// Names of the latent relations (`u` and the `t_i`).
    pub fn latent_relations(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        s.insert(String::from(U));
        if self.variant == Variant::MultiRelational {
            for i in 0..self.relations.len() {
                s.insert(self.t_name(i));
            }
        }
        s
    }
}

fn check_dim(expected: usize, found: usize) -> Result<(), CommunityError> {
    if expected == found {
        Ok(())
    } else {
        Err(CommunityError::Dimension { expected, found })
    }
}

/// Learned centrality degrees, associations and intercepts.
#[derive(Clone, Debug, PartialEq)]
pub struct CommunityResult {
    /// nodes x communities
    pub u: Matrix,
    /// relations x communities (multi-relational only)
    pub t: Option<Matrix>,
    pub alphas: Vec<f64>,
    pub ll: f64,
}

impl CommunityResult {
    /// Reads the result out of a fit of `spec.model()` on the augmented
    /// data; `nodes` is the number of objects before augmentation.
    pub fn extract(spec: &CommunitySpec, model: &Model, graph: &LikelihoodGraph, fit: &FitResult, nodes: usize) -> CommunityResult {
        let c = spec.communities;
        let mut u = Matrix::zeros(nodes, c);
        let u_rel = model.relation_id(U).expect("generated model");
        for v in 0..nodes {
            for k in 0..c {
                if let Some(i) = graph.numeric_leaf(u_rel, &[v as ObjectId, (nodes + k) as ObjectId]) {
                    u.set(v, k, fit.leaves.numerics[i]);
                }
            }
        }
        let t = (spec.variant == Variant::MultiRelational).then(|| {
            let mut t = Matrix::zeros(spec.relations.len(), c);
            for r in 0..spec.relations.len() {
                let rel = model.relation_id(&spec.t_name(r)).expect("generated model");
                for k in 0..c {
                    if let Some(i) = graph.numeric_leaf(rel, &[(nodes + k) as ObjectId]) {
                        t.set(r, k, fit.leaves.numerics[i]);
                    }
                }
            }
            t
        });
        let alphas = (0..spec.relations.len())
            .map(|r| fit.param(graph, &spec.alpha_name(r)).unwrap_or(0.0))
            .collect();
        CommunityResult { u, t, alphas, ll: fit.best_ll }
    }
}

/// Independent-links baseline fitted in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct ErBaseline {
    pub alphas: Vec<f64>,
    pub lls: Vec<f64>,
    pub ll: f64,
}

/// Per relation, the intercept `logit(n1 / (n1 + n0))` over known atoms
/// of distinct ordered pairs, and the log-likelihood it attains.
pub fn er_baseline(data: &DataSet, relations: &[String]) -> Result<ErBaseline, CommunityError> {
    let mut alphas = Vec::new();
    let mut lls = Vec::new();
    for name in relations {
        let r = data.relation_index(name).ok_or_else(|| DataError::UnknownRelation(name.clone()))?;
        let (mut ones, mut zeros) = (0, 0);
        for s in data.samples() {
            for (args, t) in s.atoms(r) {
                if args.len() == 2 && args[0] == args[1] {
                    continue;
                }
                match t.known() {
                    Some(true) => ones += 1,
                    Some(false) => zeros += 1,
                    None => {}
                }
            }
        }
        if ones + zeros == 0 {
            return Err(CommunityError::EmptyRelation(name.clone()));
        }
        alphas.push(logit(clamp_probability(ones as f64 / (ones + zeros) as f64)));
        lls.push(bernoulli_mle_ll(ones, zeros));
    }
    let ll = lls.iter().sum();
    Ok(ErBaseline { alphas, lls, ll })
}

/// Name of the frozen centrality column in single-community models.
pub const U_COLUMN: &str = "ucol";

/// Single-community model with a fixed centrality column: per relation
/// `l-reg(alpha_i + t_i * u(V) * u(W))`, together with the data carrying
/// the column.
pub fn gain_problem(data: &DataSet, relations: &[String], column: &[f64]) -> Result<(Model, DataSet), CommunityError> {
    if relations.is_empty() {
        return Err(CommunityError::NoRelations);
    }
    check_dim(data.num_objects(), column.len())?;
    let mut s = format!("input {U_COLUMN}/1 numeric;\n");
    for (i, rel) in relations.iter().enumerate() {
        let _ = writeln!(s, "prob {rel}/2;\nparam alpha_{i};\nparam t_{i};");
    }
    for (i, rel) in relations.iter().enumerate() {
        let _ = writeln!(s, "{rel}(V, W) <- COMBINE alpha_{i} + t_{i} * {U_COLUMN}(V) * {U_COLUMN}(W) WITH l-reg;");
    }
    let model = parse_model(&s)?;
    let mut d = data.clone();
    if d.relation_index(U_COLUMN).is_some() {
        return Err(CommunityError::NameClash(U_COLUMN.into()));
    }
    d.add_relation(RelationSchema::new(
        U_COLUMN,
        1,
        RelationKind::NumericInput { range: Interval::UNBOUNDED, learnable: false },
    ))?;
    for (v, &x) in column.iter().enumerate() {
        d.set_input(U_COLUMN, &[v as ObjectId], x)?;
    }
    Ok((model, d))
}

/// Log-likelihood of the single-community model minus the baseline.
pub fn likelihood_gain(
    data: &DataSet,
    relations: &[String],
    column: &[f64],
    cfg: &FitConfig,
    fit: impl Fn(&LikelihoodGraph, &FitConfig) -> Result<FitResult, FitError>,
) -> Result<f64, CommunityError> {
    let base = er_baseline(data, relations)?;
    let (model, d) = gain_problem(data, relations, column)?;
    let g = LikelihoodGraph::build(&model, &d, &BuildOptions::default())?;
    Ok(fit(&g, cfg)?.best_ll - base.ll)
}

/// Refits only the intercepts on `data` with `u` and `t` held fixed.
/// Returns the intercepts and the log-likelihood.
pub fn refit_alphas(
    spec: &CommunitySpec,
    data: &DataSet,
    u: &Matrix,
    t: Option<&Matrix>,
    cfg: &FitConfig,
    fit: impl Fn(&LikelihoodGraph, &FitConfig) -> Result<FitResult, FitError>,
) -> Result<(Vec<f64>, f64), CommunityError> {
    let model = spec.model()?;
    let d = spec.augment_with_values(data, u, t)?;
    let opts = BuildOptions { frozen_relations: spec.latent_relations(), ..Default::default() };
    let g = LikelihoodGraph::build(&model, &d, &opts)?;
    let r = fit(&g, cfg)?;
    let alphas = (0..spec.relations.len()).map(|i| r.param(&g, &spec.alpha_name(i)).unwrap_or(0.0)).collect();
    Ok((alphas, r.best_ll))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// `permutation[k]` is the column of the second matrix matched to
    /// column `k` of the reference.
    pub permutation: Vec<usize>,
    /// `correlations[k][j]`: Pearson correlation of reference column `k`
    /// and column `j`.
    pub correlations: Vec<Vec<f64>>,
}

impl Matching {
    pub fn matched(&self) -> Vec<f64> {
        self.permutation.iter().enumerate().map(|(k, &j)| self.correlations[k][j]).collect()
    }
}

/// Matches the columns of `other` to those of `reference` so that the sum
/// of matched correlations is maximal.
pub fn match_communities(reference: &Matrix, other: &Matrix) -> Result<Matching, CommunityError> {
    check_dim(reference.rows, other.rows)?;
    check_dim(reference.cols, other.cols)?;
    let c = reference.cols;
    let correlations: Vec<Vec<f64>> = (0..c)
        .map(|k| {
            let a = reference.column(k);
            (0..c).map(|j| pearson(&a, &other.column(j))).collect()
        })
        .collect();
    // best[mask]: best total for assigning the first popcount(mask)
    // reference columns to the columns in mask
    let full = 1usize << c;
    let mut best = vec![f64::NEG_INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    best[0] = 0.0;
    for mask in 0..full {
        if best[mask] == f64::NEG_INFINITY {
            continue;
        }
        let k = mask.count_ones() as usize;
        if k == c {
            continue;
        }
        #[allow(clippy::needless_range_loop)]
        for j in 0..c {
            if mask & (1 << j) == 0 {
                let next = mask | (1 << j);
                let v = best[mask] + correlations[k][j];
                if v > best[next] {
                    best[next] = v;
                    choice[next] = j;
                }
            }
        }
    }
    let mut permutation = vec![0; c];
    let mut mask = full - 1;
    for k in (0..c).rev() {
        let j = choice[mask];
        permutation[k] = j;
        mask &= !(1 << j);
    }
    Ok(Matching { permutation, correlations })
}

/// Strength class of a correlation for heat-map reporting: 3 above 0.7,
/// 2 above 0.5, 1 above 0.3, else 0.
pub fn correlation_level(r: f64) -> u8 {
    if r > 0.7 {
        3
    } else if r > 0.5 {
        2
    } else if r > 0.3 {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Truth;
    use crate::graph::Evaluator;
    use crate::learn::fit;

    fn ring(n: u32, rels: &[&str]) -> DataSet {
        let labels: Vec<String> = (1..=n).map(|i| format!("{i}")).collect();
        let mut d = DataSet::new(labels).unwrap();
        for (i, rel) in rels.iter().enumerate() {
            d.add_relation(RelationSchema::new(*rel, 2, RelationKind::Probabilistic).undirected()).unwrap();
            for a in 0..n {
                for b in a + 1..n {
                    let edge = b == a + 1 + i as u32 || (a == 0 && b == n - 1);
                    d.set_observation(0, rel, &[a, b], Truth::from_bool(edge)).unwrap();
                }
            }
        }
        d
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn leaf_counts_match_dimensions() {
        let spec = CommunitySpec::new(2, names(&["link"]), Variant::InnerProduct);
        let d = ring(8, &["link"]);
        let g = LikelihoodGraph::build(&spec.model().unwrap(), &spec.augment(&d).unwrap(), &BuildOptions::default()).unwrap();
        assert_eq!((g.params().len(), g.numerics().len()), (1, 16));
        let spec = CommunitySpec::new(4, names(&["a", "b", "c"]), Variant::MultiRelational);
        let d = ring(6, &["a", "b", "c"]);
        let g = LikelihoodGraph::build(&spec.model().unwrap(), &spec.augment(&d).unwrap(), &BuildOptions::default()).unwrap();
        assert_eq!((g.params().len(), g.numerics().len()), (3, 6 * 4 + 3 * 4));
    }

    #[test]
    fn single_relational_variants_reject_several_relations() {
        let spec = CommunitySpec::new(2, names(&["a", "b"]), Variant::Distance);
        assert_eq!(spec.model(), Err(CommunityError::SingleRelational("distance")));
    }

    #[test]
    fn distance_model_sign() {
        let mut spec = CommunitySpec::new(1, names(&["link"]), Variant::Distance);
        assert!(spec.model_text().unwrap().contains("-1 * (u(V, C) - u(W, C))"));
        spec.distance_sign = 1.0;
        assert!(spec.model_text().unwrap().contains("WITH l-reg"));
        assert!(!spec.model_text().unwrap().contains("-1 *"));
        assert_eq!(spec.u_range(), Interval::UNBOUNDED);
    }

    #[test]
    fn baseline_is_closed_form() {
        let d = ring(10, &["link"]);
        let er = er_baseline(&d, &names(&["link"])).unwrap();
        // 10 ring edges in both directions out of 90 ordered pairs
        assert!((er.alphas[0] - logit(20.0 / 90.0)).abs() < 1e-12);
        assert!((er.ll - bernoulli_mle_ll(20, 70)).abs() < 1e-12);
        let spec = CommunitySpec::new(0, names(&["link"]), Variant::InnerProduct);
        let g = LikelihoodGraph::build(&spec.model().unwrap(), &spec.augment(&d).unwrap(), &BuildOptions::default()).unwrap();
        let mut e = Evaluator::new(&g);
        e.set_param(0, er.alphas[0]);
        assert!((e.log_likelihood().unwrap() - er.ll).abs() < 1e-9);
    }

    #[test]
    fn half_density_gives_zero_intercept() {
        let mut d = DataSet::new(["a", "b"]).unwrap();
        d.add_relation(RelationSchema::new("link", 2, RelationKind::Probabilistic)).unwrap();
        d.set_observation(0, "link", &[0, 1], Truth::True).unwrap();
        d.set_observation(0, "link", &[1, 0], Truth::False).unwrap();
        assert_eq!(er_baseline(&d, &names(&["link"])).unwrap().alphas, [0.0]);
        d.set_observation(0, "link", &[1, 0], Truth::Unknown).unwrap();
        d.set_observation(0, "link", &[0, 1], Truth::Unknown).unwrap();
        assert!(matches!(er_baseline(&d, &names(&["link"])), Err(CommunityError::EmptyRelation(_))));
    }

    #[test]
    fn zero_column_has_no_gain() {
        let d = ring(9, &["x", "y"]);
        let cfg = FitConfig { restarts: 2, tol: 1e-12, ..Default::default() };
        let gain = likelihood_gain(&d, &names(&["x", "y"]), &[0.0; 9], &cfg, fit).unwrap();
        assert!(gain.abs() < 1e-6, "{gain}");
        let col: Vec<f64> = (0..9).map(|i| if i < 3 { 1.0 } else { 0.0 }).collect();
        assert!(likelihood_gain(&d, &names(&["x", "y"]), &col, &cfg, fit).unwrap() > -1e-6);
        assert!(matches!(
            likelihood_gain(&d, &names(&["x"]), &[0.0; 4], &cfg, fit),
            Err(CommunityError::Dimension { .. })
        ));
    }

    #[test]
    fn refit_never_loses() {
        let spec = CommunitySpec::new(2, names(&["a", "b"]), Variant::MultiRelational);
        let d = ring(7, &["a", "b"]);
        let model = spec.model().unwrap();
        let aug = spec.augment(&d).unwrap();
        let g = LikelihoodGraph::build(&model, &aug, &BuildOptions::default()).unwrap();
        let cfg = FitConfig { restarts: 2, max_iter: 1000, ..Default::default() };
        let r = fit(&g, &cfg).unwrap();
        let res = CommunityResult::extract(&spec, &model, &g, &r, 7);
        assert!(res.u.data.iter().all(|&x| x >= 0.0));
        let (alphas, ll) = refit_alphas(&spec, &d, &res.u, res.t.as_ref(), &FitConfig { tol: 1e-12, ..cfg }, fit).unwrap();
        assert_eq!(alphas.len(), 2);
        assert!(ll >= r.best_ll - 1e-6, "{ll} < {}", r.best_ll);
    }

    #[test]
    fn matching_recovers_permutations() {
        let mut u = Matrix::zeros(6, 3);
        let vals = [1.0, 0.2, 0.0, 0.5, 0.9, 0.1, 0.0, 0.3, 0.8, 0.7, 0.1, 0.4, 0.2, 0.6, 0.3, 0.9, 0.0, 0.5];
        u.data.copy_from_slice(&vals);
        let m = match_communities(&u, &u).unwrap();
        assert_eq!(m.permutation, [0, 1, 2]);
        assert!(m.matched().iter().all(|&r| (r - 1.0).abs() < 1e-12));
        // column j of q is column sigma[j] of u
        let sigma = [2, 0, 1];
        let mut q = Matrix::zeros(6, 3);
        for r in 0..6 {
            for (j, &sj) in sigma.iter().enumerate() {
                q.set(r, j, u.get(r, sj));
            }
        }
        let m = match_communities(&u, &q).unwrap();
        for k in 0..3 {
            assert_eq!(sigma[m.permutation[k]], k);
        }
        assert!(match_communities(&u, &Matrix::zeros(5, 3)).is_err());
    }

    #[test]
    fn correlation_levels() {
        assert_eq!([0.8, 0.6, 0.4, 0.1].map(correlation_level), [3, 2, 1, 0]);
    }
}
