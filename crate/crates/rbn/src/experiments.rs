//! End-to-end drivers shared by the command line and the test suites.

use std::time::Instant;

use rbn_core::community::{
    likelihood_gain, match_communities, refit_alphas, CommunityResult, CommunitySpec, Matrix,
};
use rbn_core::data::DataSet;
use rbn_core::formula::{Model, RelationKind};
use rbn_core::graph::{BuildOptions, GraphStats, LikelihoodGraph};
use rbn_core::learn::FitConfig;

use crate::fit::{fit_fn, fit_parallel, TimedFit};
use crate::Result;

/// Restarts for the single-community fits behind likelihood gains.
pub const GAIN_RESTARTS: usize = 10;
/// Restarts for re-fitting intercepts, a concave problem.
pub const REFIT_RESTARTS: usize = 2;

/// Names of the binary probabilistic relations of `data`, in order.
pub fn link_relations(data: &DataSet) -> Vec<String> {
    data.relations()
        .iter()
        .filter(|r| r.arity == 2 && matches!(r.kind, RelationKind::Probabilistic))
        .map(|r| r.name.clone())
        .collect()
}

/// A graph together with its fit and timings.
pub struct Learned {
    pub graph: LikelihoodGraph,
    pub build_seconds: f64,
    pub fit: TimedFit,
}

pub fn learn(model: &Model, data: &DataSet, opts: &BuildOptions, cfg: &FitConfig) -> Result<Learned> {
    let t = Instant::now();
    let graph = LikelihoodGraph::build(model, data, opts)?;
    let build_seconds = t.elapsed().as_secs_f64();
    let fit = fit_parallel(&graph, cfg)?;
    Ok(Learned { graph, build_seconds, fit })
}

pub struct CommunityRun {
    pub spec: CommunitySpec,
    pub stats: GraphStats,
    /// Observed atoms in the likelihood.
    pub atoms: usize,
    pub build_seconds: f64,
    pub fit: TimedFit,
    pub result: CommunityResult,
}

/// Fits a community model to the link relations named in `spec`.
pub fn run_community(data: &DataSet, spec: &CommunitySpec, cfg: &FitConfig) -> Result<CommunityRun> {
    let model = spec.model()?;
    let aug = spec.augment(data)?;
    let l = learn(&model, &aug, &BuildOptions::default(), cfg)?;
    let result = CommunityResult::extract(spec, &model, &l.graph, &l.fit.result, data.num_objects());
    Ok(CommunityRun {
        spec: spec.clone(),
        stats: l.graph.stats(),
        atoms: l.graph.terms().len(),
        build_seconds: l.build_seconds,
        fit: l.fit,
        result,
    })
}

/// Per-community likelihood gains over the independent-links baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct Significance {
    pub er_ll: f64,
    pub gains: Vec<f64>,
}

/// Gains of every column of `u`, each fitted with `cfg`.
pub fn significance(data: &DataSet, relations: &[String], u: &Matrix, cfg: &FitConfig) -> Result<Significance> {
    let er_ll = rbn_core::community::er_baseline(data, relations)?.ll;
    let gains = (0..u.cols)
        .map(|k| likelihood_gain(data, relations, &u.column(k), cfg, fit_fn))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Significance { er_ll, gains })
}

/// One sub-sampling level of the sub-sampling experiment.
pub struct SubsampleRun {
    pub q: f64,
    /// Observed atoms after sub-sampling.
    pub atoms: usize,
    pub seconds_per_restart: f64,
    /// Log-likelihood on the sub-sampled data.
    pub ll: f64,
    pub result: CommunityResult,
    /// Intercepts and log-likelihood after re-fitting the intercepts on
    /// the full data.
    pub refit_alphas: Vec<f64>,
    pub refit_ll: f64,
    /// `permutation[k]`: column of this run matched to column `k` of the
    /// first run.
    pub permutation: Vec<usize>,
    pub matched: Vec<f64>,
    pub correlations: Vec<Vec<f64>>,
}

/// Fits `spec` on false-link sub-samples of `data` for each percentage in
/// `qs`, re-fits the intercepts on the full data and matches the
/// communities of each level to those of the first.
pub fn subsample_experiment(
    data: &DataSet,
    spec: &CommunitySpec,
    qs: &[f64],
    cfg: &FitConfig,
    seed: u64,
) -> Result<Vec<SubsampleRun>> {
    let rels: Vec<&str> = spec.relations.iter().map(String::as_str).collect();
    let refit_cfg = FitConfig { restarts: REFIT_RESTARTS, ..cfg.clone() };
    let mut runs: Vec<SubsampleRun> = Vec::new();
    for &q in qs {
        let sub = data.subsample_false_links(&rels, q, seed)?;
        let run = run_community(&sub, spec, cfg)?;
        let (refit_alphas, refit_ll) =
            refit_alphas(spec, data, &run.result.u, run.result.t.as_ref(), &refit_cfg, fit_fn)?;
        let reference = runs.first().map_or(&run.result.u, |r| &r.result.u);
        let m = match_communities(reference, &run.result.u)?;
        runs.push(SubsampleRun {
            q,
            atoms: run.atoms,
            seconds_per_restart: run.fit.mean_restart_seconds(),
            ll: run.result.ll,
            matched: m.matched(),
            permutation: m.permutation,
            correlations: m.correlations,
            result: run.result,
            refit_alphas,
            refit_ll,
        });
    }
    Ok(runs)
}
