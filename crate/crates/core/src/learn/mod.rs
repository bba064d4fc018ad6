//! Maximum-likelihood fitting by multi-restart projected gradient ascent,
//! plus MAP and Gibbs handling of unobserved atoms and forward sampling.

mod inference;
mod sample;

use alloc::string::String;
use alloc::vec::Vec;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::Interval;
use crate::graph::{Evaluator, Gradient, GraphError, LeafValues, LikelihoodGraph};

pub use inference::{gibbs_marginalize, map_inference, GibbsResult, MapResult};
pub use sample::{forward_sample, SampleError};

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Relative log-likelihood gain below which an accepted step counts
    /// as converged.
    pub tol: f64,
    /// Consecutive converged steps needed to stop.
    pub patience: usize,
    /// Largest change of any leaf in the first step of an ascent; the step
    /// factor then grows after accepted and shrinks after rejected steps.
    pub step: f64,
    pub grow: f64,
    pub shrink: f64,
    /// Init range for leaves whose declared range is unbounded.
    pub init_unbounded: Interval,
    /// Width of the init range above a finite lower bound (or below a
    /// finite upper bound) when the other end is infinite.
    pub init_half_bounded: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> FitConfig {
        FitConfig {
            restarts: 20,
            max_iter: 5000,
            tol: 1e-7,
            patience: 3,
            step: 0.01,
            grow: 1.2,
            shrink: 0.5,
            init_unbounded: Interval { min: -1.0, max: 1.0 },
            init_half_bounded: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("invalid fit configuration: {0}")]
    Config(&'static str),
    #[error("the graph has no learnable leaves")]
    NothingToLearn,
    #[error("non-finite gradient for {0}")]
    NonFiniteGradient(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl FitConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), FitError> {
        if self.restarts == 0 {
            return Err(FitError::Config("restarts must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(FitError::Config("tolerance must be positive"));
        }
        if !(self.grow > 1.0) {
            return Err(FitError::Config("step growth factor must exceed 1"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(FitError::Config("step shrink factor must lie in (0, 1)"));
        }
        if !(self.step > 0.0) || self.patience == 0 {
            return Err(FitError::Config("step and patience must be positive"));
        }
        Ok(())
    }

    fn init_range(&self, r: Interval) -> (f64, f64) {
        match (r.min.is_finite(), r.max.is_finite()) {
            (true, true) => (r.min, r.max),
            (true, false) => (r.min, r.min + self.init_half_bounded),
            (false, true) => (r.max - self.init_half_bounded, r.max),
            (false, false) => (self.init_unbounded.min, self.init_unbounded.max),
        }
    }
}

/// Outcome of one restart.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartResult {
    pub restart: usize,
    pub ll: f64,
    pub leaves: LeafValues,
    /// Log-likelihood after each accepted step, starting at the initial point.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub best_ll: f64,
    pub best_restart: usize,
    pub leaves: LeafValues,
    pub restart_lls: Vec<f64>,
    /// Trace of the best restart.
    pub trace: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl FitResult {
    /// Value of a learned parameter.
    pub fn param(&self, graph: &LikelihoodGraph, name: &str) -> Option<f64> {
        graph.param_leaf_by_name(name).map(|i| self.leaves.params[i])
    }
}

/// Random starting point of restart `restart`.
pub fn initial_leaves(graph: &LikelihoodGraph, cfg: &FitConfig, restart: usize) -> LeafValues {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let mut uniform = |(a, b): (f64, f64)| a + (b - a) * rng.random::<f64>();
    let params = graph.params().iter().map(|p| uniform(cfg.init_range(p.range))).collect();
    let numerics = graph.numerics().iter().map(|l| uniform(cfg.init_range(l.range))).collect();
    let indicators = (0..graph.indicators().len()).map(|_| uniform((0.0, 1.0)) < 0.5).collect();
    LeafValues { params, numerics, indicators }
}

fn check_gradient(graph: &LikelihoodGraph, g: &Gradient) -> Result<(), FitError> {
    if let Some(i) = g.params.iter().position(|x| !x.is_finite()) {
        return Err(FitError::NonFiniteGradient(alloc::format!("parameter leaf {i} ({})", graph.params()[i].name)));
    }
    if let Some(i) = g.numerics.iter().position(|x| !x.is_finite()) {
        let l = &graph.numerics()[i];
        return Err(FitError::NonFiniteGradient(alloc::format!("numeric leaf {i} ({}{:?})", l.name, l.args)));
    }
    Ok(())
}

fn max_abs(g: &Gradient) -> f64 {
    g.params.iter().chain(&g.numerics).fold(0.0, |m, x| m.max(x.abs()))
}

/// Rounds of ascent and MAP re-assignment per restart when the graph has
/// indicators that are not held fixed.
const EM_ROUNDS: usize = 20;

/// Runs one restart. `indicators` holds the indicators fixed at the given
/// setting; otherwise, if the graph has any, ascent alternates with MAP
/// re-assignment of the indicators until the assignment is stable.
pub fn fit_restart(
    graph: &LikelihoodGraph,
    cfg: &FitConfig,
    restart: usize,
    indicators: Option<&[bool]>,
) -> Result<RestartResult, FitError> {
    cfg.validate()?;
    if graph.num_learnable() == 0 {
        return Err(FitError::NothingToLearn);
    }
    let mut leaves = initial_leaves(graph, cfg, restart);
    if let Some(ind) = indicators {
        leaves.indicators.copy_from_slice(ind);
        return ascend(graph, cfg, restart, leaves);
    }
    let mut r = ascend(graph, cfg, restart, leaves)?;
    if graph.indicators().is_empty() {
        return Ok(r);
    }
    for _ in 0..EM_ROUNDS {
        let m = map_inference(graph, &r.leaves)?;
        if m.indicators == r.leaves.indicators {
            break;
        }
        let mut start = r.leaves.clone();
        start.indicators = m.indicators;
        let next = ascend(graph, cfg, restart, start)?;
        r.trace.extend_from_slice(&next.trace);
        r.iterations += next.iterations;
        r.ll = next.ll;
        r.leaves = next.leaves;
        r.converged = next.converged;
    }
    Ok(r)
}

fn ascend(graph: &LikelihoodGraph, cfg: &FitConfig, restart: usize, mut leaves: LeafValues) -> Result<RestartResult, FitError> {
    let mut e = Evaluator::new(graph);
    e.set_leaves(leaves.clone());
    let (mut ll, mut grad) = e.gradient()?;
    check_gradient(graph, &grad)?;
    let mut trace = alloc::vec![ll];
    // the first step moves no leaf by more than `cfg.step`
    let mut step = cfg.step / max_abs(&grad).max(1.0);
    let mut calm = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let gmax = max_abs(&grad);
        if gmax == 0.0 {
            converged = true;
            break;
        }
        let mut next = leaves.clone();
        let mut moved = false;
        for ((x, g), p) in next.params.iter_mut().zip(&grad.params).zip(graph.params()) {
            let y = p.range.project(*x + step * g);
            moved |= y != *x;
            *x = y;
        }
        for ((x, g), l) in next.numerics.iter_mut().zip(&grad.numerics).zip(graph.numerics()) {
            let y = l.range.project(*x + step * g);
            moved |= y != *x;
            *x = y;
        }
        if !moved {
            // stationary under projection, or the step underflowed
            converged = true;
            break;
        }
        e.set_leaves(next.clone());
        match e.gradient() {
            Ok((new_ll, new_grad)) if new_ll > ll => {
                check_gradient(graph, &new_grad)?;
                let gain = if ll != 0.0 { (new_ll - ll) / ll.abs() } else { new_ll - ll };
                calm = if gain < cfg.tol { calm + 1 } else { 0 };
                ll = new_ll;
                grad = new_grad;
                leaves = next;
                trace.push(ll);
                step *= cfg.grow;
                if calm >= cfg.patience {
                    converged = true;
                    break;
                }
            }
            // a rejected or infeasible step shrinks the step size
            _ => {
                step *= cfg.shrink;
            }
        }
    }
    Ok(RestartResult { restart, ll, leaves, trace, iterations, converged })
}

/// Picks the best restart; ties go to the lowest restart index.
pub fn aggregate(mut results: Vec<RestartResult>) -> FitResult {
    results.sort_by_key(|r| r.restart);
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.ll > results[best].ll {
            best = i;
        }
    }
    let restart_lls = results.iter().map(|r| r.ll).collect();
    let iterations = results.iter().map(|r| r.iterations).collect();
    let b = results.swap_remove(best);
    FitResult { best_ll: b.ll, best_restart: b.restart, leaves: b.leaves, restart_lls, trace: b.trace, iterations }
}

/// Runs all restarts in sequence.
pub fn fit(graph: &LikelihoodGraph, cfg: &FitConfig) -> Result<FitResult, FitError> {
    cfg.validate()?;
    let results = (0..cfg.restarts).map(|r| fit_restart(graph, cfg, r, None)).collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(results))
}
