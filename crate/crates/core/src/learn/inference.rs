//! Handling of unobserved atoms for a fixed valuation of the learnable
//! leaves: greedy MAP search and single-site Gibbs sampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Evaluator, GraphError, LeafValues, LikelihoodGraph};
use crate::math::logistic;

#[derive(Clone, Debug, PartialEq)]
pub struct MapResult {
    pub indicators: Vec<bool>,
    pub ll: f64,
    pub flips: usize,
}

/// Samples with at most this many indicators are searched exhaustively
/// before the greedy pass.
const EXHAUSTIVE_LIMIT: usize = 12;

/// Local MAP assignment of the indicators: starting from `leaves`, flips
/// single indicators while that increases the log-likelihood. Indicators
/// of different samples never interact, so small samples are first set to
/// their exact optimum by enumeration.
pub fn map_inference(graph: &LikelihoodGraph, leaves: &LeafValues) -> Result<MapResult, GraphError> {
    let mut e = Evaluator::new(graph);
    e.set_leaves(leaves.clone());
    let mut ll = e.log_likelihood()?;
    let mut by_sample: Vec<Vec<usize>> = vec![Vec::new(); graph.num_samples()];
    for (i, leaf) in graph.indicators().iter().enumerate() {
        by_sample[leaf.sample].push(i);
    }
    let mut flips = 0;
    for block in by_sample.iter().filter(|b| !b.is_empty() && b.len() <= EXHAUSTIVE_LIMIT) {
        let mut best_ll = ll;
        let mut best: Vec<bool> = block.iter().map(|&i| e.leaves().indicators[i]).collect();
        // Gray-code walk: one flip per visited assignment
        for step in 1..(1u32 << block.len()) {
            let bit = step.trailing_zeros() as usize;
            let i = block[bit];
            let v = !e.leaves().indicators[i];
            e.set_indicator(i, v);
            let cur = e.log_likelihood()?;
            if cur > best_ll {
                best_ll = cur;
                best = block.iter().map(|&i| e.leaves().indicators[i]).collect();
            }
        }
        for (&i, &v) in block.iter().zip(&best) {
            if e.leaves().indicators[i] != v {
                flips += 1;
            }
            e.set_indicator(i, v);
        }
        ll = e.log_likelihood()?;
    }
    loop {
        let mut improved = false;
        for i in 0..graph.indicators().len() {
            let v = e.leaves().indicators[i];
            e.set_indicator(i, !v);
            let cur = e.log_likelihood()?;
            if cur > ll {
                ll = cur;
                flips += 1;
                improved = true;
            } else {
                e.set_indicator(i, v);
            }
        }
        if !improved {
            break;
        }
    }
    // settle caches on the final assignment
    let ll = e.log_likelihood()?;
    Ok(MapResult { indicators: e.leaves().indicators.clone(), ll, flips })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsResult {
    /// Estimated probability that each indicator is true.
    pub marginals: Vec<f64>,
    /// Average log-likelihood over the retained sweeps.
    pub expected_ll: f64,
    /// Indicator state after the last sweep.
    pub last: Vec<bool>,
}

/// Single-site Gibbs sampling of the indicators given the other leaves:
/// `burn_in` discarded sweeps, then `sweeps` retained ones. Marginals
/// average the full conditionals over the retained sweeps.
pub fn gibbs_marginalize(
    graph: &LikelihoodGraph,
    leaves: &LeafValues,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<GibbsResult, GraphError> {
    let mut e = Evaluator::new(graph);
    e.set_leaves(leaves.clone());
    let mut ll = e.log_likelihood()?;
    let n = graph.indicators().len();
    if n == 0 {
        return Ok(GibbsResult { marginals: Vec::new(), expected_ll: ll, last: Vec::new() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![0.0; n];
    let mut ll_sum = 0.0;
    let kept = sweeps.max(1);
    for sweep in 0..burn_in + sweeps {
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            let v = e.leaves().indicators[i];
            e.set_indicator(i, !v);
            let other = e.log_likelihood()?;
            let (ll1, ll0) = if v { (ll, other) } else { (other, ll) };
            let p1 = logistic(ll1 - ll0);
            let draw = rng.random::<f64>() < p1;
            e.set_indicator(i, draw);
            ll = if draw { ll1 } else { ll0 };
            if sweep >= burn_in {
                sums[i] += p1;
            }
        }
        if sweep >= burn_in {
            ll_sum += ll;
        }
    }
    Ok(GibbsResult {
        marginals: sums.into_iter().map(|s| s / kept as f64).collect(),
        expected_ll: ll_sum / kept as f64,
        last: e.leaves().indicators.clone(),
    })
}
