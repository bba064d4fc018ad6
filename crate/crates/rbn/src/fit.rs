//! Concurrent restarts over one shared graph.

use std::time::Instant;

use rayon::prelude::*;
use rbn_core::graph::LikelihoodGraph;
use rbn_core::learn::{aggregate, fit_restart, FitConfig, FitError, FitResult};

/// A fit together with the wall-clock seconds each restart took.
#[derive(Clone, Debug)]
pub struct TimedFit {
    pub result: FitResult,
    pub restart_seconds: Vec<f64>,
}

impl TimedFit {
    pub fn mean_restart_seconds(&self) -> f64 {
        self.restart_seconds.iter().sum::<f64>() / self.restart_seconds.len().max(1) as f64
    }
}

/// Runs the restarts of `cfg` in parallel. The result equals that of the
/// sequential learner for the same configuration.
pub fn fit_parallel(graph: &LikelihoodGraph, cfg: &FitConfig) -> Result<TimedFit, FitError> {
    cfg.validate()?;
    let runs = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let t = Instant::now();
            fit_restart(graph, cfg, r, None).map(|res| (res, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let restart_seconds = runs.iter().map(|(_, s)| *s).collect();
    let result = aggregate(runs.into_iter().map(|(r, _)| r).collect());
    Ok(TimedFit { result, restart_seconds })
}

/// [`fit_parallel`] without the timings, in the shape the community
/// drivers take.
pub fn fit_fn(graph: &LikelihoodGraph, cfg: &FitConfig) -> Result<FitResult, FitError> {
    fit_parallel(graph, cfg).map(|t| t.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rbn_core::data::{DataSet, RelationSchema, Truth};
    use rbn_core::formula::{parse_model, RelationKind};
    use rbn_core::graph::BuildOptions;
    use rbn_core::learn::fit;

    #[test]
    fn parallel_equals_sequential() {
        let m = parse_model("prob r/1; param a; param b; r(X) <- COMBINE a + b * 0.5 WITH l-reg;").unwrap();
        let mut d = DataSet::new((0..12).map(|i| i.to_string())).unwrap();
        d.add_relation(RelationSchema::new("r", 1, RelationKind::Probabilistic)).unwrap();
        for i in 0..12 {
            d.set_observation(0, "r", &[i], Truth::from_bool(i % 3 == 0)).unwrap();
        }
        let g = LikelihoodGraph::build(&m, &d, &BuildOptions::default()).unwrap();
        let cfg = FitConfig { restarts: 6, ..Default::default() };
        let p = fit_parallel(&g, &cfg).unwrap();
        assert_eq!(p.result, fit(&g, &cfg).unwrap());
        assert_eq!(p.restart_seconds.len(), 6);
    }
}
