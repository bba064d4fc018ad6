//! Log-likelihood by direct per-atom evaluation of the formulas, without
//! the graph. Used to cross-check sharing and constant folding.

use super::{BuildOptions, GraphError, LeafValues, LikelihoodGraph};
use crate::data::{DataSet, ObjectId, Truth};
use crate::formula::{evaluate_assignment, EvalError, Interpretation, Model, ParamId, RelId, RelationKind};
use crate::ground::InputView;
use crate::math::log_outcome;

struct Naive<'a> {
    view: InputView<'a>,
    graph: &'a LikelihoodGraph,
    opts: &'a BuildOptions,
    leaves: &'a LeafValues,
    sample: usize,
}

impl Interpretation for Naive<'_> {
    fn domain_size(&self) -> usize {
        self.view.data.num_objects()
    }

    fn param(&self, id: ParamId) -> f64 {
        let name = &self.view.model.params()[id].name;
        if let Some(v) = self.opts.fixed_params.get(name) {
            return *v;
        }
        // parameters the graph never reached are multiplied by zero
        self.graph.param_leaf(id).map_or(0.0, |i| self.leaves.params[i])
    }

    fn atom(&self, relation: RelId, args: &[ObjectId]) -> Result<f64, EvalError> {
        let decl = self.view.model.relation(relation);
        match decl.kind {
            RelationKind::BooleanInput => Ok(self.view.input_value(relation, args).unwrap_or(0.0)),
            RelationKind::NumericInput { .. } => {
                if let Some(i) = self.graph.numeric_leaf(relation, args) {
                    return Ok(self.leaves.numerics[i]);
                }
                Ok(self.view.input_value(relation, args).unwrap_or(0.0))
            }
            RelationKind::Probabilistic => {
                let stored = self.view.rel_map[relation].and_then(|di| self.view.data.sample(self.sample).get(di, args));
                Ok(match stored {
                    Some(Truth::True) => 1.0,
                    Some(Truth::False) => 0.0,
                    _ => match self.graph.indicator(self.sample, relation, args) {
                        Some(i) if self.leaves.indicators[i] => 1.0,
                        _ => 0.0,
                    },
                })
            }
        }
    }
}

/// Sum over samples of the log-probability of every observed atom and
/// every atom carrying an indicator of `graph`, with leaf values taken
/// from `leaves`.
pub fn reference_log_likelihood(
    model: &Model,
    data: &DataSet,
    opts: &BuildOptions,
    graph: &LikelihoodGraph,
    leaves: &LeafValues,
) -> Result<f64, GraphError> {
    let view = InputView::new(model, data).map_err(|e| GraphError::RelationMismatch(e.0))?;
    let mut ctx = Naive { view, graph, opts, leaves, sample: 0 };
    let mut ll = 0.0;
    for s in 0..data.samples().len() {
        ctx.sample = s;
        let mut add = |ctx: &Naive<'_>, r: RelId, args: &[ObjectId], value: bool| -> Result<(), GraphError> {
            let a = model.assignment_for(r).ok_or_else(|| GraphError::Unassigned(model.relation(r).name.clone()))?;
            let p = evaluate_assignment(model, a, args, ctx)
                .map_err(|e| GraphError::Eval { atom: ctx.view.describe(r, args), source: e })?;
            ll += log_outcome(p, value);
            Ok(())
        };
        for r in 0..model.relations().len() {
            if !model.relation(r).is_probabilistic() {
                continue;
            }
            let Some(di) = ctx.view.rel_map[r] else { continue };
            for (args, truth) in data.sample(s).atoms(di) {
                if let Some(value) = truth.known() {
                    add(&ctx, r, args, value)?;
                }
            }
        }
        for (i, leaf) in graph.indicators().iter().enumerate() {
            if leaf.sample == s {
                add(&ctx, leaf.relation, &leaf.args, leaves.indicators[i])?;
            }
        }
    }
    Ok(ll)
}
