//! Ancestral sampling of all ground probabilistic atoms.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{DataError, DataSet, ObjectId, RelationSchema, Sample, Truth};
use crate::formula::{evaluate_assignment, EvalError, Interpretation, Model, ParamId, RelId, RelationKind};
use crate::ground::{topological_order, AtomKey, InputView, OrderError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("the number of samples must be positive")]
    NoSamples,
    #[error("cyclic dependency among probabilistic atoms through `{0}`")]
    Cycle(String),
    #[error("no value given for parameter `{0}`")]
    MissingParameter(String),
    #[error("relation `{0}` has a different kind or arity in the data")]
    RelationMismatch(String),
    #[error("`{atom}`: {source}")]
    Eval { atom: String, source: EvalError },
    #[error(transparent)]
    Data(#[from] DataError),
}

struct State<'a> {
    view: &'a InputView<'a>,
    params: &'a [f64],
    values: BTreeMap<AtomKey, bool>,
}

impl Interpretation for State<'_> {
    fn domain_size(&self) -> usize {
        self.view.data.num_objects()
    }

    fn param(&self, id: ParamId) -> f64 {
        self.params[id]
    }

    fn atom(&self, relation: RelId, args: &[ObjectId]) -> Result<f64, EvalError> {
        let decl = self.view.model.relation(relation);
        match decl.kind {
            RelationKind::Probabilistic => match self.values.get(&(relation, args.to_vec())) {
                Some(&b) => Ok(if b { 1.0 } else { 0.0 }),
                None => Err(EvalError::MissingValue(self.view.describe(relation, args))),
            },
            _ => self.view.atom(relation, args),
        }
    }
}

fn all_tuples(n: usize, arity: usize) -> Vec<Vec<ObjectId>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n as ObjectId).map(move |o| {
                    let mut t = t.clone();
                    t.push(o);
                    t
                })
            })
            .collect();
    }
    out
}

/// Draws `n` independent joint samples of every ground probabilistic atom
/// over the domain of `data`, conditioned on its input relations. The
/// result is `data` with its samples replaced.
pub fn forward_sample(
    model: &Model,
    data: &DataSet,
    params: &BTreeMap<String, f64>,
    n: usize,
    seed: u64,
) -> Result<DataSet, SampleError> {
    if n == 0 {
        return Err(SampleError::NoSamples);
    }
    let values = model
        .params()
        .iter()
        .map(|p| params.get(&p.name).copied().ok_or_else(|| SampleError::MissingParameter(p.name.clone())))
        .collect::<Result<Vec<f64>, _>>()?;

    let mut out = data.with_samples(vec![Sample::default(); n])?;
    for r in model.relations() {
        if r.is_probabilistic() && out.relation_index(&r.name).is_none() {
            out.add_relation(RelationSchema::new(r.name.clone(), r.arity, RelationKind::Probabilistic))?;
        }
    }
    let view = InputView::new(model, &out).map_err(|e| SampleError::RelationMismatch(e.0))?;

    let mut roots = Vec::new();
    for (r, decl) in model.relations().iter().enumerate() {
        if !decl.is_probabilistic() {
            continue;
        }
        let symmetric = view.rel_map[r].is_some_and(|di| {
            let s = &out.relations()[di];
            s.arity == 2 && !s.directed
        });
        for t in all_tuples(out.num_objects(), decl.arity) {
            // both directions of an undirected pair share one draw
            if !(symmetric && t[0] > t[1]) {
                roots.push((r, t));
            }
        }
    }
    let order = match topological_order(&view, &roots) {
        Ok(o) => o,
        Err(OrderError::Cycle((r, args))) => return Err(SampleError::Cycle(view.describe(r, &args))),
        Err(OrderError::Eval(e)) => return Err(SampleError::Eval { atom: String::new(), source: e }),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: Vec<Vec<(AtomKey, bool)>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut state = State { view: &view, params: &values, values: BTreeMap::new() };
        for (r, args) in &order {
            let a = model.assignment_for(*r).expect("validated model");
            let p = evaluate_assignment(model, a, args, &state)
                .map_err(|e| SampleError::Eval { atom: view.describe(*r, args), source: e })?;
            let b = rng.random::<f64>() < p;
            state.values.insert((*r, args.clone()), b);
            if view.rel_map[*r].is_some_and(|di| out.relations()[di].arity == 2 && !out.relations()[di].directed) {
                state.values.insert((*r, vec![args[1], args[0]]), b);
            }
        }
        draws.push(state.values.into_iter().collect());
    }
    drop(view);
    for (s, atoms) in draws.into_iter().enumerate() {
        for ((r, args), b) in atoms {
            out.set_observation(s, &model.relation(r).name, &args, Truth::from_bool(b))?;
        }
    }
    Ok(out)
}
