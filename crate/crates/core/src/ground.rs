//! Grounding helpers shared by graph construction and forward sampling:
//! a read-only view of the input data in model terms, and the dependency
//! structure among ground probabilistic atoms.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{DataSet, ObjectId};
use crate::formula::{
    eval::{for_each_tuple, ground_args},
    EvalError, Formula, Interpretation, Model, ParamId, RelId, RelationKind,
};

pub(crate) type AtomKey = (RelId, Vec<ObjectId>);

/// Input relations of a data set, addressed by model relation ids.
pub(crate) struct InputView<'a> {
    pub model: &'a Model,
    pub data: &'a DataSet,
    /// model relation id -> data relation index
    pub rel_map: Vec<Option<usize>>,
}

impl<'a> InputView<'a> {
    pub fn new(model: &'a Model, data: &'a DataSet) -> Result<InputView<'a>, RelationMismatch> {
        let mut rel_map = Vec::with_capacity(model.relations().len());
        for r in model.relations() {
            let idx = data.relation_index(&r.name);
            if let Some(i) = idx {
                let schema = &data.relations()[i];
                let compatible = matches!(
                    (r.kind, schema.kind),
                    (RelationKind::BooleanInput, RelationKind::BooleanInput)
                        | (RelationKind::Probabilistic, RelationKind::Probabilistic)
                        | (RelationKind::NumericInput { .. }, RelationKind::NumericInput { .. })
                );
                if !compatible || schema.arity != r.arity {
                    return Err(RelationMismatch(r.name.clone()));
                }
            }
            rel_map.push(idx);
        }
        Ok(InputView { model, data, rel_map })
    }

    pub fn input_value(&self, relation: RelId, args: &[ObjectId]) -> Option<f64> {
        self.rel_map[relation].and_then(|i| self.data.input_value(i, args))
    }

    pub fn describe(&self, relation: RelId, args: &[ObjectId]) -> String {
        describe_atom(self.model, self.data, relation, args)
    }
}

pub(crate) fn describe_atom(model: &Model, data: &DataSet, relation: RelId, args: &[ObjectId]) -> String {
    let labels: Vec<&str> = args.iter().map(|&o| data.label(o)).collect();
    format!("{}({})", model.relation(relation).name, labels.join(", "))
}

#[derive(Debug)]
pub(crate) struct RelationMismatch(pub String);

impl Interpretation for InputView<'_> {
    fn domain_size(&self) -> usize {
        self.data.num_objects()
    }

    fn param(&self, _id: ParamId) -> f64 {
        f64::NAN
    }

    fn atom(&self, relation: RelId, args: &[ObjectId]) -> Result<f64, EvalError> {
        let decl = self.model.relation(relation);
        match decl.kind {
            RelationKind::BooleanInput => Ok(self.input_value(relation, args).unwrap_or(0.0)),
            _ => self
                .input_value(relation, args)
                .ok_or_else(|| EvalError::MissingValue(decl.name.clone())),
        }
    }
}

/// Probabilistic atoms referenced anywhere in the grounded formula of
/// `relation(args)`, over all branches.
pub(crate) fn dependencies(view: &InputView<'_>, relation: RelId, args: &[ObjectId]) -> Result<Vec<AtomKey>, EvalError> {
    let a = view.model.assignment_for(relation).expect("validated model");
    let mut binding = alloc::vec![None; a.var_count()];
    for (v, o) in a.head.iter().zip(args) {
        binding[v.index()] = Some(*o);
    }
    let mut out = Vec::new();
    collect(view, &a.formula, &mut binding, &mut out)?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn collect(
    view: &InputView<'_>,
    f: &Formula,
    binding: &mut Vec<Option<ObjectId>>,
    out: &mut Vec<AtomKey>,
) -> Result<(), EvalError> {
    match f {
        Formula::Const(_) | Formula::Param(_) => {}
        Formula::Atom { relation, args } => {
            if view.model.relation(*relation).is_probabilistic() {
                out.push((*relation, ground_args(args, binding)?));
            }
        }
        Formula::Plus(a, b) | Formula::Minus(a, b) | Formula::Times(a, b) => {
            collect(view, a, binding, out)?;
            collect(view, b, binding, out)?;
        }
        Formula::Wif { cond, then, otherwise } => {
            collect(view, cond, binding, out)?;
            collect(view, then, binding, out)?;
            collect(view, otherwise, binding, out)?;
        }
        Formula::Combine(c) => {
            let mut tuples: Vec<Vec<Option<ObjectId>>> = Vec::new();
            for_each_tuple(&c.bound, &c.guard, binding, view, &mut |b| tuples.push(b.clone()))?;
            for mut t in tuples {
                for body in &c.bodies {
                    collect(view, body, &mut t, out)?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug)]
pub(crate) enum OrderError {
    Cycle(AtomKey),
    Eval(EvalError),
}

/// All probabilistic atoms reachable from `roots`, parents before children.
pub(crate) fn topological_order(view: &InputView<'_>, roots: &[AtomKey]) -> Result<Vec<AtomKey>, OrderError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<AtomKey, Mark> = BTreeMap::new();
    let mut order = Vec::new();
    for root in roots {
        if marks.contains_key(root) {
            continue;
        }
        // explicit stack of (atom, its dependencies, next child index)
        let deps = dependencies(view, root.0, &root.1).map_err(OrderError::Eval)?;
        marks.insert(root.clone(), Mark::Open);
        let mut stack: Vec<(AtomKey, Vec<AtomKey>, usize)> = alloc::vec![(root.clone(), deps, 0)];
        while let Some((_, deps, next)) = stack.last_mut() {
            if *next < deps.len() {
                let child = deps[*next].clone();
                *next += 1;
                match marks.get(&child) {
                    Some(Mark::Open) => return Err(OrderError::Cycle(child)),
                    Some(Mark::Done) => {}
                    None => {
                        let d = dependencies(view, child.0, &child.1).map_err(OrderError::Eval)?;
                        marks.insert(child.clone(), Mark::Open);
                        stack.push((child, d, 0));
                    }
                }
            } else {
                let (atom, _, _) = stack.pop().expect("non-empty");
                marks.insert(atom.clone(), Mark::Done);
                order.push(atom);
            }
        }
    }
    Ok(order)
}
