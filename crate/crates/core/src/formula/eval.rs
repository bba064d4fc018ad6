//! Direct recursive evaluation of formulas. The likelihood graph computes
//! the same values with sharing and constant folding; this path is the
//! reference it is checked against, and the engine of forward sampling.

use alloc::vec::Vec;

use super::{Assignment, CombFn, Formula, Literal, Model, ParamId, RelId, VarId};
use crate::data::ObjectId;
use crate::math::logistic;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("probability {value} of `{relation}` lies outside [0, 1]")]
    ProbabilityOutOfRange { relation: alloc::string::String, value: f64 },
    #[error("mean of an empty multiset")]
    EmptyMean,
    #[error("noisy-or input {0} lies outside [0, 1]")]
    NoisyOrInput(f64),
    #[error("variable {0:?} is unbound")]
    Unbound(VarId),
    #[error("no value for atom of relation `{0}`")]
    MissingValue(alloc::string::String),
}

/// Values for everything a formula can reference.
pub trait Interpretation {
    fn domain_size(&self) -> usize;
    fn param(&self, id: ParamId) -> f64;
    /// Value of a ground atom: 0/1 for Boolean relations (including
    /// probabilistic atoms being conditioned on), a real for numeric ones.
    fn atom(&self, relation: RelId, args: &[ObjectId]) -> Result<f64, EvalError>;
}

/// Tolerance for the [0, 1] checks on probabilities and noisy-or inputs.
const UNIT_SLACK: f64 = 1e-9;

/// Evaluates `f` under `binding` (indexed by [`VarId`]).
#[allow(clippy::only_used_in_recursion)]
pub fn evaluate(
    model: &Model,
    f: &Formula,
    binding: &mut Vec<Option<ObjectId>>,
    ctx: &impl Interpretation,
) -> Result<f64, EvalError> {
    Ok(match f {
        Formula::Const(v) => *v,
        Formula::Param(p) => ctx.param(*p),
        Formula::Atom { relation, args } => {
            let objs = ground_args(args, binding)?;
            ctx.atom(*relation, &objs)?
        }
        Formula::Plus(a, b) => evaluate(model, a, binding, ctx)? + evaluate(model, b, binding, ctx)?,
        Formula::Minus(a, b) => evaluate(model, a, binding, ctx)? - evaluate(model, b, binding, ctx)?,
        Formula::Times(a, b) => evaluate(model, a, binding, ctx)? * evaluate(model, b, binding, ctx)?,
        Formula::Wif { cond, then, otherwise } => {
            let c = evaluate(model, cond, binding, ctx)?;
            let t = evaluate(model, then, binding, ctx)?;
            let e = evaluate(model, otherwise, binding, ctx)?;
            c * t + (1.0 - c) * e
        }
        Formula::Combine(c) => {
            let mut values = Vec::new();
            let mut err = None;
            for_each_tuple(&c.bound, &c.guard, binding, ctx, &mut |binding| {
                if err.is_some() {
                    return;
                }
                for body in &c.bodies {
                    match evaluate(model, body, binding, ctx) {
                        Ok(v) => values.push(v),
                        Err(e) => err = Some(e),
                    }
                }
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            combine(c.func, &values)?
        }
    })
}

/// Applies a combination function to a multiset.
pub(crate) fn combine(func: CombFn, values: &[f64]) -> Result<f64, EvalError> {
    Ok(match func {
        CombFn::Sum => values.iter().sum(),
        CombFn::LReg => logistic(values.iter().sum()),
        CombFn::Mean => {
            if values.is_empty() {
                return Err(EvalError::EmptyMean);
            }
            values.iter().sum::<f64>() / values.len() as f64
        }
        CombFn::NoisyOr => {
            let mut prod = 1.0;
            for &v in values {
                if !(-UNIT_SLACK..=1.0 + UNIT_SLACK).contains(&v) {
                    return Err(EvalError::NoisyOrInput(v));
                }
                prod *= 1.0 - v;
            }
            1.0 - prod
        }
    })
}

/// Probability of the ground atom `relation(args)` under its assignment,
/// checked to lie in [0, 1].
pub fn evaluate_assignment(
    model: &Model,
    assignment: &Assignment,
    args: &[ObjectId],
    ctx: &impl Interpretation,
) -> Result<f64, EvalError> {
    let mut binding = alloc::vec![None; assignment.var_count()];
    for (v, o) in assignment.head.iter().zip(args) {
        binding[v.index()] = Some(*o);
    }
    let p = evaluate(model, &assignment.formula, &mut binding, ctx)?;
    if !(-UNIT_SLACK..=1.0 + UNIT_SLACK).contains(&p) || p.is_nan() {
        return Err(EvalError::ProbabilityOutOfRange {
            relation: model.relation(assignment.relation).name.clone(),
            value: p,
        });
    }
    Ok(p)
}

pub(crate) fn ground_args(args: &[VarId], binding: &[Option<ObjectId>]) -> Result<Vec<ObjectId>, EvalError> {
    args.iter()
        .map(|v| binding.get(v.index()).copied().flatten().ok_or(EvalError::Unbound(*v)))
        .collect()
}

/// Enumerates all bindings of `bound` over the domain that satisfy `guard`.
/// Guard literals are checked as soon as all their variables are bound.
pub(crate) fn for_each_tuple<C: Interpretation + ?Sized>(
    bound: &[VarId],
    guard: &[Literal],
    binding: &mut Vec<Option<ObjectId>>,
    ctx: &C,
    visit: &mut dyn FnMut(&mut Vec<Option<ObjectId>>),
) -> Result<(), EvalError> {
    // literal i becomes checkable once bound[ready[i]] is assigned; usize::MAX
    // means it only mentions outer variables
    let mut ready = Vec::with_capacity(guard.len());
    for lit in guard {
        let mut last = None;
        let mut note = |v: &VarId| {
            if let Some(k) = bound.iter().position(|b| b == v) {
                last = Some(last.map_or(k, |l: usize| l.max(k)));
            }
        };
        match lit {
            Literal::Atom { args, .. } => args.iter().for_each(&mut note),
            Literal::Eq(a, b) | Literal::Neq(a, b) => {
                note(a);
                note(b);
            }
        }
        ready.push(last.unwrap_or(usize::MAX));
    }
    for (lit, r) in guard.iter().zip(&ready) {
        if *r == usize::MAX && !literal_holds(lit, binding, ctx)? {
            return Ok(());
        }
    }
    let saved: Vec<Option<ObjectId>> = bound.iter().map(|v| binding[v.index()]).collect();
    let res = enumerate(bound, guard, &ready, 0, binding, ctx, visit);
    for (v, s) in bound.iter().zip(saved) {
        binding[v.index()] = s;
    }
    res
}

fn enumerate<C: Interpretation + ?Sized>(
    bound: &[VarId],
    guard: &[Literal],
    ready: &[usize],
    depth: usize,
    binding: &mut Vec<Option<ObjectId>>,
    ctx: &C,
    visit: &mut dyn FnMut(&mut Vec<Option<ObjectId>>),
) -> Result<(), EvalError> {
    if depth == bound.len() {
        visit(binding);
        return Ok(());
    }
    let n = ctx.domain_size() as ObjectId;
    'objects: for o in 0..n {
        binding[bound[depth].index()] = Some(o);
        for (lit, r) in guard.iter().zip(ready) {
            if *r == depth && !literal_holds(lit, binding, ctx)? {
                continue 'objects;
            }
        }
        enumerate(bound, guard, ready, depth + 1, binding, ctx, visit)?;
    }
    Ok(())
}

fn literal_holds<C: Interpretation + ?Sized>(
    lit: &Literal,
    binding: &[Option<ObjectId>],
    ctx: &C,
) -> Result<bool, EvalError> {
    let get = |v: &VarId| binding[v.index()].ok_or(EvalError::Unbound(*v));
    Ok(match lit {
        Literal::Atom { negated, relation, args } => {
            let objs = ground_args(args, binding)?;
            (ctx.atom(*relation, &objs)? != 0.0) != *negated
        }
        Literal::Eq(a, b) => get(a)? == get(b)?,
        Literal::Neq(a, b) => get(a)? != get(b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_model;
    use alloc::vec;
    use alloc::vec::Vec;

    /// Explicit valuation for tests: atoms listed as (relation, args, value);
    /// anything unlisted is 0.
    struct Table {
        n: usize,
        params: Vec<f64>,
        atoms: Vec<(RelId, Vec<ObjectId>, f64)>,
    }

    impl Interpretation for Table {
        fn domain_size(&self) -> usize {
            self.n
        }
        fn param(&self, id: ParamId) -> f64 {
            self.params[id]
        }
        fn atom(&self, relation: RelId, args: &[ObjectId]) -> Result<f64, EvalError> {
            Ok(self
                .atoms
                .iter()
                .find(|(r, a, _)| *r == relation && a == args)
                .map_or(0.0, |t| t.2))
        }
    }

    #[test]
    fn wif_is_a_convex_combination() {
        let m = parse_model("prob r/0; r() <- WIF 0.3 THEN 1.0 ELSE 0.1;").unwrap();
        let ctx = Table { n: 0, params: vec![], atoms: vec![] };
        let p = evaluate_assignment(&m, &m.assignments()[0], &[], &ctx).unwrap();
        assert!((p - 0.37).abs() < 1e-15);
    }

    const CANCER: &str = "input exposed/2; input intensity/1 numeric; prob cancer/1;
        cancer(A) <- COMBINE intensity(R) WITH l-reg FORALL R WHERE exposed(A, R);";

    #[test]
    fn logistic_over_empty_multiset_is_one_half() {
        let m = parse_model(CANCER).unwrap();
        let ctx = Table { n: 3, params: vec![], atoms: vec![(1, vec![1], 1.0)] };
        let p = evaluate_assignment(&m, &m.assignments()[0], &[0], &ctx).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn logistic_over_exposed_intensities() {
        let m = parse_model(CANCER).unwrap();
        let ctx = Table {
            n: 4,
            params: vec![],
            atoms: vec![
                (0, vec![0, 1], 1.0),
                (0, vec![0, 2], 1.0),
                (1, vec![1], 1.0),
                (1, vec![2], 2.0),
                (1, vec![3], 5.0),
            ],
        };
        let p = evaluate_assignment(&m, &m.assignments()[0], &[0], &ctx).unwrap();
        // e^3 / (1 + e^3)
        assert!((p - 0.952_574_126_822_433).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_probability_is_rejected() {
        let m = parse_model("param a; prob r/0; r() <- a;").unwrap();
        let ctx = Table { n: 0, params: vec![1.5], atoms: vec![] };
        assert!(matches!(
            evaluate_assignment(&m, &m.assignments()[0], &[], &ctx),
            Err(EvalError::ProbabilityOutOfRange { .. })
        ));
    }

    #[test]
    fn mean_of_empty_multiset_is_an_error() {
        let m = parse_model("input q/1; prob r/0; r() <- COMBINE 1 WITH mean FORALL X WHERE q(X);").unwrap();
        let ctx = Table { n: 2, params: vec![], atoms: vec![] };
        assert_eq!(evaluate_assignment(&m, &m.assignments()[0], &[], &ctx), Err(EvalError::EmptyMean));
    }

    #[test]
    fn noisy_or_and_mean() {
        let m = parse_model(
            "input q/1; input w/1 numeric; prob r/0; prob s/0;
             r() <- COMBINE w(X) WITH noisy-or FORALL X WHERE q(X);
             s() <- COMBINE w(X) WITH mean FORALL X WHERE q(X);",
        )
        .unwrap();
        let ctx = Table {
            n: 3,
            params: vec![],
            atoms: vec![(0, vec![0], 1.0), (0, vec![2], 1.0), (1, vec![0], 0.5), (1, vec![2], 0.2), (1, vec![1], 0.9)],
        };
        let r = evaluate_assignment(&m, &m.assignments()[0], &[], &ctx).unwrap();
        let s = evaluate_assignment(&m, &m.assignments()[1], &[], &ctx).unwrap();
        assert!((r - (1.0 - 0.5 * 0.8)).abs() < 1e-15);
        assert!((s - 0.35).abs() < 1e-15);
        let bad = Table { n: 1, params: vec![], atoms: vec![(0, vec![0], 1.0), (1, vec![0], 1.5)] };
        assert_eq!(
            evaluate_assignment(&m, &m.assignments()[0], &[], &bad),
            Err(EvalError::NoisyOrInput(1.5))
        );
    }

    #[test]
    fn guards_with_inequality_and_negation() {
        let m = parse_model(
            "input q/1; prob r/1; r(X) <- COMBINE 0.1 WITH sum FORALL Y WHERE !q(Y) & X != Y;",
        )
        .unwrap();
        let ctx = Table { n: 5, params: vec![], atoms: vec![(0, vec![3], 1.0)] };
        // Y in {1, 2, 4}: q(3) holds and Y = X = 0 is excluded
        let p = evaluate_assignment(&m, &m.assignments()[0], &[0], &ctx).unwrap();
        assert!((p - 0.3).abs() < 1e-15);
    }
}
