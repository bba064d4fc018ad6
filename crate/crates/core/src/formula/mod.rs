//! The probability-formula language.
//!
//! A [`Model`] declares input relations (Boolean or numeric), probabilistic
//! Boolean relations and global parameters, and assigns one
//! [`Formula`] to every probabilistic relation. Formulas are built from
//! constants, parameters, relational atoms, `+ - *`, the weighted-if
//! `WIF c THEN a ELSE b` (evaluating to `c*a + (1-c)*b`) and combination
//! functions over the multiset of values collected by `COMBINE ... FORALL`.

mod display;
pub(crate) mod eval;
mod lexer;
mod parser;

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use eval::{evaluate, evaluate_assignment, EvalError, Interpretation};
pub use parser::{parse_model, ParseError};

pub type RelId = usize;
pub type ParamId = usize;

/// A logical variable, numbered within its [`Assignment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A closed interval; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval { min: f64::NEG_INFINITY, max: f64::INFINITY };
    pub const NON_NEGATIVE: Interval = Interval { min: 0.0, max: f64::INFINITY };
    pub const UNIT: Interval = Interval { min: 0.0, max: 1.0 };

    pub fn new(min: f64, max: f64) -> Option<Interval> {
        if min.is_nan() || max.is_nan() || min > max {
            None
        } else {
            Some(Interval { min, max })
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.min <= x && x <= self.max
    }

    pub fn project(&self, x: f64) -> f64 {
        x.clamp(self.min, self.max)
    }

    pub fn is_unbounded(&self) -> bool {
        self.min == f64::NEG_INFINITY && self.max == f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RelationKind {
    BooleanInput,
    NumericInput { range: Interval, learnable: bool },
    /// Boolean relation whose distribution the model defines.
    Probabilistic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationDecl {
    pub name: String,
    pub arity: usize,
    pub kind: RelationKind,
}

impl RelationDecl {
    pub fn is_probabilistic(&self) -> bool {
        matches!(self.kind, RelationKind::Probabilistic)
    }

    pub fn range(&self) -> Option<Interval> {
        match self.kind {
            RelationKind::NumericInput { range, .. } => Some(range),
            _ => None,
        }
    }

    pub fn is_learnable(&self) -> bool {
        matches!(self.kind, RelationKind::NumericInput { learnable: true, .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterDecl {
    pub name: String,
    pub range: Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CombFn {
    Sum,
    /// Logistic regression: `e^S / (1 + e^S)` with `S` the sum of the inputs.
    LReg,
    Mean,
    NoisyOr,
}

impl CombFn {
    pub fn name(self) -> &'static str {
        match self {
            CombFn::Sum => "sum",
            CombFn::LReg => "l-reg",
            CombFn::Mean => "mean",
            CombFn::NoisyOr => "noisy-or",
        }
    }

    pub fn from_name(s: &str) -> Option<CombFn> {
        Some(match s {
            "sum" => CombFn::Sum,
            "l-reg" => CombFn::LReg,
            "mean" => CombFn::Mean,
            "noisy-or" => CombFn::NoisyOr,
            _ => return None,
        })
    }
}

/// One conjunct of a `WHERE` guard.
#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Atom { negated: bool, relation: RelId, args: Vec<VarId> },
    Eq(VarId, VarId),
    Neq(VarId, VarId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Combine {
    pub bodies: Vec<Formula>,
    pub func: CombFn,
    pub bound: Vec<VarId>,
    /// Conjunction; empty means `true`.
    pub guard: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Const(f64),
    Param(ParamId),
    Atom { relation: RelId, args: Vec<VarId> },
    Plus(Box<Formula>, Box<Formula>),
    Minus(Box<Formula>, Box<Formula>),
    Times(Box<Formula>, Box<Formula>),
    Wif { cond: Box<Formula>, then: Box<Formula>, otherwise: Box<Formula> },
    Combine(Box<Combine>),
}

impl Formula {
    pub fn wif(cond: Formula, then: Formula, otherwise: Formula) -> Formula {
        Formula::Wif { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) }
    }

    pub fn plus(a: Formula, b: Formula) -> Formula {
        Formula::Plus(Box::new(a), Box::new(b))
    }

    pub fn minus(a: Formula, b: Formula) -> Formula {
        Formula::Minus(Box::new(a), Box::new(b))
    }

    pub fn times(a: Formula, b: Formula) -> Formula {
        Formula::Times(Box::new(a), Box::new(b))
    }

    /// Exact set of free logical variables, respecting `FORALL` binding.
    pub fn free_variables(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Formula::Const(_) | Formula::Param(_) => {}
            Formula::Atom { args, .. } => out.extend(args.iter().copied()),
            Formula::Plus(a, b) | Formula::Minus(a, b) | Formula::Times(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::Wif { cond, then, otherwise } => {
                cond.collect_free(out);
                then.collect_free(out);
                otherwise.collect_free(out);
            }
            Formula::Combine(c) => {
                let mut inner = BTreeSet::new();
                for body in &c.bodies {
                    body.collect_free(&mut inner);
                }
                for lit in &c.guard {
                    match lit {
                        Literal::Atom { args, .. } => inner.extend(args.iter().copied()),
                        Literal::Eq(a, b) | Literal::Neq(a, b) => {
                            inner.insert(*a);
                            inner.insert(*b);
                        }
                    }
                }
                for v in &c.bound {
                    inner.remove(v);
                }
                out.extend(inner);
            }
        }
    }

    /// Calls `f` on every atom (relation, args) occurring in the formula,
    /// including guard atoms.
    pub fn for_each_atom(&self, f: &mut impl FnMut(RelId, &[VarId])) {
        match self {
            Formula::Const(_) | Formula::Param(_) => {}
            Formula::Atom { relation, args } => f(*relation, args),
            Formula::Plus(a, b) | Formula::Minus(a, b) | Formula::Times(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
            Formula::Wif { cond, then, otherwise } => {
                cond.for_each_atom(f);
                then.for_each_atom(f);
                otherwise.for_each_atom(f);
            }
            Formula::Combine(c) => {
                for body in &c.bodies {
                    body.for_each_atom(f);
                }
                for lit in &c.guard {
                    if let Literal::Atom { relation, args, .. } = lit {
                        f(*relation, args);
                    }
                }
            }
        }
    }

    fn for_each_param(&self, f: &mut impl FnMut(ParamId)) {
        match self {
            Formula::Const(_) | Formula::Atom { .. } => {}
            Formula::Param(p) => f(*p),
            Formula::Plus(a, b) | Formula::Minus(a, b) | Formula::Times(a, b) => {
                a.for_each_param(f);
                b.for_each_param(f);
            }
            Formula::Wif { cond, then, otherwise } => {
                cond.for_each_param(f);
                then.for_each_param(f);
                otherwise.for_each_param(f);
            }
            Formula::Combine(c) => c.bodies.iter().for_each(|b| b.for_each_param(f)),
        }
    }
}

/// `relation(head) <- formula`, with the variable table of the assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub relation: RelId,
    pub head: Vec<VarId>,
    /// Names indexed by [`VarId`]; head variables come first.
    pub var_names: Vec<String>,
    pub formula: Formula,
}

impl Assignment {
    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("relation `{0}` has more than one assignment")]
    DuplicateAssignment(String),
    #[error("probabilistic relation `{0}` has no assignment")]
    MissingAssignment(String),
    #[error("relation `{0}` is not probabilistic and cannot be assigned a formula")]
    AssignedInput(String),
    #[error("atom `{name}` has {found} arguments, declared arity is {expected}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("guard atom `{0}` must reference a Boolean input relation")]
    NonBooleanGuard(String),
    #[error("variable `{0}` is not bound in this scope")]
    UnboundVariable(String),
    #[error("invalid reference in assignment for `{0}`")]
    InvalidReference(String),
}

/// Declarations plus one formula per probabilistic relation.
/// Immutable once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    relations: Vec<RelationDecl>,
    params: Vec<ParameterDecl>,
    assignments: Vec<Assignment>,
    by_relation: Vec<Option<usize>>,
}

impl Model {
    pub fn new(
        relations: Vec<RelationDecl>,
        params: Vec<ParameterDecl>,
        assignments: Vec<Assignment>,
    ) -> Result<Model, ModelError> {
        let mut names = BTreeSet::new();
        for n in relations.iter().map(|r| &r.name).chain(params.iter().map(|p| &p.name)) {
            if !names.insert(n.as_str()) {
                return Err(ModelError::DuplicateName(n.clone()));
            }
        }
        let mut by_relation = alloc::vec![None; relations.len()];
        for (i, a) in assignments.iter().enumerate() {
            let decl = relations
                .get(a.relation)
                .ok_or_else(|| ModelError::InvalidReference(String::from("?")))?;
            if !decl.is_probabilistic() {
                return Err(ModelError::AssignedInput(decl.name.clone()));
            }
            if by_relation[a.relation].is_some() {
                return Err(ModelError::DuplicateAssignment(decl.name.clone()));
            }
            by_relation[a.relation] = Some(i);
            check_assignment(&relations, &params, a)?;
        }
        for (r, slot) in relations.iter().zip(&by_relation) {
            if r.is_probabilistic() && slot.is_none() {
                return Err(ModelError::MissingAssignment(r.name.clone()));
            }
        }
        Ok(Model { relations, params, assignments, by_relation })
    }

    pub fn relations(&self) -> &[RelationDecl] {
        &self.relations
    }

    pub fn relation(&self, id: RelId) -> &RelationDecl {
        &self.relations[id]
    }

    pub fn params(&self) -> &[ParameterDecl] {
        &self.params
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn param_id(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn assignment_for(&self, relation: RelId) -> Option<&Assignment> {
        self.by_relation.get(relation).copied().flatten().map(|i| &self.assignments[i])
    }
}

fn check_assignment(
    relations: &[RelationDecl],
    params: &[ParameterDecl],
    a: &Assignment,
) -> Result<(), ModelError> {
    let decl = &relations[a.relation];
    if a.head.len() != decl.arity {
        return Err(ModelError::ArityMismatch {
            name: decl.name.clone(),
            expected: decl.arity,
            found: a.head.len(),
        });
    }
    if a.head.iter().any(|v| v.index() >= a.var_names.len()) {
        return Err(ModelError::InvalidReference(decl.name.clone()));
    }
    let mut err = None;
    a.formula.for_each_atom(&mut |rel, args| {
        if err.is_some() {
            return;
        }
        match relations.get(rel) {
            None => err = Some(ModelError::InvalidReference(decl.name.clone())),
            Some(r) if r.arity != args.len() => {
                err = Some(ModelError::ArityMismatch {
                    name: r.name.clone(),
                    expected: r.arity,
                    found: args.len(),
                })
            }
            Some(_) if args.iter().any(|v| v.index() >= a.var_names.len()) => {
                err = Some(ModelError::InvalidReference(decl.name.clone()))
            }
            _ => {}
        }
    });
    a.formula.for_each_param(&mut |p| {
        if err.is_none() && p >= params.len() {
            err = Some(ModelError::InvalidReference(decl.name.clone()));
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    check_guards(relations, &a.formula)?;
    let head: BTreeSet<VarId> = a.head.iter().copied().collect();
    if head.len() != a.head.len() {
        return Err(ModelError::DuplicateName(decl.name.clone()));
    }
    if let Some(v) = a.formula.free_variables().into_iter().find(|v| !head.contains(v)) {
        return Err(ModelError::UnboundVariable(a.var_names[v.index()].clone()));
    }
    Ok(())
}

fn check_guards(relations: &[RelationDecl], f: &Formula) -> Result<(), ModelError> {
    match f {
        Formula::Const(_) | Formula::Param(_) | Formula::Atom { .. } => Ok(()),
        Formula::Plus(a, b) | Formula::Minus(a, b) | Formula::Times(a, b) => {
            check_guards(relations, a)?;
            check_guards(relations, b)
        }
        Formula::Wif { cond, then, otherwise } => {
            check_guards(relations, cond)?;
            check_guards(relations, then)?;
            check_guards(relations, otherwise)
        }
        Formula::Combine(c) => {
            for lit in &c.guard {
                if let Literal::Atom { relation, .. } = lit {
                    let r = &relations[*relation];
                    if r.kind != RelationKind::BooleanInput {
                        return Err(ModelError::NonBooleanGuard(r.name.clone()));
                    }
                }
            }
            c.bodies.iter().try_for_each(|b| check_guards(relations, b))
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", display::Bound(self.min), display::Bound(self.max))
    }
}
