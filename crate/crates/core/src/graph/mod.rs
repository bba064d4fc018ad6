//! The likelihood graph: a DAG whose root is the log-likelihood of the
//! observed data and whose leaves are parameters, learnable numeric atoms
//! and indicators of unobserved probabilistic atoms.
//!
//! Nodes are stored in topological order (children first). The structure
//! is immutable once built; all mutable state lives in an [`Evaluator`].

mod build;
mod eval;
mod reference;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::data::ObjectId;
use crate::formula::{EvalError, Interval, ParamId, RelId};

pub use eval::{Evaluator, Gradient, LeafValues};
pub use reference::reference_log_likelihood;

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Arg {
    Node(NodeId),
    /// A folded constant.
    Const(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Param(u32),
    Numeric(u32),
    Indicator(u32),
    /// Only present when constant folding is disabled.
    Const(f64),
    Sum,
    Sub,
    Mul,
    /// `cond * then + (1 - cond) * else`
    Wif,
    LReg,
    /// Mean over the given number of inputs (folded constants count as
    /// their original multiplicity).
    Mean(u32),
    NoisyOr,
    /// Probability of a ground probabilistic atom; one argument.
    Atom,
}

impl Op {
    pub fn is_leaf(self) -> bool {
        matches!(self, Op::Param(_) | Op::Numeric(_) | Op::Indicator(_) | Op::Const(_))
    }
}

/// Layer of a node in the likelihood graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    ObservedAtom,
    MarginalizedAtom,
    Subformula,
    Parameter,
    NumericInput,
    Indicator,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Observed(bool),
    Indicator(u32),
}

/// One factor of the likelihood: a ground atom and the value it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub node: NodeId,
    pub outcome: Outcome,
    pub sample: usize,
    pub relation: RelId,
    pub args: Vec<ObjectId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamLeaf {
    pub param: ParamId,
    pub name: String,
    pub range: Interval,
    pub node: NodeId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericLeaf {
    pub relation: RelId,
    pub name: String,
    pub args: Vec<ObjectId>,
    pub range: Interval,
    /// Value stored in the data, if any.
    pub initial: Option<f64>,
    pub node: NodeId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorLeaf {
    pub sample: usize,
    pub relation: RelId,
    pub name: String,
    pub args: Vec<ObjectId>,
    pub node: NodeId,
    /// The atom node paired with this indicator.
    pub atom_node: NodeId,
}

/// Options for [`LikelihoodGraph::build`].
#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    /// Parameters held at a fixed value instead of becoming leaves.
    pub fixed_params: BTreeMap<String, f64>,
    /// Learnable numeric relations whose values are taken from the data.
    pub frozen_relations: BTreeSet<String>,
    /// Keep every constant subformula as its own node.
    pub disable_folding: bool,
    /// Give every unknown atom an indicator, not only those other atoms
    /// depend on. Unreferenced unknown atoms marginalize to a factor of 1.
    pub keep_unreferenced_unknowns: bool,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("cyclic dependency among probabilistic atoms through `{0}`")]
    Cycle(String),
    #[error("relation `{0}` has a different kind or arity in the data")]
    RelationMismatch(String),
    #[error("probabilistic relation `{0}` has no assignment")]
    Unassigned(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("`{0}` is not a learnable numeric relation of the model")]
    NotLearnable(String),
    #[error("no value for `{0}`")]
    MissingValue(String),
    #[error("`{atom}`: {source}")]
    Eval { atom: String, source: EvalError },
    #[error("probability {value} of `{atom}` lies outside [0, 1]")]
    ProbabilityOutOfRange { atom: String, value: f64 },
    #[error("noisy-or input {0} lies outside [0, 1]")]
    NoisyOrInput(f64),
    #[error("non-finite value at node {0}")]
    NonFinite(NodeId),
    #[error("`{0}` has no indicator")]
    NoIndicator(String),
}

/// Counts reported by [`LikelihoodGraph::stats`]. `nodes` includes the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub params: usize,
    pub numeric_leaves: usize,
    pub indicators: usize,
}

#[derive(Clone, Debug)]
pub struct LikelihoodGraph {
    ops: Vec<Op>,
    arg_start: Vec<u32>,
    args: Vec<Arg>,
    parent_start: Vec<u32>,
    parents: Vec<NodeId>,
    terms: Vec<Term>,
    /// Log-probability of observed atoms whose probability is constant.
    constant_ll: f64,
    params: Vec<ParamLeaf>,
    numerics: Vec<NumericLeaf>,
    indicators: Vec<IndicatorLeaf>,
    param_index: Vec<Option<u32>>,
    numeric_index: BTreeMap<(RelId, Vec<ObjectId>), u32>,
    indicator_index: BTreeMap<(usize, RelId, Vec<ObjectId>), u32>,
    samples: usize,
}

impl LikelihoodGraph {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, n: NodeId) -> Op {
        self.ops[n as usize]
    }

    pub fn args(&self, n: NodeId) -> &[Arg] {
        &self.args[self.arg_start[n as usize] as usize..self.arg_start[n as usize + 1] as usize]
    }

    pub fn parents(&self, n: NodeId) -> &[NodeId] {
        &self.parents[self.parent_start[n as usize] as usize..self.parent_start[n as usize + 1] as usize]
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn constant_log_likelihood(&self) -> f64 {
        self.constant_ll
    }

    pub fn params(&self) -> &[ParamLeaf] {
        &self.params
    }

    pub fn numerics(&self) -> &[NumericLeaf] {
        &self.numerics
    }

    pub fn indicators(&self) -> &[IndicatorLeaf] {
        &self.indicators
    }

    pub fn num_samples(&self) -> usize {
        self.samples
    }

    /// Number of parameter and numeric leaves.
    pub fn num_learnable(&self) -> usize {
        self.params.len() + self.numerics.len()
    }

    pub fn param_leaf(&self, param: ParamId) -> Option<usize> {
        self.param_index.get(param).copied().flatten().map(|i| i as usize)
    }

    pub fn param_leaf_by_name(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn numeric_leaf(&self, relation: RelId, args: &[ObjectId]) -> Option<usize> {
        self.numeric_index.get(&(relation, args.to_vec())).map(|&i| i as usize)
    }

    pub fn indicator(&self, sample: usize, relation: RelId, args: &[ObjectId]) -> Option<usize> {
        self.indicator_index.get(&(sample, relation, args.to_vec())).map(|&i| i as usize)
    }

    pub fn kind(&self, n: NodeId) -> NodeKind {
        match self.ops[n as usize] {
            Op::Param(_) => NodeKind::Parameter,
            Op::Numeric(_) => NodeKind::NumericInput,
            Op::Indicator(_) => NodeKind::Indicator,
            Op::Const(_) => NodeKind::Constant,
            Op::Atom if self.is_indicator_atom(n) => NodeKind::MarginalizedAtom,
            Op::Atom => NodeKind::ObservedAtom,
            _ => NodeKind::Subformula,
        }
    }

    fn is_indicator_atom(&self, n: NodeId) -> bool {
        self.indicators.iter().any(|i| i.atom_node == n)
    }

    pub fn stats(&self) -> GraphStats {
        let edges = self.args.iter().filter(|a| matches!(a, Arg::Node(_))).count() + self.terms.len();
        GraphStats {
            nodes: self.ops.len() + 1,
            edges,
            params: self.params.len(),
            numeric_leaves: self.numerics.len(),
            indicators: self.indicators.len(),
        }
    }

    /// Graphviz rendering, with the node kind as fill color.
    pub fn to_dot(&self) -> String {
        let mut indicator_atoms = BTreeSet::new();
        for i in &self.indicators {
            indicator_atoms.insert(i.atom_node);
        }
        let mut s = String::from("digraph likelihood {\n  node [style=filled];\n  root [label=\"log L\", fillcolor=gold];\n");
        for (n, op) in self.ops.iter().enumerate() {
            let (label, color) = match op {
                Op::Param(i) => (self.params[*i as usize].name.clone(), "lightblue"),
                Op::Numeric(i) => {
                    let l = &self.numerics[*i as usize];
                    (alloc::format!("{}{:?}", l.name, l.args), "palegreen")
                }
                Op::Indicator(i) => {
                    let l = &self.indicators[*i as usize];
                    (alloc::format!("I {}{:?}", l.name, l.args), "orange")
                }
                Op::Const(c) => (alloc::format!("{c}"), "white"),
                Op::Atom if indicator_atoms.contains(&(n as NodeId)) => (String::from("atom (b)"), "salmon"),
                Op::Atom => (String::from("atom (a)"), "pink"),
                other => (alloc::format!("{other:?}"), "lightgrey"),
            };
            let _ = writeln!(s, "  n{n} [label=\"{}\", fillcolor={color}];", label.replace('"', "'"));
            for a in self.args(n as NodeId) {
                match a {
                    Arg::Node(c) => {
                        let _ = writeln!(s, "  n{n} -> n{c};");
                    }
                    Arg::Const(v) => {
                        let _ = writeln!(s, "  c{n}_{} [label=\"{v}\", shape=plaintext, style=\"\"];\n  n{n} -> c{n}_{};", v.to_bits(), v.to_bits());
                    }
                }
            }
        }
        for t in &self.terms {
            let _ = writeln!(s, "  root -> n{};", t.node);
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests;
