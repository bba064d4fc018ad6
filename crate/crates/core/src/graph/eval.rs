//! Per-worker evaluation state over a shared graph: cached node values,
//! adjoints for reverse accumulation, and dirty tracking so that flipping
//! an indicator only recomputes its ancestors.

use alloc::vec;
use alloc::vec::Vec;

use super::{Arg, GraphError, LikelihoodGraph, NodeId, Op, Outcome};
use crate::math::{clamp_probability, log_outcome, logistic};

const UNIT_SLACK: f64 = 1e-9;

/// Current values of all leaves, indexed like the graph's leaf registries.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafValues {
    pub params: Vec<f64>,
    pub numerics: Vec<f64>,
    pub indicators: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub params: Vec<f64>,
    pub numerics: Vec<f64>,
}

impl LikelihoodGraph {
    /// Parameters at 0 (projected onto their range), numeric leaves at
    /// their data value or projected 0, indicators false.
    pub fn initial_leaves(&self) -> LeafValues {
        LeafValues {
            params: self.params.iter().map(|p| p.range.project(0.0)).collect(),
            numerics: self.numerics.iter().map(|l| l.initial.unwrap_or_else(|| l.range.project(0.0))).collect(),
            indicators: vec![false; self.indicators.len()],
        }
    }

    /// Human-readable name of an atom node, for diagnostics.
    pub fn describe_node(&self, n: NodeId) -> alloc::string::String {
        match self.terms.iter().find(|t| t.node == n) {
            Some(t) => alloc::format!("sample {} atom of relation {} {:?}", t.sample, t.relation, t.args),
            None => alloc::format!("node {n}"),
        }
    }
}

pub struct Evaluator<'g> {
    graph: &'g LikelihoodGraph,
    leaves: LeafValues,
    values: Vec<f64>,
    adjoint: Vec<f64>,
    dirty: Vec<bool>,
    pending: Vec<NodeId>,
    all_dirty: bool,
    edge_visits: u64,
    scratch: Vec<f64>,
}

impl<'g> Evaluator<'g> {
    pub fn new(graph: &'g LikelihoodGraph) -> Evaluator<'g> {
        let n = graph.len();
        Evaluator {
            graph,
            leaves: graph.initial_leaves(),
            values: vec![0.0; n],
            adjoint: vec![0.0; n],
            dirty: vec![false; n],
            pending: Vec::new(),
            all_dirty: true,
            edge_visits: 0,
            scratch: Vec::new(),
        }
    }

    pub fn graph(&self) -> &'g LikelihoodGraph {
        self.graph
    }

    pub fn leaves(&self) -> &LeafValues {
        &self.leaves
    }

    pub fn set_leaves(&mut self, leaves: LeafValues) {
        assert_eq!(leaves.params.len(), self.graph.params.len());
        assert_eq!(leaves.numerics.len(), self.graph.numerics.len());
        assert_eq!(leaves.indicators.len(), self.graph.indicators.len());
        self.leaves = leaves;
        self.all_dirty = true;
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        if self.leaves.params[i] != v {
            self.leaves.params[i] = v;
            self.touch(self.graph.params[i].node, v);
        }
    }

    pub fn set_numeric(&mut self, i: usize, v: f64) {
        if self.leaves.numerics[i] != v {
            self.leaves.numerics[i] = v;
            self.touch(self.graph.numerics[i].node, v);
        }
    }

    pub fn set_indicator(&mut self, i: usize, v: bool) {
        if self.leaves.indicators[i] != v {
            self.leaves.indicators[i] = v;
            self.touch(self.graph.indicators[i].node, if v { 1.0 } else { 0.0 });
        }
    }

    /// Sets the indicator of an unobserved atom by identity.
    pub fn set_indicator_atom(
        &mut self,
        sample: usize,
        relation: usize,
        args: &[u32],
        v: bool,
    ) -> Result<(), GraphError> {
        let i = self.graph.indicator(sample, relation, args).ok_or_else(|| {
            GraphError::NoIndicator(alloc::format!("sample {sample} relation {relation} {args:?}"))
        })?;
        self.set_indicator(i, v);
        Ok(())
    }

    /// Number of nodes waiting to be recomputed.
    pub fn dirty_count(&self) -> usize {
        if self.all_dirty {
            self.graph.len()
        } else {
            self.pending.len()
        }
    }

    /// Edges traversed by value and gradient passes so far.
    pub fn edge_visits(&self) -> u64 {
        self.edge_visits
    }

    pub fn reset_edge_visits(&mut self) {
        self.edge_visits = 0;
    }

    fn touch(&mut self, leaf: NodeId, v: f64) {
        if self.all_dirty {
            return;
        }
        self.values[leaf as usize] = v;
        let mut stack = vec![leaf];
        while let Some(n) = stack.pop() {
            for &p in self.graph.parents(n) {
                if !self.dirty[p as usize] {
                    self.dirty[p as usize] = true;
                    self.pending.push(p);
                    stack.push(p);
                }
            }
        }
    }

    fn arg(&self, a: Arg) -> f64 {
        match a {
            Arg::Node(c) => self.values[c as usize],
            Arg::Const(v) => v,
        }
    }

    fn compute(&self, n: NodeId) -> Result<f64, GraphError> {
        let args = self.graph.args(n);
        let v = match self.graph.op(n) {
            Op::Param(i) => self.leaves.params[i as usize],
            Op::Numeric(i) => self.leaves.numerics[i as usize],
            Op::Indicator(i) => {
                if self.leaves.indicators[i as usize] {
                    1.0
                } else {
                    0.0
                }
            }
            Op::Const(c) => c,
            Op::Sum => args.iter().map(|&a| self.arg(a)).sum(),
            Op::Sub => self.arg(args[0]) - self.arg(args[1]),
            Op::Mul => args.iter().map(|&a| self.arg(a)).product(),
            Op::Wif => {
                let c = self.arg(args[0]);
                c * self.arg(args[1]) + (1.0 - c) * self.arg(args[2])
            }
            Op::LReg => logistic(args.iter().map(|&a| self.arg(a)).sum()),
            Op::Mean(k) => args.iter().map(|&a| self.arg(a)).sum::<f64>() / k as f64,
            Op::NoisyOr => {
                let mut keep = 1.0;
                for &a in args {
                    let x = self.arg(a);
                    if !(-UNIT_SLACK..=1.0 + UNIT_SLACK).contains(&x) {
                        return Err(GraphError::NoisyOrInput(x));
                    }
                    keep *= 1.0 - x;
                }
                1.0 - keep
            }
            Op::Atom => {
                let p = self.arg(args[0]);
                if !(-UNIT_SLACK..=1.0 + UNIT_SLACK).contains(&p) {
                    return Err(GraphError::ProbabilityOutOfRange { atom: self.graph.describe_node(n), value: p });
                }
                p
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(GraphError::NonFinite(n))
        }
    }

    fn refresh(&mut self) -> Result<(), GraphError> {
        if self.all_dirty {
            for n in 0..self.graph.len() {
                self.values[n] = self.compute(n as NodeId)?;
                self.edge_visits += self.graph.args(n as NodeId).len() as u64;
            }
            self.all_dirty = false;
        } else if !self.pending.is_empty() {
            let mut pending = core::mem::take(&mut self.pending);
            pending.sort_unstable();
            for &n in &pending {
                match self.compute(n) {
                    Ok(v) => self.values[n as usize] = v,
                    Err(e) => {
                        self.all_dirty = true;
                        for &m in &pending {
                            self.dirty[m as usize] = false;
                        }
                        return Err(e);
                    }
                }
                self.edge_visits += self.graph.args(n).len() as u64;
                self.dirty[n as usize] = false;
            }
            pending.clear();
            self.pending = pending;
            return Ok(());
        }
        for n in self.pending.drain(..) {
            self.dirty[n as usize] = false;
        }
        Ok(())
    }

    fn outcome(&self, o: Outcome) -> bool {
        match o {
            Outcome::Observed(b) => b,
            Outcome::Indicator(i) => self.leaves.indicators[i as usize],
        }
    }

    pub fn log_likelihood(&mut self) -> Result<f64, GraphError> {
        self.refresh()?;
        let mut ll = self.graph.constant_ll;
        for t in &self.graph.terms {
            ll += log_outcome(self.values[t.node as usize], self.outcome(t.outcome));
        }
        self.edge_visits += self.graph.terms.len() as u64;
        Ok(ll)
    }

    /// Current value of a node; call after [`Self::log_likelihood`].
    pub fn value(&self, n: NodeId) -> f64 {
        self.values[n as usize]
    }

    /// Log-likelihood and its partials with respect to all parameter and
    /// numeric leaves, by one forward and one reverse pass.
    pub fn gradient(&mut self) -> Result<(f64, Gradient), GraphError> {
        let ll = self.log_likelihood()?;
        let g = self.graph;
        let mut grad = Gradient { params: vec![0.0; g.params.len()], numerics: vec![0.0; g.numerics.len()] };
        self.adjoint.iter_mut().for_each(|a| *a = 0.0);
        for t in &g.terms {
            let p = self.values[t.node as usize];
            // the clamp is flat outside [eps, 1 - eps]
            if clamp_probability(p) != p {
                continue;
            }
            self.adjoint[t.node as usize] += if self.outcome(t.outcome) { 1.0 / p } else { -1.0 / (1.0 - p) };
        }
        let mut scratch = core::mem::take(&mut self.scratch);
        for n in (0..g.len()).rev() {
            let a = self.adjoint[n];
            if a == 0.0 {
                continue;
            }
            let node = n as NodeId;
            let args = g.args(node);
            self.edge_visits += args.len() as u64;
            match g.op(node) {
                Op::Param(i) => grad.params[i as usize] += a,
                Op::Numeric(i) => grad.numerics[i as usize] += a,
                Op::Indicator(_) | Op::Const(_) => {}
                Op::Sum | Op::Atom => {
                    for &c in args {
                        self.push(c, a);
                    }
                }
                Op::Sub => {
                    self.push(args[0], a);
                    self.push(args[1], -a);
                }
                Op::Mean(k) => {
                    for &c in args {
                        self.push(c, a / k as f64);
                    }
                }
                Op::LReg => {
                    let v = self.values[n];
                    let d = a * v * (1.0 - v);
                    for &c in args {
                        self.push(c, d);
                    }
                }
                Op::Wif => {
                    let (c, t, e) = (self.arg(args[0]), self.arg(args[1]), self.arg(args[2]));
                    self.push(args[0], a * (t - e));
                    self.push(args[1], a * c);
                    self.push(args[2], a * (1.0 - c));
                }
                Op::Mul | Op::NoisyOr => {
                    // product of all other factors, via prefix and suffix products
                    let noisy = g.op(node) == Op::NoisyOr;
                    scratch.clear();
                    scratch.extend(args.iter().map(|&c| {
                        let x = self.arg(c);
                        if noisy {
                            1.0 - x
                        } else {
                            x
                        }
                    }));
                    let k = scratch.len();
                    let mut suffix = vec![1.0; k + 1];
                    for j in (0..k).rev() {
                        suffix[j] = suffix[j + 1] * scratch[j];
                    }
                    let mut prefix = 1.0;
                    for j in 0..k {
                        // d(1 - prod(1 - x))/dx_j = prod_{i != j}(1 - x_i)
                        self.push(args[j], a * prefix * suffix[j + 1]);
                        prefix *= scratch[j];
                    }
                }
            }
        }
        self.scratch = scratch;
        Ok((ll, grad))
    }

    fn push(&mut self, c: Arg, d: f64) {
        if let Arg::Node(c) = c {
            self.adjoint[c as usize] += d;
        }
    }
}
