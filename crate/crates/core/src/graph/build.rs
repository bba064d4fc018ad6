//! Top-down construction: every stored observation becomes an atom node
//! whose formula is grounded recursively. Constant subformulas fold into
//! their parents and identical ground subformulas are shared.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::{Arg, BuildOptions, GraphError, IndicatorLeaf, LikelihoodGraph, NodeId, NumericLeaf, Op, Outcome, ParamLeaf, Term};
use crate::data::{DataSet, ObjectId, Truth};
use crate::formula::eval::{for_each_tuple, ground_args};
use crate::formula::{CombFn, EvalError, Formula, Model, RelId, RelationKind};
use crate::ground::{topological_order, InputView, OrderError};
use crate::math::{log_outcome, logistic};

const UNIT_SLACK: f64 = 1e-9;

impl LikelihoodGraph {
    pub fn build(model: &Model, data: &DataSet, opts: &BuildOptions) -> Result<LikelihoodGraph, GraphError> {
        let view = InputView::new(model, data).map_err(|e| GraphError::RelationMismatch(e.0))?;

        let mut fixed = vec![None; model.params().len()];
        for (name, &v) in &opts.fixed_params {
            let id = model.param_id(name).ok_or_else(|| GraphError::UnknownParameter(name.clone()))?;
            fixed[id] = Some(v);
        }
        let mut frozen = vec![false; model.relations().len()];
        for name in &opts.frozen_relations {
            match model.relation_id(name) {
                Some(r) if model.relation(r).is_learnable() => frozen[r] = true,
                _ => return Err(GraphError::NotLearnable(name.clone())),
            }
        }
        for (r, decl) in model.relations().iter().enumerate() {
            if decl.is_probabilistic() && model.assignment_for(r).is_none() {
                return Err(GraphError::Unassigned(decl.name.clone()));
            }
        }

        check_acyclic(&view)?;

        let mut b = Builder {
            view,
            fold: !opts.disable_folding,
            fixed,
            frozen,
            ops: Vec::new(),
            arg_start: vec![0],
            args: Vec::new(),
            interned: HashMap::new(),
            params: Vec::new(),
            numerics: Vec::new(),
            indicators: Vec::new(),
            param_index: vec![None; model.params().len()],
            numeric_index: BTreeMap::new(),
            indicator_index: BTreeMap::new(),
            terms: Vec::new(),
            constant_ll: 0.0,
            pending: Vec::new(),
        };
        for s in 0..data.samples().len() {
            b.build_sample(s, opts.keep_unreferenced_unknowns)?;
        }
        Ok(b.finish(data.samples().len()))
    }
}

fn check_acyclic(view: &InputView<'_>) -> Result<(), GraphError> {
    let mut roots = BTreeSet::new();
    for (r, decl) in view.model.relations().iter().enumerate() {
        if !decl.is_probabilistic() {
            continue;
        }
        if let Some(di) = view.rel_map[r] {
            for sample in view.data.samples() {
                for (args, _) in sample.atoms(di) {
                    roots.insert((r, args.to_vec()));
                }
            }
        }
    }
    let roots: Vec<_> = roots.into_iter().collect();
    match topological_order(view, &roots) {
        Ok(_) => Ok(()),
        Err(OrderError::Cycle((r, args))) => Err(GraphError::Cycle(view.describe(r, &args))),
        Err(OrderError::Eval(e)) => Err(GraphError::Eval { atom: alloc::string::String::new(), source: e }),
    }
}

struct Builder<'a> {
    view: InputView<'a>,
    fold: bool,
    fixed: Vec<Option<f64>>,
    frozen: Vec<bool>,
    ops: Vec<Op>,
    arg_start: Vec<u32>,
    args: Vec<Arg>,
    interned: HashMap<Vec<u64>, NodeId>,
    params: Vec<ParamLeaf>,
    numerics: Vec<NumericLeaf>,
    indicators: Vec<IndicatorLeaf>,
    param_index: Vec<Option<u32>>,
    numeric_index: BTreeMap<(RelId, Vec<ObjectId>), u32>,
    indicator_index: BTreeMap<(usize, RelId, Vec<ObjectId>), u32>,
    terms: Vec<Term>,
    constant_ll: f64,
    /// indicator atoms of the current sample still lacking an atom node
    pending: Vec<u32>,
}

fn key(op: Op, args: &[Arg]) -> Vec<u64> {
    let (tag, payload) = match op {
        Op::Param(i) => (0, i as u64),
        Op::Numeric(i) => (1, i as u64),
        Op::Indicator(i) => (2, i as u64),
        Op::Const(c) => (3, c.to_bits()),
        Op::Sum => (4, 0),
        Op::Sub => (5, 0),
        Op::Mul => (6, 0),
        Op::Wif => (7, 0),
        Op::LReg => (8, 0),
        Op::Mean(n) => (9, n as u64),
        Op::NoisyOr => (10, 0),
        Op::Atom => unreachable!("atom nodes are not shared"),
    };
    let mut k = Vec::with_capacity(2 + 2 * args.len());
    k.push(tag);
    k.push(payload);
    for a in args {
        match a {
            Arg::Node(n) => {
                k.push(0);
                k.push(*n as u64);
            }
            Arg::Const(c) => {
                k.push(1);
                k.push(c.to_bits());
            }
        }
    }
    k
}

impl<'a> Builder<'a> {
    fn push_node(&mut self, op: Op, args: &[Arg]) -> NodeId {
        let id = self.ops.len() as NodeId;
        self.ops.push(op);
        self.args.extend_from_slice(args);
        self.arg_start.push(self.args.len() as u32);
        id
    }

    fn intern(&mut self, op: Op, args: Vec<Arg>) -> Arg {
        let k = key(op, &args);
        if let Some(&n) = self.interned.get(&k) {
            return Arg::Node(n);
        }
        let n = self.push_node(op, &args);
        self.interned.insert(k, n);
        Arg::Node(n)
    }

    /// Constants become nodes of their own when folding is off.
    fn lift(&mut self, a: Arg) -> Arg {
        match a {
            Arg::Const(c) if !self.fold => self.intern(Op::Const(c), Vec::new()),
            a => a,
        }
    }

    fn build_sample(&mut self, s: usize, keep_unknowns: bool) -> Result<(), GraphError> {
        let model = self.view.model;
        let data = self.view.data;
        for r in 0..model.relations().len() {
            if !model.relation(r).is_probabilistic() {
                continue;
            }
            let Some(di) = self.view.rel_map[r] else { continue };
            for (args, truth) in data.sample(s).atoms(di) {
                match truth.known() {
                    Some(value) => {
                        let p = self.ground_atom(s, r, args)?;
                        match p {
                            Arg::Const(c) => {
                                check_probability(c).map_err(|value| GraphError::ProbabilityOutOfRange {
                                    atom: self.view.describe(r, args),
                                    value,
                                })?;
                                self.constant_ll += log_outcome(c, value);
                            }
                            Arg::Node(_) => {
                                let node = self.push_node(Op::Atom, &[p]);
                                self.terms.push(Term {
                                    node,
                                    outcome: Outcome::Observed(value),
                                    sample: s,
                                    relation: r,
                                    args: args.to_vec(),
                                });
                            }
                        }
                    }
                    None if keep_unknowns => {
                        self.indicator(s, r, args);
                    }
                    None => {}
                }
            }
        }
        while let Some(i) = self.pending.pop() {
            let (r, args) = {
                let leaf = &self.indicators[i as usize];
                (leaf.relation, leaf.args.clone())
            };
            let p = self.ground_atom(s, r, &args)?;
            if let Arg::Const(c) = p {
                check_probability(c)
                    .map_err(|value| GraphError::ProbabilityOutOfRange { atom: self.view.describe(r, &args), value })?;
            }
            let p = match p {
                // an indicator atom always gets its own node, even if constant
                Arg::Const(c) => self.intern(Op::Const(c), Vec::new()),
                n => n,
            };
            let node = self.push_node(Op::Atom, &[p]);
            self.indicators[i as usize].atom_node = node;
            self.terms.push(Term { node, outcome: Outcome::Indicator(i), sample: s, relation: r, args });
        }
        Ok(())
    }

    fn ground_atom(&mut self, s: usize, r: RelId, args: &[ObjectId]) -> Result<Arg, GraphError> {
        let model: &'a Model = self.view.model;
        let a = model.assignment_for(r).expect("checked in build");
        let mut binding = vec![None; a.var_count()];
        for (v, o) in a.head.iter().zip(args) {
            binding[v.index()] = Some(*o);
        }
        let p = self
            .ground(s, &a.formula, &mut binding)
            .map_err(|e| GraphError::Eval { atom: self.view.describe(r, args), source: e })?;
        Ok(self.lift(p))
    }

    fn indicator(&mut self, s: usize, r: RelId, args: &[ObjectId]) -> Arg {
        let k = (s, r, args.to_vec());
        if let Some(&i) = self.indicator_index.get(&k) {
            return Arg::Node(self.indicators[i as usize].node);
        }
        let i = self.indicators.len() as u32;
        let node = self.push_node(Op::Indicator(i), &[]);
        self.indicators.push(IndicatorLeaf {
            sample: s,
            relation: r,
            name: self.view.model.relation(r).name.clone(),
            args: args.to_vec(),
            node,
            atom_node: NodeId::MAX,
        });
        self.indicator_index.insert(k, i);
        self.pending.push(i);
        Arg::Node(node)
    }

    fn ground(&mut self, s: usize, f: &'a Formula, binding: &mut Vec<Option<ObjectId>>) -> Result<Arg, EvalError> {
        Ok(match f {
            Formula::Const(c) => Arg::Const(*c),
            Formula::Param(p) => match self.fixed[*p] {
                Some(v) => Arg::Const(v),
                None => self.param_leaf(*p),
            },
            Formula::Atom { relation, args } => {
                let objs = ground_args(args, binding)?;
                self.atom(s, *relation, &objs)?
            }
            Formula::Plus(a, b) => {
                let a = self.ground(s, a, binding)?;
                let b = self.ground(s, b, binding)?;
                self.nary(CombFn::Sum, vec![a, b])?
            }
            Formula::Minus(a, b) => {
                let a = self.ground(s, a, binding)?;
                let b = self.ground(s, b, binding)?;
                self.sub(a, b)
            }
            Formula::Times(a, b) => {
                let a = self.ground(s, a, binding)?;
                let b = self.ground(s, b, binding)?;
                self.mul(a, b)
            }
            Formula::Wif { cond, then, otherwise } => {
                let c = self.ground(s, cond, binding)?;
                if self.fold {
                    match c {
                        Arg::Const(1.0) => return self.ground(s, then, binding),
                        Arg::Const(0.0) => return self.ground(s, otherwise, binding),
                        _ => {}
                    }
                }
                let t = self.ground(s, then, binding)?;
                let e = self.ground(s, otherwise, binding)?;
                self.wif(c, t, e)
            }
            Formula::Combine(c) => {
                let mut tuples: Vec<Vec<Option<ObjectId>>> = Vec::new();
                for_each_tuple(&c.bound, &c.guard, binding, &self.view, &mut |b| tuples.push(b.clone()))?;
                let mut items = Vec::with_capacity(tuples.len() * c.bodies.len());
                for mut t in tuples {
                    for body in &c.bodies {
                        items.push(self.ground(s, body, &mut t)?);
                    }
                }
                self.nary(c.func, items)?
            }
        })
    }

    fn param_leaf(&mut self, p: usize) -> Arg {
        if let Some(i) = self.param_index[p] {
            return Arg::Node(self.params[i as usize].node);
        }
        let i = self.params.len() as u32;
        let node = self.push_node(Op::Param(i), &[]);
        let decl = &self.view.model.params()[p];
        self.params.push(ParamLeaf { param: p, name: decl.name.clone(), range: decl.range, node });
        self.param_index[p] = Some(i);
        Arg::Node(node)
    }

    fn atom(&mut self, s: usize, r: RelId, objs: &[ObjectId]) -> Result<Arg, EvalError> {
        let decl = self.view.model.relation(r);
        Ok(match decl.kind {
            RelationKind::BooleanInput => Arg::Const(self.view.input_value(r, objs).unwrap_or(0.0)),
            RelationKind::NumericInput { range, learnable } if learnable && !self.frozen[r] => {
                let k = (r, objs.to_vec());
                if let Some(&i) = self.numeric_index.get(&k) {
                    return Ok(Arg::Node(self.numerics[i as usize].node));
                }
                let i = self.numerics.len() as u32;
                let node = self.push_node(Op::Numeric(i), &[]);
                self.numerics.push(NumericLeaf {
                    relation: r,
                    name: decl.name.clone(),
                    args: objs.to_vec(),
                    range,
                    initial: self.view.input_value(r, objs),
                    node,
                });
                self.numeric_index.insert(k, i);
                Arg::Node(node)
            }
            RelationKind::NumericInput { .. } => match self.view.input_value(r, objs) {
                Some(v) => Arg::Const(v),
                None => return Err(EvalError::MissingValue(self.view.describe(r, objs))),
            },
            RelationKind::Probabilistic => {
                let data: &DataSet = self.view.data;
                let stored = self.view.rel_map[r].map(|di| (di, data.sample(s).get(di, objs)));
                match stored {
                    Some((_, Some(Truth::True))) => Arg::Const(1.0),
                    Some((_, Some(Truth::False))) => Arg::Const(0.0),
                    Some((di, None)) if data.relations()[di].closed_world => Arg::Const(0.0),
                    _ => self.indicator(s, r, objs),
                }
            }
        })
    }

    fn nary(&mut self, func: CombFn, items: Vec<Arg>) -> Result<Arg, EvalError> {
        let n = items.len();
        if func == CombFn::Mean && n == 0 {
            return Err(EvalError::EmptyMean);
        }
        let op = match func {
            CombFn::Sum => Op::Sum,
            CombFn::LReg => Op::LReg,
            CombFn::Mean => Op::Mean(n as u32),
            CombFn::NoisyOr => Op::NoisyOr,
        };
        if !self.fold {
            let lifted: Vec<Arg> = items.into_iter().map(|a| self.lift(a)).collect();
            return Ok(self.intern(op, lifted));
        }
        let mut nodes = Vec::with_capacity(n);
        let mut sum = 0.0;
        let mut keep = 1.0;
        for a in items {
            match a {
                Arg::Node(_) => nodes.push(a),
                Arg::Const(c) => {
                    if func == CombFn::NoisyOr {
                        if !(-UNIT_SLACK..=1.0 + UNIT_SLACK).contains(&c) {
                            return Err(EvalError::NoisyOrInput(c));
                        }
                        keep *= 1.0 - c;
                    } else {
                        sum += c;
                    }
                }
            }
        }
        // the constants collapse into a single argument
        let folded = if func == CombFn::NoisyOr { 1.0 - keep } else { sum };
        if nodes.is_empty() {
            return Ok(Arg::Const(match func {
                CombFn::Sum => sum,
                CombFn::LReg => logistic(sum),
                CombFn::Mean => sum / n as f64,
                CombFn::NoisyOr => 1.0 - keep,
            }));
        }
        if folded != 0.0 {
            nodes.push(Arg::Const(folded));
        } else if nodes.len() == 1 && func == CombFn::Sum {
            return Ok(nodes[0]);
        }
        Ok(self.intern(op, nodes))
    }

    fn sub(&mut self, a: Arg, b: Arg) -> Arg {
        if self.fold {
            match (a, b) {
                (Arg::Const(x), Arg::Const(y)) => return Arg::Const(x - y),
                (_, Arg::Const(0.0)) => return a,
                _ => {}
            }
        }
        let (a, b) = (self.lift(a), self.lift(b));
        self.intern(Op::Sub, vec![a, b])
    }

    fn mul(&mut self, a: Arg, b: Arg) -> Arg {
        if self.fold {
            match (a, b) {
                (Arg::Const(x), Arg::Const(y)) => return Arg::Const(x * y),
                (Arg::Const(z), _) | (_, Arg::Const(z)) if z == 0.0 => return Arg::Const(0.0),
                (Arg::Const(o), other) | (other, Arg::Const(o)) if o == 1.0 => return other,
                _ => {}
            }
        }
        let (a, b) = (self.lift(a), self.lift(b));
        self.intern(Op::Mul, vec![a, b])
    }

    fn wif(&mut self, c: Arg, t: Arg, e: Arg) -> Arg {
        if self.fold {
            if let (Arg::Const(c), Arg::Const(t), Arg::Const(e)) = (c, t, e) {
                return Arg::Const(c * t + (1.0 - c) * e);
            }
        }
        let (c, t, e) = (self.lift(c), self.lift(t), self.lift(e));
        self.intern(Op::Wif, vec![c, t, e])
    }

    fn finish(self, samples: usize) -> LikelihoodGraph {
        let n = self.ops.len();
        let mut counts = vec![0u32; n + 1];
        for a in &self.args {
            if let Arg::Node(c) = a {
                counts[*c as usize + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let parent_start = counts.clone();
        let mut fill = counts;
        let mut parents = vec![0; self.args.iter().filter(|a| matches!(a, Arg::Node(_))).count()];
        for p in 0..n {
            for a in &self.args[self.arg_start[p] as usize..self.arg_start[p + 1] as usize] {
                if let Arg::Node(c) = a {
                    parents[fill[*c as usize] as usize] = p as NodeId;
                    fill[*c as usize] += 1;
                }
            }
        }
        LikelihoodGraph {
            ops: self.ops,
            arg_start: self.arg_start,
            args: self.args,
            parent_start,
            parents,
            terms: self.terms,
            constant_ll: self.constant_ll,
            params: self.params,
            numerics: self.numerics,
            indicators: self.indicators,
            param_index: self.param_index,
            numeric_index: self.numeric_index,
            indicator_index: self.indicator_index,
            samples,
        }
    }
}

fn check_probability(p: f64) -> Result<(), f64> {
    if (-UNIT_SLACK..=1.0 + UNIT_SLACK).contains(&p) {
        Ok(())
    } else {
        Err(p)
    }
}
