//! Pretty-printing back into the model language. The output parses to the
//! same tree.

use core::fmt::{self, Display, Formatter};

use super::{Assignment, Formula, Literal, Model, RelationKind, VarId};

pub(super) struct Bound(pub f64);

impl Display for Bound {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            f.write_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Displays a formula with the variable names of its assignment.
pub struct FormulaDisplay<'a> {
    pub model: &'a Model,
    pub assignment: &'a Assignment,
    pub formula: &'a Formula,
}

impl Model {
    pub fn display_formula<'a>(&'a self, assignment: &'a Assignment, formula: &'a Formula) -> FormulaDisplay<'a> {
        FormulaDisplay { model: self, assignment, formula }
    }
}

impl FormulaDisplay<'_> {
    fn var(&self, v: VarId) -> &str {
        &self.assignment.var_names[v.index()]
    }

    fn vars(&self, f: &mut Formatter<'_>, vs: &[VarId]) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in vs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(self.var(*v))?;
        }
        f.write_str(")")
    }

    fn write(&self, f: &mut Formatter<'_>, node: &Formula) -> fmt::Result {
        match node {
            Formula::Const(v) => write!(f, "{v}"),
            Formula::Param(p) => f.write_str(&self.model.params()[*p].name),
            Formula::Atom { relation, args } => {
                f.write_str(&self.model.relation(*relation).name)?;
                self.vars(f, args)
            }
            Formula::Plus(a, b) => self.binary(f, a, " + ", b, 1),
            Formula::Minus(a, b) => self.binary(f, a, " - ", b, 1),
            Formula::Times(a, b) => self.binary(f, a, " * ", b, 2),
            Formula::Wif { cond, then, otherwise } => {
                f.write_str("WIF ")?;
                self.write(f, cond)?;
                f.write_str(" THEN ")?;
                self.write(f, then)?;
                f.write_str(" ELSE ")?;
                self.write(f, otherwise)
            }
            Formula::Combine(c) => {
                f.write_str("COMBINE ")?;
                for (i, b) in c.bodies.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    // a trailing FORALL list would swallow the next comma
                    self.maybe_paren(f, b, i + 1 < c.bodies.len() && precedence(b) == 0)?;
                }
                write!(f, " WITH {}", c.func.name())?;
                if !c.bound.is_empty() {
                    f.write_str(" FORALL ")?;
                    for (i, v) in c.bound.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        f.write_str(self.var(*v))?;
                    }
                    for (i, lit) in c.guard.iter().enumerate() {
                        f.write_str(if i == 0 { " WHERE " } else { " & " })?;
                        match lit {
                            Literal::Atom { negated, relation, args } => {
                                if *negated {
                                    f.write_str("!")?;
                                }
                                f.write_str(&self.model.relation(*relation).name)?;
                                self.vars(f, args)?;
                            }
                            Literal::Eq(a, b) => write!(f, "{} = {}", self.var(*a), self.var(*b))?,
                            Literal::Neq(a, b) => write!(f, "{} != {}", self.var(*a), self.var(*b))?,
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Left-associative binary operator; `level` 1 is `+ -`, 2 is `*`.
    fn binary(&self, f: &mut Formatter<'_>, a: &Formula, op: &str, b: &Formula, level: u8) -> fmt::Result {
        let left_paren = precedence(a) < level;
        let right_paren = precedence(b) <= level;
        self.maybe_paren(f, a, left_paren)?;
        f.write_str(op)?;
        self.maybe_paren(f, b, right_paren)
    }

    fn maybe_paren(&self, f: &mut Formatter<'_>, node: &Formula, paren: bool) -> fmt::Result {
        if paren {
            f.write_str("(")?;
            self.write(f, node)?;
            f.write_str(")")
        } else {
            self.write(f, node)
        }
    }
}

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Plus(..) | Formula::Minus(..) => 1,
        Formula::Times(..) => 2,
        // WIF and COMBINE extend to the right, so they are always wrapped
        Formula::Wif { .. } | Formula::Combine(_) => 0,
        _ => 3,
    }
}

impl Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        self.write(f, self.formula)
    }
}

impl Display for Model {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for r in self.relations() {
            match r.kind {
                RelationKind::BooleanInput => writeln!(f, "input {}/{};", r.name, r.arity)?,
                RelationKind::NumericInput { range, learnable } => {
                    write!(f, "input {}/{} numeric {}", r.name, r.arity, range)?;
                    if learnable {
                        f.write_str(" learnable")?;
                    }
                    writeln!(f, ";")?;
                }
                RelationKind::Probabilistic => writeln!(f, "prob {}/{};", r.name, r.arity)?,
            }
        }
        for p in self.params() {
            if p.range.is_unbounded() {
                writeln!(f, "param {};", p.name)?;
            } else {
                writeln!(f, "param {} {};", p.name, p.range)?;
            }
        }
        for a in self.assignments() {
            f.write_str(&self.relation(a.relation).name)?;
            let d = self.display_formula(a, &a.formula);
            d.vars(f, &a.head)?;
            writeln!(f, " <- {d};")?;
        }
        Ok(())
    }
}
