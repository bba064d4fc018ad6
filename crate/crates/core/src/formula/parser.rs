//! Recursive-descent parser for the model language.
//!
//! ```text
//! model   := (decl ";")* (assign ";")+
//! decl    := "input" NAME "/" INT ["numeric" ["[" bound "," bound "]"] ["learnable"]]
//!          | "prob" NAME "/" INT
//!          | "param" NAME ["[" bound "," bound "]"]
//! assign  := NAME "(" vars ")" "<-" formula
//! formula := term (("+"|"-") term)*      term := factor ("*" factor)*
//! factor  := NUMBER | NAME | NAME "(" vars ")" | "(" formula ")" | wif | combine
//! wif     := "WIF" formula "THEN" formula "ELSE" formula
//! combine := "COMBINE" formula ("," formula)* "WITH" fn ["FORALL" vars ["WHERE" guard]]
//! guard   := gatom ("&" gatom)*
//! gatom   := ["!"] NAME "(" vars ")" | var "=" var | var "!=" var
//! ```
//!
//! Parsing produces a name-based tree first; names are resolved afterwards
//! because `FORALL` variables are introduced after the bodies that use them.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::lexer::{tokenize, Keyword, Pos, Tok, Token};
use super::{
    Assignment, CombFn, Combine, Formula, Interval, Literal, Model, ModelError, ParameterDecl,
    RelationDecl, RelationKind, VarId,
};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("undeclared relation `{0}`")]
    UndeclaredRelation(String),
    #[error("undeclared parameter or relation `{0}`")]
    UndeclaredName(String),
    #[error("`{name}` expects {expected} arguments, found {found}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("duplicate assignment for `{0}`")]
    DuplicateAssignment(String),
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("bound variable `{0}` shadows a variable of the enclosing scope")]
    VariableCollision(String),
    #[error("{0}")]
    Model(ModelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(super) fn new(line: usize, column: usize, msg: String) -> ParseError {
        ParseError { line, column, kind: ParseErrorKind::Syntax(msg) }
    }

    fn at(pos: Pos, kind: ParseErrorKind) -> ParseError {
        ParseError { line: pos.line, column: pos.col, kind }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.kind)
    }
}

impl core::error::Error for ParseError {}

type Name = (String, Pos);

enum Raw {
    Num(f64),
    Name(Name),
    Atom(Name, Vec<Name>),
    Plus(Box<Raw>, Box<Raw>),
    Minus(Box<Raw>, Box<Raw>),
    Times(Box<Raw>, Box<Raw>),
    Wif(Box<Raw>, Box<Raw>, Box<Raw>),
    Combine { bodies: Vec<Raw>, func: CombFn, bound: Vec<Name>, guard: Vec<RawLit> },
}

enum RawLit {
    Atom { negated: bool, name: Name, args: Vec<Name> },
    Eq(Name, Name),
    Neq(Name, Name),
}

struct RawAssign {
    head_name: Name,
    head: Vec<Name>,
    body: Raw,
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let p = self.pos();
        Err(ParseError::new(p.line, p.col, msg.into()))
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Name, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, pos))
            }
            other => self.err(format!("expected {what}, found {}", describe(&other))),
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        match *self.peek() {
            Tok::Number(v) if v >= 0.0 && libm::trunc(v) == v => {
                self.bump();
                Ok(v as usize)
            }
            _ => self.err("expected a non-negative integer"),
        }
    }

    fn bound(&mut self) -> Result<f64, ParseError> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let v = match self.peek().clone() {
            Tok::Number(v) => v,
            Tok::Ident(s) if s == "inf" => f64::INFINITY,
            other => return self.err(format!("expected a bound, found {}", describe(&other))),
        };
        self.bump();
        Ok(if negative { -v } else { v })
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let pos = self.pos();
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.bound()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = self.bound()?;
        self.expect(Tok::RBracket, "`]`")?;
        Interval::new(lo, hi)
            .ok_or_else(|| ParseError::new(pos.line, pos.col, format!("empty interval [{lo}, {hi}]")))
    }

    fn vars(&mut self) -> Result<Vec<Name>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                out.push(self.ident("a variable")?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(out)
    }

    fn formula(&mut self) -> Result<Raw, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Raw::Plus(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Raw::Minus(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Raw, ParseError> {
        let mut lhs = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = Raw::Times(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Raw, ParseError> {
        match self.peek().clone() {
            Tok::Number(v) => {
                self.bump();
                Ok(Raw::Num(v))
            }
            // negative literal in operand position
            Tok::Minus if matches!(self.peek2(), Tok::Number(_)) => {
                self.bump();
                let Tok::Number(v) = self.bump().tok else { unreachable!() };
                Ok(Raw::Num(-v))
            }
            Tok::Ident(_) => {
                let name = self.ident("a name")?;
                if *self.peek() == Tok::LParen {
                    let args = self.vars()?;
                    Ok(Raw::Atom(name, args))
                } else {
                    Ok(Raw::Name(name))
                }
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Kw(Keyword::Wif) => {
                self.bump();
                let cond = self.formula()?;
                self.expect(Tok::Kw(Keyword::Then), "THEN")?;
                let then = self.formula()?;
                self.expect(Tok::Kw(Keyword::Else), "ELSE")?;
                let otherwise = self.formula()?;
                Ok(Raw::Wif(Box::new(cond), Box::new(then), Box::new(otherwise)))
            }
            Tok::Kw(Keyword::Combine) => {
                self.bump();
                let mut bodies = alloc::vec![self.formula()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    bodies.push(self.formula()?);
                }
                self.expect(Tok::Kw(Keyword::With), "WITH")?;
                let (fname, fpos) = self.ident("a combination function")?;
                let func = CombFn::from_name(&fname).ok_or_else(|| {
                    ParseError::new(fpos.line, fpos.col, format!("unknown combination function `{fname}`"))
                })?;
                let mut bound = Vec::new();
                let mut guard = Vec::new();
                if *self.peek() == Tok::Kw(Keyword::Forall) {
                    self.bump();
                    loop {
                        bound.push(self.ident("a variable")?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if *self.peek() == Tok::Kw(Keyword::Where) {
                        self.bump();
                        guard.push(self.guard_atom()?);
                        while *self.peek() == Tok::Amp {
                            self.bump();
                            guard.push(self.guard_atom()?);
                        }
                    }
                }
                Ok(Raw::Combine { bodies, func, bound, guard })
            }
            other => self.err(format!("expected a formula, found {}", describe(&other))),
        }
    }

    fn guard_atom(&mut self) -> Result<RawLit, ParseError> {
        let negated = if *self.peek() == Tok::Bang {
            self.bump();
            true
        } else {
            false
        };
        let name = self.ident("a guard atom")?;
        match self.peek() {
            Tok::LParen => {
                let args = self.vars()?;
                Ok(RawLit::Atom { negated, name, args })
            }
            Tok::Eq | Tok::Neq if !negated => {
                let eq = *self.peek() == Tok::Eq;
                self.bump();
                let rhs = self.ident("a variable")?;
                Ok(if eq { RawLit::Eq(name, rhs) } else { RawLit::Neq(name, rhs) })
            }
            other => self.err(format!("expected `(`, `=` or `!=`, found {}", describe(other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(v) => format!("number {v}"),
        Tok::Kw(k) => format!("keyword {k:?}").to_uppercase(),
        Tok::Eof => String::from("end of input"),
        other => format!("{other:?}"),
    }
}

/// Parses and validates a model.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let mut p = Parser { toks: tokenize(text)?, at: 0 };
    let mut relations: Vec<RelationDecl> = Vec::new();
    let mut params: Vec<ParameterDecl> = Vec::new();
    let mut decl_pos: Vec<Pos> = Vec::new();

    // declarations
    loop {
        let pos = p.pos();
        if p.is_ident("input") {
            p.bump();
            let (name, _) = p.ident("a relation name")?;
            p.expect(Tok::Slash, "`/`")?;
            let arity = p.integer()?;
            let mut kind = RelationKind::BooleanInput;
            if p.is_ident("numeric") {
                p.bump();
                let range = if *p.peek() == Tok::LBracket { p.interval()? } else { Interval::UNBOUNDED };
                let learnable = if p.is_ident("learnable") {
                    p.bump();
                    true
                } else {
                    false
                };
                kind = RelationKind::NumericInput { range, learnable };
            }
            relations.push(RelationDecl { name, arity, kind });
        } else if p.is_ident("prob") {
            p.bump();
            let (name, _) = p.ident("a relation name")?;
            p.expect(Tok::Slash, "`/`")?;
            let arity = p.integer()?;
            relations.push(RelationDecl { name, arity, kind: RelationKind::Probabilistic });
        } else if p.is_ident("param") {
            p.bump();
            let (name, _) = p.ident("a parameter name")?;
            let range = if *p.peek() == Tok::LBracket { p.interval()? } else { Interval::UNBOUNDED };
            params.push(ParameterDecl { name, range });
        } else {
            break;
        }
        decl_pos.push(pos);
        p.expect(Tok::Semi, "`;`")?;
    }

    // assignments
    let mut raw = Vec::new();
    loop {
        let head_name = p.ident("an assignment")?;
        let head = p.vars()?;
        p.expect(Tok::Arrow, "`<-`")?;
        let body = p.formula()?;
        p.expect(Tok::Semi, "`;`")?;
        raw.push(RawAssign { head_name, head, body });
        if *p.peek() == Tok::Eof {
            break;
        }
    }

    let resolver = Resolver { relations: &relations, params: &params };
    let mut assignments: Vec<Assignment> = Vec::new();
    for ra in &raw {
        let (hname, hpos) = &ra.head_name;
        let rel = resolver.relation(hname, *hpos)?;
        if assignments.iter().any(|a| a.relation == rel) {
            return Err(ParseError::at(*hpos, ParseErrorKind::DuplicateAssignment(hname.clone())));
        }
        assignments.push(resolver.assignment(rel, ra)?);
    }
    Model::new(relations, params, assignments).map_err(|e| {
        let pos = decl_pos.first().copied().unwrap_or(Pos { line: 1, col: 1 });
        ParseError::at(pos, ParseErrorKind::Model(e))
    })
}

struct Resolver<'a> {
    relations: &'a [RelationDecl],
    params: &'a [ParameterDecl],
}

struct Scope {
    names: Vec<String>,
    active: Vec<VarId>,
}

impl Scope {
    fn lookup(&self, name: &str) -> Option<VarId> {
        self.active.iter().rev().copied().find(|v| self.names[v.index()] == name)
    }

    fn var(&self, (name, pos): &Name) -> Result<VarId, ParseError> {
        self.lookup(name)
            .ok_or_else(|| ParseError::at(*pos, ParseErrorKind::UnboundVariable(name.clone())))
    }

    fn vars(&self, names: &[Name]) -> Result<Vec<VarId>, ParseError> {
        names.iter().map(|n| self.var(n)).collect()
    }

    fn introduce(&mut self, (name, pos): &Name) -> Result<VarId, ParseError> {
        if self.lookup(name).is_some() {
            return Err(ParseError::at(*pos, ParseErrorKind::VariableCollision(name.clone())));
        }
        let id = VarId(self.names.len() as u32);
        self.names.push(name.clone());
        self.active.push(id);
        Ok(id)
    }
}

impl Resolver<'_> {
    fn relation(&self, name: &str, pos: Pos) -> Result<usize, ParseError> {
        self.relations
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| ParseError::at(pos, ParseErrorKind::UndeclaredRelation(String::from(name))))
    }

    fn check_arity(&self, rel: usize, found: usize, pos: Pos) -> Result<(), ParseError> {
        let r = &self.relations[rel];
        if r.arity != found {
            return Err(ParseError::at(
                pos,
                ParseErrorKind::ArityMismatch { name: r.name.clone(), expected: r.arity, found },
            ));
        }
        Ok(())
    }

    fn assignment(&self, rel: usize, ra: &RawAssign) -> Result<Assignment, ParseError> {
        self.check_arity(rel, ra.head.len(), ra.head_name.1)?;
        let mut scope = Scope { names: Vec::new(), active: Vec::new() };
        let mut head = Vec::new();
        for n in &ra.head {
            head.push(scope.introduce(n)?);
        }
        let formula = self.formula(&ra.body, &mut scope)?;
        Ok(Assignment { relation: rel, head, var_names: scope.names, formula })
    }

    fn formula(&self, raw: &Raw, scope: &mut Scope) -> Result<Formula, ParseError> {
        Ok(match raw {
            Raw::Num(v) => Formula::Const(*v),
            Raw::Name((name, pos)) => {
                if let Some(p) = self.params.iter().position(|p| &p.name == name) {
                    Formula::Param(p)
                } else if let Some(r) = self.relations.iter().position(|r| &r.name == name) {
                    self.check_arity(r, 0, *pos)?;
                    Formula::Atom { relation: r, args: Vec::new() }
                } else {
                    return Err(ParseError::at(*pos, ParseErrorKind::UndeclaredName(name.clone())));
                }
            }
            Raw::Atom((name, pos), args) => {
                let r = self.relation(name, *pos)?;
                self.check_arity(r, args.len(), *pos)?;
                Formula::Atom { relation: r, args: scope.vars(args)? }
            }
            Raw::Plus(a, b) => Formula::plus(self.formula(a, scope)?, self.formula(b, scope)?),
            Raw::Minus(a, b) => Formula::minus(self.formula(a, scope)?, self.formula(b, scope)?),
            Raw::Times(a, b) => Formula::times(self.formula(a, scope)?, self.formula(b, scope)?),
            Raw::Wif(c, t, e) => Formula::wif(
                self.formula(c, scope)?,
                self.formula(t, scope)?,
                self.formula(e, scope)?,
            ),
            Raw::Combine { bodies, func, bound, guard } => {
                let depth = scope.active.len();
                let mut ids = Vec::new();
                for n in bound {
                    ids.push(scope.introduce(n)?);
                }
                let mut rbodies = Vec::new();
                for b in bodies {
                    rbodies.push(self.formula(b, scope)?);
                }
                let mut rguard = Vec::new();
                for lit in guard {
                    rguard.push(match lit {
                        RawLit::Atom { negated, name: (name, pos), args } => {
                            let r = self.relation(name, *pos)?;
                            self.check_arity(r, args.len(), *pos)?;
                            if self.relations[r].kind != RelationKind::BooleanInput {
                                return Err(ParseError::at(
                                    *pos,
                                    ParseErrorKind::Model(ModelError::NonBooleanGuard(name.clone())),
                                ));
                            }
                            Literal::Atom { negated: *negated, relation: r, args: scope.vars(args)? }
                        }
                        RawLit::Eq(a, b) => Literal::Eq(scope.var(a)?, scope.var(b)?),
                        RawLit::Neq(a, b) => Literal::Neq(scope.var(a)?, scope.var(b)?),
                    });
                }
                scope.active.truncate(depth);
                Formula::Combine(Box::new(Combine {
                    bodies: rbodies,
                    func: *func,
                    bound: ids,
                    guard: rguard,
                }))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const COIN: &str = "input fair/1; prob heads/1; heads(T) <- wif fair(T) then 0.5 else 0.7;";

    #[test]
    fn coin_model() {
        let m = parse_model(COIN).unwrap();
        let a = &m.assignments()[0];
        assert_eq!(
            a.formula,
            Formula::wif(
                Formula::Atom { relation: 0, args: vec![VarId(0)] },
                Formula::Const(0.5),
                Formula::Const(0.7)
            )
        );
        assert_eq!(a.var_names, ["T"]);
    }

    #[test]
    fn missing_else_is_a_syntax_error() {
        let e = parse_model("input fair/1; prob heads/1; heads(T) <- wif fair(T) then 0.5;").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)), "{e}");
        assert_eq!((e.line, e.column), (1, 61));
    }

    #[test]
    fn pollution_model_structure() {
        let text = "
            input upstream/2;
            input invdistance/2 numeric [0, inf];
            prob polluted/1;
            param alpha; param beta;
            polluted(S) <- WIF 0.6
                THEN COMBINE alpha,
                             COMBINE WIF polluted(V)
                                     THEN beta * invdistance(V,S)
                                     ELSE 0.0
                             WITH sum
                             FORALL V
                             WHERE upstream(V,S)
                     WITH l-reg
                ELSE 0.2;";
        let m = parse_model(text).unwrap();
        let Formula::Wif { cond, then, otherwise } = &m.assignments()[0].formula else { panic!() };
        assert_eq!(**cond, Formula::Const(0.6));
        assert_eq!(**otherwise, Formula::Const(0.2));
        let Formula::Combine(outer) = &**then else { panic!() };
        assert_eq!(outer.func, CombFn::LReg);
        assert!(outer.bound.is_empty());
        assert_eq!(outer.bodies[0], Formula::Param(0));
        let Formula::Combine(inner) = &outer.bodies[1] else { panic!() };
        assert_eq!(inner.func, CombFn::Sum);
        assert_eq!(inner.bound, [VarId(1)]);
        assert_eq!(
            inner.guard,
            [Literal::Atom { negated: false, relation: 0, args: vec![VarId(1), VarId(0)] }]
        );
    }

    #[test]
    fn precedence_and_negative_literals() {
        let m = parse_model("param a; prob r/0; r() <- 1 - a * -2 + 3;").unwrap();
        let f = &m.assignments()[0].formula;
        assert_eq!(
            *f,
            Formula::plus(
                Formula::minus(
                    Formula::Const(1.0),
                    Formula::times(Formula::Param(0), Formula::Const(-2.0))
                ),
                Formula::Const(3.0)
            )
        );
    }

    #[test]
    fn undeclared_relation() {
        let e = parse_model("prob r/1; r(X) <- q(X);").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UndeclaredRelation("q".into()));
        assert_eq!((e.line, e.column), (1, 19));
    }

    #[test]
    fn arity_mismatch() {
        let e = parse_model("input q/2; prob r/1; r(X) <- COMBINE 1 WITH sum FORALL Y WHERE q(X);").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ArityMismatch { name: "q".into(), expected: 2, found: 1 });
    }

    #[test]
    fn duplicate_assignment() {
        let e = parse_model("prob r/0; r() <- 0.1; r() <- 0.2;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateAssignment("r".into()));
    }

    #[test]
    fn bound_variable_may_not_shadow() {
        let e = parse_model("input q/1; prob r/1; r(X) <- COMBINE q(X) WITH sum FORALL X;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::VariableCollision("X".into()));
    }

    #[test]
    fn unbound_variable() {
        let e = parse_model("input q/1; prob r/1; r(X) <- q(Y);").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnboundVariable("Y".into()));
    }

    #[test]
    fn guard_must_be_boolean_input() {
        let e = parse_model("prob p/1; prob r/1; p(X) <- 0.5; r(X) <- COMBINE 1 WITH sum FORALL Y WHERE p(Y);")
            .unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Model(ModelError::NonBooleanGuard(_))));
    }

    #[test]
    fn declarations() {
        let m = parse_model(
            "input u/2 numeric [0, inf] learnable; input d/1 numeric; param a [-1, 1]; prob r/0; r() <- 0.5;",
        )
        .unwrap();
        assert_eq!(
            m.relation(0).kind,
            RelationKind::NumericInput { range: Interval::NON_NEGATIVE, learnable: true }
        );
        assert_eq!(
            m.relation(1).kind,
            RelationKind::NumericInput { range: Interval::UNBOUNDED, learnable: false }
        );
        assert_eq!(m.params()[0].range, Interval { min: -1.0, max: 1.0 });
    }
}
