//! Symbolic probability expressions over an observational distribution.
//!
//! An estimand is printed as an s-expression:
//!
//! ```text
//! (p (Y) (r X))            conditional atom P(Y | R=r, X)
//! (p (Y))                  marginal atom P(Y)
//! (sum ((r R)) e)          sum of e over the domain of R, binding alias r
//! (prod e1 e2 ...)         product
//! (div e1 e2)              ratio
//! ```
//!
//! Names inside atoms are either aliases bound by an enclosing `sum` or free
//! names resolved by the evaluation environment. Aliases are lowercase with
//! apostrophes for disambiguation, so they never collide with variable names.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use scm_core::{joint_assignments, Domain, Pmf, ScmError, Value};

use crate::error::GraphError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Estimand {
    /// `P(outcomes | given)`; entries are names, not values.
    Prob {
        outcomes: Vec<String>,
        given: Vec<String>,
    },
    /// Sum over the domains of the bound variables; each pair is
    /// `(alias, variable)`.
    Sum {
        bound: Vec<(String, String)>,
        body: Box<Estimand>,
    },
    Product(Vec<Estimand>),
    Ratio {
        num: Box<Estimand>,
        den: Box<Estimand>,
    },
}

impl Estimand {
    /// Rename every free occurrence of `from` to `to`.
    pub fn rename_free(&mut self, from: &str, to: &str) {
        match self {
            Estimand::Prob { outcomes, given } => {
                for n in outcomes.iter_mut().chain(given.iter_mut()) {
                    if n == from {
                        *n = to.to_string();
                    }
                }
            }
            Estimand::Sum { bound, body } => {
                if bound.iter().any(|(alias, _)| alias == from) {
                    return;
                }
                body.rename_free(from, to);
            }
            Estimand::Product(items) => {
                for e in items {
                    e.rename_free(from, to);
                }
            }
            Estimand::Ratio { num, den } => {
                num.rename_free(from, to);
                den.rename_free(from, to);
            }
        }
    }

    /// Evaluate against an observational distribution. `env` resolves free
    /// names to `(variable, value)` pairs; `domains` supplies the ranges of
    /// summed variables.
    pub fn eval(
        &self,
        pmf: &Pmf,
        domains: &BTreeMap<String, Domain>,
        env: &BTreeMap<String, (String, Value)>,
    ) -> Result<f64, GraphError> {
        let mut scope = Vec::new();
        self.eval_in(pmf, domains, env, &mut scope)
    }

    fn eval_in(
        &self,
        pmf: &Pmf,
        domains: &BTreeMap<String, Domain>,
        env: &BTreeMap<String, (String, Value)>,
        scope: &mut Vec<(String, String, Value)>,
    ) -> Result<f64, GraphError> {
        match self {
            Estimand::Prob { outcomes, given } => {
                let mut given_map = BTreeMap::new();
                for name in given {
                    let (var, value) = resolve(name, env, scope)?;
                    if let Some(old) = given_map.insert(var.clone(), value) {
                        if old != value {
                            return Err(GraphError::Scm(ScmError::ZeroProbabilityConditioning(
                                format!("{var} is required to take two distinct values"),
                            )));
                        }
                    }
                }
                let mut outcome_map = BTreeMap::new();
                for name in outcomes {
                    let (var, value) = resolve(name, env, scope)?;
                    if let Some(old) = outcome_map.insert(var.clone(), value) {
                        if old != value {
                            return Ok(0.0);
                        }
                    }
                }
                if given_map.is_empty() {
                    Ok(pmf.event_prob(&outcome_map)?)
                } else {
                    Ok(pmf.conditional_prob(&outcome_map, &given_map)?)
                }
            }
            Estimand::Sum { bound, body } => {
                let doms = bound
                    .iter()
                    .map(|(_, var)| {
                        domains
                            .get(var)
                            .ok_or_else(|| GraphError::MissingDomain(var.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut total = 0.0;
                for assignment in joint_assignments(&doms) {
                    let depth = scope.len();
                    for ((alias, var), value) in bound.iter().zip(&assignment) {
                        scope.push((alias.clone(), var.clone(), *value));
                    }
                    let term = body.eval_in(pmf, domains, env, scope);
                    scope.truncate(depth);
                    total += term?;
                }
                Ok(total)
            }
            Estimand::Product(items) => {
                let mut total = 1.0;
                for e in items {
                    total *= e.eval_in(pmf, domains, env, scope)?;
                }
                Ok(total)
            }
            Estimand::Ratio { num, den } => {
                let d = den.eval_in(pmf, domains, env, scope)?;
                if d == 0.0 {
                    return Err(GraphError::Scm(ScmError::ZeroProbabilityConditioning(
                        format!("{den}"),
                    )));
                }
                let n = num.eval_in(pmf, domains, env, scope)?;
                Ok(n / d)
            }
        }
    }
}

/// Names that must be supplied by the evaluation environment.
pub fn free_names(e: &Estimand) -> BTreeSet<String> {
    fn walk(e: &Estimand, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match e {
            Estimand::Prob { outcomes, given } => {
                for n in outcomes.iter().chain(given.iter()) {
                    if !bound.iter().any(|b| b == n) {
                        out.insert(n.clone());
                    }
                }
            }
            Estimand::Sum { bound: bs, body } => {
                let depth = bound.len();
                bound.extend(bs.iter().map(|(alias, _)| alias.clone()));
                walk(body, bound, out);
                bound.truncate(depth);
            }
            Estimand::Product(items) => {
                for item in items {
                    walk(item, bound, out);
                }
            }
            Estimand::Ratio { num, den } => {
                walk(num, bound, out);
                walk(den, bound, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(e, &mut Vec::new(), &mut out);
    out
}

fn resolve(
    name: &str,
    env: &BTreeMap<String, (String, Value)>,
    scope: &[(String, String, Value)],
) -> Result<(String, Value), GraphError> {
    for (alias, var, value) in scope.iter().rev() {
        if alias == name {
            return Ok((var.clone(), *value));
        }
    }
    if let Some((var, value)) = env.get(name) {
        return Ok((var.clone(), *value));
    }
    Err(GraphError::UnknownVariable(name.to_string()))
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimand::Prob { outcomes, given } => {
                write!(f, "(p ({})", outcomes.join(" "))?;
                if !given.is_empty() {
                    write!(f, " ({})", given.join(" "))?;
                }
                write!(f, ")")
            }
            Estimand::Sum { bound, body } => {
                write!(f, "(sum (")?;
                for (i, (alias, var)) in bound.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "({alias} {var})")?;
                }
                write!(f, ") {body})")
            }
            Estimand::Product(items) => {
                write!(f, "(prod")?;
                for e in items {
                    write!(f, " {e}")?;
                }
                write!(f, ")")
            }
            Estimand::Ratio { num, den } => write!(f, "(div {num} {den})"),
        }
    }
}

impl FromStr for Estimand {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_estimand(s)
    }
}

pub fn parse_estimand(input: &str) -> Result<Estimand, GraphError> {
    let tokens = lex(input)?;
    let mut parser = Parser { tokens, pos: 0 };
    let e = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(err_at(
            parser.tokens[parser.pos].1,
            "unexpected trailing input",
        ));
    }
    Ok(e)
}

#[derive(Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

fn err_at(position: usize, message: impl Into<String>) -> GraphError {
    GraphError::EstimandParse {
        position,
        message: message.into(),
    }
}

fn lex(input: &str) -> Result<Vec<(Tok, usize)>, GraphError> {
    let mut tokens = Vec::new();
    let bytes = input.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            tokens.push((Tok::Open, i));
            i += 1;
        } else if c == ')' {
            tokens.push((Tok::Close, i));
            i += 1;
        } else {
            let start = i;
            while i < bytes.len() {
                let c = bytes[i] as char;
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                i += 1;
            }
            tokens.push((Tok::Atom(input[start..i].to_string()), start));
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek_pos(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or_else(|| {
                self.tokens
                    .last()
                    .map(|(_, p)| p + 1)
                    .unwrap_or(0)
            })
    }

    fn expect_open(&mut self) -> Result<(), GraphError> {
        match self.tokens.get(self.pos) {
            Some((Tok::Open, _)) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(err_at(self.peek_pos(), "expected `(`")),
        }
    }

    fn expect_close(&mut self) -> Result<(), GraphError> {
        match self.tokens.get(self.pos) {
            Some((Tok::Close, _)) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(err_at(self.peek_pos(), "expected `)`")),
        }
    }

    fn atom(&mut self) -> Result<String, GraphError> {
        match self.tokens.get(self.pos) {
            Some((Tok::Atom(s), _)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(err_at(self.peek_pos(), "expected a name")),
        }
    }

    fn at_close(&self) -> bool {
        matches!(self.tokens.get(self.pos), Some((Tok::Close, _)))
    }

    fn name_list(&mut self) -> Result<Vec<String>, GraphError> {
        self.expect_open()?;
        let mut names = Vec::new();
        while !self.at_close() {
            names.push(self.atom()?);
        }
        self.expect_close()?;
        Ok(names)
    }

    fn expr(&mut self) -> Result<Estimand, GraphError> {
        self.expect_open()?;
        let head_pos = self.peek_pos();
        let head = self.atom()?;
        let e = match head.as_str() {
            "p" => {
                let outcomes = self.name_list()?;
                let given = if self.at_close() {
                    Vec::new()
                } else {
                    self.name_list()?
                };
                Estimand::Prob { outcomes, given }
            }
            "sum" => {
                self.expect_open()?;
                let mut bound = Vec::new();
                while !self.at_close() {
                    self.expect_open()?;
                    let alias = self.atom()?;
                    let var = self.atom()?;
                    self.expect_close()?;
                    bound.push((alias, var));
                }
                self.expect_close()?;
                if bound.is_empty() {
                    return Err(err_at(head_pos, "sum binds no variables"));
                }
                let body = self.expr()?;
                Estimand::Sum {
                    bound,
                    body: Box::new(body),
                }
            }
            "prod" => {
                let mut items = Vec::new();
                while !self.at_close() {
                    items.push(self.expr()?);
                }
                if items.is_empty() {
                    return Err(err_at(head_pos, "prod has no factors"));
                }
                Estimand::Product(items)
            }
            "div" => {
                let num = self.expr()?;
                let den = self.expr()?;
                Estimand::Ratio {
                    num: Box::new(num),
                    den: Box::new(den),
                }
            }
            other => {
                return Err(err_at(
                    head_pos,
                    format!("expected p, sum, prod, or div, found `{other}`"),
                ))
            }
        };
        self.expect_close()?;
        Ok(e)
    }
}
