//! Infix expressions for mechanism definitions.
//!
//! Identifiers refer to declared parents. Logic operators treat any nonzero
//! value as true and return 0/1: `&` (and), `|` (or), `^` (xor), `!` (not).
//! Comparisons `== != < <= > >=` also return 0/1, which doubles as the
//! indicator function. Arithmetic is `+ - * %` on signed integers (`%` is
//! Euclidean, so results are never negative), and `c ? a : b` selects on
//! nonzero `c`. Precedence, loosest first: `?:`, `|`, `^`, `&`, comparisons,
//! `+ -`, `* %`, unary `! -`.

use std::collections::BTreeSet;

use crate::domain::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Mul,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// Parse failure with a byte offset into the source string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

/// Evaluation failure; surfaced while compiling an expression to a table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    UnknownIdent(String),
    ModuloZero,
}

fn truthy(v: Value) -> bool {
    v != 0
}

fn bool_val(b: bool) -> Value {
    if b {
        1
    } else {
        0
    }
}

impl Expr {
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<Value>) -> Result<Value, EvalError> {
        Ok(match self {
            Expr::Lit(v) => *v,
            Expr::Var(name) => env(name).ok_or_else(|| EvalError::UnknownIdent(name.clone()))?,
            Expr::Not(e) => bool_val(!truthy(e.eval(env)?)),
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Cond(c, a, b) => {
                if truthy(c.eval(env)?) {
                    a.eval(env)?
                } else {
                    b.eval(env)?
                }
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval(env)?;
                let b = r.eval(env)?;
                match op {
                    BinOp::And => bool_val(truthy(a) && truthy(b)),
                    BinOp::Or => bool_val(truthy(a) || truthy(b)),
                    BinOp::Xor => bool_val(truthy(a) != truthy(b)),
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Mod => {
                        if b == 0 {
                            return Err(EvalError::ModuloZero);
                        }
                        a.rem_euclid(b)
                    }
                    BinOp::Eq => bool_val(a == b),
                    BinOp::Ne => bool_val(a != b),
                    BinOp::Lt => bool_val(a < b),
                    BinOp::Le => bool_val(a <= b),
                    BinOp::Gt => bool_val(a > b),
                    BinOp::Ge => bool_val(a >= b),
                }
            }
        })
    }

    pub fn collect_idents(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Not(e) | Expr::Neg(e) => e.collect_idents(out),
            Expr::Binary(_, l, r) => {
                l.collect_idents(out);
                r.collect_idents(out);
            }
            Expr::Cond(c, a, b) => {
                c.collect_idents(out);
                a.collect_idents(out);
                b.collect_idents(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(Value),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Question,
    Colon,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    tokens: Vec<(usize, Tok)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
            tokens: Vec::new(),
        };
        lx.lex()?;
        Ok(lx.tokens)
    }

    fn lex(&mut self) -> Result<(), ParseError> {
        while self.pos < self.src.len() {
            let start = self.pos;
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    self.pos += 1;
                }
                b'(' => self.push(start, Tok::LParen),
                b')' => self.push(start, Tok::RParen),
                b'?' => self.push(start, Tok::Question),
                b':' => self.push(start, Tok::Colon),
                b'&' | b'|' | b'^' | b'+' | b'-' | b'*' | b'%' => {
                    let op = match c {
                        b'&' => "&",
                        b'|' => "|",
                        b'^' => "^",
                        b'+' => "+",
                        b'-' => "-",
                        b'*' => "*",
                        _ => "%",
                    };
                    self.push(start, Tok::Op(op));
                }
                b'=' | b'!' | b'<' | b'>' => {
                    let two_char = self.pos + 1 < self.src.len() && self.src[self.pos + 1] == b'=';
                    let op = match (c, two_char) {
                        (b'=', true) => "==",
                        (b'=', false) => {
                            return Err(ParseError {
                                position: start,
                                message: "single `=` is not an operator, use `==`".into(),
                            })
                        }
                        (b'!', true) => "!=",
                        (b'!', false) => "!",
                        (b'<', true) => "<=",
                        (b'<', false) => "<",
                        (b'>', true) => ">=",
                        (b'>', false) => ">",
                        _ => unreachable!(),
                    };
                    self.pos += op.len() - 1;
                    self.push(start, Tok::Op(op));
                }
                b'0'..=b'9' => {
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let value = text.parse().map_err(|_| ParseError {
                        position: start,
                        message: format!("integer `{text}` out of range"),
                    })?;
                    self.tokens.push((start, Tok::Int(value)));
                }
                b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    self.tokens.push((start, Tok::Ident(text.to_string())));
                }
                other => {
                    return Err(ParseError {
                        position: start,
                        message: format!("unexpected character `{}`", other as char),
                    })
                }
            }
        }
        Ok(())
    }

    fn push(&mut self, start: usize, tok: Tok) {
        self.tokens.push((start, tok));
        self.pos += 1;
    }
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    cursor: usize,
    end: usize,
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let tokens = Lexer::run(src)?;
    let mut parser = Parser {
        tokens,
        cursor: 0,
        end: src.len(),
    };
    let expr = parser.cond()?;
    if let Some((pos, _)) = parser.peek_raw() {
        return Err(ParseError {
            position: pos,
            message: "trailing input after expression".into(),
        });
    }
    Ok(expr)
}

impl Parser {
    fn peek_raw(&self) -> Option<(usize, &Tok)> {
        self.tokens.get(self.cursor).map(|(p, t)| (*p, t))
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.cursor)
            .map(|(p, _)| *p)
            .unwrap_or(self.end)
    }

    fn eat_op(&mut self, ops: &[&str]) -> Option<&'static str> {
        let found = match self.peek_raw() {
            Some((_, Tok::Op(op))) if ops.contains(op) => Some(*op),
            _ => None,
        };
        if found.is_some() {
            self.cursor += 1;
        }
        found
    }

    fn cond(&mut self) -> Result<Expr, ParseError> {
        let test = self.or()?;
        if matches!(self.peek_raw(), Some((_, Tok::Question))) {
            self.cursor += 1;
            let then = self.cond()?;
            match self.peek_raw() {
                Some((_, Tok::Colon)) => self.cursor += 1,
                _ => {
                    return Err(ParseError {
                        position: self.here(),
                        message: "expected `:` in conditional".into(),
                    })
                }
            }
            let alt = self.cond()?;
            return Ok(Expr::Cond(Box::new(test), Box::new(then), Box::new(alt)));
        }
        Ok(test)
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["|"], Parser::xor)
    }

    fn xor(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["^"], Parser::and)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["&"], Parser::cmp)
    }

    fn cmp(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["==", "!=", "<=", ">=", "<", ">"], Parser::add)
    }

    fn add(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["+", "-"], Parser::mul)
    }

    fn mul(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["*", "%"], Parser::unary)
    }

    fn binary_level(
        &mut self,
        ops: &[&str],
        next: fn(&mut Parser) -> Result<Expr, ParseError>,
    ) -> Result<Expr, ParseError> {
        let mut lhs = next(self)?;
        while let Some(op) = self.eat_op(ops) {
            let rhs = next(self)?;
            lhs = Expr::Binary(bin_op(op), Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op(&["!"]).is_some() {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat_op(&["-"]).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek_raw() {
            Some((_, Tok::Int(v))) => {
                let v = *v;
                self.cursor += 1;
                Ok(Expr::Lit(v))
            }
            Some((_, Tok::Ident(name))) => {
                let name = name.clone();
                self.cursor += 1;
                Ok(Expr::Var(name))
            }
            Some((_, Tok::LParen)) => {
                self.cursor += 1;
                let inner = self.cond()?;
                match self.peek_raw() {
                    Some((_, Tok::RParen)) => {
                        self.cursor += 1;
                        Ok(inner)
                    }
                    _ => Err(ParseError {
                        position: self.here(),
                        message: "expected `)`".into(),
                    }),
                }
            }
            _ => Err(ParseError {
                position: self.here(),
                message: "expected a value, identifier, or `(`".into(),
            }),
        }
    }
}

fn bin_op(op: &str) -> BinOp {
    match op {
        "&" => BinOp::And,
        "|" => BinOp::Or,
        "^" => BinOp::Xor,
        "+" => BinOp::Add,
        "-" => BinOp::Sub,
        "*" => BinOp::Mul,
        "%" => BinOp::Mod,
        "==" => BinOp::Eq,
        "!=" => BinOp::Ne,
        "<" => BinOp::Lt,
        "<=" => BinOp::Le,
        ">" => BinOp::Gt,
        ">=" => BinOp::Ge,
        _ => unreachable!("unknown operator {op}"),
    }
}
