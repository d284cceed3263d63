//! Univariate arithmetic expressions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;          (* right associative *)
//! primary = number | variable | func "(" expr ")" | "(" expr ")" ;
//! func    = "exp" | "sin" | "cos" | "sqrt" | "log" | "abs" ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-2^2` is `-4`. There is no
//! implicit multiplication: `2u` is rejected.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Log,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> Result<f64> {
        match self {
            Func::Log if x <= 0.0 => Err(Error::Domain(format!("log({x})"))),
            Func::Sqrt if x < 0.0 => Err(Error::Domain(format!("sqrt({x})"))),
            Func::Exp => Ok(x.exp()),
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Sqrt => Ok(x.sqrt()),
            Func::Log => Ok(x.ln()),
            Func::Abs => Ok(x.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Number(f64),
    Var,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression closed over a single variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    var_name: String,
}

impl Expression {
    pub fn parse(text: &str, var_name: &str) -> Result<Self> {
        parse(text, var_name)
    }

    /// The constant expression `value`, closed over `var_name`.
    pub fn constant(value: f64, var_name: &str) -> Self {
        Self {
            root: Node::Number(value),
            var_name: var_name.to_string(),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn var_name(&self) -> &str {
        &self.var_name
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        eval(self, x)
    }

    /// `true` when the expression does not mention its variable.
    pub fn is_constant(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Number(_) => true,
                Node::Var => false,
                Node::Neg(a) | Node::Call(_, a) => walk(a),
                Node::Binary(_, l, r) => walk(l) && walk(r),
            }
        }
        walk(&self.root)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write(n: &Node, var: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match n {
                // `{:?}` is the shortest representation that round-trips.
                Node::Number(v) => write!(f, "{v:?}"),
                Node::Var => f.write_str(var),
                Node::Neg(a) => {
                    f.write_str("(-")?;
                    write(a, var, f)?;
                    f.write_str(")")
                }
                Node::Binary(op, l, r) => {
                    f.write_str("(")?;
                    write(l, var, f)?;
                    write!(f, " {} ", op.symbol())?;
                    write(r, var, f)?;
                    f.write_str(")")
                }
                Node::Call(func, a) => {
                    write!(f, "{}(", func.name())?;
                    write(a, var, f)?;
                    f.write_str(")")
                }
            }
        }
        write(&self.root, &self.var_name, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent: e, E followed by optional sign and at least one digit
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                position: start,
                message: format!("malformed number `{lit}`"),
            })?;
            out.push((start, Tok::Num(v)));
            if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                return Err(Error::Syntax {
                    position: i,
                    message: "implicit multiplication is not supported; use `*`".into(),
                });
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => {
                return Err(Error::Syntax {
                    position: start,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((start, tok));
        i += c.len_utf8();
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected `)`"),
        }
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Number(v))
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.toks.get(self.pos + 1).map(|(_, t)| t) {
                    let Some(func) = Func::from_name(&name) else {
                        return self.err(format!("unknown function `{name}`"));
                    };
                    self.pos += 2;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Node::Call(func, Box::new(arg)))
                } else if name == self.var {
                    self.pos += 1;
                    Ok(Node::Var)
                } else if Func::from_name(&name).is_some() {
                    self.err(format!("function `{name}` needs an argument in parentheses"))
                } else {
                    self.err(format!(
                        "unknown variable `{name}` (expression is in `{}`)",
                        self.var
                    ))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Tok::RParen) => self.err("unbalanced `)`"),
            Some(Tok::Op(c)) => self.err(format!("unexpected operator `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }
}

pub fn parse(text: &str, var_name: &str) -> Result<Expression> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            position: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
        var: var_name,
    };
    let root = p.expr()?;
    if p.pos < p.toks.len() {
        return match p.peek() {
            Some(Tok::RParen) => p.err("unbalanced `)`"),
            _ => p.err("unexpected trailing token"),
        };
    }
    Ok(Expression {
        root,
        var_name: var_name.to_string(),
    })
}

fn checked(v: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(what()))
    }
}

fn eval_node(n: &Node, x: f64) -> Result<f64> {
    match n {
        Node::Number(v) => Ok(*v),
        Node::Var => Ok(x),
        Node::Neg(a) => Ok(-eval_node(a, x)?),
        Node::Call(func, a) => {
            let arg = eval_node(a, x)?;
            let v = func.apply(arg)?;
            checked(v, || format!("{}({arg}) is not finite", func.name()))
        }
        Node::Binary(op, l, r) => {
            let (l, r) = (eval_node(l, x)?, eval_node(r, x)?);
            let v = match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => {
                    if r == 0.0 {
                        return Err(Error::Domain(format!("division by zero ({l}/0)")));
                    }
                    l / r
                }
                BinOp::Pow => l.powf(r),
            };
            checked(v, || format!("{l} {} {r} is not finite", op.symbol()))
        }
    }
}

pub fn eval(e: &Expression, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {x}")));
    }
    eval_node(&e.root, x)
}
