//! Scenario expressions.
//!
//! Right-hand sides are built from `t`, `y`, `yd`, numbers, `+ - *`, unary
//! minus, parentheses and the bounded functions `sin`, `cos`, `tanh`. There
//! is no division and no `exp`: every expression of this grammar is finite
//! and Lipschitz on bounded sets.
//!
//! Functions of time alone (history and residual weight) additionally accept
//! `/` and `exp`, since they are only ever sampled on the grid.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{msg} at column {col} in `{src}`")]
pub struct ExprError {
    pub msg: String,
    pub col: usize,
    pub src: String,
}

/// Which symbols an expression may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    /// `F(t, y, yd)`
    Rhs,
    /// `g(t)`
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tanh,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression, evaluated against `[t, y, yd]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    src: String,
}

impl Expr {
    pub fn parse(src: &str, dialect: Dialect) -> Result<Self, ExprError> {
        let mut p = Parser {
            src,
            pos: 0,
            dialect,
        };
        let root = p.sum()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected input"));
        }
        Ok(Self {
            root,
            src: src.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn eval(&self, t: f64, y: f64, yd: f64) -> f64 {
        eval(&self.root, &[t, y, yd])
    }

    pub fn eval_t(&self, t: f64) -> f64 {
        eval(&self.root, &[t, 0.0, 0.0])
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

fn eval(node: &Node, vars: &[f64; 3]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(i) => vars[*i],
        Node::Neg(a) => -eval(a, vars),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, vars), eval(b, vars));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                _ => a / b,
            }
        }
        Node::Call(f, a) => {
            let a = eval(a, vars);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tanh => a.tanh(),
                Func::Exp => a.exp(),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    dialect: Dialect,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> ExprError {
        ExprError {
            msg: msg.into(),
            col: self.pos + 1,
            src: self.src.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat(b'+') {
                '+'
            } else if self.eat(b'-') {
                '-'
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                '*'
            } else if self.eat(b'/') {
                if self.dialect == Dialect::Rhs {
                    self.pos -= 1;
                    return Err(self.error("division is not allowed in a right-hand side"));
                }
                '/'
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        if self.eat(b'(') {
            let inner = self.sum()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(inner);
        }
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(start),
            Some(c) if c.is_ascii_alphabetic() => {
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
                {
                    self.pos += 1;
                }
                self.ident(start)
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self, start: usize) -> Result<Node, ExprError> {
        let bytes = self.src.as_bytes();
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map(Node::Num).map_err(|_| {
            self.pos = start;
            self.error(format!("malformed number `{text}`"))
        })
    }

    fn ident(&mut self, start: usize) -> Result<Node, ExprError> {
        let name = &self.src[start..self.pos];
        let var = match name {
            "t" => Some(0),
            "y" => Some(1),
            "yd" => Some(2),
            _ => None,
        };
        if let Some(i) = var {
            if i > 0 && self.dialect == Dialect::Time {
                self.pos = start;
                return Err(self.error(format!("`{name}` is not available in a function of t")));
            }
            return Ok(Node::Var(i));
        }
        let func = match (name, self.dialect) {
            ("sin", _) => Func::Sin,
            ("cos", _) => Func::Cos,
            ("tanh", _) => Func::Tanh,
            ("exp", Dialect::Time) => Func::Exp,
            ("exp", Dialect::Rhs) => {
                self.pos = start;
                return Err(self.error("`exp` is not allowed in a right-hand side"));
            }
            _ => {
                self.pos = start;
                return Err(self.error(format!("unknown symbol `{name}`")));
            }
        };
        if !self.eat(b'(') {
            return Err(self.error(format!("expected `(` after `{name}`")));
        }
        let arg = self.sum()?;
        if !self.eat(b')') {
            return Err(self.error("expected `)`"));
        }
        Ok(Node::Call(func, Box::new(arg)))
    }
}
