//! A small arithmetic expression language for config-defined coefficients.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := ("-" | "+") unary | power
//! power  := atom ("^" unary)?          right associative, -x^2 = -(x^2)
//! atom   := number | name | name "(" expr ")" | "(" expr ")"
//! ```
//!
//! Functions: `sin cos tan exp log sqrt`. The constant `pi` is predefined.
//! Variable names are supplied by the caller (see [`Variables`]).

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at column {column}: `{token}`")]
pub struct ParseError {
    /// 1-based character column in the source text.
    pub column: usize,
    pub token: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn value(self, a: f64) -> f64 {
        match self {
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => a.tan(),
            Func::Exp => a.exp(),
            Func::Log => a.ln(),
            Func::Sqrt => a.sqrt(),
        }
    }

    /// f'(a), given f(a) already computed.
    fn slope(self, a: f64, fa: f64) -> f64 {
        match self {
            Func::Sin => a.cos(),
            Func::Cos => -a.sin(),
            Func::Tan => 1.0 + fa * fa,
            Func::Exp => fa,
            Func::Log => 1.0 / a,
            Func::Sqrt => 0.5 / fa,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Maps identifier names to positions in the evaluation point.
#[derive(Debug, Clone)]
pub struct Variables {
    names: Vec<(String, usize)>,
}

impl Variables {
    /// Chart coordinates `x1..x{dim}` with the aliases `x, y, z` for the first three.
    pub fn chart(dim: usize) -> Self {
        let mut names: Vec<(String, usize)> = (0..dim).map(|i| (format!("x{}", i + 1), i)).collect();
        for (i, alias) in ["x", "y", "z"].iter().enumerate().take(dim) {
            names.push((alias.to_string(), i));
        }
        Variables { names }
    }

    /// Patch parameters `t1..t{n}` (and `t` when n = 1).
    pub fn params(n: usize) -> Self {
        let mut names: Vec<(String, usize)> = (0..n).map(|i| (format!("t{}", i + 1), i)).collect();
        if n == 1 {
            names.push(("t".into(), 0));
        }
        Variables { names }
    }

    pub fn len(&self) -> usize {
        self.names.iter().map(|(_, i)| i + 1).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.names.iter().find(|(n, _)| n == name).map(|(_, i)| *i)
    }
}

/// A parsed expression, cheap to clone and safe to share between threads.
#[derive(Clone)]
pub struct Expr {
    root: Arc<Node>,
    source: Arc<str>,
    arity: usize,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", &*self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str, vars: &Variables) -> Result<Self, ParseError> {
        let tokens = lex(source)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            vars,
            end_column: source.chars().count() + 1,
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(ParseError {
                column: tok.column,
                token: tok.text.clone(),
                message: "unexpected token".into(),
            });
        }
        Ok(Expr {
            root: Arc::new(root),
            source: source.into(),
            arity: vars.len(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Number of variables the expression was compiled against.
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        eval(&self.root, point)
    }

    /// Value and gradient by forward-mode differentiation.
    pub fn eval_grad(&self, point: &[f64]) -> (f64, Vec<f64>) {
        let d = eval_dual(&self.root, point);
        (d.v, d.g)
    }

    /// True if the expression is the literal constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(*self.root, Node::Num(v) if v == 0.0)
    }
}

fn eval(node: &Node, p: &[f64]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(i) => p[*i],
        Node::Neg(a) => -eval(a, p),
        Node::Add(a, b) => eval(a, p) + eval(b, p),
        Node::Sub(a, b) => eval(a, p) - eval(b, p),
        Node::Mul(a, b) => eval(a, p) * eval(b, p),
        Node::Div(a, b) => eval(a, p) / eval(b, p),
        Node::Pow(a, b) => pow(eval(a, p), eval(b, p)),
        Node::Call(f, a) => f.value(eval(a, p)),
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

struct Dual {
    v: f64,
    g: Vec<f64>,
}

impl Dual {
    fn constant(v: f64, n: usize) -> Self {
        Dual { v, g: vec![0.0; n] }
    }

    fn combine(self, other: Dual, v: f64, da: f64, db: f64) -> Dual {
        let g = self.g.iter().zip(&other.g).map(|(x, y)| da * x + db * y).collect();
        Dual { v, g }
    }

    fn scale(mut self, v: f64, k: f64) -> Dual {
        self.g.iter_mut().for_each(|x| *x *= k);
        self.v = v;
        self
    }
}

fn eval_dual(node: &Node, p: &[f64]) -> Dual {
    let n = p.len();
    match node {
        Node::Num(v) => Dual::constant(*v, n),
        Node::Var(i) => {
            let mut d = Dual::constant(p[*i], n);
            d.g[*i] = 1.0;
            d
        }
        Node::Neg(a) => {
            let a = eval_dual(a, p);
            let v = -a.v;
            a.scale(v, -1.0)
        }
        Node::Add(a, b) => {
            let (a, b) = (eval_dual(a, p), eval_dual(b, p));
            let v = a.v + b.v;
            a.combine(b, v, 1.0, 1.0)
        }
        Node::Sub(a, b) => {
            let (a, b) = (eval_dual(a, p), eval_dual(b, p));
            let v = a.v - b.v;
            a.combine(b, v, 1.0, -1.0)
        }
        Node::Mul(a, b) => {
            let (a, b) = (eval_dual(a, p), eval_dual(b, p));
            let (av, bv) = (a.v, b.v);
            a.combine(b, av * bv, bv, av)
        }
        Node::Div(a, b) => {
            let (a, b) = (eval_dual(a, p), eval_dual(b, p));
            let (av, bv) = (a.v, b.v);
            a.combine(b, av / bv, 1.0 / bv, -av / (bv * bv))
        }
        Node::Pow(a, b) => {
            let (a, b) = (eval_dual(a, p), eval_dual(b, p));
            let (av, bv) = (a.v, b.v);
            let v = pow(av, bv);
            let da = if bv == 0.0 { 0.0 } else { bv * pow(av, bv - 1.0) };
            // exponent sensitivity only matters when the exponent varies
            let db = if b.g.iter().all(|x| *x == 0.0) {
                0.0
            } else {
                v * av.ln()
            };
            a.combine(b, v, da, db)
        }
        Node::Call(f, a) => {
            let a = eval_dual(a, p);
            let v = f.value(a.v);
            let k = f.slope(a.v, v);
            a.scale(v, k)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    text: String,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part: 1e-5, 2.5E+3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| ParseError {
                column,
                token: text.clone(),
                message: "malformed number".into(),
            })?;
            out.push(Token {
                kind: TokKind::Num(v),
                text,
                column,
            });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token {
                kind: TokKind::Ident(text.clone()),
                text,
                column,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Token {
                kind: TokKind::Op(c),
                text: c.to_string(),
                column,
            });
            i += 1;
        } else {
            return Err(ParseError {
                column,
                token: c.to_string(),
                message: "unexpected character".into(),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vars: &'a Variables,
    end_column: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokKind::Op(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn eof_error(&self) -> ParseError {
        ParseError {
            column: self.end_column,
            token: "<end of input>".into(),
            message: "unexpected end of expression".into(),
        }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(tok) if tok.kind == TokKind::Op(op) => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(ParseError {
                column: tok.column,
                token: tok.text.clone(),
                message: format!("expected `{op}`"),
            }),
            None => Err(self.eof_error()),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let tok = self.peek().cloned().ok_or_else(|| self.eof_error())?;
        self.pos += 1;
        match tok.kind {
            TokKind::Num(v) => Ok(Node::Num(v)),
            TokKind::Op('(') => {
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.expect_op('(')?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                if let Some(i) = self.vars.lookup(&name) {
                    return Ok(Node::Var(i));
                }
                if name == "pi" {
                    return Ok(Node::Num(std::f64::consts::PI));
                }
                Err(ParseError {
                    column: tok.column,
                    token: name,
                    message: "unknown identifier".into(),
                })
            }
            TokKind::Op(_) => Err(ParseError {
                column: tok.column,
                token: tok.text,
                message: "expected a number, variable or `(`".into(),
            }),
        }
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart2(src: &str) -> Expr {
        Expr::parse(src, &Variables::chart(2)).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(chart2("1 + 2 * 3").eval(&[0.0, 0.0]), 7.0);
        assert_eq!(chart2("2^3^2").eval(&[0.0, 0.0]), 512.0);
        assert_eq!(chart2("-x^2").eval(&[3.0, 0.0]), -9.0);
        assert_eq!(chart2("(1 + 2) * 3").eval(&[0.0, 0.0]), 9.0);
        assert_eq!(chart2("8 / 4 / 2").eval(&[0.0, 0.0]), 1.0);
        assert_eq!(chart2("x1 - y").eval(&[5.0, 2.0]), 3.0);
        assert!((chart2("2.5e-1 * 4").eval(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn functions() {
        let e = chart2("exp(log(2)) + sqrt(16) + sin(0) + cos(0) + tan(0)");
        assert!((e.eval(&[0.0, 0.0]) - 7.0).abs() < 1e-14);
        assert!((chart2("pi").eval(&[0.0, 0.0]) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn forward_mode_gradient_matches_hand_derivative() {
        let e = chart2("x^2 * sin(y) + exp(-y) / x");
        let (x, y) = (1.3, 0.4);
        let (v, g) = e.eval_grad(&[x, y]);
        assert!((v - e.eval(&[x, y])).abs() < 1e-15);
        let gx = 2.0 * x * y.sin() - (-y).exp() / (x * x);
        let gy = x * x * y.cos() - (-y).exp() / x;
        assert!((g[0] - gx).abs() < 1e-13);
        assert!((g[1] - gy).abs() < 1e-13);
    }

    #[test]
    fn variable_exponent_gradient() {
        let e = chart2("x^y");
        let (_, g) = e.eval_grad(&[2.0, 3.0]);
        assert!((g[0] - 12.0).abs() < 1e-12);
        assert!((g[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_name_the_token() {
        let err = Expr::parse("x + * y", &Variables::chart(2)).unwrap_err();
        assert_eq!(err.token, "*");
        assert_eq!(err.column, 5);

        let err = Expr::parse("sin(x) + w", &Variables::chart(2)).unwrap_err();
        assert_eq!(err.token, "w");
        assert!(err.message.contains("unknown"));

        let err = Expr::parse("(x + 1", &Variables::chart(2)).unwrap_err();
        assert_eq!(err.token, "<end of input>");

        let err = Expr::parse("x $ 2", &Variables::chart(2)).unwrap_err();
        assert_eq!(err.token, "$");

        // z is not a coordinate of a 2-dimensional chart
        assert!(Expr::parse("z", &Variables::chart(2)).is_err());
        assert!(Expr::parse("z", &Variables::chart(3)).is_ok());
    }

    #[test]
    fn parameter_names() {
        let e = Expr::parse("t1 * t2", &Variables::params(2)).unwrap();
        assert_eq!(e.eval(&[2.0, 3.0]), 6.0);
        let e = Expr::parse("cos(t)", &Variables::params(1)).unwrap();
        assert_eq!(e.eval(&[0.0]), 1.0);
    }
}
