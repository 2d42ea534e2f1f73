//! A small expression language for periodic fields.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'pi' | variable | call | '(' expr ')'
//! call   := name '(' expr (',' expr)* ')'
//! ```
//!
//! Variables are `x`, `y`, `z` or `x1`, `x2`, `x3` (axis 1, 2, 3). A bare
//! coordinate is not periodic, so variables may only appear inside the
//! argument of `sin`/`cos`, which must be an integer combination of the
//! coordinates plus a constant phase.
//!
//! Functions:
//!
//! | call | meaning |
//! |------|---------|
//! | `sin(a)`, `cos(a)` | trigonometric mode, `a = n·x + phase` with integer `n` |
//! | `mode(n1,…,nd, a, b)` | `a cos(n·x) + b sin(n·x)`; sums of modes give Fourier lists |
//! | `exp`, `abs`, `sqrt`, `max(a,b)`, `min(a,b)`, `pos(a) = max(a,0)` | pointwise maps |
//! | `ball(c1,…,cd, r)` | indicator of the closed periodic ball `|x−c| ≤ r` |
//! | `arc(a, b)` | (d = 1) indicator of the arc from `a` to `b` counterclockwise |
//! | `sball(c1,…,cd, r, w)` | mollified ball: 1 on `|x−c| ≤ r`, a C^∞ ramp to 0 at `r+w` |

use std::fmt;

use crate::error::{KgError, Result};
use crate::field::TorusField;
use crate::grid::{periodic_distance, TorusGrid, MAX_DIM};

/// C^∞ ramp `S(s)` built from `e^{−1/s}`: 0 for `s ≤ 0`, 1 for `s ≥ 1`.
pub fn smooth_ramp(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let rise = (-1.0 / s).exp();
        rise / (rise + (-1.0 / (1.0 - s)).exp())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
    Max,
    Min,
    Pos,
    Mode,
    Ball,
    Arc,
    SmoothBall,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "max" => Func::Max,
            "min" => Func::Min,
            "pos" => Func::Pos,
            "mode" => Func::Mode,
            "ball" => Func::Ball,
            "arc" => Func::Arc,
            "sball" => Func::SmoothBall,
            _ => return None,
        })
    }
}

/// Parsed syntax tree.
#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    /// Trigonometric mode with validated integer frequency and phase.
    Trig { cosine: bool, frequency: [i64; MAX_DIM], phase: f64 },
    Call(Func, Vec<Node>, usize),
}

/// A validated periodic field expression in a fixed dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldExpr {
    source: String,
    dim: usize,
    root: Node,
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FieldExpr {
    /// Parses and validates `source` as a field on `T^dim`.
    pub fn parse(source: &str, dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(KgError::InvalidArgument(format!("dimension {dim} not in 1..=3")));
        }
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0, dim, end: source.len() + 1 };
        let raw = parser.expr()?;
        if let Some(tok) = parser.tokens.get(parser.pos) {
            return Err(expr_err(tok.column, format!("unexpected token '{}'", tok.kind)));
        }
        let root = validate(raw, dim)?;
        Ok(FieldExpr { source: source.to_string(), dim, root })
    }

    /// The source text.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Spatial dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates at a point of `T^d` (only the first `d` coordinates are read).
    pub fn eval(&self, x: &[f64]) -> f64 {
        eval(&self.root, x, self.dim)
    }

    /// Every trigonometric frequency appearing explicitly in the expression.
    pub fn frequencies(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        collect_frequencies(&self.root, self.dim, &mut out);
        out
    }

    /// Samples the expression on `grid`, rejecting unrepresentable frequencies.
    pub fn to_field(&self, grid: &TorusGrid) -> Result<TorusField> {
        if grid.dim() != self.dim {
            return Err(KgError::GridMismatch(format!(
                "expression is {}-dimensional but the grid is {}-dimensional",
                self.dim,
                grid.dim()
            )));
        }
        for n in self.frequencies() {
            grid.frequency_index(&n)?;
        }
        Ok(TorusField::from_fn(grid, |x| self.eval(x)))
    }
}

/// Parses `source` and samples it on `grid`.
pub fn make_field(grid: &TorusGrid, source: &str) -> Result<TorusField> {
    FieldExpr::parse(source, grid.dim())?.to_field(grid)
}

fn expr_err(column: usize, message: impl Into<String>) -> KgError {
    KgError::Expression { column, message: message.into() }
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Sym(char),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(v) => write!(f, "{v}"),
            TokenKind::Ident(s) => f.write_str(s),
            TokenKind::Sym(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
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
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| expr_err(column, format!("malformed number '{text}'")))?;
            out.push(Token { kind: TokenKind::Num(value), column });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { kind: TokenKind::Ident(chars[start..i].iter().collect()), column });
        } else if "+-*/^(),".contains(c) {
            out.push(Token { kind: TokenKind::Sym(c), column });
            i += 1;
        } else {
            return Err(expr_err(column, format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
    end: usize,
}

impl Parser {
    fn peek_sym(&self, c: char) -> bool {
        matches!(self.tokens.get(self.pos), Some(Token { kind: TokenKind::Sym(s), .. }) if *s == c)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.column)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.peek_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(expr_err(self.column(), format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.peek_sym('+') {
                self.pos += 1;
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.peek_sym('-') {
                self.pos += 1;
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.peek_sym('*') {
                self.pos += 1;
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.peek_sym('/') {
                self.pos += 1;
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_sym('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.peek_sym('+') {
            self.pos += 1;
            return self.unary();
        }
        let base = self.atom()?;
        if self.peek_sym('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let column = self.column();
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| expr_err(column, "unexpected end of expression"))?;
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(v) => Ok(Node::Num(v)),
            TokenKind::Sym('(') => {
                let inner = self.expr()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            TokenKind::Sym(c) => Err(expr_err(column, format!("unexpected '{c}'"))),
            TokenKind::Ident(name) => {
                if name == "pi" {
                    return Ok(Node::Num(std::f64::consts::PI));
                }
                if let Some(axis) = variable_axis(&name) {
                    if axis >= self.dim {
                        return Err(expr_err(
                            column,
                            format!("variable '{name}' does not exist in dimension {}", self.dim),
                        ));
                    }
                    return Ok(Node::Var(axis));
                }
                let func = Func::lookup(&name)
                    .ok_or_else(|| expr_err(column, format!("unknown function '{name}'")))?;
                self.expect_sym('(')?;
                let mut args = vec![self.expr()?];
                while self.peek_sym(',') {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                self.expect_sym(')')?;
                Ok(Node::Call(func, args, column))
            }
        }
    }
}

fn variable_axis(name: &str) -> Option<usize> {
    match name {
        "x" | "x1" => Some(0),
        "y" | "x2" => Some(1),
        "z" | "x3" => Some(2),
        _ => None,
    }
}

/// Affine form `Σ a_i x_i + b` if the node is affine in the coordinates.
fn affine(node: &Node) -> Option<([f64; MAX_DIM], f64)> {
    match node {
        Node::Num(v) => Some(([0.0; MAX_DIM], *v)),
        Node::Var(a) => {
            let mut c = [0.0; MAX_DIM];
            c[*a] = 1.0;
            Some((c, 0.0))
        }
        Node::Neg(x) => {
            let (c, b) = affine(x)?;
            Some((c.map(|v| -v), -b))
        }
        Node::Add(x, y) | Node::Sub(x, y) => {
            let (c1, b1) = affine(x)?;
            let (c2, b2) = affine(y)?;
            let sign = if matches!(node, Node::Add(..)) { 1.0 } else { -1.0 };
            Some((std::array::from_fn(|i| c1[i] + sign * c2[i]), b1 + sign * b2))
        }
        Node::Mul(x, y) => {
            let (c1, b1) = affine(x)?;
            let (c2, b2) = affine(y)?;
            if c1.iter().all(|&v| v == 0.0) {
                Some((c2.map(|v| v * b1), b1 * b2))
            } else if c2.iter().all(|&v| v == 0.0) {
                Some((c1.map(|v| v * b2), b1 * b2))
            } else {
                None
            }
        }
        Node::Div(x, y) => {
            let (c1, b1) = affine(x)?;
            let (c2, b2) = affine(y)?;
            if c2.iter().all(|&v| v == 0.0) && b2 != 0.0 {
                Some((c1.map(|v| v / b2), b1 / b2))
            } else {
                None
            }
        }
        _ => constant_value(node).map(|v| ([0.0; MAX_DIM], v)),
    }
}

fn constant_value(node: &Node) -> Option<f64> {
    if contains_variable(node) {
        None
    } else {
        Some(eval(node, &[0.0; MAX_DIM], MAX_DIM))
    }
}

fn contains_variable(node: &Node) -> bool {
    match node {
        Node::Num(_) | Node::Trig { .. } => false,
        Node::Var(_) => true,
        Node::Neg(x) => contains_variable(x),
        Node::Add(x, y) | Node::Sub(x, y) | Node::Mul(x, y) | Node::Div(x, y) | Node::Pow(x, y) => {
            contains_variable(x) || contains_variable(y)
        }
        Node::Call(_, args, _) => args.iter().any(contains_variable),
    }
}

fn integer_frequency(coeffs: &[f64; MAX_DIM], column: usize) -> Result<[i64; MAX_DIM]> {
    let mut out = [0i64; MAX_DIM];
    for (o, &c) in out.iter_mut().zip(coeffs) {
        if (c - c.round()).abs() > 1e-12 {
            return Err(expr_err(column, format!("non-integer frequency {c} breaks periodicity")));
        }
        *o = c.round() as i64;
    }
    Ok(out)
}

/// Checks periodicity and arities, and replaces `sin`/`cos` by validated modes.
fn validate(node: Node, dim: usize) -> Result<Node> {
    Ok(match node {
        Node::Num(_) | Node::Trig { .. } => node,
        Node::Var(_) => {
            return Err(expr_err(
                0,
                "a bare coordinate is not periodic; use it inside sin/cos",
            ))
        }
        Node::Neg(x) => Node::Neg(Box::new(validate(*x, dim)?)),
        Node::Add(x, y) => Node::Add(Box::new(validate(*x, dim)?), Box::new(validate(*y, dim)?)),
        Node::Sub(x, y) => Node::Sub(Box::new(validate(*x, dim)?), Box::new(validate(*y, dim)?)),
        Node::Mul(x, y) => Node::Mul(Box::new(validate(*x, dim)?), Box::new(validate(*y, dim)?)),
        Node::Div(x, y) => Node::Div(Box::new(validate(*x, dim)?), Box::new(validate(*y, dim)?)),
        Node::Pow(x, y) => Node::Pow(Box::new(validate(*x, dim)?), Box::new(validate(*y, dim)?)),
        Node::Call(func, args, column) => {
            let arity_ok = match func {
                Func::Sin | Func::Cos | Func::Exp | Func::Abs | Func::Sqrt | Func::Pos => args.len() == 1,
                Func::Max | Func::Min | Func::Arc => args.len() == 2,
                Func::Mode => args.len() == dim + 2,
                Func::Ball => args.len() == dim + 1,
                Func::SmoothBall => args.len() == dim + 2,
            };
            if !arity_ok {
                return Err(expr_err(column, format!("wrong number of arguments to {func:?}")));
            }
            if func == Func::Arc && dim != 1 {
                return Err(expr_err(column, "arc(...) is only defined for d = 1"));
            }
            match func {
                Func::Sin | Func::Cos => {
                    let (coeffs, phase) = affine(&args[0]).ok_or_else(|| {
                        expr_err(column, "sin/cos argument must be an integer combination of coordinates")
                    })?;
                    let frequency = integer_frequency(&coeffs, column)?;
                    Node::Trig { cosine: func == Func::Cos, frequency, phase }
                }
                Func::Mode | Func::Ball | Func::SmoothBall | Func::Arc => {
                    if args.iter().any(contains_variable) {
                        return Err(expr_err(column, "geometric and mode arguments must be constants"));
                    }
                    if func == Func::Mode {
                        let mut coeffs = [0.0; MAX_DIM];
                        for (c, a) in coeffs.iter_mut().zip(&args[..dim]) {
                            *c = constant_value(a).unwrap_or(0.0);
                        }
                        integer_frequency(&coeffs, column)?;
                    }
                    Node::Call(func, args, column)
                }
                _ => Node::Call(
                    func,
                    args.into_iter().map(|a| validate(a, dim)).collect::<Result<_>>()?,
                    column,
                ),
            }
        }
    })
}

fn collect_frequencies(node: &Node, dim: usize, out: &mut Vec<Vec<i64>>) {
    match node {
        Node::Num(_) | Node::Var(_) => {}
        Node::Trig { frequency, .. } => out.push(frequency[..dim].to_vec()),
        Node::Neg(x) => collect_frequencies(x, dim, out),
        Node::Add(x, y) | Node::Sub(x, y) | Node::Mul(x, y) | Node::Div(x, y) | Node::Pow(x, y) => {
            collect_frequencies(x, dim, out);
            collect_frequencies(y, dim, out);
        }
        Node::Call(Func::Mode, args, _) => {
            out.push(args[..dim].iter().map(|a| constant_value(a).unwrap_or(0.0).round() as i64).collect())
        }
        Node::Call(_, args, _) => args.iter().for_each(|a| collect_frequencies(a, dim, out)),
    }
}

fn eval(node: &Node, x: &[f64], dim: usize) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(a) => x[*a],
        Node::Neg(a) => -eval(a, x, dim),
        Node::Add(a, b) => eval(a, x, dim) + eval(b, x, dim),
        Node::Sub(a, b) => eval(a, x, dim) - eval(b, x, dim),
        Node::Mul(a, b) => eval(a, x, dim) * eval(b, x, dim),
        Node::Div(a, b) => eval(a, x, dim) / eval(b, x, dim),
        Node::Pow(a, b) => eval(a, x, dim).powf(eval(b, x, dim)),
        Node::Trig { cosine, frequency, phase } => {
            let arg: f64 = frequency.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>() + phase;
            if *cosine {
                arg.cos()
            } else {
                arg.sin()
            }
        }
        Node::Call(func, args, _) => {
            let v = |i: usize| eval(&args[i], x, dim);
            match func {
                Func::Sin => v(0).sin(),
                Func::Cos => v(0).cos(),
                Func::Exp => v(0).exp(),
                Func::Abs => v(0).abs(),
                Func::Sqrt => v(0).max(0.0).sqrt(),
                Func::Max => v(0).max(v(1)),
                Func::Min => v(0).min(v(1)),
                Func::Pos => v(0).max(0.0),
                Func::Mode => {
                    let arg: f64 = (0..dim).map(|a| v(a) * x[a]).sum();
                    v(dim) * arg.cos() + v(dim + 1) * arg.sin()
                }
                Func::Ball => {
                    let centre: Vec<f64> = (0..dim).map(v).collect();
                    let r = v(dim);
                    f64::from(periodic_distance(&x[..dim], &centre) <= r)
                }
                Func::SmoothBall => {
                    let centre: Vec<f64> = (0..dim).map(v).collect();
                    let (r, w) = (v(dim), v(dim + 1));
                    let dist = periodic_distance(&x[..dim], &centre);
                    1.0 - smooth_ramp((dist - r) / w)
                }
                Func::Arc => {
                    let two_pi = 2.0 * std::f64::consts::PI;
                    let (a, b) = (v(0), v(1));
                    let length = (b - a).rem_euclid(two_pi);
                    let offset = (x[0] - a).rem_euclid(two_pi);
                    f64::from(offset <= length + 1e-12 || two_pi - offset < 1e-12)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_modes() {
        let e = FieldExpr::parse("1 + 2*cos(x) - sin(2*x + 0.5)/2", 1).unwrap();
        let x: f64 = 0.3;
        let expect = 1.0 + 2.0 * x.cos() - (2.0 * x + 0.5).sin() / 2.0;
        assert!((e.eval(&[x]) - expect).abs() < 1e-15);
        assert_eq!(e.frequencies(), vec![vec![1], vec![2]]);
    }

    #[test]
    fn rejects_non_periodic_inputs() {
        assert!(FieldExpr::parse("x", 1).is_err());
        assert!(FieldExpr::parse("sin(0.5*x)", 1).is_err());
        assert!(FieldExpr::parse("sin(x*x)", 1).is_err());
        assert!(FieldExpr::parse("sin(y)", 1).is_err());
        assert!(FieldExpr::parse("foo(x)", 1).is_err());
    }

    #[test]
    fn error_reports_column() {
        match FieldExpr::parse("1 + $", 1) {
            Err(KgError::Expression { column, .. }) => assert_eq!(column, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mode_list_and_geometry() {
        let e = FieldExpr::parse("mode(1, 2, 0.5, 0.25)", 2).unwrap();
        let p = [0.2, 0.7];
        let arg: f64 = 0.2 + 1.4;
        assert!((e.eval(&p) - (0.5 * arg.cos() + 0.25 * arg.sin())).abs() < 1e-15);
        let b = FieldExpr::parse("sball(pi, 0.5, 0.3)", 1).unwrap();
        assert_eq!(b.eval(&[std::f64::consts::PI + 0.4]), 1.0);
        assert_eq!(b.eval(&[std::f64::consts::PI + 0.9]), 0.0);
        let a = FieldExpr::parse("arc(6, 1)", 1).unwrap();
        assert_eq!(a.eval(&[0.5]), 1.0);
        assert_eq!(a.eval(&[3.0]), 0.0);
    }

    #[test]
    fn ramp_is_smooth_step() {
        assert_eq!(smooth_ramp(-1.0), 0.0);
        assert_eq!(smooth_ramp(2.0), 1.0);
        assert!((smooth_ramp(0.5) - 0.5).abs() < 1e-15);
    }
}
