//! Saturation certificates: expression trees `φ = φ₀ − Σ φᵢ²` whose leaves
//! lie in the span of the control potentials `{1, sin x_j, cos x_j}`.
//!
//! Every trigonometric polynomial has one. A term `c·cos(n·x)` or
//! `c·sin(n·x)` with `n = k + e_j` is rewritten as `|c|` minus two squares of
//! degree `|n|₁ − 1`, using
//!
//! ```text
//! ±cos(n·x) = 1 − ½(cos k·x ∓ cos x_j)² − ½(sin k·x ± sin x_j)²
//! ±sin(n·x) = 1 − ½(sin k·x ∓ cos x_j)² − ½(cos k·x ∓ sin x_j)²
//! ```
//!
//! and the squares are decomposed recursively.

use std::fmt;

use crate::error::{KgError, Result};
use crate::trigpoly::{unit_frequency, Frequency, TrigPoly};

/// A node of a saturation certificate.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// `α₀ + Σ_j (α_{2j−1} sin x_j + α_{2j} cos x_j)`.
    Leaf(Vec<f64>),
    /// `base − Σ squares[i]²`.
    Combine {
        /// The part realized directly.
        base: Box<Certificate>,
        /// Factors whose squares are subtracted.
        squares: Vec<Certificate>,
    },
}

/// Relative tolerance under which two squares count as proportional.
const PROPORTIONAL_TOL: f64 = 1e-13;

impl Certificate {
    /// Spatial dimension.
    pub fn dim(&self) -> usize {
        match self {
            Certificate::Leaf(alpha) => (alpha.len() - 1) / 2,
            Certificate::Combine { base, .. } => base.dim(),
        }
    }

    /// Hierarchy level: 0 for leaves, otherwise one more than the deepest child.
    pub fn level(&self) -> usize {
        match self {
            Certificate::Leaf(_) => 0,
            Certificate::Combine { base, squares } => {
                1 + squares.iter().map(Certificate::level).chain([base.level()]).max().unwrap_or(0)
            }
        }
    }

    /// Total number of nodes.
    pub fn node_count(&self) -> usize {
        match self {
            Certificate::Leaf(_) => 1,
            Certificate::Combine { base, squares } => {
                1 + base.node_count() + squares.iter().map(Certificate::node_count).sum::<usize>()
            }
        }
    }

    /// All leaves, depth first.
    pub fn leaves(&self) -> Vec<&[f64]> {
        match self {
            Certificate::Leaf(alpha) => vec![alpha.as_slice()],
            Certificate::Combine { base, squares } => {
                let mut out = base.leaves();
                for s in squares {
                    out.extend(s.leaves());
                }
                out
            }
        }
    }

    /// Symbolic expansion back to a trigonometric polynomial.
    pub fn expand(&self) -> TrigPoly {
        match self {
            Certificate::Leaf(alpha) => {
                TrigPoly::from_control_span((alpha.len() - 1) / 2, alpha).expect("leaf length is 2d+1")
            }
            Certificate::Combine { base, squares } => squares
                .iter()
                .fold(base.expand(), |acc, s| acc.sub(&s.expand().square())),
        }
    }

    /// Certificate of `factor · self`. Positive factors rescale in place
    /// (leaves by `factor`, square factors by `√factor`); negative factors
    /// of composite nodes are re-decomposed from the expansion.
    pub fn scaled(&self, factor: f64) -> Certificate {
        match self {
            Certificate::Leaf(alpha) => Certificate::Leaf(alpha.iter().map(|a| a * factor).collect()),
            _ if factor == 0.0 => Certificate::Leaf(vec![0.0; 2 * self.dim() + 1]),
            Certificate::Combine { base, squares } if factor > 0.0 => {
                let root = factor.sqrt();
                Certificate::Combine {
                    base: Box::new(base.scaled(factor)),
                    squares: squares.iter().map(|s| s.scaled(root)).collect(),
                }
            }
            Certificate::Combine { .. } => {
                // Cancelling squares leave roundoff at frequencies the
                // certificate does not use; decomposing it would raise the level.
                let p = self.expand().scale(factor);
                decompose(&p.pruned(1e-13 * p.coefficient_l1()))
            }
        }
    }

    /// Whether every leaf coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.leaves().iter().all(|a| a.iter().all(|&v| v == 0.0))
    }

    /// Parses the s-expression written by `Display`.
    pub fn parse(src: &str) -> Result<Certificate> {
        let tokens = tokenize(src);
        let mut pos = 0;
        let cert = parse_node(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(parse_error(&tokens, pos, "trailing input after certificate"));
        }
        Ok(cert)
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Leaf(alpha) => {
                write!(f, "(leaf")?;
                for a in alpha {
                    write!(f, " {a:?}")?;
                }
                write!(f, ")")
            }
            Certificate::Combine { base, squares } => {
                write!(f, "(combine {base} (squares")?;
                for s in squares {
                    write!(f, " {s}")?;
                }
                write!(f, "))")
            }
        }
    }
}

fn tokenize(src: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut current: Option<(usize, String)> = None;
    for (i, ch) in src.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(tok) = current.take() {
                out.push(tok);
            }
            if !ch.is_whitespace() {
                out.push((i, ch.to_string()));
            }
        } else {
            current.get_or_insert_with(|| (i, String::new())).1.push(ch);
        }
    }
    out.extend(current);
    out
}

fn parse_error(tokens: &[(usize, String)], pos: usize, message: &str) -> KgError {
    let column = tokens.get(pos).map_or_else(|| tokens.last().map_or(0, |t| t.0 + 1), |t| t.0) + 1;
    KgError::Expression { column, message: message.to_string() }
}

fn expect(tokens: &[(usize, String)], pos: &mut usize, what: &str) -> Result<()> {
    match tokens.get(*pos) {
        Some((_, t)) if t == what => {
            *pos += 1;
            Ok(())
        }
        _ => Err(parse_error(tokens, *pos, &format!("expected '{what}'"))),
    }
}

fn parse_node(tokens: &[(usize, String)], pos: &mut usize) -> Result<Certificate> {
    expect(tokens, pos, "(")?;
    let head = tokens.get(*pos).map(|t| t.1.as_str());
    *pos += 1;
    match head {
        Some("leaf") => {
            let mut alpha = Vec::new();
            while let Some((_, t)) = tokens.get(*pos) {
                if t == ")" {
                    break;
                }
                alpha.push(t.parse::<f64>().map_err(|_| parse_error(tokens, *pos, "expected a number"))?);
                *pos += 1;
            }
            expect(tokens, pos, ")")?;
            if alpha.len() % 2 == 0 || !(3..=7).contains(&alpha.len()) {
                return Err(parse_error(tokens, *pos - 1, "a leaf needs 3, 5 or 7 coefficients"));
            }
            Ok(Certificate::Leaf(alpha))
        }
        Some("combine") => {
            let base = parse_node(tokens, pos)?;
            expect(tokens, pos, "(")?;
            expect(tokens, pos, "squares")?;
            let mut squares = Vec::new();
            while tokens.get(*pos).is_some_and(|t| t.1 == "(") {
                squares.push(parse_node(tokens, pos)?);
            }
            expect(tokens, pos, ")")?;
            expect(tokens, pos, ")")?;
            if squares.iter().any(|s| s.dim() != base.dim()) {
                return Err(parse_error(tokens, *pos - 1, "mixed dimensions in one certificate"));
            }
            Ok(Certificate::Combine { base: Box::new(base), squares })
        }
        _ => Err(parse_error(tokens, *pos - 1, "expected 'leaf' or 'combine'")),
    }
}

/// Builds a certificate for any trigonometric polynomial. Frequencies are
/// split as `n = k + e_j` with `j` the first nonzero axis of the canonical
/// `n`; proportional squares are merged and vanishing ones dropped.
pub fn decompose(target: &TrigPoly) -> Certificate {
    let dim = target.dim();
    if let Some(alpha) = target.control_span_coefficients() {
        return Certificate::Leaf(alpha);
    }
    let mut base = TrigPoly::constant(dim, target.constant_term());
    let mut squares: Vec<TrigPoly> = Vec::new();
    for (n, h) in target.terms() {
        let j = (0..dim).find(|&i| n[i] != 0).expect("nonzero frequency");
        if *n == unit_frequency(j) {
            base = base.add(&TrigPoly::harmonic(dim, *n, h.cos, h.sin));
            continue;
        }
        let k: Frequency = std::array::from_fn(|i| n[i] - if i == j { 1 } else { 0 });
        let (cos_k, sin_k) = (TrigPoly::cos(dim, k), TrigPoly::sin(dim, k));
        let (cos_j, sin_j) = (TrigPoly::cos(dim, unit_frequency(j)), TrigPoly::sin(dim, unit_frequency(j)));
        for (coef, is_cos) in [(h.cos, true), (h.sin, false)] {
            if coef == 0.0 {
                continue;
            }
            let sign = coef.signum();
            let amp = (coef.abs() / 2.0).sqrt();
            base = base.add(&TrigPoly::constant(dim, coef.abs()));
            let pair = if is_cos {
                [cos_k.sub(&cos_j.scale(sign)), sin_k.add(&sin_j.scale(sign))]
            } else {
                [sin_k.sub(&cos_j.scale(sign)), cos_k.sub(&sin_j.scale(sign))]
            };
            for p in pair {
                push_square(&mut squares, p.scale(amp));
            }
        }
    }
    Certificate::Combine {
        base: Box::new(decompose(&base)),
        squares: squares.iter().map(decompose).collect(),
    }
}

/// Adds `p` to the list of squares, merging it into a proportional entry
/// (`q² + (μq)² = ((1+μ²)^{1/2} q)²`) and skipping zero factors.
fn push_square(squares: &mut Vec<TrigPoly>, p: TrigPoly) {
    let p = p.pruned(1e-15 * p.coefficient_l1());
    if p.is_zero() {
        return;
    }
    for q in squares.iter_mut() {
        if let Some(mu) = proportionality(q, &p) {
            *q = q.scale((1.0 + mu * mu).sqrt());
            return;
        }
    }
    squares.push(p);
}

/// `μ` with `p = μ q`, if it exists.
fn proportionality(q: &TrigPoly, p: &TrigPoly) -> Option<f64> {
    let pairs = |t: &TrigPoly| {
        let mut v = vec![t.constant_term()];
        v.extend(t.terms().values().flat_map(|h| [h.cos, h.sin]));
        v
    };
    if q.terms().keys().ne(p.terms().keys()) {
        return None;
    }
    let (a, b) = (pairs(q), pairs(p));
    let (i, &pivot) = a.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))?;
    if pivot == 0.0 {
        return None;
    }
    let mu = b[i] / pivot;
    let scale = a.iter().chain(&b).fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(&b)
        .all(|(x, y)| (y - mu * x).abs() <= PROPORTIONAL_TOL * scale)
        .then_some(mu)
}
