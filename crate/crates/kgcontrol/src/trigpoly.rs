//! Real trigonometric polynomials on `T^d` in cosine/sine form.
//!
//! A polynomial is `c + Σ_n (a_n cos(n·x) + b_n sin(n·x))` where every `n`
//! is stored in canonical form: nonzero, with its first nonzero entry
//! positive. This is the algebra the saturation engine works in.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{KgError, Result};
use crate::field::TorusField;
use crate::grid::{TorusGrid, MAX_DIM};

/// A frequency vector; entries beyond the dimension are zero.
pub type Frequency = [i64; MAX_DIM];

/// Cosine and sine coefficients of one canonical frequency.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Harmonic {
    /// Coefficient of `cos(n·x)`.
    pub cos: f64,
    /// Coefficient of `sin(n·x)`.
    pub sin: f64,
}

/// Real trigonometric polynomial with sparse canonical frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    dim: usize,
    constant: f64,
    terms: BTreeMap<Frequency, Harmonic>,
}

/// Maps `n` to its canonical representative; returns the representative and
/// the sign picked up by the sine (cosine is even).
pub fn canonical(n: Frequency) -> (Frequency, f64) {
    match n.iter().find(|&&k| k != 0) {
        Some(&k) if k < 0 => (n.map(|k| -k), -1.0),
        _ => (n, 1.0),
    }
}

fn add_freq(a: Frequency, b: Frequency) -> Frequency {
    std::array::from_fn(|i| a[i] + b[i])
}

fn sub_freq(a: Frequency, b: Frequency) -> Frequency {
    std::array::from_fn(|i| a[i] - b[i])
}

/// The frequency `e_axis`.
pub fn unit_frequency(axis: usize) -> Frequency {
    let mut n = [0; MAX_DIM];
    n[axis] = 1;
    n
}

/// `|n|₁`.
pub fn l1(n: &Frequency) -> i64 {
    n.iter().map(|k| k.abs()).sum()
}

impl TrigPoly {
    /// The zero polynomial on `T^dim`.
    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1, 2 or 3");
        TrigPoly { dim, constant: 0.0, terms: BTreeMap::new() }
    }

    /// The constant `value`.
    pub fn constant(dim: usize, value: f64) -> Self {
        let mut p = Self::zero(dim);
        p.constant = value;
        p
    }

    /// `c·cos(n·x) + s·sin(n·x)` for any `n` (canonicalized here).
    pub fn harmonic(dim: usize, n: Frequency, cos: f64, sin: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_harmonic(n, cos, sin);
        p
    }

    /// `cos(n·x)`.
    pub fn cos(dim: usize, n: Frequency) -> Self {
        Self::harmonic(dim, n, 1.0, 0.0)
    }

    /// `sin(n·x)`.
    pub fn sin(dim: usize, n: Frequency) -> Self {
        Self::harmonic(dim, n, 0.0, 1.0)
    }

    /// Element of the control span: `α₀ + Σ_j (α_{2j−1} sin x_j + α_{2j} cos x_j)`.
    pub fn from_control_span(dim: usize, alpha: &[f64]) -> Result<Self> {
        if alpha.len() != 2 * dim + 1 {
            return Err(KgError::InvalidArgument(format!(
                "span element needs {} coefficients, got {}",
                2 * dim + 1,
                alpha.len()
            )));
        }
        let mut p = Self::constant(dim, alpha[0]);
        for j in 0..dim {
            p.add_harmonic(unit_frequency(j), alpha[2 * j + 2], alpha[2 * j + 1]);
        }
        Ok(p)
    }

    /// Coefficients in the control span, if the polynomial lies in it.
    pub fn control_span_coefficients(&self) -> Option<Vec<f64>> {
        let mut alpha = vec![0.0; 2 * self.dim + 1];
        alpha[0] = self.constant;
        for (n, h) in &self.terms {
            let axis = (0..self.dim).find(|&j| *n == unit_frequency(j))?;
            alpha[2 * axis + 1] = h.sin;
            alpha[2 * axis + 2] = h.cos;
        }
        Some(alpha)
    }

    /// Whether the polynomial lies in `Span{1, sin x_j, cos x_j}`.
    pub fn is_in_control_span(&self) -> bool {
        self.control_span_coefficients().is_some()
    }

    fn add_harmonic(&mut self, n: Frequency, cos: f64, sin: f64) {
        if n.iter().all(|&k| k == 0) {
            self.constant += cos;
            return;
        }
        let (n, sign) = canonical(n);
        let slot = self.terms.entry(n).or_default();
        slot.cos += cos;
        slot.sin += sign * sin;
        if slot.cos == 0.0 && slot.sin == 0.0 {
            self.terms.remove(&n);
        }
    }

    /// Spatial dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Constant term.
    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    /// Nonconstant terms keyed by canonical frequency.
    pub fn terms(&self) -> &BTreeMap<Frequency, Harmonic> {
        &self.terms
    }

    /// Whether every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    /// `max |n|₁` over the nonzero terms (0 for constants).
    pub fn degree(&self) -> i64 {
        self.terms.keys().map(l1).max().unwrap_or(0)
    }

    /// Largest per-axis frequency magnitude.
    pub fn max_axis_frequency(&self) -> i64 {
        self.terms.keys().flat_map(|n| n.iter().map(|k| k.abs())).max().unwrap_or(0)
    }

    /// Sum.
    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        out.constant += other.constant;
        for (n, h) in &other.terms {
            out.add_harmonic(*n, h.cos, h.sin);
        }
        out
    }

    /// Difference.
    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.scale(-1.0))
    }

    /// Scalar multiple.
    pub fn scale(&self, factor: f64) -> TrigPoly {
        if factor == 0.0 {
            return TrigPoly::zero(self.dim);
        }
        TrigPoly {
            dim: self.dim,
            constant: self.constant * factor,
            terms: self
                .terms
                .iter()
                .map(|(n, h)| (*n, Harmonic { cos: h.cos * factor, sin: h.sin * factor }))
                .collect(),
        }
    }

    /// Product, by the product-to-sum identities.
    pub fn mul(&self, other: &TrigPoly) -> TrigPoly {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = TrigPoly::zero(self.dim);
        out.constant = self.constant * other.constant;
        for (n, h) in &other.terms {
            out.add_harmonic(*n, self.constant * h.cos, self.constant * h.sin);
        }
        for (n, h) in &self.terms {
            out.add_harmonic(*n, other.constant * h.cos, other.constant * h.sin);
        }
        for (p, a) in &self.terms {
            for (q, b) in &other.terms {
                let (sum, diff) = (add_freq(*p, *q), sub_freq(*p, *q));
                // cos P cos Q = ½[cos(P−Q) + cos(P+Q)]
                // sin P sin Q = ½[cos(P−Q) − cos(P+Q)]
                // sin P cos Q = ½[sin(P+Q) + sin(P−Q)]
                // cos P sin Q = ½[sin(P+Q) − sin(P−Q)]
                let cos_diff = 0.5 * (a.cos * b.cos + a.sin * b.sin);
                let cos_sum = 0.5 * (a.cos * b.cos - a.sin * b.sin);
                let sin_sum = 0.5 * (a.sin * b.cos + a.cos * b.sin);
                let sin_diff = 0.5 * (a.sin * b.cos - a.cos * b.sin);
                out.add_harmonic(sum, cos_sum, sin_sum);
                out.add_harmonic(diff, cos_diff, sin_diff);
            }
        }
        out
    }

    /// `self²`.
    pub fn square(&self) -> TrigPoly {
        self.mul(self)
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> TrigPoly {
        let mut out = self.clone();
        if out.constant.abs() <= tol {
            out.constant = 0.0;
        }
        out.terms.retain(|_, h| {
            if h.cos.abs() <= tol {
                h.cos = 0.0;
            }
            if h.sin.abs() <= tol {
                h.sin = 0.0;
            }
            h.cos != 0.0 || h.sin != 0.0
        });
        out
    }

    /// Largest coefficient difference.
    pub fn max_coefficient_diff(&self, other: &TrigPoly) -> f64 {
        let d = self.sub(other);
        d.terms.values().fold(d.constant.abs(), |m, h| m.max(h.cos.abs()).max(h.sin.abs()))
    }

    /// Sum of absolute coefficients, an upper bound for `sup |p|`.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.values().fold(self.constant.abs(), |m, h| m + h.cos.abs() + h.sin.abs())
    }

    /// Value at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, (n, h)| {
            let phase: f64 = (0..self.dim).map(|i| n[i] as f64 * x[i]).sum();
            let (s, c) = phase.sin_cos();
            acc + h.cos * c + h.sin * s
        })
    }

    /// Samples the polynomial on a grid; every frequency must be strictly
    /// inside the band so that `±n` are both representable.
    pub fn to_field(&self, grid: &TorusGrid) -> Result<TorusField> {
        if grid.dim() != self.dim {
            return Err(KgError::GridMismatch(format!(
                "polynomial on T^{} sampled on a {}-dimensional grid",
                self.dim,
                grid.dim()
            )));
        }
        let limit = (grid.points_per_axis() / 2) as i64;
        let mut coeffs = vec![Complex64::default(); grid.len()];
        coeffs[0] = Complex64::new(self.constant, 0.0);
        for (n, h) in &self.terms {
            if n[..self.dim].iter().any(|k| k.abs() >= limit) {
                return Err(KgError::FrequencyOutOfRange {
                    frequency: n[..self.dim].to_vec(),
                    points_per_axis: grid.points_per_axis(),
                });
            }
            let neg = n.map(|k| -k);
            coeffs[grid.flat_index(n)] += Complex64::new(0.5 * h.cos, -0.5 * h.sin);
            coeffs[grid.flat_index(&neg)] += Complex64::new(0.5 * h.cos, 0.5 * h.sin);
        }
        TorusField::from_spectral(grid, coeffs)
    }

    /// Fourier truncation of a field to the box `|n_i| ≤ band` with the
    /// per-mode weight `weight(n)`; Nyquist slots are never included.
    pub fn from_field_weighted(field: &TorusField, band: i64, weight: impl Fn(&Frequency) -> f64) -> TrigPoly {
        let grid = field.grid();
        let band = band.min(grid.points_per_axis() as i64 / 2 - 1);
        let mut p = TrigPoly::zero(grid.dim());
        p.constant = field.spectral()[0].re;
        for (idx, c) in field.spectral().iter().enumerate() {
            let n = grid.frequency(idx);
            if n.iter().all(|&k| k == 0) || canonical(n).1 < 0.0 {
                continue;
            }
            if n[..grid.dim()].iter().any(|k| k.abs() > band) {
                continue;
            }
            let w = weight(&n);
            if w == 0.0 {
                continue;
            }
            // c e^{in·x} + conj(c) e^{−in·x} = 2 Re c cos(n·x) − 2 Im c sin(n·x)
            p.add_harmonic(n, 2.0 * w * c.re, -2.0 * w * c.im);
        }
        p
    }

    /// Plain Fourier truncation to `|n_i| ≤ band`.
    pub fn from_field(field: &TorusField, band: i64) -> TrigPoly {
        Self::from_field_weighted(field, band, |_| 1.0)
    }
}

/// Fejér (Cesàro) mean of order `m`: coefficient `c_n` weighted by
/// `Π_i (1 − |n_i|/(m+1))` for `|n_i| ≤ m`.
pub fn fejer_approx(field: &TorusField, m: usize) -> TrigPoly {
    let dim = field.grid().dim();
    let denom = (m + 1) as f64;
    TrigPoly::from_field_weighted(field, m as i64, |n| {
        n[..dim].iter().map(|&k| 1.0 - k.abs() as f64 / denom).product()
    })
}

impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const AXES: [&str; 3] = ["x", "y", "z"];
        let phase = |n: &Frequency| {
            let mut out = String::new();
            for (axis, &k) in n[..self.dim].iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let name = if self.dim == 1 { "x" } else { AXES[axis] };
                let sign = if k < 0 { "-" } else if out.is_empty() { "" } else { "+" };
                out.push_str(sign);
                if k.abs() != 1 {
                    out.push_str(&format!("{}*", k.abs()));
                }
                out.push_str(name);
            }
            out
        };
        let mut parts = Vec::new();
        if self.constant != 0.0 || self.terms.is_empty() {
            parts.push(format!("{:e}", self.constant));
        }
        for (n, h) in &self.terms {
            if h.cos != 0.0 {
                parts.push(format!("{:e}*cos({})", h.cos, phase(n)));
            }
            if h.sin != 0.0 {
                parts.push(format!("{:e}*sin({})", h.sin, phase(n)));
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}
