//! Classical representation formulas for the massless wave equation with
//! zero initial profile, evaluated by quadrature of a closed-form (or
//! interpolated) velocity. They share no code with the spectral propagators
//! and serve as independent cross-checks.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{KgError, Result};
use crate::expr::FieldExpr;
use crate::field::TorusField;
use crate::grid::periodic_distance;

/// A periodic function that can be evaluated anywhere on `T^d`.
pub trait PeriodicFunction: Sync {
    /// Spatial dimension.
    fn dim(&self) -> usize;
    /// Value at `x` (only the first `dim` coordinates are read).
    fn value(&self, x: &[f64]) -> f64;
}

impl PeriodicFunction for FieldExpr {
    fn dim(&self) -> usize {
        FieldExpr::dim(self)
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

impl PeriodicFunction for TorusField {
    fn dim(&self) -> usize {
        self.grid().dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// A closure wrapped with its dimension.
pub struct ClosureField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> ClosureField<F> {
    /// Wraps `f` as a function on `T^dim`.
    pub fn new(dim: usize, f: F) -> Self {
        ClosureField { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> PeriodicFunction for ClosureField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

fn gauss_rule(nodes: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(nodes).expect("positive node count"))
}

/// Composite Gauss–Legendre quadrature on `[a, b]` with panels no wider than `panel`.
fn composite(rule: &GaussLegendre, a: f64, b: f64, panel: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let panels = (((b - a).abs() / panel).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        acc += rule.integrate(lo, lo + h, &mut f);
    }
    acc
}

/// d'Alembert's formula `w(t, x) = ½ ∫_{x−t}^{x+t} ẇ₀(y) dy` (massless, zero
/// profile, d = 1), by composite Gauss–Legendre quadrature with periodic wrap.
pub fn dalembert_eval(velocity: &dyn PeriodicFunction, t: f64, x: f64) -> Result<f64> {
    if velocity.dim() != 1 {
        return Err(KgError::InvalidArgument("d'Alembert's formula needs d = 1".into()));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let rule = gauss_rule(16);
    let integral = composite(&rule, x - t, x + t, 0.05, |y| velocity.value(&[y.rem_euclid(2.0 * PI)]));
    Ok(0.5 * integral)
}

/// Poisson's formula in d = 2,
/// `w(t, x) = (1/2πt²) ∫_{B(x,t)} t² ẇ₀(y) / √(t² − |y−x|²) dy`,
/// in polar coordinates with `r = t sin θ`, which removes the edge singularity:
/// `w = (1/2π) ∫₀^{2π} ∫₀^{π/2} ẇ₀(x + t sin θ e_ψ) t sin θ dθ dψ`.
pub fn poisson_eval(velocity: &dyn PeriodicFunction, t: f64, x: &[f64]) -> Result<f64> {
    if velocity.dim() != 2 {
        return Err(KgError::InvalidArgument("Poisson's formula needs d = 2".into()));
    }
    if !(t > 0.0) {
        return Err(KgError::InvalidArgument(format!("Poisson's formula needs t > 0, got {t}")));
    }
    let rule = gauss_rule(24);
    let angles = 512;
    let mut acc = 0.0;
    for k in 0..angles {
        let psi = 2.0 * PI * k as f64 / angles as f64;
        let (s, c) = psi.sin_cos();
        acc += composite(&rule, 0.0, 0.5 * PI, 0.1, |theta| {
            let r = t * theta.sin();
            velocity.value(&[x[0] + r * c, x[1] + r * s]) * r
        });
    }
    Ok(acc / angles as f64)
}

/// Kirchhoff's formula in d = 3, `w(t, x) = t · (mean of ẇ₀ over ∂B(x, t))`,
/// by Gauss–Legendre in the cosine of the colatitude (64 nodes) times the
/// uniform rule in longitude (128 nodes).
pub fn kirchhoff_eval(velocity: &dyn PeriodicFunction, t: f64, x: &[f64]) -> Result<f64> {
    kirchhoff_eval_with(velocity, t, x, 64, 128)
}

/// Kirchhoff's formula with explicit quadrature sizes (at least 32 × 64).
pub fn kirchhoff_eval_with(
    velocity: &dyn PeriodicFunction,
    t: f64,
    x: &[f64],
    colatitude_nodes: usize,
    longitude_nodes: usize,
) -> Result<f64> {
    if velocity.dim() != 3 {
        return Err(KgError::InvalidArgument("Kirchhoff's formula needs d = 3".into()));
    }
    if !(t > 0.0) {
        return Err(KgError::InvalidArgument(format!("Kirchhoff's formula needs t > 0, got {t}")));
    }
    if colatitude_nodes < 32 || longitude_nodes < 64 {
        return Err(KgError::InvalidArgument("sphere quadrature needs at least 32 x 64 nodes".into()));
    }
    let rule = gauss_rule(colatitude_nodes);
    let mut acc = 0.0;
    for &(mu, weight) in rule.as_node_weight_pairs() {
        let sin_theta = (1.0 - mu * mu).max(0.0).sqrt();
        let mut ring = 0.0;
        for k in 0..longitude_nodes {
            let phi = 2.0 * PI * k as f64 / longitude_nodes as f64;
            let (s, c) = phi.sin_cos();
            let y = [x[0] + t * sin_theta * c, x[1] + t * sin_theta * s, x[2] + t * mu];
            ring += velocity.value(&y);
        }
        acc += weight * ring / longitude_nodes as f64;
    }
    // Mean over the sphere: (1/4π) ∫ dμ dφ = (1/2) Σ w_μ · (ring average).
    Ok(t * 0.5 * acc)
}

/// Smooth nonnegative velocity on `T³` supported exactly on the complement of
/// the open ring `inner < |x − centre| < outer`.
#[derive(Clone, Debug, PartialEq)]
pub struct RingComplementBump {
    /// Centre of the ring.
    pub centre: [f64; 3],
    /// Inner radius of the excluded ring.
    pub inner: f64,
    /// Outer radius of the excluded ring.
    pub outer: f64,
}

impl RingComplementBump {
    fn ramp(s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp()
        }
    }
}

impl PeriodicFunction for RingComplementBump {
    fn dim(&self) -> usize {
        3
    }
    fn value(&self, x: &[f64]) -> f64 {
        let rho = periodic_distance(&x[..3], &self.centre);
        Self::ramp(self.inner - rho) + Self::ramp(rho - self.outer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_velocity_gives_linear_growth() {
        let one1 = ClosureField::new(1, |_: &[f64]| 1.0);
        let one2 = ClosureField::new(2, |_: &[f64]| 1.0);
        let one3 = ClosureField::new(3, |_: &[f64]| 1.0);
        for t in [0.3, 1.1] {
            assert!((dalembert_eval(&one1, t, 0.4).unwrap() - t).abs() < 1e-13);
            assert!((poisson_eval(&one2, t, &[0.1, 0.2]).unwrap() - t).abs() < 1e-12);
            assert!((kirchhoff_eval(&one3, t, &[0.1, 0.2, 0.3]).unwrap() - t).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_wrong_dimension_and_time() {
        let one2 = ClosureField::new(2, |_: &[f64]| 1.0);
        assert!(dalembert_eval(&one2, 0.1, 0.0).is_err());
        assert!(poisson_eval(&one2, 0.0, &[0.0, 0.0]).is_err());
        assert!(kirchhoff_eval(&one2, 0.1, &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn dalembert_of_a_single_mode() {
        // ½ ∫ cos(y) over [x−t, x+t] = cos(x) sin(t)
        let f = ClosureField::new(1, |x: &[f64]| x[0].cos());
        let (t, x) = (0.7, 1.3);
        assert!((dalembert_eval(&f, t, x).unwrap() - x.cos() * t.sin()).abs() < 1e-13);
    }
}
