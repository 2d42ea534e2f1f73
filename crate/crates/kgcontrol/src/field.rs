//! Real scalar fields on the torus held simultaneously in physical and
//! spectral form, plus the norms built on them.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{KgError, Result};
use crate::grid::TorusGrid;

/// A real function sampled on a [`TorusGrid`], with its Fourier coefficients.
///
/// Both representations are kept synchronized eagerly: every constructor and
/// mutator recomputes the other side, so a shared `&TorusField` never needs
/// interior mutability. Spectral mutations are followed by a Hermitian
/// symmetrization so the field stays real.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    grid: TorusGrid,
    physical: Vec<f64>,
    spectral: Vec<Complex64>,
}

impl TorusField {
    /// The zero field.
    pub fn zeros(grid: &TorusGrid) -> Self {
        TorusField {
            grid: grid.clone(),
            physical: vec![0.0; grid.len()],
            spectral: vec![Complex64::default(); grid.len()],
        }
    }

    /// The constant field `value`.
    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        let mut spectral = vec![Complex64::default(); grid.len()];
        spectral[0] = Complex64::new(value, 0.0);
        TorusField { grid: grid.clone(), physical: vec![value; grid.len()], spectral }
    }

    /// Builds a field from grid values (storage order of the grid).
    pub fn from_physical(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(KgError::InvalidArgument(format!(
                "expected {} grid values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let mut spectral: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.forward(&mut spectral);
        let mut field = TorusField { grid: grid.clone(), physical: values, spectral };
        field.symmetrize();
        Ok(field)
    }

    /// Builds a field from Fourier coefficients; the input is symmetrized
    /// (`c_{−n} ← conj(c_n)`) before synthesis.
    pub fn from_spectral(grid: &TorusGrid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(KgError::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coefficients.len()
            )));
        }
        let mut field =
            TorusField { grid: grid.clone(), physical: vec![0.0; grid.len()], spectral: coefficients };
        field.symmetrize();
        field.sync_physical();
        Ok(field)
    }

    /// Samples a closed-form function at the grid points.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(&grid.point(idx)[..grid.dim()])).collect();
        Self::from_physical(grid, values).expect("length matches by construction")
    }

    /// The grid this field lives on.
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Grid values in storage order.
    pub fn physical(&self) -> &[f64] {
        &self.physical
    }

    /// Fourier coefficients in storage order (slot `idx` ↔ `grid.frequency(idx)`).
    pub fn spectral(&self) -> &[Complex64] {
        &self.spectral
    }

    /// The Fourier coefficient `c_n` with the `(2π)^{-d}` normalization.
    pub fn fourier_coeff(&self, frequency: &[i64]) -> Result<Complex64> {
        let idx = self.grid.frequency_index(frequency)?;
        Ok(self.spectral[idx])
    }

    /// Applies a map to every grid value.
    pub fn map_physical(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self.physical.iter().map(|&v| f(v)).collect();
        Self::from_physical(&self.grid, values).expect("same grid")
    }

    /// Applies a multiplier to every Fourier coefficient, given the slot index.
    pub fn map_spectral(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let coefficients = self.spectral.iter().enumerate().map(|(i, &c)| f(i, c)).collect();
        Self::from_spectral(&self.grid, coefficients).expect("same grid")
    }

    /// `self + other`.
    pub fn add(&self, other: &TorusField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// `self − other`.
    pub fn sub(&self, other: &TorusField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product (no dealiasing; see the crate documentation).
    pub fn mul(&self, other: &TorusField) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.physical.iter().zip(&other.physical).map(|(a, b)| a * b).collect();
        Self::from_physical(&self.grid, values)
    }

    /// `factor · self`.
    pub fn scale(&self, factor: f64) -> Self {
        TorusField {
            grid: self.grid.clone(),
            physical: self.physical.iter().map(|v| v * factor).collect(),
            spectral: self.spectral.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor · other`.
    pub fn axpy(&self, factor: f64, other: &TorusField) -> Result<Self> {
        self.check_grid(other)?;
        Ok(TorusField {
            grid: self.grid.clone(),
            physical: self.physical.iter().zip(&other.physical).map(|(a, b)| a + factor * b).collect(),
            spectral: self.spectral.iter().zip(&other.spectral).map(|(a, b)| a + b * factor).collect(),
        })
    }

    /// Minimum over grid values.
    pub fn min(&self) -> f64 {
        self.physical.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum over grid values.
    pub fn max(&self) -> f64 {
        self.physical.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.grid.dim();
        let mut acc = 0.0;
        for (idx, c) in self.spectral.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let f = self.grid.frequency(idx);
            let phase: f64 = (0..d).map(|a| f[a] as f64 * x[a]).sum();
            acc += c.re * phase.cos() - c.im * phase.sin();
        }
        acc
    }

    /// Spectral partial derivative along `axis` (Nyquist slot zeroed).
    pub fn derivative(&self, axis: usize) -> Self {
        let grid = self.grid.clone();
        let n = grid.points_per_axis();
        self.map_spectral(|idx, c| {
            let m = grid.multi_index(idx)[axis];
            if m == n / 2 {
                return Complex64::default();
            }
            let k = grid.frequency(idx)[axis] as f64;
            c * Complex64::new(0.0, k)
        })
    }

    /// Whether two fields share a grid.
    pub fn check_grid(&self, other: &TorusField) -> Result<()> {
        if self.grid != other.grid {
            return Err(KgError::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    fn zip_with(&self, other: &TorusField, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.physical.iter().zip(&other.physical).map(|(&a, &b)| op(a, b)).collect();
        Self::from_physical(&self.grid, values)
    }

    fn symmetrize(&mut self) {
        let grid = &self.grid;
        let mut out = self.spectral.clone();
        for (idx, slot) in out.iter_mut().enumerate() {
            let partner = grid.conjugate_index(idx);
            *slot = 0.5 * (self.spectral[idx] + self.spectral[partner].conj());
        }
        self.spectral = out;
    }

    fn sync_physical(&mut self) {
        let mut buf = self.spectral.clone();
        self.grid.inverse(&mut buf);
        self.physical = buf.into_iter().map(|c| c.re).collect();
    }
}

/// Sobolev norm `‖f‖_{H^s} = ((2π)^d Σ ⟨n⟩^{2s} |c_n|²)^{1/2}`, `⟨n⟩ = √(1+|n|²)`.
pub fn norm_hs(f: &TorusField, s: f64) -> f64 {
    let grid = f.grid();
    let weights = grid.norm_sq_table();
    let sum: f64 = f
        .spectral()
        .iter()
        .zip(weights)
        .map(|(c, &k2)| (1.0 + k2).powf(s) * c.norm_sqr())
        .sum();
    (grid.volume() * sum).sqrt()
}

/// Rectangle-rule `L^p` norm `(Σ |f(x_k)|^p (2π/N)^d)^{1/p}`; `p = ∞` gives the max.
pub fn norm_lp(f: &TorusField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(KgError::InvalidArgument(format!("L^p exponent must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.physical().iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let sum: f64 = f.physical().iter().map(|v| v.abs().powf(p)).sum();
    Ok((sum * f.grid().cell_volume()).powf(1.0 / p))
}

/// `(2π)^{-d}` times the rectangle-rule integral, i.e. the mean value.
pub fn mean(f: &TorusField) -> f64 {
    f.spectral()[0].re
}

/// Total mass `∫ f` over the torus.
pub fn integral(f: &TorusField) -> f64 {
    mean(f) * f.grid().volume()
}

/// Volume of the torus `(2π)^d` as a convenience for callers.
pub fn torus_volume(dim: usize) -> f64 {
    (2.0 * PI).powi(dim as i32)
}
