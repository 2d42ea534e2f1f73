//! Uniform discretization of the flat torus and the FFT plumbing attached to it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{KgError, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

struct GridTables {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `|n|²` for every spectral slot, in storage order.
    norm_sq: Vec<f64>,
}

/// A uniform grid with `points_per_axis` points on each axis of `T^dim`.
///
/// Storage order is row-major: the last axis is contiguous. Cloning is cheap
/// (FFT plans and frequency tables are shared).
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    tables: Arc<GridTables>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("points_per_axis", &self.n)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl Eq for TorusGrid {}

impl TorusGrid {
    /// Builds a grid; `dim ∈ {1,2,3}` and `points_per_axis` even and at least 8.
    pub fn new(dim: usize, points_per_axis: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(KgError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points_per_axis < 8 || !points_per_axis.is_multiple_of(2) {
            return Err(KgError::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {points_per_axis}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points_per_axis);
        let inverse = planner.plan_fft_inverse(points_per_axis);
        let len = points_per_axis.pow(dim as u32);
        let mut grid = TorusGrid {
            dim,
            n: points_per_axis,
            tables: Arc::new(GridTables { forward, inverse, norm_sq: Vec::new() }),
        };
        let norm_sq = (0..len)
            .map(|idx| {
                let f = grid.frequency(idx);
                f[..dim].iter().map(|&k| (k * k) as f64).sum()
            })
            .collect();
        let tables = Arc::get_mut(&mut grid.tables).expect("freshly created");
        tables.norm_sq = norm_sq;
        Ok(grid)
    }

    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points per axis `N`.
    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Grid spacing `2π/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Total number of points `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Always false: grids have at least 8 points.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `(2π/N)^d` of the rectangle rule.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Volume `(2π)^d` of the torus.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Multi-index of a flat storage index (unused trailing entries are 0).
    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rest = idx;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    /// Flat storage index of a multi-index (entries taken modulo `N`).
    pub fn flat_index(&self, multi: &[i64]) -> usize {
        let n = self.n as i64;
        multi[..self.dim]
            .iter()
            .fold(0usize, |acc, &k| acc * self.n + k.rem_euclid(n) as usize)
    }

    /// Physical coordinates `2πk/N` of a grid point.
    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.multi_index(idx);
        let h = self.spacing();
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = h * m[axis] as f64;
        }
        x
    }

    /// Frequency carried by a spectral slot, in `{−N/2+1, …, N/2}` per axis.
    pub fn frequency(&self, idx: usize) -> [i64; MAX_DIM] {
        let m = self.multi_index(idx);
        let half = self.n / 2;
        let mut f = [0i64; MAX_DIM];
        for axis in 0..self.dim {
            f[axis] = if m[axis] <= half {
                m[axis] as i64
            } else {
                m[axis] as i64 - self.n as i64
            };
        }
        f
    }

    /// Whether every component of `n` lies in the representable band.
    pub fn is_representable(&self, frequency: &[i64]) -> bool {
        let half = (self.n / 2) as i64;
        frequency.len() == self.dim && frequency.iter().all(|&k| k > -half && k <= half)
    }

    /// Spectral slot of a representable frequency.
    pub fn frequency_index(&self, frequency: &[i64]) -> Result<usize> {
        if !self.is_representable(frequency) {
            return Err(KgError::FrequencyOutOfRange {
                frequency: frequency.to_vec(),
                points_per_axis: self.n,
            });
        }
        Ok(self.flat_index(frequency))
    }

    /// Slot holding the frequency `−n` of the slot `idx`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let m = self.multi_index(idx);
        let neg: [i64; MAX_DIM] = std::array::from_fn(|a| -(m[a] as i64));
        self.flat_index(&neg)
    }

    /// `|n|²` for every slot in storage order.
    pub fn norm_sq_table(&self) -> &[f64] {
        &self.tables.norm_sq
    }

    /// Whether slot `idx` touches the Nyquist frequency on some axis.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        m[..self.dim].contains(&(self.n / 2))
    }

    /// Forward transform normalized so that slot `n` holds `c_n = (2π)^{-d} ∫ f e^{-in·x}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// Inverse transform: synthesizes grid values `Σ c_n e^{in·x}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        assert_eq!(data.len(), self.len(), "buffer length does not match the grid");
        let fft = if forward { &self.tables.forward } else { &self.tables.inverse };
        let n = self.n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // Contiguous last axis: one batched call.
        fft.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[start + k * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (k, v) in line.iter().enumerate() {
                        data[start + k * stride] = *v;
                    }
                }
            }
        }
    }

    /// Periodic (minimum-image) Euclidean distance between two points of the torus.
    pub fn periodic_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        periodic_distance(&a[..self.dim], &b[..self.dim])
    }
}

/// Minimum-image distance on `T^d = R^d / 2πZ^d`; slices must have equal length.
pub fn periodic_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let r = (x - y).rem_euclid(2.0 * PI);
            let r = r.min(2.0 * PI - r);
            r * r
        })
        .sum::<f64>()
        .sqrt()
}
