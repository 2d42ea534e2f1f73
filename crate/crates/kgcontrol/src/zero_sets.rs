//! Grid realizations of zero sets `Z(f)`, their measure, and the radius of
//! the largest ball they contain.
//!
//! A zero set is only defined up to null sets, so on a grid it is replaced by
//! a relative threshold: a point counts as a zero when `|f(x_k)| ≤ η ‖f‖_∞`.

use rayon::prelude::*;

use crate::field::TorusField;
use crate::grid::{TorusGrid, MAX_DIM};
use crate::state::State;

/// Default relative threshold for zero masks.
pub const DEFAULT_ETA: f64 = 1e-6;

/// Boolean mask of the grid points counted as zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroMask {
    grid: TorusGrid,
    mask: Vec<bool>,
    threshold: f64,
    degenerate: bool,
}

impl ZeroMask {
    /// Builds a mask directly from booleans in grid storage order.
    pub fn from_bools(grid: &TorusGrid, mask: Vec<bool>, threshold: f64) -> Self {
        assert_eq!(mask.len(), grid.len(), "mask length must match the grid");
        ZeroMask { grid: grid.clone(), mask, threshold, degenerate: false }
    }

    /// The grid.
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Mask values in grid storage order (`true` = zero).
    pub fn values(&self) -> &[bool] {
        &self.mask
    }

    /// The relative threshold `η` used to build the mask.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Set when the underlying field vanished identically (full mask).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Number of masked points.
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Whether no point is masked.
    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Whether every point is masked.
    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    /// Whether every point masked here is also masked in `other`.
    pub fn is_subset_of(&self, other: &ZeroMask) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    /// Pointwise intersection.
    pub fn intersection(&self, other: &ZeroMask) -> ZeroMask {
        ZeroMask {
            grid: self.grid.clone(),
            mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && b).collect(),
            threshold: self.threshold.max(other.threshold),
            degenerate: self.degenerate && other.degenerate,
        }
    }

    /// Points masked in exactly one of the two masks.
    pub fn symmetric_difference_count(&self, other: &ZeroMask) -> usize {
        self.mask.iter().zip(&other.mask).filter(|(a, b)| a != b).count()
    }
}

/// `Z(f)` at relative threshold `η`; a vanishing field yields a full,
/// degenerate mask.
pub fn zero_mask(f: &TorusField, eta: f64) -> ZeroMask {
    let reference = f.physical().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if reference == 0.0 {
        return ZeroMask { grid: f.grid().clone(), mask: vec![true; f.grid().len()], threshold: eta, degenerate: true };
    }
    let cut = eta * reference;
    ZeroMask {
        grid: f.grid().clone(),
        mask: f.physical().iter().map(|v| v.abs() <= cut).collect(),
        threshold: eta,
        degenerate: false,
    }
}

/// Common zero set of profile and velocity, via `(w² + ẇ²)^{1/2}`.
pub fn state_zero_mask(state: &State, eta: f64) -> ZeroMask {
    let magnitude: Vec<f64> = state
        .profile()
        .physical()
        .iter()
        .zip(state.velocity().physical())
        .map(|(a, b)| a.hypot(*b))
        .collect();
    let field = TorusField::from_physical(state.grid(), magnitude).expect("grid-sized");
    zero_mask(&field, eta)
}

/// Lebesgue-measure estimate `count · (2π/N)^d`.
pub fn zero_measure(mask: &ZeroMask) -> f64 {
    mask.count() as f64 * mask.grid().cell_volume()
}

/// Radius of the largest ball inside the masked set: the largest periodic
/// distance from a masked point to the nearest unmasked point. Returns 0 for
/// an empty mask and the cap `π√d` for a full mask.
pub fn inscribed_radius(mask: &ZeroMask) -> f64 {
    let grid = mask.grid();
    if mask.is_empty() {
        return 0.0;
    }
    if mask.is_full() {
        return std::f64::consts::PI * (grid.dim() as f64).sqrt();
    }
    let sq = distance_transform_sq(mask);
    let worst = sq.iter().fold(0.0f64, |m, &v| m.max(v));
    worst.sqrt() * grid.spacing()
}

/// Brute-force reference for [`inscribed_radius`], `O(N^{2d})`.
pub fn inscribed_radius_brute_force(mask: &ZeroMask) -> f64 {
    let grid = mask.grid();
    if mask.is_empty() {
        return 0.0;
    }
    if mask.is_full() {
        return std::f64::consts::PI * (grid.dim() as f64).sqrt();
    }
    let n = grid.points_per_axis() as i64;
    let d = grid.dim();
    let free: Vec<[usize; MAX_DIM]> =
        (0..grid.len()).filter(|&i| !mask.values()[i]).map(|i| grid.multi_index(i)).collect();
    let worst = (0..grid.len())
        .into_par_iter()
        .filter(|&i| mask.values()[i])
        .map(|i| {
            let a = grid.multi_index(i);
            free.iter()
                .map(|b| {
                    (0..d)
                        .map(|k| {
                            let diff = (a[k] as i64 - b[k] as i64).rem_euclid(n);
                            let diff = diff.min(n - diff);
                            (diff * diff) as f64
                        })
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    worst.sqrt() * grid.spacing()
}

/// Exact squared Euclidean distance (grid units) from each point to the
/// nearest unmasked point, by the separable lower-envelope transform with
/// periodic wrap-around on every axis.
fn distance_transform_sq(mask: &ZeroMask) -> Vec<f64> {
    let grid = mask.grid();
    let n = grid.points_per_axis();
    let big = 1e30;
    let mut values: Vec<f64> = mask.values().iter().map(|&z| if z { big } else { 0.0 }).collect();
    for axis in 0..grid.dim() {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        let block = stride * n;
        let mut line = vec![0.0; n];
        for base in (0..values.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = values[start + k * stride];
                }
                let out = periodic_envelope(&line, big);
                for (k, v) in out.iter().enumerate() {
                    values[start + k * stride] = *v;
                }
            }
        }
    }
    values
}

/// `out[q] = min_p (periodic distance(q,p))² + f[p]` on a cyclic line.
fn periodic_envelope(f: &[f64], big: f64) -> Vec<f64> {
    let n = f.len();
    // Unroll three periods so that every minimum-image partner is present.
    let ext: Vec<(f64, f64)> = (0..3 * n)
        .filter_map(|i| {
            let val = f[i % n];
            (val < big).then_some((i as f64 - n as f64, val))
        })
        .collect();
    if ext.is_empty() {
        return vec![big; n];
    }
    // Lower envelope of parabolas (Felzenszwalb–Huttenlocher).
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(ext.len());
    let mut cuts: Vec<f64> = Vec::with_capacity(ext.len() + 1);
    for &(p, fp) in &ext {
        loop {
            match hull.last() {
                None => {
                    hull.push((p, fp));
                    cuts.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&(q, fq)) => {
                    let s = ((fp + p * p) - (fq + q * q)) / (2.0 * (p - q));
                    if s <= *cuts.last().expect("one cut per hull entry") {
                        hull.pop();
                        cuts.pop();
                    } else {
                        hull.push((p, fp));
                        cuts.push(s);
                        break;
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; n];
    let mut j = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        let x = q as f64;
        while j + 1 < hull.len() && cuts[j + 1] < x {
            j += 1;
        }
        let (p, fp) = hull[j];
        *slot = (x - p) * (x - p) + fp;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::make_field;

    #[test]
    fn envelope_matches_brute_force_in_two_dimensions() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let f = make_field(&grid, "1 - ball(1, 5.5, 1.3) - ball(4, 2, 0.9)").unwrap();
        let mask = zero_mask(&f, 1e-9);
        let a = inscribed_radius(&mask);
        let b = inscribed_radius_brute_force(&mask);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn degenerate_masks() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let z = zero_mask(&TorusField::zeros(&grid), DEFAULT_ETA);
        assert!(z.is_degenerate() && z.is_full());
        assert!((inscribed_radius(&z) - std::f64::consts::PI).abs() < 1e-15);
        let one = zero_mask(&TorusField::constant(&grid, 1.0), DEFAULT_ETA);
        assert!(one.is_empty());
        assert_eq!(inscribed_radius(&one), 0.0);
    }
}
