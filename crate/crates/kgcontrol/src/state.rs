//! The phase-space state `(w, ẇ)` and its energy norm on `H¹ × L²`.

use crate::error::{KgError, Result};
use crate::field::{norm_hs, TorusField};
use crate::grid::TorusGrid;

/// A profile/velocity pair sharing one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    profile: TorusField,
    velocity: TorusField,
}

impl State {
    /// Pairs a profile with a velocity; both must live on the same grid.
    pub fn new(profile: TorusField, velocity: TorusField) -> Result<Self> {
        if profile.grid() != velocity.grid() {
            return Err(KgError::GridMismatch(
                "profile and velocity must share a grid".to_string(),
            ));
        }
        Ok(State { profile, velocity })
    }

    /// The zero state.
    pub fn zeros(grid: &TorusGrid) -> Self {
        State { profile: TorusField::zeros(grid), velocity: TorusField::zeros(grid) }
    }

    /// The shared grid.
    pub fn grid(&self) -> &TorusGrid {
        self.profile.grid()
    }

    /// The profile `w`.
    pub fn profile(&self) -> &TorusField {
        &self.profile
    }

    /// The velocity `ẇ`.
    pub fn velocity(&self) -> &TorusField {
        &self.velocity
    }

    /// Splits into `(profile, velocity)`.
    pub fn into_parts(self) -> (TorusField, TorusField) {
        (self.profile, self.velocity)
    }

    /// Componentwise difference `self − other`.
    pub fn sub(&self, other: &State) -> Result<State> {
        State::new(self.profile.sub(&other.profile)?, self.velocity.sub(&other.velocity)?)
    }

    /// Componentwise sum.
    pub fn add(&self, other: &State) -> Result<State> {
        State::new(self.profile.add(&other.profile)?, self.velocity.add(&other.velocity)?)
    }

    /// `factor · self`.
    pub fn scale(&self, factor: f64) -> State {
        State { profile: self.profile.scale(factor), velocity: self.velocity.scale(factor) }
    }
}

/// `‖W‖ = (‖w‖²_{H¹} + ‖ẇ‖²_{L²})^{1/2}`, computed spectrally by Parseval.
pub fn energy_norm(state: &State) -> f64 {
    let a = norm_hs(state.profile(), 1.0);
    let b = norm_hs(state.velocity(), 0.0);
    (a * a + b * b).sqrt()
}

/// The same norm computed in physical space: `∫ |∇w|² + w² + ẇ²` by the
/// rectangle rule with spectrally differentiated gradients.
pub fn energy_norm_physical(state: &State) -> f64 {
    let grid = state.grid();
    let w = state.profile().physical();
    let v = state.velocity().physical();
    let mut density: Vec<f64> = w.iter().zip(v).map(|(a, b)| a * a + b * b).collect();
    for axis in 0..grid.dim() {
        let g = state.profile().derivative(axis);
        for (acc, gi) in density.iter_mut().zip(g.physical()) {
            *acc += gi * gi;
        }
    }
    (density.iter().sum::<f64>() * grid.cell_volume()).sqrt()
}

/// Energy-norm distance between two states.
pub fn energy_distance(a: &State, b: &State) -> Result<f64> {
    Ok(energy_norm(&a.sub(b)?))
}
