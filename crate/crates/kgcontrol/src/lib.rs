//! Simulation and control-synthesis engine for the bilinear Klein-Gordon
//! equation on the flat torus `T^d`, `d ∈ {1, 2, 3}`:
//!
//! ```text
//! ∂²w = (Δ − 1 + V(x) + u₀ + Σ_j (u_{2j−1} sin x_j + u_{2j} cos x_j)) w.
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`field`], [`state`], [`expr`] — torus discretization, dual
//!   physical/spectral fields, norms and the field-expression language;
//! * [`propagators`] — exact free flows, exact nilpotent/diagonal flows and a
//!   Strang-split integrator for piecewise-constant controls;
//! * [`oracles`] — d'Alembert, Poisson and Kirchhoff representation formulas
//!   evaluated by quadrature, independent of the spectral code path;
//! * [`zero_sets`] — grid realizations of zero sets and inscribed radii;
//! * [`trigpoly`], [`certificate`], [`synthesis`] — trigonometric
//!   polynomials, saturation certificates `φ = φ₀ − Σ φᵢ²` and their
//!   compilation into control schedules;
//! * [`strategy`] — planners that concatenate compiled stages into one
//!   schedule per controllability statement;
//! * [`experiments`] — convergence-rate tables, finite-speed verification and
//!   the three-dimensional sign counterexample.
//!
//! Products of fields are taken pointwise without dealiasing; synthesis
//! routines therefore run on grids with `N ≥ 4 ×` the largest frequency of
//! any certificate they compile.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod field;
pub mod grid;
pub mod oracles;
pub mod propagators;
pub mod state;
pub mod strategy;
pub mod synthesis;
pub mod trigpoly;
pub mod zero_sets;

pub use error::{KgError, Result};
pub use expr::{make_field, FieldExpr};
pub use field::{norm_hs, norm_lp, TorusField};
pub use grid::TorusGrid;
pub use propagators::{
    exp_b, exp_bstar, exp_f, free_propagate, BackgroundPotential, ControlVector, Dispersion, Integrator,
    Schedule, StepRule,
};
pub use state::{energy_norm, State};
