//! Exact and split-step flows of the controlled Klein-Gordon system
//!
//! ```text
//! ∂²w = (Δ − 1 + V + Σ_j u_j V_j) w,   V₀ = 1, V_{2j−1} = sin x_j, V_{2j} = cos x_j,
//! ```
//!
//! written for `W = (w, ẇ)` as `dW/dt = (A + V B + Σ u_j V_j B) W` with
//! `A = [[0, 1], [Δ − 1, 0]]` and `B = [[0, 0], [1, 0]]`.

use num_complex::Complex64;

use crate::error::{KgError, Result};
use crate::field::{norm_hs, norm_lp, TorusField};
use crate::grid::TorusGrid;
use crate::state::{energy_norm, State};

/// Largest admissible `|u_j|` for any schedule segment.
pub const AMPLITUDE_CAP: f64 = 1e8;

/// Largest admissible `|δ|` for the exact diagonal flow.
pub const MAX_DILATION: f64 = 50.0;

/// Control amplitudes `u₀ … u_{2d}` against `V₀ = 1, V_{2j−1} = sin x_j, V_{2j} = cos x_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlVector(Vec<f64>);

impl ControlVector {
    /// Wraps `values`, which must have length `2·dim + 1`.
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * dim + 1 {
            return Err(KgError::InvalidArgument(format!(
                "control vector for d = {dim} needs {} entries, got {}",
                2 * dim + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KgError::InvalidArgument("control amplitudes must be finite".into()));
        }
        Ok(ControlVector(values))
    }

    /// The zero control.
    pub fn zero(dim: usize) -> Self {
        ControlVector(vec![0.0; 2 * dim + 1])
    }

    /// `amplitude · e_index`.
    pub fn unit(dim: usize, index: usize, amplitude: f64) -> Self {
        let mut v = vec![0.0; 2 * dim + 1];
        v[index] = amplitude;
        ControlVector(v)
    }

    /// Spatial dimension implied by the length.
    pub fn dim(&self) -> usize {
        (self.0.len() - 1) / 2
    }

    /// The amplitudes.
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `max_j |u_j|`.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `factor · u`.
    pub fn scaled(&self, factor: f64) -> Self {
        ControlVector(self.0.iter().map(|v| v * factor).collect())
    }
}

/// The control potentials `V₀ … V_{2d}` sampled on `grid`.
pub fn control_potentials(grid: &TorusGrid) -> Vec<TorusField> {
    let d = grid.dim();
    let mut out = vec![TorusField::constant(grid, 1.0)];
    for axis in 0..d {
        out.push(TorusField::from_fn(grid, |x| x[axis].sin()));
        out.push(TorusField::from_fn(grid, |x| x[axis].cos()));
    }
    out
}

/// One constant-control piece of a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    /// Strictly positive duration.
    pub duration: f64,
    /// Control held during the segment.
    pub control: ControlVector,
}

/// A piecewise-constant control: an ordered list of segments.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    dim: usize,
    segments: Vec<Segment>,
}

impl Schedule {
    /// The empty schedule for controls on `T^dim`.
    pub fn new(dim: usize) -> Self {
        Schedule { dim, segments: Vec::new() }
    }

    /// Appends a segment; the duration must be positive and finite.
    pub fn push(&mut self, duration: f64, control: ControlVector) -> Result<()> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(KgError::InvalidArgument(format!(
                "segment duration must be positive and finite, got {duration}"
            )));
        }
        if control.dim() != self.dim {
            return Err(KgError::InvalidArgument("control dimension differs from schedule".into()));
        }
        self.segments.push(Segment { duration, control });
        Ok(())
    }

    /// Appends every segment of `other`.
    pub fn extend(&mut self, other: &Schedule) -> Result<()> {
        if other.dim != self.dim {
            return Err(KgError::InvalidArgument("cannot concatenate schedules of different dimension".into()));
        }
        self.segments.extend(other.segments.iter().cloned());
        Ok(())
    }

    /// Concatenation `self` then `other`.
    pub fn then(mut self, other: &Schedule) -> Result<Self> {
        self.extend(other)?;
        Ok(self)
    }

    /// Spatial dimension of the controls.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The segments in time order.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Number of segments.
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    /// Whether there are no segments.
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `Σ durations`, accumulated with compensated summation.
    pub fn total_time(&self) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for s in &self.segments {
            let t = sum + s.duration;
            if sum.abs() >= s.duration.abs() {
                comp += (sum - t) + s.duration;
            } else {
                comp += (s.duration - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    /// Largest control amplitude over all segments.
    pub fn max_amplitude(&self) -> f64 {
        self.segments.iter().fold(0.0, |m, s| m.max(s.control.max_abs()))
    }
}

/// Background potential `V` and the Lebesgue exponent it is measured in.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundPotential {
    field: TorusField,
    lp_exponent: f64,
}

impl BackgroundPotential {
    /// Wraps `field`; the exponent is the `ρ` of the admissibility condition
    /// (2 for d = 1, 3 for d = 2, 3 for d = 3 with the conventions of this crate).
    pub fn new(field: TorusField) -> Self {
        let lp_exponent = match field.grid().dim() {
            1 => 2.0,
            _ => 3.0,
        };
        BackgroundPotential { field, lp_exponent }
    }

    /// `V = 0`.
    pub fn zero(grid: &TorusGrid) -> Self {
        Self::new(TorusField::zeros(grid))
    }

    /// The potential.
    pub fn field(&self) -> &TorusField {
        &self.field
    }

    /// The exponent `ρ`.
    pub fn lp_exponent(&self) -> f64 {
        self.lp_exponent
    }

    /// `‖V‖_{L^ρ}`.
    pub fn lp_norm(&self) -> f64 {
        norm_lp(&self.field, self.lp_exponent).expect("exponent >= 1")
    }

    /// Mean value `c₀(V)`.
    pub fn mean(&self) -> f64 {
        self.field.spectral()[0].re
    }

    /// Whether the potential vanishes identically on the grid.
    pub fn is_zero(&self) -> bool {
        self.field.physical().iter().all(|&v| v == 0.0)
    }
}

/// Mode-wise dispersion used by the free flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dispersion {
    /// Frequencies `⟨n⟩ = √(1+|n|²)` — the drift `A`.
    Massive,
    /// Frequencies `|n|`, secular zero mode — the drift `A + B` (control `u = e₀`).
    Massless,
    /// Mutation control for the finite-speed test: frequencies `⟨n⟩²`.
    /// Not a physical flow; it propagates at unbounded speed.
    BrokenSquared,
}

impl Dispersion {
    fn frequency(self, norm_sq: f64) -> f64 {
        match self {
            Dispersion::Massive => (1.0 + norm_sq).sqrt(),
            Dispersion::Massless => norm_sq.sqrt(),
            Dispersion::BrokenSquared => 1.0 + norm_sq,
        }
    }
}

/// Mode-wise rotation by time `t` (the 2×2 flow of each Fourier mode).
struct Rotation {
    cos: Vec<f64>,
    /// `sin(ωt)/ω` (or `t` when `ω = 0`).
    sin_over: Vec<f64>,
    /// `−ω sin(ωt)` (`k sinh(kt)` for growing modes).
    minus_omega_sin: Vec<f64>,
}

impl Rotation {
    fn new(grid: &TorusGrid, dispersion: Dispersion, t: f64) -> Self {
        Self::shifted(grid, dispersion, 0.0, t)
    }

    /// Flow of `ẅ = (shift − ω²) w` per mode; hyperbolic where `shift > ω²`.
    fn shifted(grid: &TorusGrid, dispersion: Dispersion, shift: f64, t: f64) -> Self {
        let len = grid.len();
        let mut rot = Rotation {
            cos: Vec::with_capacity(len),
            sin_over: Vec::with_capacity(len),
            minus_omega_sin: Vec::with_capacity(len),
        };
        for &k2 in grid.norm_sq_table() {
            let omega = dispersion.frequency(k2);
            let coeff = shift - omega * omega;
            if shift == 0.0 && omega > 0.0 {
                let (s, c) = (omega * t).sin_cos();
                rot.cos.push(c);
                rot.sin_over.push(s / omega);
                rot.minus_omega_sin.push(-omega * s);
            } else if coeff < 0.0 {
                let k = (-coeff).sqrt();
                let (s, c) = (k * t).sin_cos();
                rot.cos.push(c);
                rot.sin_over.push(s / k);
                rot.minus_omega_sin.push(-k * s);
            } else if coeff > 0.0 {
                let k = coeff.sqrt();
                let (s, c) = ((k * t).sinh(), (k * t).cosh());
                rot.cos.push(c);
                rot.sin_over.push(s / k);
                rot.minus_omega_sin.push(k * s);
            } else {
                rot.cos.push(1.0);
                rot.sin_over.push(t);
                rot.minus_omega_sin.push(0.0);
            }
        }
        rot
    }

    fn apply(&self, w: &mut [Complex64], v: &mut [Complex64]) {
        for i in 0..w.len() {
            let (a, b) = (w[i], v[i]);
            w[i] = a * self.cos[i] + b * self.sin_over[i];
            v[i] = a * self.minus_omega_sin[i] + b * self.cos[i];
        }
    }
}

fn to_state(grid: &TorusGrid, w: Vec<Complex64>, v: Vec<Complex64>) -> State {
    State::new(
        TorusField::from_spectral(grid, w).expect("grid-sized buffer"),
        TorusField::from_spectral(grid, v).expect("grid-sized buffer"),
    )
    .expect("same grid")
}

/// Exact free flow `e^{tA}` (massive) or `e^{t(A+B)}` (massless); any real `t`.
pub fn free_propagate(state: &State, t: f64, massive: bool) -> State {
    let dispersion = if massive { Dispersion::Massive } else { Dispersion::Massless };
    free_propagate_with(state, t, dispersion)
}

/// Exact free flow with an explicit dispersion.
pub fn free_propagate_with(state: &State, t: f64, dispersion: Dispersion) -> State {
    let grid = state.grid();
    let mut w = state.profile().spectral().to_vec();
    let mut v = state.velocity().spectral().to_vec();
    Rotation::new(grid, dispersion, t).apply(&mut w, &mut v);
    to_state(grid, w, v)
}

/// `e^{φB}(w, ẇ) = (w, ẇ + φw)`.
pub fn exp_b(state: &State, multiplier: &TorusField) -> Result<State> {
    let kick = multiplier.mul(state.profile())?;
    State::new(state.profile().clone(), state.velocity().add(&kick)?)
}

/// `e^{aB*}(w, ẇ) = (w + aẇ, ẇ)`.
pub fn exp_bstar(state: &State, a: f64) -> State {
    let profile = state.profile().axpy(a, state.velocity()).expect("same grid");
    State::new(profile, state.velocity().clone()).expect("same grid")
}

/// `e^{δF}(w, ẇ) = (e^{−δ} w, e^{δ} ẇ)`, with `|δ| ≤ 50`.
pub fn exp_f(state: &State, delta: f64) -> Result<State> {
    if !(delta.abs() <= MAX_DILATION) {
        return Err(KgError::InvalidArgument(format!(
            "dilation exponent {delta} exceeds the overflow guard {MAX_DILATION}"
        )));
    }
    State::new(state.profile().scale((-delta).exp()), state.velocity().scale(delta.exp()))
}

/// How many Strang steps a segment receives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRule {
    /// Requested step; `None` selects `min(duration, 2π/(4N))`.
    pub dt: Option<f64>,
    /// Minimum number of steps on segments whose amplitude exceeds `stiff_amplitude`.
    pub stiff_min_steps: usize,
    /// Amplitude above which a segment counts as stiff.
    pub stiff_amplitude: f64,
    /// Upper bound on `h·√(max|m|)` for each step.
    pub max_phase_per_step: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule { dt: None, stiff_min_steps: 64, stiff_amplitude: 1e3, max_phase_per_step: 0.02 }
    }
}

impl StepRule {
    /// A rule with a fixed requested step and no stiffness refinement
    /// (used by convergence studies).
    pub fn fixed(dt: f64) -> Self {
        StepRule { dt: Some(dt), stiff_min_steps: 1, stiff_amplitude: f64::INFINITY, max_phase_per_step: f64::INFINITY }
    }

    /// A rule with requested step `dt` and the default stiffness handling.
    pub fn with_dt(dt: Option<f64>) -> Self {
        StepRule { dt, ..StepRule::default() }
    }

    /// Step sizes for one segment: `ceil(duration/dt)` steps, last one shortened.
    pub fn steps(&self, grid: &TorusGrid, duration: f64, multiplier_bound: f64) -> Result<Vec<f64>> {
        let default_dt = duration.min(2.0 * std::f64::consts::PI / (4.0 * grid.points_per_axis() as f64));
        let dt = self.dt.unwrap_or(default_dt);
        if !(dt > 0.0) {
            return Err(KgError::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let mut count = (duration / dt).ceil().max(1.0);
        let mut h = dt.min(duration);
        let mut refined = false;
        if multiplier_bound > self.stiff_amplitude {
            count = count.max(self.stiff_min_steps as f64);
            refined = true;
        }
        let phase_steps = (duration * multiplier_bound.sqrt() / self.max_phase_per_step).ceil();
        if phase_steps.is_finite() && phase_steps > count {
            count = phase_steps;
            refined = true;
        }
        if refined {
            h = duration / count;
        }
        let count = count as usize;
        if refined {
            return Ok(vec![h; count]);
        }
        let mut steps = vec![h; count];
        let last = duration - h * (count - 1) as f64;
        steps[count - 1] = last;
        Ok(steps)
    }
}

/// Time-stepper for the controlled system: Strang splitting with exact factors.
#[derive(Clone, Debug)]
pub struct Integrator {
    grid: TorusGrid,
    dispersion: Dispersion,
    potentials: Vec<TorusField>,
    background: TorusField,
    background_mean: f64,
    rule: StepRule,
}

impl Integrator {
    /// A massive integrator on `grid` with background potential `background`.
    pub fn new(background: &BackgroundPotential, rule: StepRule) -> Self {
        Self::with_dispersion(background, rule, Dispersion::Massive)
    }

    /// Same with an explicit free-flow dispersion (massless runs, mutation tests).
    pub fn with_dispersion(background: &BackgroundPotential, rule: StepRule, dispersion: Dispersion) -> Self {
        let grid = background.field().grid().clone();
        Integrator {
            potentials: control_potentials(&grid),
            background: background.field().clone(),
            background_mean: background.field().spectral()[0].re,
            grid,
            dispersion,
            rule,
        }
    }

    /// The grid.
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Total multiplier `m = V + Σ u_j V_j` on the grid.
    pub fn multiplier(&self, control: &ControlVector) -> Result<Vec<f64>> {
        if control.dim() != self.grid.dim() {
            return Err(KgError::InvalidArgument("control dimension differs from grid".into()));
        }
        let mut m = self.background.physical().to_vec();
        for (u, v) in control.values().iter().zip(&self.potentials) {
            if *u != 0.0 {
                for (acc, vi) in m.iter_mut().zip(v.physical()) {
                    *acc += u * vi;
                }
            }
        }
        Ok(m)
    }

    /// Splits `m` into its spatial mean (integrated exactly with the free
    /// flow) and the zero-mean remainder (applied as kicks).
    fn split_multiplier(&self, control: &ControlVector) -> Result<(f64, Vec<f64>)> {
        if control.dim() != self.grid.dim() {
            return Err(KgError::InvalidArgument("control dimension differs from grid".into()));
        }
        let mean = self.background_mean;
        let mut rest: Vec<f64> = self.background.physical().iter().map(|b| b - mean).collect();
        for (u, v) in control.values()[1..].iter().zip(&self.potentials[1..]) {
            if *u != 0.0 {
                for (acc, vi) in rest.iter_mut().zip(v.physical()) {
                    *acc += u * vi;
                }
            }
        }
        Ok((control.values()[0] + mean, rest))
    }

    /// Evolves over one segment of positive `duration` with constant control.
    ///
    /// The spatial mean `m̄` of the multiplier is folded into the free flow,
    /// which stays exact mode by mode (hyperbolic where `m̄ > ω²`). The
    /// remainder is applied by Strang steps `free(s/2) ∘ e^{s(m−m̄)B} ∘
    /// free(s/2)`, whose middle factor is exact because `B² = 0`.
    pub fn evolve_segment(&self, state: &State, control: &ControlVector, duration: f64) -> Result<State> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(KgError::InvalidArgument(format!("segment duration must be positive, got {duration}")));
        }
        self.evolve_signed(state, control, duration)
    }

    /// Runs the same splitting with negated steps (time reversal of a segment).
    pub fn evolve_reverse(&self, state: &State, control: &ControlVector, duration: f64) -> Result<State> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(KgError::InvalidArgument(format!("segment duration must be positive, got {duration}")));
        }
        self.evolve_signed(state, control, -duration)
    }

    fn evolve_signed(&self, state: &State, control: &ControlVector, duration: f64) -> Result<State> {
        if state.grid() != &self.grid {
            return Err(KgError::GridMismatch("state and integrator grids differ".into()));
        }
        let (shift, m) = self.split_multiplier(control)?;
        let bound = m.iter().fold(shift.abs(), |b, v| b.max((v + shift).abs()));
        let kick_active = m.iter().any(|&v| v != 0.0);
        let mut w = state.profile().spectral().to_vec();
        let mut v = state.velocity().spectral().to_vec();
        if !kick_active {
            Rotation::shifted(&self.grid, self.dispersion, shift, duration).apply(&mut w, &mut v);
            return Ok(to_state(&self.grid, w, v));
        }
        let mut steps = self.rule.steps(&self.grid, duration.abs(), bound)?;
        if duration < 0.0 {
            steps.iter_mut().for_each(|h| *h = -*h);
        }
        // Consecutive half steps are fused: free(h_i/2)·free(h_{i+1}/2).
        let mut cache: Vec<(f64, Rotation)> = Vec::new();
        let mut rotate = |t: f64, w: &mut [Complex64], v: &mut [Complex64]| {
            if let Some((_, r)) = cache.iter().find(|(key, _)| *key == t) {
                r.apply(w, v);
            } else {
                let r = Rotation::shifted(&self.grid, self.dispersion, shift, t);
                r.apply(w, v);
                cache.push((t, r));
            }
        };
        let mut buf = vec![Complex64::default(); w.len()];
        rotate(0.5 * steps[0], &mut w, &mut v);
        for (i, &h) in steps.iter().enumerate() {
            buf.copy_from_slice(&w);
            self.grid.inverse(&mut buf);
            for (b, &mi) in buf.iter_mut().zip(&m) {
                *b = Complex64::new(b.re * mi * h, 0.0);
            }
            self.grid.forward(&mut buf);
            for (vi, b) in v.iter_mut().zip(&buf) {
                *vi += b;
            }
            let next = steps.get(i + 1).map_or(0.0, |&n| 0.5 * n);
            rotate(0.5 * h + next, &mut w, &mut v);
        }
        Ok(to_state(&self.grid, w, v))
    }

    /// Applies every segment of `schedule` in order, recording segment boundaries.
    pub fn simulate(&self, state: &State, schedule: &Schedule) -> Result<Trajectory> {
        let mut points = vec![(0.0, state.clone())];
        let mut current = state.clone();
        let mut time = 0.0;
        for seg in schedule.segments() {
            current = self.evolve_segment(&current, &seg.control, seg.duration)?;
            time += seg.duration;
            points.push((time, current.clone()));
        }
        Ok(Trajectory { points })
    }

    /// Final state only (no intermediate clones).
    pub fn run(&self, state: &State, schedule: &Schedule) -> Result<State> {
        let mut current = state.clone();
        for seg in schedule.segments() {
            current = self.evolve_segment(&current, &seg.control, seg.duration)?;
        }
        Ok(current)
    }
}

/// States at segment boundaries of a simulated schedule.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `(time, state)` pairs, starting with `(0, W₀)`.
    pub points: Vec<(f64, State)>,
}

/// One summary row of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    /// Time of the boundary.
    pub time: f64,
    /// Energy norm of the state.
    pub energy: f64,
    /// `H¹` norm of the profile.
    pub profile_h1: f64,
    /// `L²` norm of the velocity.
    pub velocity_l2: f64,
    /// Minimum of the profile over the grid.
    pub profile_min: f64,
}

impl Trajectory {
    /// The final state.
    pub fn final_state(&self) -> &State {
        &self.points.last().expect("trajectory is never empty").1
    }

    /// Summary rows, one per boundary.
    pub fn rows(&self) -> Vec<TrajectoryRow> {
        self.points
            .iter()
            .map(|(t, s)| TrajectoryRow {
                time: *t,
                energy: energy_norm(s),
                profile_h1: norm_hs(s.profile(), 1.0),
                velocity_l2: norm_hs(s.velocity(), 0.0),
                profile_min: s.profile().min(),
            })
            .collect()
    }
}

/// Single-segment evolution with the massive drift (functional form).
pub fn evolve_segment(
    state: &State,
    background: &BackgroundPotential,
    control: &ControlVector,
    duration: f64,
    dt: f64,
) -> Result<State> {
    if !(dt > 0.0) {
        return Err(KgError::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    Integrator::new(background, StepRule::with_dt(Some(dt.min(duration)))).evolve_segment(state, control, duration)
}

/// Simulates a schedule with the massive drift (functional form).
pub fn simulate(
    state: &State,
    schedule: &Schedule,
    background: &BackgroundPotential,
    rule: StepRule,
) -> Result<Trajectory> {
    Integrator::new(background, rule).simulate(state, schedule)
}
