//! Numerical experiments: convergence tables for the compiled flows,
//! finite-speed verification of the integrator, and the three-dimensional
//! counterexample to positivity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::certificate::{decompose, Certificate};
use crate::error::{KgError, Result};
use crate::field::TorusField;
use crate::grid::periodic_distance;
use crate::oracles::{dalembert_eval, kirchhoff_eval, poisson_eval, ClosureField, RingComplementBump};
use crate::propagators::{
    exp_b, exp_bstar, exp_f, BackgroundPotential, ControlVector, Dispersion, Integrator, Schedule, StepRule,
};
use crate::state::{energy_distance, energy_norm, State};
use crate::synthesis::{compile_expb, compile_expbstar, compile_expf, SynthesisParams};
use crate::trigpoly::TrigPoly;

/// An operator whose compiled schedules converge as `τ → 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum RateOperator {
    /// `exp(φB)` for `φ` in the control span; `τ` is the pulse width.
    ExpBLeaf(Vec<f64>),
    /// `exp(−ψ²B)`.
    ExpBSquare(TrigPoly),
    /// `exp(φB)` for the expansion `φ` of a certificate.
    ExpB(Certificate),
    /// Dilation realizing `exp_F(·, −δ)`.
    ExpF(f64),
    /// Profile shift `exp(aB*)`; `τ` is the shrink factor.
    ExpBStar(f64),
}

impl RateOperator {
    /// Short name used in tables.
    pub fn name(&self) -> &'static str {
        match self {
            RateOperator::ExpBLeaf(_) => "expB-leaf",
            RateOperator::ExpBSquare(_) => "expB-square",
            RateOperator::ExpB(_) => "expB",
            RateOperator::ExpF(_) => "expF",
            RateOperator::ExpBStar(_) => "expBstar",
        }
    }

    /// The exact action on `start`.
    pub fn exact(&self, start: &State) -> Result<State> {
        let grid = start.grid();
        match self {
            RateOperator::ExpBLeaf(alpha) => {
                exp_b(start, &TrigPoly::from_control_span(grid.dim(), alpha)?.to_field(grid)?)
            }
            RateOperator::ExpBSquare(psi) => exp_b(start, &psi.square().scale(-1.0).to_field(grid)?),
            RateOperator::ExpB(cert) => exp_b(start, &cert.expand().to_field(grid)?),
            RateOperator::ExpF(delta) => exp_f(start, -delta),
            RateOperator::ExpBStar(a) => Ok(exp_bstar(start, *a)),
        }
    }

    /// The schedule compiled at ladder value `tau`.
    pub fn compile(&self, dim: usize, tau: f64, template: &SynthesisParams) -> Result<Schedule> {
        let params = SynthesisParams { tau, pulse_time: template.pulse_time.min(tau / 50.0), ..template.clone() };
        match self {
            RateOperator::ExpBLeaf(alpha) => {
                compile_expb(&Certificate::Leaf(alpha.clone()), &params.with_pulse_time(tau))
            }
            RateOperator::ExpBSquare(psi) => {
                let square = Certificate::Combine {
                    base: Box::new(Certificate::Leaf(vec![0.0; 2 * dim + 1])),
                    squares: vec![decompose(psi)],
                };
                compile_expb(&square, &params)
            }
            RateOperator::ExpB(cert) => compile_expb(cert, &params),
            RateOperator::ExpF(delta) => compile_expf(dim, *delta, &params),
            RateOperator::ExpBStar(a) => compile_expbstar(dim, *a, &params),
        }
    }
}

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRow {
    /// Ladder value.
    pub tau: f64,
    /// `‖simulated − exact‖_E / ‖W₀‖_E`.
    pub relative_error: f64,
    /// `log(e_prev/e)/log(τ_prev/τ)`; absent on the first row.
    pub order: Option<f64>,
    /// Total time of the compiled schedule.
    pub schedule_time: f64,
    /// Largest amplitude of the compiled schedule.
    pub max_amplitude: f64,
}

/// Convergence table of one operator.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    /// Operator name.
    pub operator: String,
    /// Rows in ladder order.
    pub rows: Vec<RateRow>,
}

/// Errors at or below this count as exact in [`RateTable::is_decreasing`].
pub const EXACT_ERROR: f64 = 1e-12;

impl RateTable {
    /// Whether errors decrease strictly along the ladder (rows that are
    /// already exact may repeat).
    pub fn is_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].relative_error < w[0].relative_error || w[1].relative_error <= EXACT_ERROR)
    }
}

/// Runs `operator` over a strictly decreasing `τ` ladder from `start`.
pub fn rates(
    operator: &RateOperator,
    taus: &[f64],
    start: &State,
    background: &BackgroundPotential,
    template: &SynthesisParams,
    rule: StepRule,
) -> Result<RateTable> {
    if taus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(KgError::InvalidArgument("tau ladder must be strictly decreasing".into()));
    }
    let exact = operator.exact(start)?;
    let norm = energy_norm(start);
    let integrator = Integrator::new(background, rule);
    let template = template.with_background(background);
    let measured: Vec<Result<(f64, f64, f64)>> = taus
        .par_iter()
        .map(|&tau| {
            let schedule = operator.compile(start.grid().dim(), tau, &template)?;
            let out = integrator.run(start, &schedule)?;
            Ok((energy_distance(&out, &exact)? / norm, schedule.total_time(), schedule.max_amplitude()))
        })
        .collect();
    let mut rows: Vec<RateRow> = Vec::with_capacity(taus.len());
    for (&tau, m) in taus.iter().zip(measured) {
        let (relative_error, schedule_time, max_amplitude) = m?;
        let order = rows.last().and_then(|prev| {
            let ratio = (prev.relative_error / relative_error).ln() / (prev.tau / tau).ln();
            ratio.is_finite().then_some(ratio)
        });
        rows.push(RateRow { tau, relative_error, order, schedule_time, max_amplitude });
    }
    Ok(RateTable { operator: operator.name().to_string(), rows })
}

/// Piecewise-constant schedule with segments of length `segment` (the last
/// one shortened) and every control uniform in `[−amplitude, amplitude]`.
pub fn random_schedule(dim: usize, duration: f64, segment: f64, amplitude: f64, seed: u64) -> Result<Schedule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schedule = Schedule::new(dim);
    let mut elapsed = 0.0;
    while elapsed < duration {
        let length = segment.min(duration - elapsed);
        let values = (0..2 * dim + 1).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
        schedule.push(length, ControlVector::new(dim, values)?)?;
        elapsed += length;
    }
    Ok(schedule)
}

/// The part of `schedule` between times `from` and `to`.
pub fn schedule_window(schedule: &Schedule, from: f64, to: f64) -> Result<Schedule> {
    let mut out = Schedule::new(schedule.dim());
    let mut clock = 0.0f64;
    for seg in schedule.segments() {
        let (lo, hi) = (clock.max(from), (clock + seg.duration).min(to));
        if hi > lo {
            out.push(hi - lo, seg.control.clone())?;
        }
        clock += seg.duration;
    }
    Ok(out)
}

/// Energy norm of `state` restricted to the closed periodic ball of radius
/// `radius` about `centre` (grid points within roundoff of the sphere
/// count as inside), with a spectral gradient.
pub fn ball_energy(state: &State, centre: &[f64], radius: f64) -> f64 {
    let grid = state.grid();
    let dim = grid.dim();
    let gradients: Vec<TorusField> = (0..dim).map(|axis| state.profile().derivative(axis)).collect();
    let mut acc = 0.0;
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        if periodic_distance(&x[..dim], &centre[..dim]) > radius + 1e-9 * grid.spacing() {
            continue;
        }
        let w = state.profile().physical()[idx];
        let v = state.velocity().physical()[idx];
        let grad: f64 = gradients.iter().map(|g| g.physical()[idx].powi(2)).sum();
        acc += grad + w * w + v * v;
    }
    (acc * grid.cell_volume()).sqrt()
}

/// Set-up of a finite-speed check.
#[derive(Clone, Debug)]
pub struct FiniteSpeedSetup {
    /// Initial state, vanishing on the ball `B(centre, radius)`.
    pub start: State,
    /// Centre of the zero ball.
    pub centre: Vec<f64>,
    /// Radius of the zero ball.
    pub radius: f64,
    /// Applied schedule (at least `0.8·radius` long).
    pub schedule: Schedule,
    /// Fractions of `radius` at which the cone is probed.
    pub fractions: Vec<f64>,
    /// Cells trimmed from the cone radius to absorb the mollified edge.
    pub trim_cells: f64,
    /// Pass threshold on leakage relative to `‖W₀‖_E`.
    pub threshold: f64,
}

impl FiniteSpeedSetup {
    /// Probes at `0.2r, 0.4r, 0.6r, 0.8r`, two-cell trim, threshold `10⁻⁶`.
    pub fn new(start: State, centre: Vec<f64>, radius: f64, schedule: Schedule) -> Self {
        FiniteSpeedSetup {
            start,
            centre,
            radius,
            schedule,
            fractions: vec![0.2, 0.4, 0.6, 0.8],
            trim_cells: 2.0,
            threshold: 1e-6,
        }
    }
}

/// Leakage into the shrinking cone at each probe time.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpeedReport {
    /// Probe times.
    pub times: Vec<f64>,
    /// Cone radius `r − t − trim` at each probe.
    pub cone_radii: Vec<f64>,
    /// `‖W(t)‖_{E, cone} / ‖W₀‖_E`.
    pub leakage: Vec<f64>,
    /// The pass threshold.
    pub threshold: f64,
}

impl FiniteSpeedReport {
    /// Largest leakage.
    pub fn worst(&self) -> f64 {
        self.leakage.iter().fold(0.0f64, |m, &v| m.max(v))
    }

    /// Whether all probes stay below the threshold.
    pub fn passed(&self) -> bool {
        self.worst() <= self.threshold
    }
}

/// Simulates `setup` with the given dispersion and measures the energy left
/// inside the cone `|x − centre| ≤ r − t − trim`.
pub fn verify_finite_speed(
    setup: &FiniteSpeedSetup,
    background: &BackgroundPotential,
    rule: StepRule,
    dispersion: Dispersion,
) -> Result<FiniteSpeedReport> {
    let horizon = setup.fractions.iter().fold(0.0f64, |m, &f| m.max(f)) * setup.radius;
    if setup.schedule.total_time() < horizon - 1e-12 {
        return Err(KgError::InvalidArgument(format!(
            "schedule lasts {} but the probes reach t = {horizon}",
            setup.schedule.total_time()
        )));
    }
    let integrator = Integrator::with_dispersion(background, rule, dispersion);
    let norm = energy_norm(&setup.start);
    let spacing = setup.start.grid().spacing();
    let mut times = Vec::new();
    let mut cone_radii = Vec::new();
    let mut leakage = Vec::new();
    let mut state = setup.start.clone();
    let mut clock = 0.0;
    for &fraction in &setup.fractions {
        let t = fraction * setup.radius;
        state = integrator.run(&state, &schedule_window(&setup.schedule, clock, t)?)?;
        clock = t;
        let cone = setup.radius - t - setup.trim_cells * spacing;
        times.push(t);
        cone_radii.push(cone);
        // A cone shrunk to zero radius still contains its centre.
        let inside = cone > -1e-9 * spacing;
        leakage.push(if inside { ball_energy(&state, &setup.centre, cone.max(0.0)) / norm } else { 0.0 });
    }
    Ok(FiniteSpeedReport { times, cone_radii, leakage, threshold: setup.threshold })
}

/// Result of the three-dimensional sign counterexample.
#[derive(Clone, Debug, PartialEq)]
pub struct KirchhoffReport {
    /// `(t, w(t, x₀))` on the scan.
    pub samples: Vec<(f64, f64)>,
    /// Largest scanned interval around the ring crossing with `|w| ≤ 10⁻¹⁰`.
    pub vanishing: Option<(f64, f64)>,
    /// The interval the vanishing set must cover.
    pub required: (f64, f64),
    /// Whether it does.
    pub covers: bool,
    /// `(t, w(t, x₀))` just after the sphere meets the outer support.
    pub after: (f64, f64),
    /// The same radial set-up in d = 1 and d = 2: `(d, t, w(t, x₀))` at
    /// the middle of the required interval, where the value is positive.
    pub lower_dimensions: Vec<(usize, f64, f64)>,
}

/// Vanishing threshold of [`kirchhoff_demo`].
pub const KIRCHHOFF_ZERO: f64 = 1e-10;

/// Velocity supported off the shell `inner < |x − x₀| < inner + 2·width` in
/// d = 3, profile zero: by Kirchhoff's formula `w(t, x₀) = 0` while the
/// sphere of radius `t` lies in the shell. The scan step is `step`.
pub fn kirchhoff_demo(inner: f64, width: f64, margin: f64, step: f64) -> Result<KirchhoffReport> {
    if !(0.0 < inner && inner < width && width < std::f64::consts::PI / 3.0) {
        return Err(KgError::InvalidArgument(format!(
            "need 0 < R' < R < pi/3, got R' = {inner}, R = {width}"
        )));
    }
    let centre = [std::f64::consts::PI; 3];
    let outer = inner + 2.0 * width;
    let bump = RingComplementBump { centre, inner, outer };
    let end = outer + 0.3;
    let count = (end / step).round() as usize;
    let samples: Vec<(f64, f64)> = (1..=count)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * step;
            kirchhoff_eval(&bump, t, &centre).map(|v| (t, v))
        })
        .collect::<Result<_>>()?;
    let mid = inner + width;
    let vanishing = {
        let inside = |&(_, v): &(f64, f64)| v.abs() <= KIRCHHOFF_ZERO;
        let pivot = samples.iter().position(|&(t, _)| t >= mid).filter(|&i| inside(&samples[i]));
        pivot.map(|i| {
            let mut lo = i;
            while lo > 0 && inside(&samples[lo - 1]) {
                lo -= 1;
            }
            let mut hi = i;
            while hi + 1 < samples.len() && inside(&samples[hi + 1]) {
                hi += 1;
            }
            (samples[lo].0, samples[hi].0)
        })
    };
    let required = (inner + margin, outer - margin);
    let covers = vanishing.is_some_and(|(lo, hi)| lo <= required.0 + 1e-12 && hi >= required.1 - 1e-12);
    let t_after = outer + 0.2;
    let after = (t_after, kirchhoff_eval(&bump, t_after, &centre)?);
    let ramp = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let radial = move |rho: f64| ramp(inner - rho) + ramp(rho - outer);
    let line = ClosureField::new(1, move |x: &[f64]| radial(periodic_distance(&x[..1], &centre[..1])));
    let plane = ClosureField::new(2, move |x: &[f64]| radial(periodic_distance(&x[..2], &centre[..2])));
    let lower_dimensions = vec![
        (1, mid, dalembert_eval(&line, mid, centre[0])?),
        (2, mid, poisson_eval(&plane, mid, &centre[..2])?),
    ];
    Ok(KirchhoffReport { samples, vanishing, required, covers, after, lower_dimensions })
}
