//! Planners that chain compiled stages into one flat schedule per
//! controllability statement.
//!
//! Every stage is planned from the *simulated* state left by the previous
//! one, so errors of earlier stages are seen (and partly absorbed) by later
//! ones. Error budgets are split evenly between stages.
//!
//! | planner | stages |
//! |---------|--------|
//! | [`Planner::plan_velocity`] | `exp(φB)` with `φ ≈ (ẇ_f − ẇ₀)/w₀` |
//! | [`Planner::plan_stac`] | velocity → profile shift → velocity |
//! | [`Planner::plan_reach_zero_phi`] | velocity → shift → velocity → shift, ending at `(0, φ)` |
//! | [`Planner::plan_min_time`] | preparation → free flight `r + margin/2` → `plan_stac` |
//! | [`Planner::plan_large_time`] | reach `(0, |w₀|)` → free flight `T₁ + margin` → `plan_stac` |

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::certificate::decompose;
use crate::error::{KgError, Result};
use crate::field::{mean, norm_lp, TorusField};
use crate::grid::MAX_DIM;
use crate::propagators::{
    exp_bstar, free_propagate_with, BackgroundPotential, ControlVector, Dispersion, Integrator, Schedule,
    StepRule,
};
use crate::state::{energy_distance, State};
use crate::synthesis::{compile_expb, compile_expbstar, SynthesisParams};
use crate::trigpoly::{fejer_approx, Frequency, TrigPoly};
use crate::zero_sets::{inscribed_radius, state_zero_mask, zero_mask, zero_measure, ZeroMask, DEFAULT_ETA};

/// Number of trial values in [`select_a`].
pub const SELECT_A_SAMPLES: usize = 64;
/// Scan step of [`positivity_time`].
pub const POSITIVITY_STEP: f64 = 0.05;
/// Scan horizon of [`positivity_time`].
pub const POSITIVITY_HORIZON: f64 = 20.0;
/// Relative floor below which a scanned profile does not count as positive.
pub const POSITIVITY_FLOOR: f64 = 1e-10;

/// How a regularized quotient is turned into a trigonometric polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// Least squares weighted by `w₀²`, over frequencies with `|n|₁ ≤ degree`.
    WeightedLeastSquares,
    /// Fejér mean of order `degree`.
    Fejer,
}

/// Ladders and thresholds shared by all planners.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanParams {
    /// Template for every compilation; `tau` is overridden by the ladders.
    pub synthesis: SynthesisParams,
    /// Conjugation times tried for multiplier stages.
    pub tau_ladder: Vec<f64>,
    /// Shrink factors tried for profile-shift stages.
    pub shrink_ladder: Vec<f64>,
    /// Regularizations `λ/‖w₀‖²_∞` of the division step.
    pub lambda_ladder: Vec<f64>,
    /// Multiplier degrees tried, in order.
    pub degree_ladder: Vec<i64>,
    /// Projection of the quotient onto trigonometric polynomials.
    pub projection: Projection,
    /// Relative zero-set threshold for every hypothesis check.
    pub eta: f64,
    /// Time stepping of every simulation.
    pub step_rule: StepRule,
}

impl Default for PlanParams {
    fn default() -> Self {
        PlanParams {
            synthesis: SynthesisParams::new(1e-2),
            tau_ladder: vec![1e-2, 3e-3, 1e-3],
            shrink_ladder: vec![0.1, 0.05, 0.025],
            lambda_ladder: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            degree_ladder: vec![1, 2, 3],
            projection: Projection::WeightedLeastSquares,
            eta: DEFAULT_ETA,
            step_rule: StepRule::default(),
        }
    }
}

/// One row of a plan's stage log.
#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    /// Stage name.
    pub name: String,
    /// The intermediate target, in words.
    pub target: String,
    /// Energy distance between the simulated stage output and its target.
    pub error: f64,
    /// Duration of the stage's schedule.
    pub duration: f64,
    /// The ladder value the stage settled on, if any.
    pub ladder_value: Option<f64>,
}

/// Outcome of one hypothesis check.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisCheck {
    /// What was checked.
    pub name: String,
    /// Whether it held.
    pub passed: bool,
    /// The measured quantity behind the verdict.
    pub value: f64,
}

/// A planned schedule with its simulation results and logs.
#[derive(Clone, Debug)]
pub struct PlanReport {
    /// The flat schedule.
    pub schedule: Schedule,
    /// Simulated final state.
    pub final_state: State,
    /// Energy distance between the final state and the plan's target.
    pub achieved_error: f64,
    /// Total schedule time.
    pub total_time: f64,
    /// Stage log.
    pub stages: Vec<StageRecord>,
    /// Hypothesis checks.
    pub hypotheses: Vec<HypothesisCheck>,
    /// Non-hypothesis warnings (unreachable targets, sign failures).
    pub flags: Vec<String>,
    /// Named scalars worth reporting (radii, bounds, residuals).
    pub metrics: Vec<(String, f64)>,
}

impl PlanReport {
    /// No failed hypothesis and no flag.
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty() && self.hypotheses.iter().all(|h| h.passed)
    }

    /// Sum of the logged stage errors.
    pub fn stage_error_sum(&self) -> f64 {
        self.stages.iter().map(|s| s.error).sum()
    }

    /// Value of a named metric.
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    /// Names of the failed hypothesis checks.
    pub fn failed_checks(&self) -> Vec<&str> {
        self.hypotheses.iter().filter(|h| !h.passed).map(|h| h.name.as_str()).collect()
    }
}

/// Accumulates stages while a plan is being built.
struct Chain {
    start: State,
    state: State,
    schedule: Schedule,
    stages: Vec<StageRecord>,
    hypotheses: Vec<HypothesisCheck>,
    flags: Vec<String>,
    metrics: Vec<(String, f64)>,
}

impl Chain {
    fn new(start: &State) -> Self {
        Chain {
            start: start.clone(),
            state: start.clone(),
            schedule: Schedule::new(start.grid().dim()),
            stages: Vec::new(),
            hypotheses: Vec::new(),
            flags: Vec::new(),
            metrics: Vec::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, value: f64) {
        self.hypotheses.push(HypothesisCheck { name: name.into(), passed, value });
    }

    fn push_stage(&mut self, stage: Stage) -> Result<()> {
        self.schedule.extend(&stage.schedule)?;
        self.state = stage.state;
        self.stages.push(stage.record);
        Ok(())
    }

    fn merge(&mut self, label: &str, sub: PlanReport) -> Result<()> {
        self.schedule.extend(&sub.schedule)?;
        self.state = sub.final_state;
        let rename = |name: &str| format!("{label}: {name}");
        self.stages.extend(sub.stages.into_iter().map(|s| StageRecord { name: rename(&s.name), ..s }));
        self.hypotheses
            .extend(sub.hypotheses.into_iter().map(|h| HypothesisCheck { name: rename(&h.name), ..h }));
        self.flags.extend(sub.flags.into_iter().map(|f| rename(&f)));
        self.metrics.extend(sub.metrics.into_iter().map(|(n, v)| (rename(&n), v)));
        Ok(())
    }

    fn finish(self, integrator: &Integrator, target: &State) -> Result<PlanReport> {
        let final_state = integrator.run(&self.start, &self.schedule)?;
        let achieved_error = energy_distance(&final_state, target)?;
        let total_time = self.schedule.total_time();
        Ok(PlanReport {
            schedule: self.schedule,
            final_state,
            achieved_error,
            total_time,
            stages: self.stages,
            hypotheses: self.hypotheses,
            flags: self.flags,
            metrics: self.metrics,
        })
    }
}

/// A compiled and simulated stage.
struct Stage {
    schedule: Schedule,
    state: State,
    record: StageRecord,
}

/// A multiplier fitted to a velocity change.
#[derive(Clone, Debug)]
pub struct MultiplierFit {
    /// The trigonometric polynomial `φ`.
    pub poly: TrigPoly,
    /// `‖g − φw₀‖_{L²}`.
    pub residual: f64,
    /// Degree ladder value used.
    pub degree: i64,
    /// Relative regularization used.
    pub lambda: f64,
    /// Whether the residual met the requested bound.
    pub accepted: bool,
}

/// Schedules for the controllability statements, simulated with one fixed
/// background potential.
#[derive(Clone, Debug)]
pub struct Planner {
    integrator: Integrator,
    background: BackgroundPotential,
    params: PlanParams,
}

impl Planner {
    /// A planner for the system with background potential `background`.
    pub fn new(background: &BackgroundPotential, params: PlanParams) -> Self {
        Planner {
            integrator: Integrator::new(background, params.step_rule),
            background: background.clone(),
            params,
        }
    }

    /// The simulating integrator.
    pub fn integrator(&self) -> &Integrator {
        &self.integrator
    }

    /// The planner parameters.
    pub fn params(&self) -> &PlanParams {
        &self.params
    }

    fn synthesis(&self, tau: f64) -> SynthesisParams {
        let base = self.params.synthesis.with_background(&self.background);
        SynthesisParams { tau, pulse_time: base.pulse_time.min(tau / 50.0), ..base }
    }

    /// Velocity control: from `W₀` towards `(w₀, velocity)` through one
    /// multiplier flow `exp(φB)`.
    pub fn plan_velocity(&self, start: &State, velocity: &TorusField, eps: f64) -> Result<PlanReport> {
        let target = State::new(start.profile().clone(), velocity.clone())?;
        let mut chain = Chain::new(start);
        let change = velocity.sub(start.velocity())?;
        let uncovered = uncovered_measure(&zero_mask(start.profile(), self.params.eta), &zero_mask(&change, self.params.eta));
        chain.check("velocity change vanishes on Z(w0)", uncovered == 0.0, uncovered);
        if norm_lp(&change, f64::INFINITY)? == 0.0 {
            return chain.finish(&self.integrator, &target);
        }
        let fit = self.fit_multiplier(start.profile(), &change, eps / 2.0)?;
        chain.metrics.push(("division residual".into(), fit.residual));
        chain.metrics.push(("multiplier degree".into(), fit.degree as f64));
        chain.metrics.push(("division lambda".into(), fit.lambda));
        if !fit.accepted {
            chain.flags.push(format!(
                "target unreachable: division residual {:.3e} exceeds {:.3e} for every ladder value",
                fit.residual,
                eps / 2.0
            ));
        }
        let stage = self.multiplier_stage(start, &fit.poly, &target)?;
        chain.push_stage(stage)?;
        chain.finish(&self.integrator, &target)
    }

    /// Regularized division `φ = w₀g/(w₀² + λ‖w₀‖²_∞)` followed by projection
    /// onto trigonometric polynomials; the first degree whose best residual
    /// `‖g − φw₀‖` is below `bound` wins, otherwise the overall best fit is
    /// returned unaccepted.
    pub fn fit_multiplier(&self, profile: &TorusField, change: &TorusField, bound: f64) -> Result<MultiplierFit> {
        let grid = profile.grid();
        let peak = norm_lp(profile, f64::INFINITY)?;
        let zero_fit = || MultiplierFit {
            poly: TrigPoly::zero(grid.dim()),
            residual: norm_lp(change, 2.0).unwrap_or(f64::INFINITY),
            degree: 0,
            lambda: 0.0,
            accepted: false,
        };
        if peak == 0.0 {
            return Ok(zero_fit());
        }
        let mut best: Option<MultiplierFit> = None;
        for &degree in &self.params.degree_ladder {
            if 2 * degree >= grid.points_per_axis() as i64 {
                continue;
            }
            let mut level_best: Option<MultiplierFit> = None;
            for &lambda in &self.params.lambda_ladder {
                let reg = lambda * peak * peak;
                let quotient = TorusField::from_physical(
                    grid,
                    profile.physical().iter().zip(change.physical()).map(|(w, g)| w * g / (w * w + reg)).collect(),
                )?;
                let poly = match self.params.projection {
                    Projection::WeightedLeastSquares => weighted_projection(&quotient, profile, degree)?,
                    Projection::Fejer => fejer_approx(&quotient, degree as usize),
                };
                let Ok(field) = poly.to_field(grid) else { continue };
                let residual = norm_lp(&change.sub(&field.mul(profile)?)?, 2.0)?;
                if level_best.as_ref().is_none_or(|b| residual < b.residual) {
                    level_best = Some(MultiplierFit { poly, residual, degree, lambda, accepted: residual < bound });
                }
            }
            if let Some(fit) = level_best {
                if fit.accepted {
                    return Ok(fit);
                }
                if best.as_ref().is_none_or(|b| fit.residual < b.residual) {
                    best = Some(fit);
                }
            }
        }
        Ok(best.unwrap_or_else(zero_fit))
    }

    /// Compiles `exp(φB)` over the τ ladder and keeps the candidate closest
    /// to `target` (ties go to the earlier ladder entry).
    fn multiplier_stage(&self, start: &State, poly: &TrigPoly, target: &State) -> Result<Stage> {
        let cert = decompose(poly);
        let candidates = self.params.tau_ladder.par_iter().map(|&tau| {
            let schedule = compile_expb(&cert, &self.synthesis(tau))?;
            let state = self.integrator.run(start, &schedule)?;
            let error = energy_distance(&state, target)?;
            Ok((tau, schedule, state, error))
        });
        let (tau, schedule, state, error) = pick_best(candidates.collect())?;
        let record = StageRecord {
            name: "velocity".into(),
            target: format!("exp(phi B) with phi of degree {} (level {})", poly.degree(), cert.level()),
            error,
            duration: schedule.total_time(),
            ladder_value: Some(tau),
        };
        Ok(Stage { schedule, state, record })
    }

    /// Compiles the profile shift `exp(aB*)` over the shrink ladder.
    fn shift_stage(&self, start: &State, a: f64, name: &str) -> Result<Stage> {
        let dim = start.grid().dim();
        let target = exp_bstar(start, a);
        let candidates = self.params.shrink_ladder.par_iter().map(|&shrink| {
            let schedule = compile_expbstar(dim, a, &self.synthesis(shrink))?;
            let state = self.integrator.run(start, &schedule)?;
            let error = energy_distance(&state, &target)?;
            Ok((shrink, schedule, state, error))
        });
        let (shrink, schedule, state, error) = pick_best(candidates.collect())?;
        let record = StageRecord {
            name: name.into(),
            target: format!("exp({a} B*)"),
            error,
            duration: schedule.total_time(),
            ladder_value: Some(shrink),
        };
        Ok(Stage { schedule, state, record })
    }

    /// Free flight of length `duration` under the control `u = e₀` (the
    /// massless drift when `V = 0`).
    fn free_stage(&self, start: &State, duration: f64) -> Result<Stage> {
        let dim = start.grid().dim();
        let mut schedule = Schedule::new(dim);
        if duration > 0.0 {
            schedule.push(duration, ControlVector::unit(dim, 0, 1.0))?;
        }
        let state = self.integrator.run(start, &schedule)?;
        let exact = free_propagate_with(start, duration, Dispersion::Massless);
        let record = StageRecord {
            name: "free flight".into(),
            target: format!("massless flow for t = {duration:.6}"),
            error: energy_distance(&state, &exact)?,
            duration,
            ladder_value: None,
        };
        Ok(Stage { schedule, state, record })
    }

    /// Small-time plan `(w₀, ẇ₀) → (w₀, w_f − w₀) → (w_f, w_f − w₀) → (w_f, ẇ_f)`,
    /// preceded by a profile shift `exp(aB*)` when `w₀` has zeros.
    pub fn plan_stac(&self, start: &State, target: &State, eps: f64) -> Result<PlanReport> {
        let mut chain = Chain::new(start);
        if energy_distance(start, target)? == 0.0 {
            return chain.finish(&self.integrator, target);
        }
        let eta = self.params.eta;
        let profile_zeros = zero_measure(&zero_mask(start.profile(), eta));
        if profile_zeros > 0.0 {
            let joint = zero_measure(&state_zero_mask(start, eta));
            chain.check("|Z(W0)| = 0", joint == 0.0, joint);
            let a = select_a(start, eta)?;
            chain.metrics.push(("selected a".into(), a));
            let stage = self.shift_stage(&chain.state, a, "select a")?;
            chain.push_stage(stage)?;
        } else {
            chain.check("|Z(w0)| = 0", true, profile_zeros);
        }
        let share = eps / 3.0;
        let towards = target.profile().sub(chain.state.profile())?;
        let first = self.plan_velocity(&chain.state, &towards, share)?;
        chain.merge("1", first)?;
        let stage = self.shift_stage(&chain.state, 1.0, "2: profile shift")?;
        chain.push_stage(stage)?;
        let last = self.plan_velocity(&chain.state, target.velocity(), share)?;
        chain.merge("3", last)?;
        let report = chain.finish(&self.integrator, target)?;
        Ok(with_budget_check(report))
    }

    /// Plan to `(0, φ)`: `W₀ → (w₀, −φ−w₀) → (−φ, −φ−w₀) → (−φ, φ) → (0, φ)`.
    pub fn plan_reach_zero_phi(&self, start: &State, phi: &TorusField, eps: f64) -> Result<PlanReport> {
        let target = State::new(TorusField::zeros(start.grid()), phi.clone())?;
        let mut chain = Chain::new(start);
        let eta = self.params.eta;
        let profile_mask = zero_mask(start.profile(), eta);
        let joint = state_zero_mask(start, eta);
        let phi_mask = zero_mask(phi, eta);
        let mismatch =
            (profile_mask.symmetric_difference_count(&joint) + joint.symmetric_difference_count(&phi_mask)) as f64
                * start.grid().cell_volume();
        chain.check("Z(w0) = Z(W0) = Z(phi)", mismatch == 0.0, mismatch);
        if profile_mask.is_degenerate() {
            let gap = norm_lp(&start.velocity().sub(phi)?, 2.0)?;
            if gap > eps {
                chain.flags.push(format!("zero profile: velocity is {gap:.3e} away from phi and cannot be steered"));
            }
            return chain.finish(&self.integrator, &target);
        }
        let share = eps / 4.0;
        let first_velocity = phi.add(start.profile())?.scale(-1.0);
        let first = self.plan_velocity(&chain.state, &first_velocity, share)?;
        chain.merge("1", first)?;
        let stage = self.shift_stage(&chain.state, 1.0, "2: profile shift")?;
        chain.push_stage(stage)?;
        let third = self.plan_velocity(&chain.state, phi, share)?;
        chain.merge("3", third)?;
        let stage = self.shift_stage(&chain.state, 1.0, "4: profile shift")?;
        chain.push_stage(stage)?;
        let report = chain.finish(&self.integrator, &target)?;
        Ok(with_budget_check(report))
    }

    /// Minimal-time plan for `d ∈ {1, 2}` and `V = 0`: bring `W₀` to the form
    /// `(0, ±|·|)` if needed, fly freely for `r(W₀) + margin/2`, where the
    /// profile has become one-signed, then run [`Planner::plan_stac`].
    pub fn plan_min_time(&self, start: &State, target: &State, eps: f64, margin: f64) -> Result<PlanReport> {
        let dim = start.grid().dim();
        if dim > 2 {
            return Err(KgError::InvalidArgument(format!(
                "minimal-time planning needs d <= 2 (got {dim}); use plan_large_time"
            )));
        }
        if !self.background.is_zero() {
            return Err(KgError::InvalidArgument("minimal-time planning needs V = 0".into()));
        }
        let eta = self.params.eta;
        let mut chain = Chain::new(start);
        let radius = inscribed_radius(&state_zero_mask(start, eta));
        chain.metrics.push(("r(W0)".into(), radius));
        if radius == 0.0 {
            let tail = self.plan_stac(start, target, eps)?;
            chain.merge("stac", tail)?;
            let report = chain.finish(&self.integrator, target)?;
            return Ok(with_time_check(report, radius, margin));
        }
        if !zero_mask(chain.state.profile(), eta).is_degenerate() {
            if zero_mask(chain.state.profile(), eta).symmetric_difference_count(&state_zero_mask(&chain.state, eta)) != 0
            {
                let a = select_a(&chain.state, eta)?;
                chain.metrics.push(("selected a".into(), a));
                let stage = self.shift_stage(&chain.state, a, "select a")?;
                chain.push_stage(stage)?;
            }
            let phi = chain.state.profile().map_physical(|v| -v.abs());
            let prep = self.plan_reach_zero_phi(&chain.state, &phi, eps / 2.0)?;
            chain.merge("prepare", prep)?;
        }
        let velocity = chain.state.velocity().clone();
        let (lo, hi) = (velocity.min(), velocity.max());
        let one_signed = lo >= -eta * hi.abs().max(lo.abs()) || hi <= eta * hi.abs().max(lo.abs());
        chain.check("velocity of one sign", one_signed, lo.min(-hi));
        let stage = self.free_stage(&chain.state, radius + margin / 2.0)?;
        chain.push_stage(stage)?;
        let signed = profile_is_one_signed(chain.state.profile());
        chain.check("profile of one sign after free flight", signed, chain.state.profile().min());
        let tail = self.plan_stac(&chain.state, target, eps)?;
        chain.merge("stac", tail)?;
        let report = chain.finish(&self.integrator, target)?;
        Ok(with_time_check(report, radius, margin))
    }

    /// Large-time plan for any `d` and `V = 0`: reach `(0, |w₀|)` (skipped when
    /// `w₀ = 0`), fly freely for `T₁ + margin` with `T₁` from
    /// [`large_time_bound`], then run [`Planner::plan_stac`].
    pub fn plan_large_time(&self, start: &State, target: &State, eps: f64, margin: f64) -> Result<PlanReport> {
        if !self.background.is_zero() {
            return Err(KgError::InvalidArgument("large-time planning needs V = 0".into()));
        }
        let mut chain = Chain::new(start);
        let velocity = if zero_mask(start.profile(), self.params.eta).is_degenerate() {
            start.velocity().clone()
        } else {
            let phi = start.profile().map_physical(f64::abs);
            let prep = self.plan_reach_zero_phi(start, &phi, eps / 2.0)?;
            chain.merge("prepare", prep)?;
            phi
        };
        let bound = large_time_bound(&velocity)?;
        chain.metrics.push(("c0".into(), bound.mean));
        chain.metrics.push(("M".into(), bound.fourier_sum));
        chain.metrics.push(("T1".into(), bound.t1));
        let stage = self.free_stage(&chain.state, bound.t1 + margin)?;
        chain.push_stage(stage)?;
        let signed = profile_is_one_signed(chain.state.profile());
        chain.check("profile of one sign after free flight", signed, chain.state.profile().min());
        let tail = self.plan_stac(&chain.state, target, eps)?;
        chain.merge("stac", tail)?;
        chain.finish(&self.integrator, target)
    }
}

fn profile_is_one_signed(profile: &TorusField) -> bool {
    profile.min() > 0.0 || profile.max() < 0.0
}

fn with_budget_check(mut report: PlanReport) -> PlanReport {
    let sum = report.stage_error_sum();
    report.hypotheses.push(HypothesisCheck {
        name: "achieved error within the sum of stage errors".into(),
        passed: report.achieved_error <= sum * (1.0 + 1e-9) + 1e-14,
        value: report.achieved_error - sum,
    });
    report
}

fn with_time_check(mut report: PlanReport, radius: f64, margin: f64) -> PlanReport {
    let excess = report.total_time - radius;
    report.metrics.push(("total_time - r(W0)".into(), excess));
    report.hypotheses.push(HypothesisCheck {
        name: "total_time <= r(W0) + margin".into(),
        passed: excess <= margin,
        value: excess,
    });
    report
}

/// Best candidate by error; ties keep ladder order. Candidates that fail to
/// compile are skipped; the first failure is returned when none compiled.
fn pick_best(candidates: Vec<Result<(f64, Schedule, State, f64)>>) -> Result<(f64, Schedule, State, f64)> {
    let mut best: Option<(f64, Schedule, State, f64)> = None;
    let mut first_error = None;
    for candidate in candidates {
        match candidate {
            Ok(c) => {
                if best.as_ref().is_none_or(|b| c.3 < b.3) {
                    best = Some(c);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_error.unwrap_or_else(|| KgError::InvalidArgument("empty ladder".into())))
}

/// Measure of the points of `zeros` not covered by `cover`.
fn uncovered_measure(zeros: &ZeroMask, cover: &ZeroMask) -> f64 {
    let count = zeros.values().iter().zip(cover.values()).filter(|&(&z, &c)| z && !c).count();
    count as f64 * zeros.grid().cell_volume()
}

/// Canonical frequencies with `1 ≤ |n|₁ ≤ degree` in dimension `dim`.
fn frequencies_up_to(dim: usize, degree: i64) -> Vec<Frequency> {
    let mut out = Vec::new();
    let range = -degree..=degree;
    let axis = |i: usize| if i < dim { range.clone().collect::<Vec<_>>() } else { vec![0] };
    for a in axis(0) {
        for b in axis(1) {
            for c in axis(2) {
                let n: Frequency = [a, b, c];
                let l1: i64 = n.iter().map(|v| v.abs()).sum();
                let first = n.iter().copied().find(|&v| v != 0);
                if l1 >= 1 && l1 <= degree && first.is_some_and(|v| v > 0) {
                    out.push(n);
                }
            }
        }
    }
    out
}

/// Least-squares fit of `quotient` by a polynomial with `|n|₁ ≤ degree`,
/// weighted pointwise by `profile²`.
fn weighted_projection(quotient: &TorusField, profile: &TorusField, degree: i64) -> Result<TrigPoly> {
    let grid = quotient.grid();
    let dim = grid.dim();
    let freqs = frequencies_up_to(dim, degree);
    let size = 1 + 2 * freqs.len();
    let mut normal = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    let mut row = vec![0.0; size];
    let floor = 1e-12 * norm_lp(profile, f64::INFINITY)?.powi(2);
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        let weight = profile.physical()[idx].powi(2) + floor;
        row[0] = 1.0;
        for (k, n) in freqs.iter().enumerate() {
            let phase: f64 = (0..MAX_DIM).map(|i| n[i] as f64 * x[i]).sum();
            row[1 + 2 * k] = phase.cos();
            row[2 + 2 * k] = phase.sin();
        }
        let q = quotient.physical()[idx];
        for a in 0..size {
            let wa = weight * row[a];
            rhs[a] += wa * q;
            for b in a..size {
                normal[(a, b)] += wa * row[b];
            }
        }
    }
    for a in 0..size {
        for b in 0..a {
            normal[(a, b)] = normal[(b, a)];
        }
    }
    let ridge = 1e-13 * normal.trace() / size as f64;
    for a in 0..size {
        normal[(a, a)] += ridge;
    }
    let coeffs = normal
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| normal.lu().solve(&rhs))
        .ok_or_else(|| KgError::StageFailed { stage: "projection".into(), message: "singular normal matrix".into() })?;
    let mut poly = TrigPoly::constant(dim, coeffs[0]);
    for (k, n) in freqs.iter().enumerate() {
        poly = poly.add(&TrigPoly::harmonic(dim, *n, coeffs[1 + 2 * k], coeffs[2 + 2 * k]));
    }
    Ok(poly.pruned(1e-14 * poly.coefficient_l1()))
}

/// A coefficient `a > 0` with `|Z(w₀ + aẇ₀)|` as close as the scan gets to
/// `|Z(W₀)|`: 64 equispaced values in `(0, 2‖w₀‖/(‖ẇ₀‖ + tiny)]`, ties to
/// the smallest. Returns 1 when `ẇ₀ = 0`.
pub fn select_a(start: &State, eta: f64) -> Result<f64> {
    let profile_norm = norm_lp(start.profile(), 2.0)?;
    let velocity_norm = norm_lp(start.velocity(), 2.0)?;
    if profile_norm == 0.0 && velocity_norm == 0.0 {
        return Err(KgError::InvalidArgument("select_a needs a nonzero state".into()));
    }
    if velocity_norm == 0.0 {
        return Ok(1.0);
    }
    let joint = zero_measure(&state_zero_mask(start, eta));
    let span = 2.0 * profile_norm.max(velocity_norm * 1e-3) / (velocity_norm + f64::MIN_POSITIVE);
    let gaps: Vec<(f64, f64)> = (1..=SELECT_A_SAMPLES)
        .into_par_iter()
        .map(|i| {
            let a = span * i as f64 / SELECT_A_SAMPLES as f64;
            let combined = start.profile().axpy(a, start.velocity()).expect("same grid");
            (a, zero_measure(&zero_mask(&combined, eta)) - joint)
        })
        .collect();
    let mut best = gaps[0];
    for &(a, gap) in &gaps[1..] {
        if gap < best.1 {
            best = (a, gap);
        }
    }
    Ok(best.0)
}

/// The large-time positivity bound for a velocity with positive mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LargeTimeBound {
    /// `c₀`, the mean.
    pub mean: f64,
    /// `M = Σ_{n≠0} |c_n|/|n|` over the complex Fourier coefficients.
    pub fourier_sum: f64,
    /// `T₁ = M/c₀`.
    pub t1: f64,
}

/// `T₁ = M/c₀` such that the massless free profile from `(0, ẇ₀)` is positive
/// for every `t > T₁`: `w(t) = c₀t + Σ_{n≠0} c_n sin(|n|t)/|n| e^{in·x}`.
pub fn large_time_bound(velocity: &TorusField) -> Result<LargeTimeBound> {
    let grid = velocity.grid();
    let mean = mean(velocity);
    if !(mean > 0.0) {
        return Err(KgError::InvalidArgument(format!("large-time bound needs a positive mean velocity, got {mean}")));
    }
    let norms = grid.norm_sq_table();
    let fourier_sum: f64 = velocity
        .spectral()
        .iter()
        .zip(norms)
        .filter(|(_, &n2)| n2 > 0.0)
        .map(|(c, &n2)| c.norm() / n2.sqrt())
        .sum();
    Ok(LargeTimeBound { mean, fourier_sum, t1: fourier_sum / mean })
}

/// Result of [`positivity_time`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivityReport {
    /// First scanned time with a positive profile, if any within the horizon.
    pub time: Option<f64>,
    /// Inscribed radius of the velocity's zero set.
    pub inscribed_radius: f64,
    /// The bound `T₁`, when the mean is positive.
    pub bound: Option<f64>,
}

/// Smallest `t` on the grid `0.05, 0.10, …, 20` at which the massless free
/// profile from `(0, ẇ₀)` is positive at every grid point (above
/// `POSITIVITY_FLOOR · max|w|`, which keeps roundoff from deciding).
pub fn positivity_time(velocity: &TorusField, eta: f64) -> Result<PositivityReport> {
    let peak = norm_lp(velocity, f64::INFINITY)?;
    if peak == 0.0 {
        return Err(KgError::InvalidArgument("positivity time of a zero velocity".into()));
    }
    if velocity.min() < -eta * peak {
        return Err(KgError::InvalidArgument(format!(
            "velocity must be nonnegative up to the threshold, minimum {}",
            velocity.min()
        )));
    }
    let start = State::new(TorusField::zeros(velocity.grid()), velocity.clone())?;
    let steps = (POSITIVITY_HORIZON / POSITIVITY_STEP).round() as usize;
    let time = (1..=steps).map(|k| k as f64 * POSITIVITY_STEP).find(|&t| {
        let profile = free_propagate_with(&start, t, Dispersion::Massless).into_parts().0;
        let top = norm_lp(&profile, f64::INFINITY).unwrap_or(0.0);
        profile.min() > POSITIVITY_FLOOR * top
    });
    Ok(PositivityReport {
        time,
        inscribed_radius: inscribed_radius(&zero_mask(velocity, eta)),
        bound: large_time_bound(velocity).ok().map(|b| b.t1),
    })
}
