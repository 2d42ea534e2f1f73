//! The subcommands: each turns a validated scenario into an [`Outcome`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kgcontrol::certificate::decompose;
use kgcontrol::experiments::{
    kirchhoff_demo, random_schedule, rates as rate_table, verify_finite_speed, FiniteSpeedSetup, RateOperator,
};
use kgcontrol::state::{energy_distance, energy_norm};
use kgcontrol::strategy::{PlanReport, Planner};
use kgcontrol::{BackgroundPotential, ControlVector, Dispersion, Integrator, Schedule, State, TorusGrid};
use rayon::prelude::*;

use crate::error::{engine_status, ExitStatus, HarnessError};
use crate::report::{
    number, schedule_table, stage_table, trajectory_table, write_outcome, Outcome, ParameterSet, RunHeader, Table,
};
use crate::scenario::{
    self, DispersionName, OperatorName, PlannerKind, RateOperatorName, Scenario, TargetSpec,
};

/// Subcommands of the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Run,
    Rates,
    VerifySpeed,
    Kirchhoff,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Rates => "rates",
            Command::VerifySpeed => "verify-speed",
            Command::Kirchhoff => "kirchhoff",
            Command::Sweep => "sweep",
        }
    }
}

/// Result of [`execute`]: the status and the files written.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
}

/// Directory used when neither the scenario nor the command line sets one.
pub const DEFAULT_OUT_DIR: &str = "kgcontrol-out";

/// Runs `command` and writes its report. Engine failures become a report
/// with the matching exit status; only I/O failures are returned as errors.
pub fn execute(command: Command, scenario: &Scenario) -> Result<Execution, HarnessError> {
    let dir = scenario.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    execute_in(command, scenario, &dir)
}

fn execute_in(command: Command, scenario: &Scenario, dir: &Path) -> Result<Execution, HarnessError> {
    let outcome = match command {
        Command::Sweep => sweep(scenario, dir),
        _ => evaluate(command, scenario),
    };
    let header = header(command, scenario);
    let files = write_outcome(dir, &header, &outcome)?;
    Ok(Execution { outcome, files })
}

/// Computes the outcome of a single-run command without writing anything.
pub fn evaluate(command: Command, scenario: &Scenario) -> Outcome {
    let result = match command {
        Command::Run => run(scenario),
        Command::Rates => rates(scenario),
        Command::VerifySpeed => verify_speed(scenario),
        Command::Kirchhoff => kirchhoff(scenario),
        Command::Sweep => Err(HarnessError::Field { field: "sweep".into(), message: "sweeps do not nest".into() }),
    };
    result.unwrap_or_else(|e| {
        let status = match &e {
            HarnessError::Engine(k) => engine_status(k),
            other => other.status(),
        };
        Outcome::new(status, e.to_string())
    })
}

fn header(command: Command, scenario: &Scenario) -> RunHeader {
    let grid = scenario.make_grid().expect("validated scenarios have a grid");
    let background = scenario.background(&grid).unwrap_or_else(|_| BackgroundPotential::zero(&grid));
    let parameters = ParameterSet::from_plan(&scenario.plan_params(&background));
    RunHeader {
        command: command.name().into(),
        scenario: scenario.name.clone(),
        scenario_hash: scenario.hash(),
        seed: scenario.seed,
        parameters,
    }
}

fn relative(distance: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        distance / norm
    } else {
        distance
    }
}

fn run(s: &Scenario) -> Result<Outcome, HarnessError> {
    let grid = s.make_grid()?;
    let background = s.background(&grid)?;
    let start = s.start(&grid)?;
    match s.planner {
        PlannerKind::Simulate => simulate(s, &start, &background),
        PlannerKind::Compile => compile(s, &start, &background),
        kind => {
            let planner = Planner::new(&background, s.plan_params(&background));
            let eps = s.eps.expect("validated planners carry a tolerance");
            let target = s.target.as_ref().expect("validated planners carry a target");
            let report = match (kind, target) {
                (PlannerKind::Velocity, TargetSpec::Velocity { velocity }) => {
                    planner.plan_velocity(&start, &scenario::field(&grid, "target.velocity", velocity)?, eps)?
                }
                (PlannerKind::ReachZeroPhi, TargetSpec::Phi { phi }) => {
                    planner.plan_reach_zero_phi(&start, &scenario::field(&grid, "target.phi", phi)?, eps)?
                }
                (_, TargetSpec::State { profile, velocity }) => {
                    let goal = scenario::state(&grid, "target", profile, velocity)?;
                    match kind {
                        PlannerKind::Stac => planner.plan_stac(&start, &goal, eps)?,
                        PlannerKind::MinTime => planner.plan_min_time(&start, &goal, eps, s.margin_or_default())?,
                        _ => planner.plan_large_time(&start, &goal, eps, s.margin_or_default())?,
                    }
                }
                _ => unreachable!("targets are validated against planners"),
            };
            Ok(plan_outcome(&start, &report, eps))
        }
    }
}

/// Exit 0 iff the plan met `eps` and every check passed.
pub fn plan_outcome(start: &State, report: &PlanReport, eps: f64) -> Outcome {
    let reached = report.achieved_error <= eps;
    let status = if reached && report.is_clean() { ExitStatus::Success } else { ExitStatus::Flagged };
    let mut problems: Vec<String> = report.failed_checks().iter().map(|c| format!("check failed: {c}")).collect();
    problems.extend(report.flags.iter().cloned());
    if !reached {
        problems.push(format!("achieved error {:.3e} exceeds eps {eps:.3e}", report.achieved_error));
    }
    let message = if problems.is_empty() { "target reached".to_string() } else { problems.join("; ") };
    let mut outcome = Outcome::new(status, message)
        .value("achieved_error", report.achieved_error)
        .value("eps", eps)
        .value("total_time", report.total_time)
        .value("segments", report.schedule.len() as f64)
        .value("max_amplitude", report.schedule.max_amplitude())
        .with_plan(report);
    let rows = kgcontrol::propagators::Trajectory {
        points: vec![(0.0, start.clone()), (report.total_time, report.final_state.clone())],
    }
    .rows();
    outcome.tables = vec![stage_table(report), schedule_table(&report.schedule), trajectory_table(&rows)];
    outcome
}

fn simulate(
    s: &Scenario,
    start: &State,
    background: &BackgroundPotential,
) -> Result<Outcome, HarnessError> {
    let schedule = s.given_schedule()?;
    let trajectory = Integrator::new(background, s.step_rule()).simulate(start, &schedule)?;
    let end = trajectory.final_state();
    let mut outcome = Outcome::new(ExitStatus::Success, "simulated")
        .value("total_time", schedule.total_time())
        .value("segments", schedule.len() as f64)
        .value("final_energy", energy_norm(end));
    if let Some(TargetSpec::State { profile, velocity }) = &s.target {
        let goal = scenario::state(start.grid(), "target", profile, velocity)?;
        let error = energy_distance(end, &goal)?;
        outcome = outcome.value("achieved_error", error);
        if let Some(eps) = s.eps {
            outcome = outcome.value("eps", eps);
            if error > eps {
                outcome.status = ExitStatus::Flagged;
                outcome.message = format!("achieved error {error:.3e} exceeds eps {eps:.3e}");
            }
        }
    }
    outcome.text = format!("{}: {} segments, total time {:.6}\n", outcome.message, schedule.len(), schedule.total_time());
    outcome.tables = vec![schedule_table(&schedule), trajectory_table(&trajectory.rows())];
    Ok(outcome)
}

fn operator_for(s: &Scenario, grid: &TorusGrid) -> Result<RateOperator, HarnessError> {
    let Some(TargetSpec::Operator { op, phi, degree, delta, a }) = &s.target else {
        unreachable!("compile targets are operators")
    };
    Ok(match op {
        OperatorName::ExpB => {
            let src = phi.as_deref().expect("validated");
            RateOperator::ExpB(decompose(&scenario::poly(grid, "target.phi", src, *degree)?))
        }
        OperatorName::ExpF => RateOperator::ExpF(delta.expect("validated")),
        OperatorName::ExpBStar => RateOperator::ExpBStar(a.expect("validated")),
    })
}

fn compile(
    s: &Scenario,
    start: &State,
    background: &BackgroundPotential,
) -> Result<Outcome, HarnessError> {
    let op = operator_for(s, start.grid())?;
    let params = s.synthesis_params(background);
    let schedule = op.compile(start.grid().dim(), params.tau, &params)?;
    let out = Integrator::new(background, s.step_rule()).run(start, &schedule)?;
    let exact = op.exact(start)?;
    let error = energy_distance(&out, &exact)?;
    let mut outcome = Outcome::new(ExitStatus::Success, format!("compiled {}", op.name()))
        .value("achieved_error", error)
        .value("relative_error", relative(error, energy_norm(start)))
        .value("total_time", schedule.total_time())
        .value("segments", schedule.len() as f64)
        .value("max_amplitude", schedule.max_amplitude());
    if let RateOperator::ExpB(cert) = &op {
        outcome = outcome.value("certificate_level", cert.level() as f64);
    }
    if let Some(eps) = s.eps {
        outcome = outcome.value("eps", eps);
        if error > eps {
            outcome.status = ExitStatus::Flagged;
            outcome.message = format!("achieved error {error:.3e} exceeds eps {eps:.3e}");
        }
    }
    outcome.text = format!(
        "{}: {} segments, total time {:.6}, error {error:.3e}\n",
        outcome.message,
        schedule.len(),
        schedule.total_time()
    );
    outcome.tables = vec![schedule_table(&schedule)];
    Ok(outcome)
}

fn rates(s: &Scenario) -> Result<Outcome, HarnessError> {
    let spec = s.rates.as_ref().ok_or_else(|| HarnessError::Field {
        field: "rates".into(),
        message: "the rates command needs a [rates] section".into(),
    })?;
    let grid = s.make_grid()?;
    let background = s.background(&grid)?;
    let start = s.start(&grid)?;
    let op = match spec.operator {
        RateOperatorName::ExpBLeaf => RateOperator::ExpBLeaf(spec.leaf.clone().expect("validated")),
        RateOperatorName::ExpBSquare => {
            RateOperator::ExpBSquare(scenario::poly(&grid, "rates.phi", spec.phi.as_deref().expect("validated"), 1)?)
        }
        RateOperatorName::ExpF => RateOperator::ExpF(spec.delta.expect("validated")),
        RateOperatorName::ExpBStar => RateOperator::ExpBStar(spec.a.expect("validated")),
    };
    let table = rate_table(&op, &spec.taus, &start, &background, &s.synthesis_params(&background), s.step_rule())?;
    let decreasing = table.is_decreasing();
    let mut out = Table::new("rates", &["tau", "relative_error", "order", "schedule_time", "max_amplitude"]);
    let mut text = format!("{} convergence\n", table.operator);
    for r in &table.rows {
        out.push(vec![
            number(r.tau),
            number(r.relative_error),
            r.order.map_or_else(|| "-".into(), number),
            number(r.schedule_time),
            number(r.max_amplitude),
        ]);
        let _ = writeln!(
            text,
            "  tau {:<10.3e} error {:<10.3e} order {}",
            r.tau,
            r.relative_error,
            r.order.map_or_else(|| "-".into(), |o| format!("{o:.2}"))
        );
    }
    let (status, message) = if decreasing {
        (ExitStatus::Success, "errors decrease along the ladder".to_string())
    } else {
        (ExitStatus::Flagged, "errors do not decrease along the ladder".to_string())
    };
    let last = table.rows.last().expect("ladders are nonempty");
    let mut outcome = Outcome::new(status, message).value("final_error", last.relative_error);
    outcome.text = text;
    outcome.tables = vec![out];
    Ok(outcome)
}

fn verify_speed(s: &Scenario) -> Result<Outcome, HarnessError> {
    let spec = s.finite_speed.as_ref().ok_or_else(|| HarnessError::Field {
        field: "finite_speed".into(),
        message: "the verify-speed command needs a [finite_speed] section".into(),
    })?;
    let grid = s.make_grid()?;
    let background = s.background(&grid)?;
    let start = s.start(&grid)?;
    let duration = 0.8 * spec.radius;
    let schedule = if spec.idle {
        let mut idle = Schedule::new(grid.dim());
        idle.push(duration, ControlVector::zero(grid.dim()))?;
        idle
    } else {
        random_schedule(grid.dim(), duration, spec.segment, spec.amplitude, s.seed)?
    };
    let dispersion = match spec.dispersion {
        DispersionName::Massive => Dispersion::Massive,
        DispersionName::Massless => Dispersion::Massless,
        DispersionName::BrokenSquared => Dispersion::BrokenSquared,
    };
    let setup = FiniteSpeedSetup::new(start, spec.centre.clone(), spec.radius, schedule);
    let report = verify_finite_speed(&setup, &background, s.step_rule(), dispersion)?;
    let mut table = Table::new("leakage", &["time", "cone_radius", "leakage", "threshold"]);
    let mut text = String::from("finite-speed cone leakage\n");
    for ((t, r), l) in report.times.iter().zip(&report.cone_radii).zip(&report.leakage) {
        table.push_numbers(&[*t, *r, *l, report.threshold]);
        let _ = writeln!(text, "  t {t:<6.3} cone {r:<8.4} leakage {l:.3e}");
    }
    let (status, message) = if report.passed() {
        (ExitStatus::Success, format!("leakage {:.3e} within {:.1e}", report.worst(), report.threshold))
    } else {
        (ExitStatus::CorrectnessFailure, format!("leakage {:.3e} exceeds {:.1e}", report.worst(), report.threshold))
    };
    let mut outcome = Outcome::new(status, message).value("worst_leakage", report.worst());
    outcome.text = text;
    outcome.tables = vec![table];
    Ok(outcome)
}

fn kirchhoff(s: &Scenario) -> Result<Outcome, HarnessError> {
    let spec = s.kirchhoff.clone().unwrap_or_default();
    let report = kirchhoff_demo(spec.inner, spec.width, spec.margin, spec.step)?;
    let mut table = Table::new("kirchhoff", &["time", "value"]);
    for &(t, w) in &report.samples {
        table.push_numbers(&[t, w]);
    }
    let lower_positive = report.lower_dimensions.iter().all(|&(_, _, v)| v > 0.0);
    let ok = report.covers && report.after.1 > 0.0 && lower_positive;
    let (lo, hi) = report.vanishing.unwrap_or((f64::NAN, f64::NAN));
    let message = if ok {
        format!("w(t, x0) vanishes on [{lo:.3}, {hi:.3}] and is positive after")
    } else {
        format!(
            "expected vanishing on ({:.3}, {:.3}) and positivity after; found {:?}",
            report.required.0, report.required.1, report.vanishing
        )
    };
    let status = if ok { ExitStatus::Success } else { ExitStatus::CorrectnessFailure };
    let mut outcome = Outcome::new(status, message)
        .value("vanishing_from", lo)
        .value("vanishing_to", hi)
        .value("required_from", report.required.0)
        .value("required_to", report.required.1)
        .value("after_time", report.after.0)
        .value("after_value", report.after.1);
    let mut text = format!("{}\n", outcome.message);
    for &(d, t, v) in &report.lower_dimensions {
        outcome = outcome.value(&format!("d{d}_value"), v);
        let _ = writeln!(text, "  d = {d}: w({t:.3}, x0) = {v:.3e}");
    }
    outcome.text = text;
    outcome.tables = vec![table];
    Ok(outcome)
}

/// Cells of the sweep grid as `(name, value)` lists, in key order.
pub fn sweep_cells(s: &Scenario) -> Vec<Vec<(String, f64)>> {
    let params = s.sweep.as_ref().map(|sw| &sw.parameters);
    let Some(params) = params.filter(|p| !p.is_empty() && p.values().all(|v| !v.is_empty())) else {
        return Vec::new();
    };
    let mut cells: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (name, values) in params {
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |&v| {
                    let mut next = cell.clone();
                    next.push((name.clone(), v));
                    next
                })
            })
            .collect();
    }
    cells
}

fn sweep(s: &Scenario, dir: &Path) -> Outcome {
    let cells = sweep_cells(s);
    let names: Vec<String> = s.sweep.iter().flat_map(|sw| sw.parameters.keys().cloned()).collect();
    let rows: Vec<Vec<String>> = cells
        .par_iter()
        .enumerate()
        .map(|(index, cell)| {
            let cell_dir = dir.join(format!("cell-{index:04}"));
            let configured = cell.iter().try_fold(s.clone(), |acc, (name, v)| acc.with_parameter(name, *v));
            let (status, outcome) = match configured {
                Ok(mut cell_scenario) => {
                    if !cell.iter().any(|(n, _)| n == "seed") {
                        cell_scenario.seed = s.seed.wrapping_add(index as u64);
                    }
                    cell_scenario.sweep = None;
                    cell_scenario.output.dir = Some(cell_dir.clone());
                    match execute_in(Command::Run, &cell_scenario, &cell_dir) {
                        Ok(exec) => (exec.outcome.status, exec.outcome),
                        Err(e) => (e.status(), Outcome::new(e.status(), e.to_string())),
                    }
                }
                Err(e) => (e.status(), Outcome::new(e.status(), e.to_string())),
            };
            let mut row = vec![index.to_string()];
            row.extend(cell.iter().map(|(_, v)| number(*v)));
            row.push(status.code().to_string());
            for key in ["achieved_error", "total_time"] {
                row.push(outcome.values.get(key).map_or_else(|| "-".into(), |&v| number(v)));
            }
            row.push(outcome.message.replace(['\t', '\n'], " "));
            row
        })
        .collect();
    let mut columns: Vec<&str> = vec!["cell"];
    columns.extend(names.iter().map(String::as_str));
    columns.extend(["exit_code", "achieved_error", "total_time", "message"]);
    let mut table = Table::new("sweep", &columns);
    for row in rows {
        table.push(row);
    }
    let failed = table.rows.iter().filter(|r| r[names.len() + 1] != "0").count();
    let mut outcome = Outcome::new(ExitStatus::Success, format!("{} cells, {failed} not successful", table.rows.len()))
        .value("cells", table.rows.len() as f64)
        .value("unsuccessful_cells", failed as f64);
    outcome.text = format!("{}\n", outcome.message);
    outcome.tables = vec![table];
    outcome
}
