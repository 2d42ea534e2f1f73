//! Versioned output files: tab-separated tables and a TOML summary.
//!
//! Every file starts with `# kgcontrol-<kind> v<version>`. Numbers are
//! written in shortest round-trip exponent form, so identical runs give
//! identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kgcontrol::propagators::TrajectoryRow;
use kgcontrol::strategy::{PlanParams, PlanReport, Projection};
use kgcontrol::Schedule;
use serde::Serialize;

use crate::error::{ExitStatus, HarnessError};

/// Version of every output format written by this build.
pub const OUTPUT_VERSION: u32 = 1;

pub fn number(x: f64) -> String {
    format!("{x:e}")
}

/// A columnar table bound for `<kind>.tsv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Table { kind: kind.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| number(x)).collect());
    }

    pub fn file_name(&self) -> String {
        format!("{}.tsv", self.kind)
    }

    pub fn render(&self) -> String {
        let mut out = format!("# kgcontrol-{} v{OUTPUT_VERSION}\n", self.kind);
        out.push_str(&self.columns.join("\t"));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Parses a rendered table back (header checked, cells as strings).
    pub fn parse(text: &str) -> Option<Table> {
        let mut lines = text.lines();
        let header = lines.next()?.strip_prefix("# kgcontrol-")?;
        let (kind, version) = header.split_once(" v")?;
        if version.parse::<u32>().ok()? != OUTPUT_VERSION {
            return None;
        }
        let columns: Vec<String> = lines.next()?.split('\t').map(String::from).collect();
        let rows = lines.map(|l| l.split('\t').map(String::from).collect()).collect();
        Some(Table { kind: kind.into(), columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

pub fn schedule_table(schedule: &Schedule) -> Table {
    let controls = 2 * schedule.dim() + 1;
    let mut columns = vec!["start".to_string(), "duration".to_string()];
    columns.extend((0..controls).map(|j| format!("u{j}")));
    let mut table = Table { kind: "schedule".into(), columns, rows: Vec::new() };
    let mut clock = 0.0;
    for seg in schedule.segments() {
        let mut row = vec![number(clock), number(seg.duration)];
        row.extend(seg.control.values().iter().map(|&u| number(u)));
        table.push(row);
        clock += seg.duration;
    }
    table
}

pub fn trajectory_table(rows: &[TrajectoryRow]) -> Table {
    let mut table = Table::new("trajectory", &["time", "energy", "profile_h1", "velocity_l2", "profile_min"]);
    for r in rows {
        table.push_numbers(&[r.time, r.energy, r.profile_h1, r.velocity_l2, r.profile_min]);
    }
    table
}

pub fn stage_table(report: &PlanReport) -> Table {
    let mut table = Table::new("stages", &["stage", "target", "start", "duration", "error", "ladder_value"]);
    let mut clock = 0.0;
    for s in &report.stages {
        table.push(vec![
            s.name.clone(),
            s.target.clone(),
            number(clock),
            number(s.duration),
            number(s.error),
            s.ladder_value.map_or_else(|| "-".into(), number),
        ]);
        clock += s.duration;
    }
    table
}

/// The design parameters in force, embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterSet {
    pub eta: f64,
    pub lambda_ladder: Vec<f64>,
    pub tau_ladder: Vec<f64>,
    pub shrink_ladder: Vec<f64>,
    pub degree_ladder: Vec<i64>,
    pub projection: &'static str,
    pub dt_rule: String,
    pub synthesis_tau: f64,
    pub pulse_time: f64,
    pub amplitude_cap: f64,
    pub nest_ratio: f64,
    pub dilation_gain: f64,
}

impl ParameterSet {
    pub fn from_plan(params: &PlanParams) -> Self {
        let rule = params.step_rule;
        let dt_rule = match rule.dt {
            Some(dt) => format!("dt = {dt:e}"),
            None => "dt = min(segment, 2pi/(4N))".into(),
        } + &format!(
            "; at least {} steps above |m| = {:e}; h*sqrt(max|m|) <= {}",
            rule.stiff_min_steps, rule.stiff_amplitude, rule.max_phase_per_step
        );
        ParameterSet {
            eta: params.eta,
            lambda_ladder: params.lambda_ladder.clone(),
            tau_ladder: params.tau_ladder.clone(),
            shrink_ladder: params.shrink_ladder.clone(),
            degree_ladder: params.degree_ladder.clone(),
            projection: match params.projection {
                Projection::WeightedLeastSquares => "weighted-least-squares",
                Projection::Fejer => "fejer",
            },
            dt_rule,
            synthesis_tau: params.synthesis.tau,
            pulse_time: params.synthesis.pulse_time,
            amplitude_cap: params.synthesis.cap,
            nest_ratio: params.synthesis.nest_ratio,
            dilation_gain: params.synthesis.dilation_gain,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRow {
    pub name: String,
    pub target: String,
    pub error: f64,
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub value: f64,
}

/// Everything a subcommand produced, before it is written.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub status: ExitStatus,
    pub message: String,
    pub values: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub stages: Vec<StageRow>,
    pub checks: Vec<CheckRow>,
    pub tables: Vec<Table>,
    /// Human-readable rendering for the terminal.
    pub text: String,
}

impl Outcome {
    pub fn new(status: ExitStatus, message: impl Into<String>) -> Self {
        Outcome {
            status,
            message: message.into(),
            values: BTreeMap::new(),
            flags: Vec::new(),
            stages: Vec::new(),
            checks: Vec::new(),
            tables: Vec::new(),
            text: String::new(),
        }
    }

    pub fn value(mut self, name: &str, v: f64) -> Self {
        self.values.insert(name.into(), v);
        self
    }

    /// Copies the stage log, checks, flags and metrics of a plan.
    pub fn with_plan(mut self, report: &PlanReport) -> Self {
        self.stages = report
            .stages
            .iter()
            .map(|s| StageRow { name: s.name.clone(), target: s.target.clone(), error: s.error, duration: s.duration })
            .collect();
        self.checks =
            report.hypotheses.iter().map(|h| CheckRow { name: h.name.clone(), passed: h.passed, value: h.value }).collect();
        self.flags = report.flags.clone();
        for (name, v) in &report.metrics {
            self.values.insert(name.clone(), *v);
        }
        self.text = render_plan(report);
        self
    }
}

#[derive(Serialize)]
struct Document<'a> {
    format: String,
    command: &'a str,
    scenario: &'a str,
    scenario_hash: &'a str,
    seed: u64,
    exit_code: u8,
    status: &'static str,
    message: &'a str,
    flags: &'a [String],
    files: Vec<String>,
    values: &'a BTreeMap<String, f64>,
    parameters: &'a ParameterSet,
    stages: &'a [StageRow],
    checks: &'a [CheckRow],
}

/// Identifies the run a report belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct RunHeader {
    pub command: String,
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub parameters: ParameterSet,
}

pub fn render_summary(header: &RunHeader, outcome: &Outcome) -> String {
    let files = outcome.tables.iter().map(Table::file_name).collect();
    let doc = Document {
        format: format!("kgcontrol-report/{OUTPUT_VERSION}"),
        command: &header.command,
        scenario: &header.scenario,
        scenario_hash: &header.scenario_hash,
        seed: header.seed,
        exit_code: outcome.status.code(),
        status: outcome.status.label(),
        message: &outcome.message,
        flags: &outcome.flags,
        files,
        values: &outcome.values,
        parameters: &header.parameters,
        stages: &outcome.stages,
        checks: &outcome.checks,
    };
    let body = toml::to_string(&doc).expect("report documents always serialize");
    format!("# kgcontrol-report v{OUTPUT_VERSION}\n{body}")
}

/// Writes `report.toml` and every table into `dir`; returns the paths.
pub fn write_outcome(dir: &Path, header: &RunHeader, outcome: &Outcome) -> Result<Vec<PathBuf>, HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    let summary = dir.join("report.toml");
    std::fs::write(&summary, render_summary(header, outcome)).map_err(io(&summary))?;
    written.push(summary);
    for table in &outcome.tables {
        let path = dir.join(table.file_name());
        std::fs::write(&path, table.render()).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

pub fn render_plan(report: &PlanReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "plan: {} stages, {} segments, total time {:.6}, achieved error {:.3e}",
        report.stages.len(),
        report.schedule.len(),
        report.total_time,
        report.achieved_error
    );
    for s in &report.stages {
        let _ = writeln!(out, "  stage {:<28} error {:.3e}  duration {:.6}  ({})", s.name, s.error, s.duration, s.target);
    }
    for h in &report.hypotheses {
        let mark = if h.passed { "ok" } else { "FAILED" };
        let _ = writeln!(out, "  check {:<40} {mark} ({:.3e})", h.name, h.value);
    }
    for f in &report.flags {
        let _ = writeln!(out, "  flag  {f}");
    }
    out
}
