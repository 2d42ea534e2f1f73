//! Scenario files: TOML documents describing one experiment.
//!
//! ```toml
//! name = "velocity"
//! planner = "velocity"
//! eps = 0.05
//!
//! [grid]
//! dim = 1
//! n = 64
//!
//! [start]
//! profile = "1"
//! velocity = "0"
//!
//! [target]
//! kind = "velocity"
//! velocity = "sin(x)"
//! ```
//!
//! Fields are field-language expressions (see [`kgcontrol::expr`]). Every
//! tolerance `eps` is absolute, in the energy norm.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kgcontrol::strategy::{PlanParams, Projection};
use kgcontrol::synthesis::SynthesisParams;
use kgcontrol::trigpoly::TrigPoly;
use kgcontrol::{make_field, BackgroundPotential, ControlVector, Schedule, State, StepRule, TorusField, TorusGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;

/// Version of the scenario format understood by this build.
pub const SCENARIO_FORMAT: u32 = 1;

/// Parameters a sweep may vary.
pub const SWEEP_PARAMETERS: [&str; 6] = ["dt", "eps", "eta", "n", "seed", "tau"];

/// One experiment. Plain keys precede tables so the document re-serializes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_format")]
    pub format: u32,
    #[serde(default)]
    pub name: String,
    /// Fixes every random choice of the run.
    #[serde(default)]
    pub seed: u64,
    /// Background potential `V`; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default)]
    pub planner: PlannerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Extra time allowed beyond the geometric bound (`min-time`,
    /// `large-time`); defaults to 0.1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub grid: GridSpec,
    #[serde(default)]
    pub start: StateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub synthesis: SynthesisSpec,
    #[serde(default)]
    pub plan: PlanSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_speed: Option<FiniteSpeedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kirchhoff: Option<KirchhoffSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Segments applied by the `simulate` planner.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<SegmentSpec>,
}

fn default_format() -> u32 {
    SCENARIO_FORMAT
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default = "zero_expr")]
    pub profile: String,
    #[serde(default = "zero_expr")]
    pub velocity: String,
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec { profile: zero_expr(), velocity: zero_expr() }
    }
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    /// Applies `[[schedule]]` as given.
    #[default]
    Simulate,
    /// Compiles the operator target and compares with its exact action.
    Compile,
    Velocity,
    Stac,
    ReachZeroPhi,
    MinTime,
    LargeTime,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Simulate => "simulate",
            PlannerKind::Compile => "compile",
            PlannerKind::Velocity => "velocity",
            PlannerKind::Stac => "stac",
            PlannerKind::ReachZeroPhi => "reach-zero-phi",
            PlannerKind::MinTime => "min-time",
            PlannerKind::LargeTime => "large-time",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    State {
        profile: String,
        velocity: String,
    },
    /// Velocity-only target for the `velocity` planner.
    Velocity {
        velocity: String,
    },
    /// `(0, φ)` for `reach-zero-phi`.
    Phi {
        phi: String,
    },
    /// An operator whose exact action `compile` reproduces.
    Operator {
        op: OperatorName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<String>,
        /// Band used to read `phi` as a trigonometric polynomial.
        #[serde(default = "default_degree")]
        degree: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
    },
}

fn default_degree() -> i64 {
    4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorName {
    #[serde(rename = "expB")]
    ExpB,
    #[serde(rename = "expF")]
    ExpF,
    #[serde(rename = "expBstar")]
    ExpBStar,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nest_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation_gain: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionName {
    WeightedLeastSquares,
    Fejer,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shrink_ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_ladder: Option<Vec<i64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateOperatorName {
    #[serde(rename = "expB-leaf")]
    ExpBLeaf,
    #[serde(rename = "expB-square")]
    ExpBSquare,
    #[serde(rename = "expF")]
    ExpF,
    #[serde(rename = "expBstar")]
    ExpBStar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSpec {
    pub operator: RateOperatorName,
    /// Strictly decreasing conjugation times.
    pub taus: Vec<f64>,
    /// Leaf coefficients on `(1, sin x₁, cos x₁, …)` for `expB-leaf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf: Option<Vec<f64>>,
    /// `ψ` of `exp_B(−ψ²)` for `expB-square`, read in the control band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionName {
    #[default]
    Massive,
    Massless,
    BrokenSquared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSpeedSpec {
    /// Centre of the ball on which the start state vanishes.
    pub centre: Vec<f64>,
    pub radius: f64,
    /// Bound on every random control value.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Length of each random segment.
    #[serde(default = "default_segment")]
    pub segment: f64,
    /// Zero controls instead of random ones.
    #[serde(default)]
    pub idle: bool,
    #[serde(default)]
    pub dispersion: DispersionName,
}

fn default_amplitude() -> f64 {
    5.0
}

fn default_segment() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KirchhoffSpec {
    pub inner: f64,
    pub width: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_scan_step")]
    pub step: f64,
}

impl Default for KirchhoffSpec {
    fn default() -> Self {
        KirchhoffSpec { inner: 0.3, width: 0.9, margin: default_margin(), step: default_scan_step() }
    }
}

fn default_margin() -> f64 {
    0.05
}

fn default_scan_step() -> f64 {
    0.01
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Values per parameter; cells are the cross product in key order.
    #[serde(default)]
    pub parameters: BTreeMap<String, Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub duration: f64,
    /// `(u₀, u₁, …, u_{2d})`.
    pub control: Vec<f64>,
}

/// Command-line overrides applied after parsing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub tau_ladder: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
}

fn invalid(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Field { field: field.into(), message: message.into() }
}

fn strictly_decreasing(field: &str, values: &[f64]) -> Result<(), HarnessError> {
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid(field, "needs positive finite values"));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid(field, "must be strictly decreasing"));
    }
    Ok(())
}

fn positive(field: &str, value: Option<f64>) -> Result<(), HarnessError> {
    match value {
        Some(v) if !(v.is_finite() && v > 0.0) => Err(invalid(field, format!("must be positive, got {v}"))),
        _ => Ok(()),
    }
}

impl Scenario {
    /// Parses and validates a document.
    pub fn parse(text: &str) -> Result<Scenario, HarnessError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| HarnessError::Syntax(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Scenario, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.into(), source: e })?;
        Scenario::parse(&text).map_err(|e| e.in_file(path))
    }

    /// A scenario needing no file: the default three-dimensional sign demo.
    pub fn kirchhoff_default() -> Scenario {
        Scenario {
            format: SCENARIO_FORMAT,
            name: "kirchhoff".into(),
            seed: 0,
            potential: None,
            planner: PlannerKind::Simulate,
            eps: None,
            margin: None,
            grid: GridSpec { dim: 3, n: 8 },
            start: StateSpec::default(),
            target: None,
            synthesis: SynthesisSpec::default(),
            plan: PlanSpec::default(),
            output: OutputSpec::default(),
            rates: None,
            finite_speed: None,
            kirchhoff: Some(KirchhoffSpec::default()),
            sweep: None,
            schedule: Vec::new(),
        }
    }

    /// Structural checks that need no grid.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.format != SCENARIO_FORMAT {
            return Err(invalid("format", format!("unsupported version {}", self.format)));
        }
        TorusGrid::new(self.grid.dim, self.grid.n).map_err(|e| invalid("grid", e.to_string()))?;
        positive("eps", self.eps)?;
        if let Some(m) = self.margin {
            if !(m.is_finite() && m >= 0.0) {
                return Err(invalid("margin", format!("must be nonnegative, got {m}")));
            }
        }
        positive("synthesis.tau", self.synthesis.tau)?;
        positive("synthesis.pulse_time", self.synthesis.pulse_time)?;
        positive("synthesis.cap", self.synthesis.cap)?;
        positive("synthesis.nest_ratio", self.synthesis.nest_ratio)?;
        positive("synthesis.dilation_gain", self.synthesis.dilation_gain)?;
        positive("plan.eta", self.plan.eta)?;
        positive("plan.dt", self.plan.dt)?;
        for (field, ladder) in [
            ("plan.tau_ladder", &self.plan.tau_ladder),
            ("plan.shrink_ladder", &self.plan.shrink_ladder),
            ("plan.lambda_ladder", &self.plan.lambda_ladder),
        ] {
            if let Some(values) = ladder {
                strictly_decreasing(field, values)?;
            }
        }
        if let Some(degrees) = &self.plan.degree_ladder {
            if degrees.is_empty() || degrees.iter().any(|&d| d < 0) {
                return Err(invalid("plan.degree_ladder", "needs nonnegative degrees"));
            }
        }
        self.validate_target()?;
        let controls = 2 * self.grid.dim + 1;
        for (i, seg) in self.schedule.iter().enumerate() {
            positive(&format!("schedule[{i}].duration"), Some(seg.duration))?;
            if seg.control.len() != controls {
                return Err(invalid(&format!("schedule[{i}].control"), format!("needs {controls} values")));
            }
        }
        if let Some(rates) = &self.rates {
            strictly_decreasing("rates.taus", &rates.taus)?;
            let missing = match rates.operator {
                RateOperatorName::ExpBLeaf => rates.leaf.is_none().then_some("leaf"),
                RateOperatorName::ExpBSquare => rates.phi.is_none().then_some("phi"),
                RateOperatorName::ExpF => rates.delta.is_none().then_some("delta"),
                RateOperatorName::ExpBStar => rates.a.is_none().then_some("a"),
            };
            if let Some(key) = missing {
                return Err(invalid(&format!("rates.{key}"), "required by this operator"));
            }
        }
        if let Some(fs) = &self.finite_speed {
            if fs.centre.len() != self.grid.dim {
                return Err(invalid("finite_speed.centre", format!("needs {} coordinates", self.grid.dim)));
            }
            positive("finite_speed.radius", Some(fs.radius))?;
            positive("finite_speed.segment", Some(fs.segment))?;
        }
        if let Some(sweep) = &self.sweep {
            for name in sweep.parameters.keys() {
                if !SWEEP_PARAMETERS.contains(&name.as_str()) {
                    return Err(invalid(
                        &format!("sweep.parameters.{name}"),
                        format!("unknown parameter; expected one of {SWEEP_PARAMETERS:?}"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_target(&self) -> Result<(), HarnessError> {
        let target = self.target.as_ref();
        let expected = match self.planner {
            PlannerKind::Simulate => return Ok(()),
            PlannerKind::Compile => "operator",
            PlannerKind::Velocity => "velocity",
            PlannerKind::ReachZeroPhi => "phi",
            PlannerKind::Stac | PlannerKind::MinTime | PlannerKind::LargeTime => "state",
        };
        let found = match target {
            None => return Err(invalid("target", format!("planner '{}' needs a target", self.planner.name()))),
            Some(TargetSpec::State { .. }) => "state",
            Some(TargetSpec::Velocity { .. }) => "velocity",
            Some(TargetSpec::Phi { .. }) => "phi",
            Some(TargetSpec::Operator { op, phi, delta, a, .. }) => {
                let missing = match op {
                    OperatorName::ExpB => phi.is_none().then_some("phi"),
                    OperatorName::ExpF => delta.is_none().then_some("delta"),
                    OperatorName::ExpBStar => a.is_none().then_some("a"),
                };
                if let Some(key) = missing {
                    return Err(invalid(&format!("target.{key}"), "required by this operator"));
                }
                "operator"
            }
        };
        if found != expected {
            return Err(invalid(
                "target.kind",
                format!("planner '{}' needs a '{expected}' target, got '{found}'", self.planner.name()),
            ));
        }
        if self.planner != PlannerKind::Compile && self.eps.is_none() {
            return Err(invalid("eps", format!("planner '{}' needs a tolerance", self.planner.name())));
        }
        Ok(())
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<(), HarnessError> {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(dt) = overrides.dt {
            self.plan.dt = Some(dt);
        }
        if let Some(ladder) = &overrides.tau_ladder {
            self.plan.tau_ladder = Some(ladder.clone());
            if let Some(rates) = &mut self.rates {
                rates.taus = ladder.clone();
            }
        }
        if let Some(dir) = &overrides.out_dir {
            self.output.dir = Some(dir.clone());
        }
        self.validate()
    }

    /// SHA-256 of the canonical serialization, output location excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSpec::default();
        let text = toml::to_string(&canonical).expect("scenarios always serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios always serialize")
    }

    pub fn make_grid(&self) -> Result<TorusGrid, HarnessError> {
        TorusGrid::new(self.grid.dim, self.grid.n).map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn background(&self, grid: &TorusGrid) -> Result<BackgroundPotential, HarnessError> {
        Ok(match &self.potential {
            None => BackgroundPotential::zero(grid),
            Some(src) => BackgroundPotential::new(field(grid, "potential", src)?),
        })
    }

    pub fn start(&self, grid: &TorusGrid) -> Result<State, HarnessError> {
        state(grid, "start", &self.start.profile, &self.start.velocity)
    }

    /// The schedule of the `simulate` planner.
    pub fn given_schedule(&self) -> Result<Schedule, HarnessError> {
        let mut schedule = Schedule::new(self.grid.dim);
        for (i, seg) in self.schedule.iter().enumerate() {
            let field_name = format!("schedule[{i}]");
            let control =
                ControlVector::new(self.grid.dim, seg.control.clone()).map_err(|e| invalid(&field_name, e.to_string()))?;
            schedule.push(seg.duration, control).map_err(|e| invalid(&field_name, e.to_string()))?;
        }
        Ok(schedule)
    }

    pub fn step_rule(&self) -> StepRule {
        StepRule::with_dt(self.plan.dt)
    }

    pub fn synthesis_params(&self, background: &BackgroundPotential) -> SynthesisParams {
        let spec = &self.synthesis;
        let mut params = SynthesisParams::new(spec.tau.unwrap_or(1e-2));
        if let Some(v) = spec.pulse_time {
            params.pulse_time = v;
        }
        if let Some(v) = spec.cap {
            params.cap = v;
        }
        if let Some(v) = spec.nest_ratio {
            params.nest_ratio = v;
        }
        if let Some(v) = spec.dilation_gain {
            params.dilation_gain = v;
        }
        params.with_background(background)
    }

    pub fn plan_params(&self, background: &BackgroundPotential) -> PlanParams {
        let defaults = PlanParams::default();
        let spec = &self.plan;
        PlanParams {
            synthesis: self.synthesis_params(background),
            tau_ladder: spec.tau_ladder.clone().unwrap_or(defaults.tau_ladder),
            shrink_ladder: spec.shrink_ladder.clone().unwrap_or(defaults.shrink_ladder),
            lambda_ladder: spec.lambda_ladder.clone().unwrap_or(defaults.lambda_ladder),
            degree_ladder: spec.degree_ladder.clone().unwrap_or(defaults.degree_ladder),
            projection: match spec.projection {
                Some(ProjectionName::Fejer) => Projection::Fejer,
                Some(ProjectionName::WeightedLeastSquares) | None => Projection::WeightedLeastSquares,
            },
            eta: spec.eta.unwrap_or(defaults.eta),
            step_rule: self.step_rule(),
        }
    }

    pub fn margin_or_default(&self) -> f64 {
        self.margin.unwrap_or(0.1)
    }

    /// The scenario of one sweep cell.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Scenario, HarnessError> {
        let mut cell = self.clone();
        match name {
            "dt" => cell.plan.dt = Some(value),
            "eps" => cell.eps = Some(value),
            "eta" => cell.plan.eta = Some(value),
            "n" => cell.grid.n = whole(name, value)?,
            "seed" => cell.seed = whole(name, value)? as u64,
            "tau" => {
                cell.synthesis.tau = Some(value);
                cell.plan.tau_ladder = Some(vec![value]);
            }
            _ => return Err(invalid(&format!("sweep.parameters.{name}"), "unknown parameter")),
        }
        cell.validate()?;
        Ok(cell)
    }
}

fn whole(name: &str, value: f64) -> Result<usize, HarnessError> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(invalid(&format!("sweep.parameters.{name}"), format!("needs whole numbers, got {value}")))
    }
}

pub fn field(grid: &TorusGrid, name: &str, src: &str) -> Result<TorusField, HarnessError> {
    make_field(grid, src).map_err(|e| invalid(name, e.to_string()))
}

pub fn state(grid: &TorusGrid, name: &str, profile: &str, velocity: &str) -> Result<State, HarnessError> {
    let p = field(grid, &format!("{name}.profile"), profile)?;
    let v = field(grid, &format!("{name}.velocity"), velocity)?;
    State::new(p, v).map_err(|e| invalid(name, e.to_string()))
}

/// Reads `src` as a trigonometric polynomial of degree at most `degree`
/// per axis, dropping coefficients below `10⁻¹²` of the largest.
pub fn poly(grid: &TorusGrid, name: &str, src: &str, degree: i64) -> Result<TrigPoly, HarnessError> {
    let p = TrigPoly::from_field(&field(grid, name, src)?, degree);
    let largest = p.terms().values().fold(0.0f64, |m, h| m.max(h.cos.abs()).max(h.sin.abs()));
    Ok(p.pruned(1e-12 * largest))
}
