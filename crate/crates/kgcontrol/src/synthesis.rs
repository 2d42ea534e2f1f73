//! Compilation of multiplier flows, dilations and profile shifts into
//! piecewise-constant control schedules.
//!
//! * `exp(φB)` for a leaf `φ = Σ α_j V_j`: one short pulse `u = α/σ` of
//!   duration `σ`.
//! * `exp(−ψ²B)`: conjugate a drift of length `τ` by the pulses `±ψ/√τ`.
//!   The default realization splits the square into three conjugations of
//!   length `τ/3` with weights `(1, −2, 1)/√6`, which cancels the leading
//!   `O(√τ)` defect of a single conjugation. `ψ` is rescaled by
//!   `(1 + 2σ/(3t))^{-1/2}` (drift `t`) for the finite pulse width `σ`.
//!   A composite factor `ψ` is itself compiled with conjugation time
//!   `nest_ratio · t`, so its realization stays short against the drift.
//! * Dilations `profile ← λ·profile`, `velocity ← velocity/λ`: a three-piece
//!   block (rotation, hyperbolic stretch, boost) whose constant controls are
//!   calibrated so that the spatially constant mode is mapped exactly to an
//!   upper-triangular matrix with diagonal `(λ, 1/λ)`.
//! * Profile shifts `profile ← profile + a·velocity`: shrink by `τ`, drift
//!   for `≈ aτ²`, expand by `1/τ`, with blocks of duration `min(τ², aτ/8)`
//!   and the drift length solved so the constant mode is shifted by exactly
//!   `a`.

use crate::certificate::Certificate;
use crate::error::{KgError, Result};
use crate::propagators::{BackgroundPotential, ControlVector, Schedule, AMPLITUDE_CAP, MAX_DILATION};

/// How squares `exp(−ψ²B)` are realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SquareScheme {
    /// Pulse, drift, opposite pulse.
    Single,
    /// Three conjugations with weights `(1, −2, 1)/√6`.
    Palindromic,
}

/// Numerical parameters of every compiler in this module.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisParams {
    /// Conjugation time for squares, duration of dilation blocks, and the
    /// shrink factor of profile shifts.
    pub tau: f64,
    /// Duration `σ` of a leaf pulse.
    pub pulse_time: f64,
    /// Realization of squares.
    pub scheme: SquareScheme,
    /// Upper bound on the phase `θ` of the rotation and boost pieces of a
    /// dilation block (the stretch rate is `|ln λ|/τ`).
    pub dilation_gain: f64,
    /// Largest admissible control amplitude.
    pub cap: f64,
    /// Mean of the background potential; calibrates the constant mode.
    pub mass_shift: f64,
    /// Time scale of a nested factor's realization relative to the drift it
    /// conjugates.
    pub nest_ratio: f64,
}

impl SynthesisParams {
    /// Defaults for a given `τ`: pulses of `min(10⁻⁵, τ/50)`.
    pub fn new(tau: f64) -> Self {
        SynthesisParams {
            tau,
            pulse_time: (tau / 50.0).min(1e-5),
            scheme: SquareScheme::Palindromic,
            dilation_gain: 0.5,
            cap: AMPLITUDE_CAP,
            mass_shift: 0.0,
            nest_ratio: 0.1,
        }
    }

    /// Same parameters with another `τ` (pulse time unchanged).
    pub fn with_tau(&self, tau: f64) -> Self {
        SynthesisParams { tau, ..self.clone() }
    }

    /// Same parameters with another pulse time.
    pub fn with_pulse_time(&self, pulse_time: f64) -> Self {
        SynthesisParams { pulse_time, ..self.clone() }
    }

    /// Same parameters with another square scheme.
    pub fn with_scheme(&self, scheme: SquareScheme) -> Self {
        SynthesisParams { scheme, ..self.clone() }
    }

    /// Calibrates against a background potential.
    pub fn with_background(&self, background: &BackgroundPotential) -> Self {
        SynthesisParams { mass_shift: background.mean(), ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("tau", self.tau), ("pulse_time", self.pulse_time), ("cap", self.cap)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KgError::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.dilation_gain > 0.0 && self.dilation_gain < 1.0) {
            return Err(KgError::InvalidArgument(format!(
                "dilation gain must lie in (0, 1), got {}",
                self.dilation_gain
            )));
        }
        Ok(())
    }

    /// Control `u₀` that makes the constant-mode coefficient equal `c`.
    fn constant_control(&self, c: f64) -> f64 {
        c + 1.0 - self.mass_shift
    }
}

/// 2×2 real matrix, row major.
pub type Mat2 = [[f64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Exact flow of `ẅ = c·w` for time `t`, acting on `(w, ẇ)`.
pub fn mode_flow(c: f64, t: f64) -> Mat2 {
    if c > 0.0 {
        let k = c.sqrt();
        let (s, ch) = ((k * t).sinh(), (k * t).cosh());
        [[ch, s / k], [k * s, ch]]
    } else if c < 0.0 {
        let k = (-c).sqrt();
        let (s, co) = (k * t).sin_cos();
        [[co, s / k], [-k * s, co]]
    } else {
        [[1.0, t], [0.0, 1.0]]
    }
}

/// Transfer matrix of a schedule on the spatially constant mode, for a
/// background potential of mean `mass_shift`.
pub fn constant_mode_transfer(schedule: &Schedule, mass_shift: f64) -> Mat2 {
    schedule.segments().iter().fold([[1.0, 0.0], [0.0, 1.0]], |acc, seg| {
        let c = seg.control.values()[0] - 1.0 + mass_shift;
        mat_mul(&mode_flow(c, seg.duration), &acc)
    })
}

/// Smallest `τ` at which `build` fits under the cap, searched from `start`.
fn min_feasible_tau(start: f64, cap: f64, build: impl Fn(f64) -> Result<Schedule>) -> f64 {
    let fits = |tau: f64| build(tau).map(|s| s.max_amplitude() <= cap).unwrap_or(false);
    let mut hi = start;
    let mut tries = 0;
    while !fits(hi) {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return f64::INFINITY;
        }
    }
    let mut lo = hi / 2.0;
    if fits(lo) {
        // Only reachable when `start` itself fits.
        return hi;
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn check_cap(
    schedule: Schedule,
    what: &str,
    params: &SynthesisParams,
    build: impl Fn(f64) -> Result<Schedule>,
) -> Result<Schedule> {
    let amplitude = schedule.max_amplitude();
    if amplitude <= params.cap {
        return Ok(schedule);
    }
    Err(KgError::CapViolation {
        what: what.to_string(),
        amplitude,
        cap: params.cap,
        min_feasible_tau: min_feasible_tau(params.tau, params.cap, build),
    })
}

/// Schedule approximating `exp(φB)` for the certificate `φ`.
pub fn compile_expb(cert: &Certificate, params: &SynthesisParams) -> Result<Schedule> {
    params.validate()?;
    let schedule = build_expb(cert, params)?;
    check_cap(schedule, &describe_largest_leaf(cert), params, |tau| build_expb(cert, &params.with_tau(tau)))
}

fn describe_largest_leaf(cert: &Certificate) -> String {
    let worst = cert
        .leaves()
        .into_iter()
        .max_by(|a, b| max_abs(a).total_cmp(&max_abs(b)))
        .map(|a| Certificate::Leaf(a.to_vec()).to_string())
        .unwrap_or_default();
    format!("multiplier pulse (largest leaf {worst})")
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn build_expb(cert: &Certificate, params: &SynthesisParams) -> Result<Schedule> {
    let dim = cert.dim();
    let mut out = Schedule::new(dim);
    match cert {
        Certificate::Leaf(alpha) => {
            if alpha.iter().any(|&a| a != 0.0) {
                let control = ControlVector::new(dim, alpha.iter().map(|a| a / params.pulse_time).collect())?;
                out.push(params.pulse_time, control)?;
            }
        }
        Certificate::Combine { base, squares } => {
            out.extend(&build_expb(base, params)?)?;
            for factor in squares {
                out.extend(&build_square(factor, params)?)?;
            }
        }
    }
    Ok(out)
}

/// `exp(−ψ²B)` for the certificate `ψ`; the conjugations share a total
/// drift time of `τ`.
fn build_square(factor: &Certificate, params: &SynthesisParams) -> Result<Schedule> {
    if factor.is_zero() {
        return Ok(Schedule::new(factor.dim()));
    }
    let weights: &[f64] = match params.scheme {
        SquareScheme::Single => &[1.0],
        SquareScheme::Palindromic => &[1.0, -2.0, 1.0],
    };
    let drift = params.tau / weights.len() as f64;
    let width = 1.0 / (1.0 + 2.0 * params.pulse_time / (3.0 * drift)).sqrt();
    let norm = (weights.iter().map(|w| w * w).sum::<f64>()).sqrt();
    let mut out = Schedule::new(factor.dim());
    for w in weights {
        out.extend(&build_conjugation(&factor.scaled(width * w / norm), drift, params)?)?;
    }
    Ok(out)
}

/// Pulse `ψ/√t`, drift `t`, pulse `−ψ/√t`.
fn build_conjugation(factor: &Certificate, drift: f64, params: &SynthesisParams) -> Result<Schedule> {
    let root = drift.sqrt();
    let inner = match factor {
        Certificate::Leaf(_) => params.clone(),
        Certificate::Combine { .. } => {
            let tau = drift * params.nest_ratio;
            SynthesisParams { tau, pulse_time: params.pulse_time.min(tau / 50.0), ..params.clone() }
        }
    };
    let mut out = build_expb(&factor.scaled(1.0 / root), &inner)?;
    out.push(drift, ControlVector::zero(factor.dim()))?;
    out.extend(&build_expb(&factor.scaled(-1.0 / root), &inner)?)?;
    Ok(out)
}

/// Solves `x·tan x = g` on `(0, π/2)`.
fn rotation_phase(g: f64) -> f64 {
    bisect(0.0, std::f64::consts::FRAC_PI_2, |x| x * x.tan() - g)
}

/// Solves `x·tanh x = g` on `(0, ∞)`.
fn boost_phase(g: f64) -> f64 {
    bisect(0.0, g + 1.0, |x| x * x.tanh() - g)
}

/// Root of an increasing function on `[lo, hi]` by bisection.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Block of nominal length `duration` that multiplies the profile by
/// `λ > 0` and the velocity by `1/λ` on the constant mode (up to an
/// upper-triangular shear).
pub fn dilation_block(dim: usize, lambda: f64, duration: f64, params: &SynthesisParams) -> Result<Schedule> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(KgError::InvalidArgument(format!("dilation factor must be positive, got {lambda}")));
    }
    let log = lambda.ln();
    let mut out = Schedule::new(dim);
    if log == 0.0 {
        return Ok(out);
    }
    if log.abs() > MAX_DILATION {
        return Err(KgError::InvalidArgument(format!("|ln λ| = {} exceeds {MAX_DILATION}", log.abs())));
    }
    let rate = log.abs() / duration;
    // A gain below |ln λ|/2 keeps the middle stretch strictly positive.
    let gain = params.dilation_gain.min(0.5 * log.abs());
    let piece = gain / rate;
    let theta = rotation_phase(gain);
    let psi = boost_phase(gain);
    let (omega, kappa) = (theta / piece, psi / piece);
    let rotation = ControlVector::unit(dim, 0, params.constant_control(-omega * omega));
    let stretch = ControlVector::unit(dim, 0, params.constant_control(rate * rate));
    let boost = ControlVector::unit(dim, 0, params.constant_control(kappa * kappa));
    if log < 0.0 {
        let middle = -(lambda * psi.cosh() / theta.cos()).ln() / rate;
        out.push(piece, rotation)?;
        out.push(middle, stretch)?;
        out.push(piece, boost)?;
    } else {
        let middle = (lambda * theta.cos() / psi.cosh()).ln() / rate;
        out.push(piece, boost)?;
        out.push(middle, stretch)?;
        out.push(piece, rotation)?;
    }
    Ok(out)
}

/// Schedule approximating `exp_F(·, −δ)`: profile scaled by `e^δ`,
/// velocity by `e^{−δ}`, in time `≈ 1.5τ`.
pub fn compile_expf(dim: usize, delta: f64, params: &SynthesisParams) -> Result<Schedule> {
    params.validate()?;
    let build = |tau: f64| dilation_block(dim, delta.exp(), tau, params);
    check_cap(build(params.tau)?, "dilation block", params, build)
}

fn build_expbstar(dim: usize, a: f64, shrink: f64, params: &SynthesisParams) -> Result<Schedule> {
    // Each block shears the constant mode by about 1.6·duration; keep the
    // pair's combined shear 3.2·block/shrink well below `a`.
    let block = (shrink * shrink).min(a * shrink / 8.0);
    let first = dilation_block(dim, shrink, block, params)?;
    let last = dilation_block(dim, 1.0 / shrink, block, params)?;
    let drift_coeff = params.mass_shift - 1.0;
    let shift = |t: f64| {
        let m = mat_mul(&mode_flow(drift_coeff, t), &constant_mode_transfer(&first, params.mass_shift));
        mat_mul(&constant_mode_transfer(&last, params.mass_shift), &m)[0][1] - a
    };
    let mut hi = 2.0 * a * block;
    let mut tries = 0;
    while shift(hi) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 20 {
            return Err(KgError::InvalidArgument(format!("no drift length realizes a shift of {a}")));
        }
    }
    if shift(0.0) > 0.0 {
        return Err(KgError::InvalidArgument(format!(
            "shift {a} is smaller than the shear of the dilation blocks at tau = {shrink}"
        )));
    }
    let drift = bisect(0.0, hi, shift);
    let mut out = first;
    if drift > 0.0 {
        out.push(drift, ControlVector::zero(dim))?;
    }
    out.extend(&last)?;
    Ok(out)
}

/// Schedule approximating `exp_B*(·, a)`: profile `+= a·velocity`. The
/// shrink factor is `params.tau ∈ (0, 1)`.
pub fn compile_expbstar(dim: usize, a: f64, params: &SynthesisParams) -> Result<Schedule> {
    params.validate()?;
    if a == 0.0 {
        return Ok(Schedule::new(dim));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(KgError::InvalidArgument(format!("profile shift needs a > 0, got {a}")));
    }
    if params.tau >= 1.0 {
        return Err(KgError::InvalidArgument(format!("shrink factor must lie in (0, 1), got {}", params.tau)));
    }
    let schedule = build_expbstar(dim, a, params.tau, params)?;
    let amplitude = schedule.max_amplitude();
    if amplitude <= params.cap {
        return Ok(schedule);
    }
    // Amplitudes grow as the shrink factor decreases; search upward in (τ, 1).
    let fits = |t: f64| build_expbstar(dim, a, t, params).map(|s| s.max_amplitude() <= params.cap).unwrap_or(false);
    let (mut lo, mut hi) = (params.tau, 0.5f64.max(params.tau));
    let min_feasible_tau = if fits(hi) {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    } else {
        f64::INFINITY
    };
    Err(KgError::CapViolation { what: "profile shift dilations".into(), amplitude, cap: params.cap, min_feasible_tau })
}
