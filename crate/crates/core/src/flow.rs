//! Combinatorial Ricci flow in u-coordinates with step-doubling error control.
//!
//! Every variant of the flow is integrated as `du_i/dt = -(K_i - target_i)`.
//! Euclidean updates are projected onto `sum du_i = 0`, which keeps the
//! product of the radii fixed.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::curvature::{
    curvature_state, from_u, spherical_face_ok, to_u, CurvatureState, PackingMetric, UCoordinates,
};
use crate::error::{Error, Result};
use crate::kernel::Geometry;
use crate::mesh::WeightedTriangulation;

/// Smallest step size tried before a run is declared degenerate.
pub const MIN_STEP: f64 = 1e-12;

/// Radius ratio (Euclidean) or radius (hyperbolic) below which a run is degenerate.
pub const DEGENERATE_RADIUS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    #[default]
    ExplicitEuler,
    Newton,
}

impl std::str::FromStr for FlowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit_euler" | "euler" | "flow" => Ok(FlowMode::ExplicitEuler),
            "newton" => Ok(FlowMode::Newton),
            other => Err(Error::Domain(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub target_curvatures: Vec<f64>,
    pub step_init: f64,
    pub step_max: f64,
    /// Stop once `max_i |K_i - target_i|` is at most this.
    pub tol_curvature: f64,
    /// Flow steps, or Newton iterations.
    pub max_steps: usize,
    pub mode: FlowMode,
    /// Per-step error budget is `atol + rtol * max_i |K_i - target_i|`.
    pub rtol: f64,
    pub atol: f64,
    /// Accept every step that stays in the domain, ignoring the error estimate.
    pub fixed_step: bool,
    /// Record every `sample_stride`-th accepted step (the last one is always recorded).
    pub sample_stride: usize,
}

impl FlowConfig {
    /// Defaults for `mode` with the standard targets of `geometry` on `mesh`.
    pub fn new(mesh: &WeightedTriangulation, geometry: Geometry, mode: FlowMode) -> Self {
        let (tol, max_steps) = match mode {
            FlowMode::ExplicitEuler => (1e-8, 1_000_000),
            FlowMode::Newton => (1e-10, 100),
        };
        Self {
            target_curvatures: default_targets(mesh, geometry),
            step_init: 0.05,
            step_max: 10.0,
            tol_curvature: tol,
            max_steps,
            mode,
            rtol: 1e-2,
            atol: 1e-12,
            fixed_step: false,
            sample_stride: 1,
        }
    }

    pub fn with_targets(mut self, targets: Vec<f64>) -> Self {
        self.target_curvatures = targets;
        self
    }

    /// Check lengths, positivity and, for Euclidean runs, that the targets sum to `2 pi chi`.
    pub fn validate(&self, mesh: &WeightedTriangulation, geometry: Geometry) -> Result<()> {
        let n = mesh.vertex_count();
        if self.target_curvatures.len() != n {
            return Err(Error::InvalidTargets(format!(
                "{} targets for {n} vertices",
                self.target_curvatures.len()
            )));
        }
        if self.target_curvatures.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTargets("targets must be finite".into()));
        }
        if geometry == Geometry::Euclidean {
            let want = TAU * mesh.euler_characteristic() as f64;
            let sum: f64 = self.target_curvatures.iter().sum();
            if (sum - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(Error::InvalidTargets(format!(
                    "Euclidean targets sum to {sum}, expected 2 pi chi = {want}"
                )));
            }
        }
        let positive = [self.step_init, self.step_max, self.tol_curvature, self.rtol];
        if positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) || !(self.atol >= 0.0) {
            return Err(Error::Domain("step sizes and tolerances must be positive".into()));
        }
        if self.max_steps == 0 || self.sample_stride == 0 {
            return Err(Error::Domain("max_steps and sample_stride must be positive".into()));
        }
        Ok(())
    }
}

/// `2 pi chi / N` on every vertex for Euclidean runs, zero otherwise.
pub fn default_targets(mesh: &WeightedTriangulation, geometry: Geometry) -> Vec<f64> {
    let n = mesh.vertex_count();
    match geometry {
        Geometry::Euclidean => vec![TAU * mesh.euler_characteristic() as f64 / n as f64; n],
        _ => vec![0.0; n],
    }
}

/// One recorded point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub radii: Vec<f64>,
    #[serde(rename = "K")]
    pub curvatures: Vec<f64>,
    #[serde(rename = "M")]
    pub max_curvature: f64,
    #[serde(rename = "m")]
    pub min_curvature: f64,
    /// Step that produced this sample (0 for the initial sample).
    pub h: f64,
    /// Error estimate accumulated since the previous sample.
    pub err: f64,
}

impl FlowSample {
    fn new(t: f64, metric: &PackingMetric, state: &CurvatureState, h: f64, err: f64) -> Self {
        let k = &state.curvatures;
        Self {
            t,
            radii: metric.radii().to_vec(),
            curvatures: k.clone(),
            max_curvature: k.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_curvature: k.iter().copied().fold(f64::INFINITY, f64::min),
            h,
            err,
        }
    }

    pub fn sup_deviation(&self, targets: &[f64]) -> f64 {
        self.curvatures
            .iter()
            .zip(targets)
            .fold(0.0, |m, (k, t)| f64::max(m, (k - t).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxSteps,
    Degenerated,
    /// Spherical run reached the tolerance; no convergence statement is made.
    Stopped,
    /// Spherical run could not take a step inside the constraint set, or a
    /// radius reached the boundary of `(0, pi)`.
    ConstraintHit,
}

impl Termination {
    pub fn describe(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxSteps => "max_steps reached",
            Termination::Degenerated => "degenerated",
            Termination::Stopped => "stopped: spherical mode, no convergence guarantee",
            Termination::ConstraintHit => "stopped: spherical constraint hit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub geometry: Geometry,
    pub targets: Vec<f64>,
    pub samples: Vec<FlowSample>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl FlowTrace {
    pub fn last(&self) -> Option<&FlowSample> {
        self.samples.last()
    }

    pub fn final_metric(&self) -> Result<PackingMetric> {
        let s = self
            .last()
            .ok_or_else(|| Error::InsufficientData("trace has no samples".into()))?;
        PackingMetric::new(self.geometry, s.radii.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub limit_radii: Vec<f64>,
    pub limit_curvatures: Vec<f64>,
    /// Fitted prefactor, when the tail is long enough to fit.
    pub rate_c1: Option<f64>,
    /// Fitted exponent, when the tail is long enough to fit.
    pub rate_c2: Option<f64>,
    /// Final `max_i |K_i - target_i|`.
    pub residual: f64,
}

fn deviation(state: &CurvatureState, targets: &[f64]) -> Vec<f64> {
    state.curvatures.iter().zip(targets).map(|(k, t)| k - t).collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// `du/dt = -(K - target)`.
pub fn ricci_rhs(mesh: &WeightedTriangulation, metric: &PackingMetric, config: &FlowConfig) -> Result<Vec<f64>> {
    let state = curvature_state(mesh, metric)?;
    Ok(rhs_from_state(&state, &config.target_curvatures))
}

fn rhs_from_state(state: &CurvatureState, targets: &[f64]) -> Vec<f64> {
    state.curvatures.iter().zip(targets).map(|(k, t)| -(k - t)).collect()
}

fn advance(u: &UCoordinates, rhs: &[f64], h: f64) -> UCoordinates {
    let mut delta: Vec<f64> = rhs.iter().map(|d| h * d).collect();
    if u.geometry == Geometry::Euclidean {
        let mean = delta.iter().sum::<f64>() / delta.len() as f64;
        for d in &mut delta {
            *d -= mean;
        }
    }
    UCoordinates { geometry: u.geometry, u: u.u.iter().zip(&delta).map(|(a, d)| a + d).collect() }
}

/// Metric and curvature at `u`, or `None` outside the domain of the geometry.
fn evaluate(mesh: &WeightedTriangulation, u: &UCoordinates) -> Option<(PackingMetric, CurvatureState)> {
    if u.geometry == Geometry::Hyperbolic && u.u.iter().any(|&x| !(x < 0.0)) {
        return None;
    }
    let metric = from_u(u).ok()?;
    if metric.geometry == Geometry::Spherical
        && (0..mesh.faces().len()).any(|f| !spherical_face_ok(mesh, metric.radii(), f))
    {
        return None;
    }
    let state = curvature_state(mesh, &metric).ok()?;
    Some((metric, state))
}

/// Result of one attempted explicit Euler step.
#[derive(Debug, Clone)]
pub struct StepAttempt {
    /// New coordinates when accepted, the old ones otherwise.
    pub u: UCoordinates,
    pub accepted: bool,
    pub h: f64,
    /// Step size to try next.
    pub h_next: f64,
    /// `max_i |K_i(full step) - K_i(two half steps)|`, infinite when the step left the domain.
    pub err: f64,
    pub metric: Option<PackingMetric>,
    pub state: Option<CurvatureState>,
}

/// Attempt `u' = u + h (target - K)`.
///
/// The step is accepted when `u'` and the half steps stay in the domain and
/// the step-doubling error estimate is within budget. A rejected step halves
/// `h`; halving below [`MIN_STEP`] is an error.
pub fn euler_step(
    mesh: &WeightedTriangulation,
    u: &UCoordinates,
    config: &FlowConfig,
    h: f64,
) -> Result<StepAttempt> {
    let metric = from_u(u)?;
    let state = curvature_state(mesh, &metric)?;
    attempt(mesh, u, &state, config, h)
}

fn attempt(
    mesh: &WeightedTriangulation,
    u: &UCoordinates,
    state: &CurvatureState,
    config: &FlowConfig,
    h: f64,
) -> Result<StepAttempt> {
    let targets = &config.target_curvatures;
    let rhs = rhs_from_state(state, targets);
    let reject = |err: f64| -> Result<StepAttempt> {
        let h_next = 0.5 * h;
        if h_next < MIN_STEP {
            return Err(Error::StepUnderflow { step: h_next });
        }
        Ok(StepAttempt { u: u.clone(), accepted: false, h, h_next, err, metric: None, state: None })
    };

    if rhs.iter().all(|&d| d == 0.0) {
        return Ok(StepAttempt {
            u: u.clone(),
            accepted: true,
            h,
            h_next: (2.0 * h).min(config.step_max),
            err: 0.0,
            metric: Some(from_u(u)?),
            state: Some(state.clone()),
        });
    }

    let full_u = advance(u, &rhs, h);
    let Some((full_metric, full_state)) = evaluate(mesh, &full_u) else {
        return reject(f64::INFINITY);
    };
    let half_u = advance(u, &rhs, 0.5 * h);
    let Some((_, half_state)) = evaluate(mesh, &half_u) else {
        return reject(f64::INFINITY);
    };
    let two_u = advance(&half_u, &rhs_from_state(&half_state, targets), 0.5 * h);
    let Some((_, two_state)) = evaluate(mesh, &two_u) else {
        return reject(f64::INFINITY);
    };
    let err = full_state
        .curvatures
        .iter()
        .zip(&two_state.curvatures)
        .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
    let budget = config.atol + config.rtol * sup(&rhs);

    if !config.fixed_step && err > budget {
        return reject(err);
    }
    let factor = if err > 0.0 { (0.9 * (budget / err).sqrt()).clamp(0.2, 2.0) } else { 2.0 };
    let h_next = if config.fixed_step { h } else { (h * factor).min(config.step_max) };
    Ok(StepAttempt {
        u: full_u,
        accepted: true,
        h,
        h_next,
        err,
        metric: Some(full_metric),
        state: Some(full_state),
    })
}

fn is_degenerate(metric: &PackingMetric) -> bool {
    let r = metric.radii();
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.iter().copied().fold(0.0, f64::max);
    match metric.geometry {
        Geometry::Euclidean => lo / hi < DEGENERATE_RADIUS,
        Geometry::Hyperbolic => lo < DEGENERATE_RADIUS,
        Geometry::Spherical => lo < DEGENERATE_RADIUS || hi > PI - DEGENERATE_RADIUS,
    }
}

/// Integrate the flow from `initial` until the tolerance, `max_steps` or degeneration.
///
/// The report is present only for converged runs, which spherical runs never are.
pub fn run_flow(
    mesh: &WeightedTriangulation,
    initial: &PackingMetric,
    config: &FlowConfig,
) -> Result<(FlowTrace, Option<ConvergenceReport>)> {
    if config.mode != FlowMode::ExplicitEuler {
        return Err(Error::Unsupported("run_flow integrates the explicit flow; use newton_solve".into()));
    }
    let geometry = initial.geometry;
    config.validate(mesh, geometry)?;
    initial.check_for(mesh)?;
    let targets = &config.target_curvatures;

    let mut metric = initial.clone();
    let mut state = curvature_state(mesh, &metric)?;
    let mut u = to_u(&metric);
    let mut samples = vec![FlowSample::new(0.0, &metric, &state, 0.0, 0.0)];
    let mut t = 0.0;
    let mut h = config.step_init.min(config.step_max);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut pending_err = 0.0;
    let mut since_sample = 0usize;

    let termination = loop {
        if sup(&deviation(&state, targets)) <= config.tol_curvature {
            break if geometry == Geometry::Spherical { Termination::Stopped } else { Termination::Converged };
        }
        if accepted >= config.max_steps {
            break Termination::MaxSteps;
        }
        if is_degenerate(&metric) {
            break if geometry == Geometry::Spherical {
                Termination::ConstraintHit
            } else {
                Termination::Degenerated
            };
        }
        let step = match attempt(mesh, &u, &state, config, h) {
            Ok(s) => s,
            Err(Error::StepUnderflow { .. }) => {
                break if geometry == Geometry::Spherical {
                    Termination::ConstraintHit
                } else {
                    Termination::Degenerated
                };
            }
            Err(e) => return Err(e),
        };
        if !step.accepted {
            rejected += 1;
            h = step.h_next;
            continue;
        }
        accepted += 1;
        t += step.h;
        pending_err += step.err;
        u = step.u;
        metric = step.metric.expect("accepted step carries its metric");
        state = step.state.expect("accepted step carries its curvature");
        h = step.h_next;
        since_sample += 1;
        if since_sample >= config.sample_stride {
            samples.push(FlowSample::new(t, &metric, &state, step.h, pending_err));
            pending_err = 0.0;
            since_sample = 0;
        }
    };
    if since_sample > 0 {
        samples.push(FlowSample::new(t, &metric, &state, h, pending_err));
    }

    let trace = FlowTrace {
        geometry,
        targets: targets.clone(),
        samples,
        termination,
        accepted_steps: accepted,
        rejected_steps: rejected,
    };
    let report = (termination == Termination::Converged).then(|| {
        let fit = estimate_exponential_rate(&trace).ok();
        ConvergenceReport {
            limit_radii: metric.radii().to_vec(),
            limit_curvatures: state.curvatures.clone(),
            rate_c1: fit.map(|f| f.0),
            rate_c2: fit.map(|f| f.1),
            residual: sup(&deviation(&state, targets)),
        }
    });
    Ok((trace, report))
}

/// Least-squares fit of `ln max_i |K_i - target_i| = ln c1 - c2 t` over the
/// second half of a converged trace. Returns `(c1, c2)`.
pub fn estimate_exponential_rate(trace: &FlowTrace) -> Result<(f64, f64)> {
    if trace.termination != Termination::Converged {
        return Err(Error::InsufficientData(format!(
            "trace terminated with {:?}, not converged",
            trace.termination
        )));
    }
    let tail = &trace.samples[trace.samples.len() / 2..];
    if tail.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} tail samples, at least 10 needed",
            tail.len()
        )));
    }
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .map(|s| (s.t, s.sup_deviation(&trace.targets)))
        .filter(|&(_, d)| d > 0.0)
        .map(|(t, d)| (t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData("tail has no positive deviations".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("tail samples share one time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    Ok((intercept.exp(), -slope))
}

/// Outcome of a monotonicity check along a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MonotoneVerdict {
    Pass,
    Fail {
        /// Index of the first sample that breaks monotonicity.
        sample: usize,
        quantity: String,
        before: f64,
        after: f64,
    },
    NotApplicable,
}

impl MonotoneVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, MonotoneVerdict::Pass)
    }
}

/// Monotonicity of the curvature extremes, measured on `K - target`.
///
/// Euclidean: the maximum never increases and the minimum never decreases.
/// Hyperbolic: the same for `max(M, 0)` and `min(m, 0)`. Each comparison
/// allows the error estimate recorded with the later sample plus `1e-12`.
pub fn check_max_principle(trace: &FlowTrace, geometry: Geometry) -> MonotoneVerdict {
    let clip = match geometry {
        Geometry::Euclidean => false,
        Geometry::Hyperbolic => true,
        Geometry::Spherical => return MonotoneVerdict::NotApplicable,
    };
    let extremes = |s: &FlowSample| {
        let d: Vec<f64> = s.curvatures.iter().zip(&trace.targets).map(|(k, t)| k - t).collect();
        let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
        if clip {
            (hi.max(0.0), lo.min(0.0))
        } else {
            (hi, lo)
        }
    };
    for k in 1..trace.samples.len() {
        let (hi0, lo0) = extremes(&trace.samples[k - 1]);
        let (hi1, lo1) = extremes(&trace.samples[k]);
        let slack = trace.samples[k].err + 1e-12;
        if hi1 > hi0 + slack {
            return MonotoneVerdict::Fail { sample: k, quantity: "M".into(), before: hi0, after: hi1 };
        }
        if lo1 < lo0 - slack {
            return MonotoneVerdict::Fail { sample: k, quantity: "m".into(), before: lo0, after: lo1 };
        }
    }
    MonotoneVerdict::Pass
}

/// `g = sum_i (K_i - target_i)^2` is non-increasing, up to what the recorded
/// error estimate `e` can move it: `2 |K - target| sqrt(N) e + N e^2`.
pub fn check_dispersion(trace: &FlowTrace) -> MonotoneVerdict {
    let n = trace.targets.len() as f64;
    let g = |s: &FlowSample| -> (f64, f64) {
        let sq: f64 = s.curvatures.iter().zip(&trace.targets).map(|(k, t)| (k - t) * (k - t)).sum();
        (sq, sq.sqrt())
    };
    for k in 1..trace.samples.len() {
        let (g0, norm0) = g(&trace.samples[k - 1]);
        let (g1, _) = g(&trace.samples[k]);
        let e = trace.samples[k].err;
        let slack = 2.0 * norm0 * n.sqrt() * e + n * e * e + 1e-12;
        if g1 > g0 + slack {
            return MonotoneVerdict::Fail { sample: k, quantity: "g".into(), before: g0, after: g1 };
        }
    }
    MonotoneVerdict::Pass
}
