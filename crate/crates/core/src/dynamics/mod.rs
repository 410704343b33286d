//! Reduced dynamics of the probe amplitudes under a global piecewise-constant field.
//!
//! The amplitudes of `|10>` and `|01>` obey
//!
//! ```text
//! C1'' + (lambda - i eps(t)) C1' + (a1 R / a_t)^2 C1 + a1 a2 (R / a_t)^2 C2 = 0
//! C2'' + (lambda - i eps(t)) C2' + (a2 R / a_t)^2 C2 + a1 a2 (R / a_t)^2 C1 = 0
//! ```
//!
//! with `C1'(0) = C2'(0) = 0` (the memory integral vanishes at `t = 0`).
//! Forward sensitivities with respect to `R` and `lambda` are integrated as
//! the linear variational system with zero initial data; the phase
//! sensitivity is the homogeneous system started from `d x0 / d phi`.

pub mod dopri;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{density_variation, DensityMatrix4, ModelParams, Operator4, ProbeAmplitudes, C64};
use dopri::{Dopri5, OdeSystem, StepperOptions};

/// Default number of grid intervals over `[0, T]`.
pub const DEFAULT_GRID_POINTS: usize = 2000;
/// Default bound on `|eps_k|` in units of `lambda`.
pub const DEFAULT_EPS_MAX_FACTOR: f64 = 20.0;
/// Population above `1 + OVERFLOW_TOL` signals an integrator failure.
pub const OVERFLOW_TOL: f64 = 1e-6;

/// Number of grid intervals giving at least 40 points per Rabi period.
pub fn grid_points_for(horizon: f64, rabi: f64) -> usize {
    let per_period = 40.0 * rabi * horizon / (2.0 * std::f64::consts::PI);
    DEFAULT_GRID_POINTS.max(per_period.ceil() as usize)
}

/// Estimated quantity: time, Rabi frequency, spectral width or initial phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Parameter {
    #[serde(rename = "t")]
    Time,
    #[serde(rename = "R")]
    Rabi,
    #[serde(rename = "lambda")]
    Width,
    #[serde(rename = "phi")]
    Phase,
}

impl Parameter {
    pub const ALL: [Parameter; 4] = [Parameter::Time, Parameter::Rabi, Parameter::Width, Parameter::Phase];

    pub fn as_str(&self) -> &'static str {
        match self {
            Parameter::Time => "t",
            Parameter::Rabi => "R",
            Parameter::Width => "lambda",
            Parameter::Phase => "phi",
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" | "time" => Ok(Parameter::Time),
            "R" | "rabi" => Ok(Parameter::Rabi),
            "lambda" | "width" => Ok(Parameter::Width),
            "phi" | "phase" => Ok(Parameter::Phase),
            other => Err(Error::param("parameter", format!("unknown tag `{other}`"))),
        }
    }
}

/// Piecewise-constant field over `K` equal segments of `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    amplitudes: Vec<f64>,
    horizon: f64,
}

impl ControlPulse {
    pub fn new(amplitudes: Vec<f64>, horizon: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::param("pulse", "needs at least one segment"));
        }
        if let Some(v) = amplitudes.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("pulse", format!("non-finite amplitude {v}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
        }
        Ok(ControlPulse { amplitudes, horizon })
    }

    /// Like [`new`](Self::new), additionally enforcing `|eps_k| <= eps_max`.
    pub fn bounded(amplitudes: Vec<f64>, horizon: f64, eps_max: f64) -> Result<Self> {
        if let Some(v) = amplitudes.iter().find(|v| v.abs() > eps_max) {
            return Err(Error::param("pulse", format!("|{v}| exceeds eps_max = {eps_max}")));
        }
        Self::new(amplitudes, horizon)
    }

    pub fn zero(segments: usize, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0; segments], horizon)
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn segments(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segment_width(&self) -> f64 {
        self.horizon / self.segments() as f64
    }

    /// Segment containing `t`; `t = T` belongs to the last segment.
    pub fn segment_index(&self, t: f64) -> usize {
        let k = (t / self.horizon * self.segments() as f64).floor();
        (k.max(0.0) as usize).min(self.segments() - 1)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.amplitudes[self.segment_index(t)]
    }

    pub fn max_abs(&self) -> f64 {
        self.amplitudes.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Sampled solution on a uniform grid over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ModelParams,
    pub pulse: ControlPulse,
    pub times: Vec<f64>,
    pub states: Vec<ProbeAmplitudes>,
    /// `(dC1/dtheta, dC2/dtheta)` and their time derivatives per grid point.
    pub sensitivities: BTreeMap<Parameter, Vec<ProbeAmplitudes>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn last(&self) -> &ProbeAmplitudes {
        self.states.last().expect("trajectory has at least two points")
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange { index, len: self.len() });
        }
        Ok(())
    }

    pub fn density(&self, index: usize) -> Result<DensityMatrix4> {
        self.check_index(index)?;
        self.states[index].density()
    }

    pub fn sensitivity(&self, tag: Parameter) -> Result<&[ProbeAmplitudes]> {
        self.sensitivities
            .get(&tag)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingSensitivity(tag.to_string()))
    }

    pub fn has_sensitivity(&self, tag: Parameter) -> bool {
        tag == Parameter::Time || self.sensitivities.contains_key(&tag)
    }

    /// True when both trajectories live on the same time grid.
    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }
}

#[derive(Clone, Copy)]
enum Forcing {
    Rabi,
    Width,
    None,
}

/// Probe equations plus appended sensitivity blocks.
/// Layout per block: `[C1, C1', C2, C2']`.
struct ProbeSystem {
    k11: f64,
    k12: f64,
    k22: f64,
    dk11: f64,
    dk12: f64,
    dk22: f64,
    lambda: f64,
    eps: f64,
    tracks: Vec<Forcing>,
}

impl ProbeSystem {
    fn new(m: &ModelParams, tracks: Vec<Forcing>) -> Self {
        let at2 = m.a1 * m.a1 + m.a2 * m.a2;
        let r2 = m.rabi * m.rabi;
        let g11 = m.a1 * m.a1 / at2;
        let g12 = m.a1 * m.a2 / at2;
        let g22 = m.a2 * m.a2 / at2;
        ProbeSystem {
            k11: r2 * g11,
            k12: r2 * g12,
            k22: r2 * g22,
            dk11: 2.0 * m.rabi * g11,
            dk12: 2.0 * m.rabi * g12,
            dk22: 2.0 * m.rabi * g22,
            lambda: m.lambda,
            eps: 0.0,
            tracks,
        }
    }
}

impl OdeSystem for ProbeSystem {
    fn dim(&self) -> usize {
        4 * (1 + self.tracks.len())
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        let g = C64::new(self.lambda, -self.eps);
        let (c1, v1, c2, v2) = (y[0], y[1], y[2], y[3]);
        dy[0] = v1;
        dy[1] = -g * v1 - c1 * self.k11 - c2 * self.k12;
        dy[2] = v2;
        dy[3] = -g * v2 - c2 * self.k22 - c1 * self.k12;
        for (j, forcing) in self.tracks.iter().enumerate() {
            let o = 4 * (j + 1);
            let (s1, w1, s2, w2) = (y[o], y[o + 1], y[o + 2], y[o + 3]);
            let (f1, f2) = match forcing {
                Forcing::Rabi => (c1 * self.dk11 + c2 * self.dk12, c2 * self.dk22 + c1 * self.dk12),
                Forcing::Width => (v1, v2),
                Forcing::None => (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
            };
            dy[o] = w1;
            dy[o + 1] = -g * w1 - s1 * self.k11 - s2 * self.k12 - f1;
            dy[o + 2] = w2;
            dy[o + 3] = -g * w2 - s2 * self.k22 - s1 * self.k12 - f2;
        }
    }
}

/// Integrator settings for [`propagate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        let d = StepperOptions::default();
        PropagateOptions {
            rtol: d.rtol,
            atol: d.atol,
            max_steps: d.max_steps,
        }
    }
}

impl PropagateOptions {
    pub fn tight() -> Self {
        PropagateOptions {
            rtol: 1e-12,
            atol: 1e-15,
            ..Default::default()
        }
    }
}

/// Propagates `x0` under `pulse` and samples `grid_points + 1` equidistant
/// times including both endpoints.
///
/// `Parameter::Time` in `sensitivities` is accepted and ignored, since the
/// time derivative is always part of the state. `Parameter::Phase` starts the
/// homogeneous system from `(0, i c2)`, the `phi`-derivative of the
/// parametrized initial state.
pub fn propagate(
    m: &ModelParams,
    x0: &ProbeAmplitudes,
    pulse: &ControlPulse,
    grid_points: usize,
    sensitivities: &[Parameter],
) -> Result<Trajectory> {
    propagate_with(m, x0, pulse, grid_points, sensitivities, &PropagateOptions::default())
}

pub fn propagate_with(
    m: &ModelParams,
    x0: &ProbeAmplitudes,
    pulse: &ControlPulse,
    grid_points: usize,
    sensitivities: &[Parameter],
    opts: &PropagateOptions,
) -> Result<Trajectory> {
    m.validate()?;
    if grid_points == 0 {
        return Err(Error::param("grid_points", "must be at least 1"));
    }
    if (pulse.horizon() - m.horizon).abs() > 1e-12 * m.horizon {
        return Err(Error::param(
            "pulse",
            format!("horizon {} differs from model horizon {}", pulse.horizon(), m.horizon),
        ));
    }
    let pop0 = x0.population();
    if pop0.is_nan() || pop0 > 1.0 + crate::model::POPULATION_TOL {
        return Err(Error::ExcitationOverflow { population: pop0 });
    }

    let mut tags: Vec<Parameter> = sensitivities
        .iter()
        .copied()
        .filter(|p| *p != Parameter::Time)
        .collect();
    tags.sort();
    tags.dedup();
    let tracks = tags
        .iter()
        .map(|p| match p {
            Parameter::Rabi => Forcing::Rabi,
            Parameter::Width => Forcing::Width,
            _ => Forcing::None,
        })
        .collect();
    let mut sys = ProbeSystem::new(m, tracks);
    let dim = sys.dim();

    let mut y = vec![C64::new(0.0, 0.0); dim];
    y[0] = x0.c1;
    y[1] = x0.c1dot;
    y[2] = x0.c2;
    y[3] = x0.c2dot;
    for (j, tag) in tags.iter().enumerate() {
        if *tag == Parameter::Phase {
            let o = 4 * (j + 1);
            y[o + 2] = C64::i() * x0.c2;
            y[o + 3] = C64::i() * x0.c2dot;
        }
    }

    let n = grid_points;
    let k_seg = pulse.segments();
    let horizon = m.horizon;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut sens: Vec<Vec<ProbeAmplitudes>> = vec![Vec::with_capacity(n + 1); tags.len()];

    // States at t = 0 are the supplied initial condition, bit for bit.
    times.push(0.0);
    states.push(*x0);
    for (j, track) in sens.iter_mut().enumerate() {
        track.push(block(&y, j + 1));
    }

    let mut record = |t: f64, y: &[C64], times: &mut Vec<f64>, states: &mut Vec<ProbeAmplitudes>| -> Result<()> {
        let s = block(y, 0);
        let pop = s.population();
        if pop.is_nan() || pop > 1.0 + OVERFLOW_TOL {
            return Err(Error::ExcitationOverflow { population: pop });
        }
        times.push(t);
        states.push(s);
        for (j, track) in sens.iter_mut().enumerate() {
            track.push(block(y, j + 1));
        }
        Ok(())
    };

    let mut stepper = Dopri5::new(
        dim,
        StepperOptions {
            rtol: opts.rtol,
            atol: opts.atol,
            max_steps: opts.max_steps,
        },
    );
    sys.eps = pulse.amplitudes()[0];
    let mut t = 0.0;
    let mut next_out = 1usize;
    let mut next_seg = 1usize;
    while next_out <= n {
        // Compare k/N with j/K exactly in integers.
        let out_key = next_out * k_seg;
        let seg_key = if next_seg < k_seg { next_seg * n } else { usize::MAX };
        let (stop, is_out, is_seg) = if out_key < seg_key {
            (horizon * next_out as f64 / n as f64, true, false)
        } else if seg_key < out_key {
            (horizon * next_seg as f64 / k_seg as f64, false, true)
        } else {
            (horizon * next_out as f64 / n as f64, true, true)
        };
        stepper.advance(&sys, t, stop, &mut y)?;
        t = stop;
        if is_out {
            record(t, &y, &mut times, &mut states)?;
            next_out += 1;
        }
        if is_seg {
            sys.eps = pulse.amplitudes()[next_seg];
            stepper.invalidate();
            next_seg += 1;
        }
    }

    let sensitivities = tags.into_iter().zip(sens).collect();
    Ok(Trajectory {
        params: *m,
        pulse: pulse.clone(),
        times,
        states,
        sensitivities,
    })
}

fn block(y: &[C64], j: usize) -> ProbeAmplitudes {
    let o = 4 * j;
    ProbeAmplitudes {
        c1: y[o],
        c1dot: y[o + 1],
        c2: y[o + 2],
        c2dot: y[o + 3],
    }
}

/// Central-difference phase sensitivity from trajectories started at
/// `phi + dphi` and `phi - dphi`.
///
/// The exact path (the `Phase` sensitivity of [`propagate`]) is preferred;
/// this exists as a cross-check.
pub fn phase_sensitivity(plus: &Trajectory, minus: &Trajectory, dphi: f64) -> Result<Vec<ProbeAmplitudes>> {
    if dphi.is_nan() || dphi <= 0.0 {
        return Err(Error::param("dphi", "must be positive"));
    }
    if !plus.same_grid(minus) || plus.params != minus.params {
        return Err(Error::GridMismatch);
    }
    let inv = 1.0 / (2.0 * dphi);
    Ok(plus
        .states
        .iter()
        .zip(&minus.states)
        .map(|(p, m)| ProbeAmplitudes {
            c1: (p.c1 - m.c1) * inv,
            c2: (p.c2 - m.c2) * inv,
            c1dot: (p.c1dot - m.c1dot) * inv,
            c2dot: (p.c2dot - m.c2dot) * inv,
        })
        .collect())
}

/// `d rho / dt` at a grid point, assembled by the product rule from `C_i` and `C_i'`.
pub fn time_derivative_rho(traj: &Trajectory, index: usize) -> Result<Operator4> {
    traj.check_index(index)?;
    let s = &traj.states[index];
    Ok(density_variation(s.c1, s.c2, s.c1dot, s.c2dot))
}

/// `d rho / d theta` at a grid point. `Parameter::Time` gives the time derivative.
pub fn parameter_derivative(traj: &Trajectory, index: usize, tag: Parameter) -> Result<Operator4> {
    if tag == Parameter::Time {
        return time_derivative_rho(traj, index);
    }
    traj.check_index(index)?;
    let s = &traj.states[index];
    let d = &traj.sensitivity(tag)?[index];
    Ok(density_variation(s.c1, s.c2, d.c1, d.c2))
}
