//! Bures geometry and the two quantum speed limit times.
//!
//! `tau_F` is the first time the Fisher length `int sqrt(F_t / 4) dt` reaches a
//! target Bures angle `L`; `tau_op` is the first time `int ||drho/dt||_op dt`
//! reaches `sin^2(L)`. Both saturate (never reach the target) for stationary
//! states.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{propagate, time_derivative_rho, ControlPulse, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrology::qfi_time;
use crate::model::{DensityMatrix4, InitialStateParam, ModelParams};

/// Default target Bures angle.
pub const DEFAULT_TARGET_ANGLE: f64 = std::f64::consts::FRAC_PI_4;
/// Saturation is declared on a trajectory this many times longer than `T`.
pub const DEFAULT_HORIZON_FACTOR: f64 = 10.0;

/// `Tr sqrt(sqrt(rho0) rho1 sqrt(rho0))`.
///
/// Computed as the trace norm of `V0^dagger V1` with `rho = V V^dagger`,
/// which avoids taking square roots of rounding noise in the kernel.
pub fn bures_fidelity(rho0: &DensityMatrix4, rho1: &DensityMatrix4) -> f64 {
    let v0 = linalg::sqrt_factor(rho0.matrix());
    let v1 = linalg::sqrt_factor(rho1.matrix());
    linalg::nuclear_norm(&(v0.adjoint() * v1)).clamp(0.0, 1.0)
}

/// `arccos(F_B)`, in `[0, pi/2]`.
pub fn bures_angle(rho0: &DensityMatrix4, rho1: &DensityMatrix4) -> f64 {
    bures_fidelity(rho0, rho1).acos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum QslTime {
    Reached(f64),
    /// The target was not reached within the trajectory.
    Saturated,
}

impl QslTime {
    pub fn value(&self) -> Option<f64> {
        match self {
            QslTime::Reached(t) => Some(*t),
            QslTime::Saturated => None,
        }
    }

    pub fn is_saturated(&self) -> bool {
        matches!(self, QslTime::Saturated)
    }

    /// Ordering key with saturation at `+inf`.
    pub fn as_f64(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QslResult {
    pub tau: QslTime,
    pub target_angle: f64,
    /// Accumulated length at the end of the trajectory.
    pub traveled: f64,
}

fn check_angle(target_angle: f64) -> Result<()> {
    if !(target_angle > 0.0 && target_angle <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::param("target_angle", format!("must lie in (0, pi/2], got {target_angle}")));
    }
    Ok(())
}

/// Instantaneous Fisher speed `sqrt(F_t / 4)` per grid point.
pub fn fisher_speed(traj: &Trajectory) -> Result<Vec<f64>> {
    (0..traj.len())
        .map(|i| qfi_time(traj, i).map(|f| (f / 4.0).sqrt()))
        .collect()
}

/// `||drho/dt||_op` per grid point.
pub fn opnorm_speed(traj: &Trajectory) -> Result<Vec<f64>> {
    (0..traj.len())
        .map(|i| time_derivative_rho(traj, i).map(|d| linalg::op_norm_hermitian(&d)))
        .collect()
}

/// Cumulative trapezoidal integral, starting at zero.
pub fn accumulate(times: &[f64], speeds: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    out.push(0.0);
    for (t, v) in times.windows(2).zip(speeds.windows(2)) {
        acc += 0.5 * (t[1] - t[0]) * (v[0] + v[1]);
        out.push(acc);
    }
    out
}

/// First time the accumulated length reaches `threshold`, linearly
/// interpolated inside the crossing step.
fn first_crossing(times: &[f64], cum: &[f64], threshold: f64) -> Option<f64> {
    for k in 1..cum.len() {
        if cum[k] >= threshold {
            let (a, b) = (cum[k - 1], cum[k]);
            let frac = if b > a { (threshold - a) / (b - a) } else { 0.0 };
            return Some(times[k - 1] + frac.clamp(0.0, 1.0) * (times[k] - times[k - 1]));
        }
    }
    None
}

fn qsl_from_speeds(times: &[f64], speeds: &[f64], threshold: f64, target_angle: f64) -> QslResult {
    let cum = accumulate(times, speeds);
    let traveled = *cum.last().unwrap_or(&0.0);
    let tau = match first_crossing(times, &cum, threshold) {
        Some(t) => QslTime::Reached(t),
        None => QslTime::Saturated,
    };
    QslResult {
        tau,
        target_angle,
        traveled,
    }
}

/// QSL time from the Fisher speed.
pub fn tau_fisher(traj: &Trajectory, target_angle: f64) -> Result<QslResult> {
    check_angle(target_angle)?;
    let speeds = fisher_speed(traj)?;
    Ok(qsl_from_speeds(&traj.times, &speeds, target_angle, target_angle))
}

/// QSL time from the operator norm of `drho/dt`, with threshold `sin^2(L)`.
pub fn tau_opnorm(traj: &Trajectory, target_angle: f64) -> Result<QslResult> {
    check_angle(target_angle)?;
    let speeds = opnorm_speed(traj)?;
    Ok(qsl_from_speeds(&traj.times, &speeds, target_angle.sin().powi(2), target_angle))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QslOptions {
    /// Long-horizon trajectory length in units of `T`.
    pub horizon_factor: f64,
    /// Grid intervals of the long-horizon trajectory; `None` applies the
    /// default resolution rule.
    pub grid_points: Option<usize>,
}

impl Default for QslOptions {
    fn default() -> Self {
        QslOptions {
            horizon_factor: DEFAULT_HORIZON_FACTOR,
            grid_points: None,
        }
    }
}

/// Both QSL times for one initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QslCell {
    pub param: InitialStateParam,
    pub fisher: QslResult,
    pub opnorm: QslResult,
}

/// Both QSL times for one initial state on the long-horizon trajectory
/// (uncontrolled).
pub fn qsl_cell(m: &ModelParams, p: &InitialStateParam, target_angle: f64, opts: &QslOptions) -> Result<QslCell> {
    check_angle(target_angle)?;
    let long = m.with_horizon(m.horizon * opts.horizon_factor);
    let n = opts
        .grid_points
        .unwrap_or_else(|| crate::dynamics::grid_points_for(long.horizon, long.rabi));
    let pulse = ControlPulse::zero(1, long.horizon)?;
    let traj = propagate(&long, &p.amplitudes(), &pulse, n, &[])?;
    Ok(QslCell {
        param: *p,
        fisher: tau_fisher(&traj, target_angle)?,
        opnorm: tau_opnorm(&traj, target_angle)?,
    })
}

/// QSL times over a set of initial states, evaluated in parallel.
pub fn qsl_map(m: &ModelParams, cells: &[InitialStateParam], target_angle: f64, opts: &QslOptions) -> Result<Vec<QslCell>> {
    cells
        .par_iter()
        .map(|p| qsl_cell(m, p, target_angle, opts))
        .collect()
}
