//! Piecewise-constant pulse optimization for a terminal objective.

pub mod nelder_mead;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, ControlPulse, Parameter, DEFAULT_EPS_MAX_FACTOR};
use crate::entanglement::concurrence_closed;
use crate::error::{Error, Result};
use crate::metrology::qfi_at;
use crate::model::{InitialStateParam, ModelParams};

pub use nelder_mead::{NelderMeadOptions, NelderMeadResult};

pub const DEFAULT_SEGMENTS: usize = 8;
pub const DEFAULT_RESTARTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "qfi_R_at_T")]
    QfiRabiAtT,
    #[serde(rename = "qfi_lambda_at_T")]
    QfiWidthAtT,
    #[serde(rename = "concurrence_at_T")]
    ConcurrenceAtT,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::QfiRabiAtT => "qfi_R_at_T",
            Objective::QfiWidthAtT => "qfi_lambda_at_T",
            Objective::ConcurrenceAtT => "concurrence_at_T",
        }
    }

    /// Sensitivity track the objective needs, if any.
    pub fn parameter(&self) -> Option<Parameter> {
        match self {
            Objective::QfiRabiAtT => Some(Parameter::Rabi),
            Objective::QfiWidthAtT => Some(Parameter::Width),
            Objective::ConcurrenceAtT => None,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qfi_R_at_T" => Ok(Objective::QfiRabiAtT),
            "qfi_lambda_at_T" => Ok(Objective::QfiWidthAtT),
            "concurrence_at_T" => Ok(Objective::ConcurrenceAtT),
            _ => Err(Error::param("objective", format!("unknown objective {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlProblem {
    pub model: ModelParams,
    pub x0: InitialStateParam,
    pub objective: Objective,
    pub segments: usize,
    pub eps_max: f64,
    pub restarts: usize,
    pub seed: u64,
    pub search: NelderMeadOptions,
}

impl ControlProblem {
    /// Defaults: 8 segments, `eps_max = 20 lambda`, 20 restarts.
    pub fn new(model: ModelParams, x0: InitialStateParam, objective: Objective, seed: u64) -> Self {
        ControlProblem {
            model,
            x0,
            objective,
            segments: DEFAULT_SEGMENTS,
            eps_max: DEFAULT_EPS_MAX_FACTOR * model.lambda,
            restarts: DEFAULT_RESTARTS,
            seed,
            search: NelderMeadOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.x0.validate()?;
        if self.segments == 0 {
            return Err(Error::param("segments", "must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::param("restarts", "must be at least 1"));
        }
        if !(self.eps_max.is_finite() && self.eps_max >= 0.0) {
            return Err(Error::param("eps_max", format!("must be finite and non-negative, got {}", self.eps_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSolution {
    pub pulse: ControlPulse,
    pub objective_value: f64,
    /// Best objective after each iteration of the winning restart.
    pub history: Vec<f64>,
    /// Best objective reached by each restart, in restart order.
    pub restarts_log: Vec<f64>,
    pub winning_restart: usize,
    pub evaluations: usize,
    /// False when the winning restart stopped on its evaluation budget.
    pub converged: bool,
}

impl ControlSolution {
    /// Running maximum of `restarts_log`.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.restarts_log
            .iter()
            .map(|v| {
                best = best.max(*v);
                best
            })
            .collect()
    }
}

/// Terminal objective for `pulse`, from a propagation that records only the
/// endpoints.
pub fn evaluate_objective(problem: &ControlProblem, pulse: &ControlPulse) -> Result<f64> {
    if pulse.max_abs() > problem.eps_max * (1.0 + 1e-12) {
        return Err(Error::param("pulse", format!("amplitude {} exceeds eps_max {}", pulse.max_abs(), problem.eps_max)));
    }
    let tags: Vec<Parameter> = problem.objective.parameter().into_iter().collect();
    let traj = propagate(&problem.model, &problem.x0.amplitudes(), pulse, 1, &tags)?;
    match problem.objective.parameter() {
        Some(tag) => qfi_at(&traj, traj.len() - 1, tag),
        None => Ok(concurrence_closed(traj.last())),
    }
}

/// Initial pulse of restart `index`: the zero pulse for restart 0, otherwise
/// uniform in `[-eps_max, eps_max]^K` from a stream seeded by `seed + index`.
pub fn restart_start(problem: &ControlProblem, index: usize) -> Vec<f64> {
    if index == 0 {
        return vec![0.0; problem.segments];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed.wrapping_add(index as u64));
    (0..problem.segments)
        .map(|_| {
            if problem.eps_max > 0.0 {
                rng.random_range(-problem.eps_max..=problem.eps_max)
            } else {
                0.0
            }
        })
        .collect()
}

fn run_restart(problem: &ControlProblem, index: usize) -> Result<NelderMeadResult> {
    let horizon = problem.model.horizon;
    let lower = vec![-problem.eps_max; problem.segments];
    let upper = vec![problem.eps_max; problem.segments];
    let mut r = nelder_mead::minimize(
        |x| {
            let pulse = ControlPulse::new(x.to_vec(), horizon)?;
            evaluate_objective(problem, &pulse).map(|v| -v)
        },
        &restart_start(problem, index),
        &lower,
        &upper,
        &problem.search,
    )?;
    r.f = -r.f;
    for h in r.history.iter_mut() {
        *h = -*h;
    }
    Ok(r)
}

/// Multi-restart bounded Nelder–Mead maximization of the objective.
///
/// Restarts run in parallel; the merge is in restart order, so the result is
/// independent of the thread count.
pub fn optimize(problem: &ControlProblem) -> Result<ControlSolution> {
    problem.validate()?;
    let runs: Vec<NelderMeadResult> = (0..problem.restarts)
        .into_par_iter()
        .map(|k| run_restart(problem, k))
        .collect::<Result<_>>()?;

    let mut winner = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.f > runs[winner].f {
            winner = k;
        }
    }
    let best = &runs[winner];
    let pulse = ControlPulse::bounded(best.x.clone(), problem.model.horizon, problem.eps_max)?;
    let objective_value = evaluate_objective(problem, &pulse)?;
    Ok(ControlSolution {
        pulse,
        objective_value,
        history: best.history.clone(),
        restarts_log: runs.iter().map(|r| r.f).collect(),
        winning_restart: winner,
        evaluations: runs.iter().map(|r| r.evals).sum(),
        converged: best.converged,
    })
}
