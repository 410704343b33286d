//! `(s, phi)` grids of initial states and uncontrolled Fisher summaries over them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{grid_points_for, propagate, ControlPulse, Parameter};
use crate::error::{Error, Result};
use crate::metrology::{qfi_curve, total_qfi, FisherCurve};
use crate::model::{subradiant_param, superradiant_param, InitialStateParam, ModelParams};

/// Rectangular grid of initial states; `s` in `[-1, 1]`, `phi` in `[0, pi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub s: Vec<f64>,
    pub phi: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

impl SweepGrid {
    /// `ns` equidistant `s` values on `[-1, 1]` and `nphi` on `[0, pi]`.
    pub fn uniform(ns: usize, nphi: usize) -> Result<Self> {
        if ns == 0 || nphi == 0 {
            return Err(Error::param("grid", "needs at least one point per axis"));
        }
        Ok(SweepGrid {
            s: linspace(-1.0, 1.0, ns),
            phi: linspace(0.0, PI, nphi),
        })
    }

    pub fn from_values(s: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if s.is_empty() || phi.is_empty() {
            return Err(Error::param("grid", "needs at least one point per axis"));
        }
        for &x in &s {
            InitialStateParam::new(x, 0.0)?;
        }
        for &p in &phi {
            InitialStateParam::new(0.0, p)?;
        }
        Ok(SweepGrid { s, phi })
    }

    /// Moves the `s` values nearest to the sub- and super-radiant
    /// separabilities onto them exactly, so both special states are cells.
    pub fn pin_special_states(mut self, m: &ModelParams) -> Self {
        for target in [subradiant_param(m).s, superradiant_param(m).s] {
            if let Some(k) = nearest(&self.s, target) {
                self.s[k] = target;
            }
        }
        self
    }

    pub fn len(&self) -> usize {
        self.s.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in `s`-major order.
    pub fn cells(&self) -> Vec<InitialStateParam> {
        self.s
            .iter()
            .flat_map(|&s| self.phi.iter().map(move |&phi| InitialStateParam { s, phi }))
            .collect()
    }

    /// Index into [`cells`](Self::cells) of the cell nearest to `p`.
    pub fn nearest_cell(&self, p: &InitialStateParam) -> Option<usize> {
        let i = nearest(&self.s, p.s)?;
        let j = nearest(&self.phi, p.phi)?;
        Some(i * self.phi.len() + j)
    }
}

fn nearest(values: &[f64], target: f64) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|(k, _)| k)
}

/// Uncontrolled Fisher information of one tag for one initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherSummary {
    pub tag: Parameter,
    /// `F(T)`.
    pub final_value: f64,
    /// `max_t F(t)`.
    pub max_value: f64,
    /// `F_tot`, the time integral over `[0, T]`.
    pub total: f64,
}

impl FisherSummary {
    pub fn from_curve(curve: &FisherCurve) -> Self {
        FisherSummary {
            tag: curve.tag,
            final_value: curve.last(),
            max_value: curve.max(),
            total: total_qfi(curve),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub param: InitialStateParam,
    /// One entry per requested tag, in request order.
    pub summaries: Vec<FisherSummary>,
}

impl SweepCell {
    pub fn summary(&self, tag: Parameter) -> Option<&FisherSummary> {
        self.summaries.iter().find(|s| s.tag == tag)
    }
}

/// Fisher curves of every tag in `tags` for one uncontrolled initial state.
pub fn fisher_curves(
    m: &ModelParams,
    p: &InitialStateParam,
    tags: &[Parameter],
    grid_points: Option<usize>,
) -> Result<Vec<FisherCurve>> {
    let n = grid_points.unwrap_or_else(|| grid_points_for(m.horizon, m.rabi));
    let pulse = ControlPulse::zero(1, m.horizon)?;
    let traj = propagate(m, &p.amplitudes(), &pulse, n, tags)?;
    tags.iter().map(|&t| qfi_curve(&traj, t)).collect()
}

/// Uncontrolled Fisher summaries over every cell of `grid`, in parallel.
pub fn fisher_sweep(
    m: &ModelParams,
    grid: &SweepGrid,
    tags: &[Parameter],
    grid_points: Option<usize>,
) -> Result<Vec<SweepCell>> {
    grid.cells()
        .par_iter()
        .map(|p| {
            let curves = fisher_curves(m, p, tags, grid_points)?;
            Ok(SweepCell {
                param: *p,
                summaries: curves.iter().map(FisherSummary::from_curve).collect(),
            })
        })
        .collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= *v => {}
            _ => best = Some(k),
        }
    }
    best
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] <= *v => {}
            _ => best = Some(k),
        }
    }
    best
}
