//! Experiment configuration: a flat JSON object, resolved against per-kind defaults.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::control::{Objective, DEFAULT_RESTARTS, DEFAULT_SEGMENTS};
use crate::dynamics::DEFAULT_EPS_MAX_FACTOR;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sweep::SweepGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FisherSweep,
    QslSweep,
    QslMap,
    OptimizeSweep,
    Blp,
    FlowsTriptych,
    FlowsTags,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::FisherSweep => "fisher-sweep",
            ExperimentKind::QslSweep => "qsl-sweep",
            ExperimentKind::QslMap => "qsl-map",
            ExperimentKind::OptimizeSweep => "optimize-sweep",
            ExperimentKind::Blp => "blp",
            ExperimentKind::FlowsTriptych => "flows-triptych",
            ExperimentKind::FlowsTags => "flows-tags",
        };
        f.write_str(s)
    }
}

/// A grid axis: either a point count (uniform over the axis range) or an
/// explicit list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Count(usize),
    Values(Vec<f64>),
}

/// The config document as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub kind: ExperimentKind,
    pub a1: f64,
    pub a2: f64,
    pub rabi: f64,
    pub lambda: f64,
    pub horizon: f64,
    #[serde(default)]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub s_grid: Option<AxisSpec>,
    #[serde(default)]
    pub phi_grid: Option<AxisSpec>,
    #[serde(default)]
    pub target_angle: Option<f64>,
    #[serde(default)]
    pub segments: Option<usize>,
    #[serde(default)]
    pub eps_max: Option<f64>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub objective: Option<Objective>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Every field filled in; this is what the manifest echoes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub kind: ExperimentKind,
    pub a1: f64,
    pub a2: f64,
    pub rabi: f64,
    pub lambda: f64,
    pub horizon: f64,
    pub grid_points: usize,
    pub s_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    pub target_angle: f64,
    pub segments: usize,
    pub eps_max: f64,
    pub restarts: usize,
    pub seed: u64,
    pub objective: Objective,
    pub output_dir: PathBuf,
}

pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_SEED: u64 = 0;

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param("config", e.to_string()))
    }

    fn default_axes(&self) -> (AxisSpec, AxisSpec) {
        use AxisSpec::*;
        match self.kind {
            ExperimentKind::FisherSweep => (Count(41), Count(5)),
            ExperimentKind::QslSweep => (Count(41), Values(vec![0.0, PI])),
            ExperimentKind::QslMap => (Count(41), Count(21)),
            ExperimentKind::OptimizeSweep => (Count(11), Values(vec![0.0, PI])),
            ExperimentKind::Blp => (Count(21), Count(21)),
            ExperimentKind::FlowsTriptych | ExperimentKind::FlowsTags => (Values(vec![0.0]), Values(vec![0.0])),
        }
    }

    /// Fills defaults and validates. Count-specified `s` axes of the sweep
    /// kinds are pinned so the sub- and super-radiant states are grid cells.
    pub fn resolve(&self, output_override: Option<PathBuf>) -> Result<ResolvedConfig> {
        let model = ModelParams::new(self.a1, self.a2, self.rabi, self.lambda, self.horizon)?;
        let (ds, dphi) = self.default_axes();
        let s_spec = self.s_grid.clone().unwrap_or(ds);
        let phi_spec = self.phi_grid.clone().unwrap_or(dphi);
        let pin = matches!(s_spec, AxisSpec::Count(_))
            && !matches!(self.kind, ExperimentKind::Blp | ExperimentKind::FlowsTriptych | ExperimentKind::FlowsTags);
        let (s, phi) = match (&s_spec, &phi_spec) {
            (AxisSpec::Count(ns), AxisSpec::Count(np)) => {
                let g = SweepGrid::uniform(*ns, *np)?;
                (g.s, g.phi)
            }
            _ => {
                let s = axis_values(&s_spec, -1.0, 1.0)?;
                let phi = axis_values(&phi_spec, 0.0, PI)?;
                (s, phi)
            }
        };
        let mut grid = SweepGrid::from_values(s, phi)?;
        if pin {
            grid = grid.pin_special_states(&model);
        }
        if self.kind == ExperimentKind::Blp && grid.len() < 2 {
            return Err(Error::param("s_grid", "blp needs at least two initial states"));
        }

        let grid_points = self
            .grid_points
            .unwrap_or_else(|| crate::dynamics::grid_points_for(model.horizon, model.rabi));
        if grid_points == 0 {
            return Err(Error::param("grid_points", "must be at least 1"));
        }
        let target_angle = self.target_angle.unwrap_or(FRAC_PI_4);
        if !(target_angle > 0.0 && target_angle <= PI / 2.0) {
            return Err(Error::param("target_angle", "must lie in (0, pi/2]"));
        }
        let segments = self.segments.unwrap_or(DEFAULT_SEGMENTS);
        if segments == 0 {
            return Err(Error::param("segments", "must be at least 1"));
        }
        let restarts = self.restarts.unwrap_or(DEFAULT_RESTARTS);
        if restarts == 0 {
            return Err(Error::param("restarts", "must be at least 1"));
        }
        let eps_max = self.eps_max.unwrap_or(DEFAULT_EPS_MAX_FACTOR * self.lambda);
        if !(eps_max.is_finite() && eps_max >= 0.0) {
            return Err(Error::param("eps_max", "must be finite and non-negative"));
        }
        Ok(ResolvedConfig {
            kind: self.kind,
            a1: self.a1,
            a2: self.a2,
            rabi: self.rabi,
            lambda: self.lambda,
            horizon: self.horizon,
            grid_points,
            s_grid: grid.s,
            phi_grid: grid.phi,
            target_angle,
            segments,
            eps_max,
            restarts,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            objective: self.objective.unwrap_or(Objective::QfiWidthAtT),
            output_dir: output_override
                .or_else(|| self.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        })
    }
}

fn axis_values(spec: &AxisSpec, lo: f64, hi: f64) -> Result<Vec<f64>> {
    match spec {
        AxisSpec::Count(n) => {
            let g = SweepGrid::uniform(*n, *n)?;
            Ok(if lo < 0.0 { g.s } else { g.phi })
        }
        AxisSpec::Values(v) => {
            if v.iter().any(|x| !(lo..=hi).contains(x)) {
                return Err(Error::param("grid", format!("axis values must lie in [{lo}, {hi}]")));
            }
            Ok(v.clone())
        }
    }
}

impl ResolvedConfig {
    pub fn model(&self) -> Result<ModelParams> {
        ModelParams::new(self.a1, self.a2, self.rabi, self.lambda, self.horizon)
    }

    pub fn grid(&self) -> Result<SweepGrid> {
        SweepGrid::from_values(self.s_grid.clone(), self.phi_grid.clone())
    }

    /// RNG seeds used by the optimizer restarts, in restart order.
    pub fn restart_seeds(&self) -> Vec<u64> {
        (1..self.restarts as u64).map(|k| self.seed.wrapping_add(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"{"kind": "fisher-sweep", "a1": 0.4, "a2": 0.6, "rabi": 5, "lambda": 1, "horizon": 2}"#;

    #[test]
    fn defaults_resolve() {
        let r = Config::from_json(FIG1).unwrap().resolve(None).unwrap();
        assert_eq!(r.s_grid.len(), 41);
        assert_eq!(r.phi_grid.len(), 5);
        assert_eq!(r.grid_points, 2000);
        assert_eq!(r.eps_max, 20.0);
        assert!(r.s_grid.iter().any(|s| (s - 0.384_615_384_6).abs() < 1e-9));
        assert_eq!(r.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = FIG1.replace("\"horizon\": 2", "\"horizon\": 2, \"tolerance\": 1");
        assert!(Config::from_json(&bad).is_err());
        assert!(Config::from_json(r#"{"kind": "nope", "a1": 1, "a2": 1, "rabi": 1, "lambda": 1, "horizon": 1}"#).is_err());
    }

    #[test]
    fn explicit_axes_and_validation() {
        let text = FIG1.replace("\"horizon\": 2", "\"horizon\": 2, \"s_grid\": [0.0, 0.5], \"phi_grid\": 3");
        let r = Config::from_json(&text).unwrap().resolve(Some("x".into())).unwrap();
        assert_eq!(r.s_grid, vec![0.0, 0.5]);
        assert_eq!(r.phi_grid, vec![0.0, PI / 2.0, PI]);
        assert_eq!(r.output_dir, PathBuf::from("x"));
        let bad = FIG1.replace("\"horizon\": 2", "\"horizon\": 2, \"s_grid\": [2.0]");
        assert!(Config::from_json(&bad).unwrap().resolve(None).is_err());
        let bad = FIG1.replace("\"horizon\": 2", "\"horizon\": -2");
        assert!(Config::from_json(&bad).unwrap().resolve(None).is_err());
    }
}
