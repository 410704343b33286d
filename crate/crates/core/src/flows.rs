//! Incoming flows: time intervals on which a monitored quantity increases.

use serde::Serialize;

use crate::dynamics::{propagate, ControlPulse, Parameter};
use crate::entanglement::concurrence_closed;
use crate::error::Result;
use crate::metrology::{classical_fisher_curve, qfi_curve, Povm};
use crate::model::{InitialStateParam, ModelParams};
use crate::nonmarkov::{blp_measure, derivative, BlpOptions};

/// Runs shorter than this many grid steps are treated as derivative chatter.
pub const MIN_INTERVAL_STEPS: usize = 3;
/// Default derivative threshold relative to `max |A|`.
pub const RELATIVE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowIntervals {
    pub source: String,
    /// Disjoint, sorted `(t_start, t_end)` pairs.
    pub intervals: Vec<(f64, f64)>,
}

impl FlowIntervals {
    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Intervals where `dA/dt > threshold` on a uniform grid.
///
/// `threshold = None` uses `RELATIVE_THRESHOLD * max |A|`.
pub fn incoming_flow(source: &str, times: &[f64], values: &[f64], threshold: Option<f64>) -> FlowIntervals {
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let thr = threshold.unwrap_or(RELATIVE_THRESHOLD * scale);
    let deriv = derivative(times, values);
    let mut intervals = Vec::new();
    let mut start: Option<usize> = None;
    let close = |s: usize, e: usize, out: &mut Vec<(f64, f64)>| {
        if e - s >= MIN_INTERVAL_STEPS {
            out.push((times[s], times[e]));
        }
    };
    for (k, d) in deriv.iter().enumerate() {
        match (start, *d > thr) {
            (None, true) => start = Some(k),
            (Some(s), false) => {
                close(s, k - 1, &mut intervals);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        close(s, deriv.len() - 1, &mut intervals);
    }
    FlowIntervals {
        source: source.to_string(),
        intervals,
    }
}

/// `|U(a) ∩ U(b)| / |U(a)|`, with `1` for an empty `a`.
pub fn overlap_fraction(a: &FlowIntervals, b: &FlowIntervals) -> f64 {
    let total = a.total_length();
    if total <= 0.0 {
        return 1.0;
    }
    let mut shared = 0.0;
    let mut j = 0;
    for &(s, e) in &a.intervals {
        while j < b.intervals.len() && b.intervals[j].1 <= s {
            j += 1;
        }
        let mut k = j;
        while k < b.intervals.len() && b.intervals[k].0 < e {
            let lo = s.max(b.intervals[k].0);
            let hi = e.min(b.intervals[k].1);
            if hi > lo {
                shared += hi - lo;
            }
            k += 1;
        }
    }
    (shared / total).clamp(0.0, 1.0)
}

/// A named time series on the shared grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub source: String,
    pub values: Vec<f64>,
}

/// Curves of one controlled (or free) run with their incoming flows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowScenario {
    pub times: Vec<f64>,
    pub curves: Vec<Curve>,
    pub flows: Vec<FlowIntervals>,
}

impl FlowScenario {
    pub fn flow(&self, source: &str) -> Option<&FlowIntervals> {
        self.flows.iter().find(|f| f.source == source)
    }

    pub fn curve(&self, source: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.source == source)
    }

    /// `overlap_fraction(IF(a), IF(b))`, if both sources exist.
    pub fn overlap(&self, a: &str, b: &str) -> Option<f64> {
        Some(overlap_fraction(self.flow(a)?, self.flow(b)?))
    }

    /// Every ordered pair of distinct sources with its overlap fraction.
    pub fn overlap_table(&self) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for a in &self.flows {
            for b in &self.flows {
                if a.source != b.source {
                    out.push((a.source.clone(), b.source.clone(), overlap_fraction(a, b)));
                }
            }
        }
        out
    }
}

/// What to record in a [`FlowScenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// QFI curves, named `F_<tag>`.
    pub qfi_tags: Vec<Parameter>,
    /// Classical Fisher curves, named `G_<tag>`.
    pub cfi: Option<(Parameter, Povm)>,
    pub concurrence: bool,
    /// Trace distance of the BLP-maximizing pair under the same pulse, named `D`.
    pub distinguishability: bool,
    pub grid_points: usize,
    pub blp: BlpOptions,
}

pub fn curve_name(prefix: &str, tag: Parameter) -> String {
    format!("{prefix}_{}", tag.as_str())
}

/// Propagates `x0` under `pulse` and extracts the requested curves and their
/// incoming flows with the default threshold.
pub fn analyze_scenario(
    m: &ModelParams,
    x0: &InitialStateParam,
    pulse: &ControlPulse,
    spec: &ScenarioSpec,
) -> Result<FlowScenario> {
    let mut tags = spec.qfi_tags.clone();
    if let Some((t, _)) = &spec.cfi {
        if !tags.contains(t) {
            tags.push(*t);
        }
    }
    let traj = propagate(m, &x0.amplitudes(), pulse, spec.grid_points, &tags)?;
    let mut curves = Vec::new();
    for &tag in &spec.qfi_tags {
        curves.push(Curve {
            source: curve_name("F", tag),
            values: qfi_curve(&traj, tag)?.values,
        });
    }
    if let Some((tag, povm)) = &spec.cfi {
        curves.push(Curve {
            source: curve_name("G", *tag),
            values: classical_fisher_curve(&traj, *tag, povm)?.values,
        });
    }
    if spec.concurrence {
        curves.push(Curve {
            source: "C".into(),
            values: traj.states.iter().map(concurrence_closed).collect(),
        });
    }
    if spec.distinguishability {
        let opts = BlpOptions {
            grid_points: Some(spec.grid_points),
            ..spec.blp
        };
        curves.push(Curve {
            source: "D".into(),
            values: blp_measure(m, pulse, &opts)?.distinguishability,
        });
    }
    let flows = curves
        .iter()
        .map(|c| incoming_flow(&c.source, &traj.times, &c.values, None))
        .collect();
    Ok(FlowScenario {
        times: traj.times,
        curves,
        flows,
    })
}
