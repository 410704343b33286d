//! Trace-distance distinguishability and the BLP non-Markovianity measure.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{propagate, ControlPulse, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{DensityMatrix4, InitialStateParam, ModelParams, ProbeAmplitudes};
use crate::sweep::SweepGrid;

/// Default points per axis of the `(s, phi)` grid for each member of a pair.
pub const DEFAULT_PAIR_RESOLUTION: usize = 21;

/// `D = ||rho0 - rho1||_1 / 2`.
pub fn trace_distance(rho0: &DensityMatrix4, rho1: &DensityMatrix4) -> f64 {
    0.5 * linalg::trace_norm_hermitian(&(rho0.matrix() - rho1.matrix()))
}

/// Trace distance between two single-excitation states.
///
/// The difference is block diagonal: a 2x2 block on `{|10>, |01>}` and a
/// scalar on `|00>`, so the spectrum is available in closed form.
pub fn trace_distance_amplitudes(a: &ProbeAmplitudes, b: &ProbeAmplitudes) -> f64 {
    let d11 = a.c1.norm_sqr() - b.c1.norm_sqr();
    let d22 = a.c2.norm_sqr() - b.c2.norm_sqr();
    let off = a.c1 * a.c2.conj() - b.c1 * b.c2.conj();
    let (hi, lo) = linalg::eig2_hermitian(d11, d22, off);
    0.5 * (hi.abs() + lo.abs() + (d11 + d22).abs())
}

/// `D(rho1(t), rho2(t))` on the shared grid.
pub fn distinguishability(traj1: &Trajectory, traj2: &Trajectory) -> Result<Vec<f64>> {
    if !traj1.same_grid(traj2) {
        return Err(Error::GridMismatch);
    }
    Ok(traj1
        .states
        .iter()
        .zip(&traj2.states)
        .map(|(a, b)| trace_distance_amplitudes(a, b))
        .collect())
}

/// Finite-difference derivative: central inside, one-sided at the ends.
pub fn derivative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let (i, j) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (values[j] - values[i]) / (times[j] - times[i])
        })
        .collect()
}

/// `sigma(t) = dD/dt` at one grid point.
pub fn sigma(traj1: &Trajectory, traj2: &Trajectory, index: usize) -> Result<f64> {
    traj1.check_index(index)?;
    let d = distinguishability(traj1, traj2)?;
    Ok(derivative(&traj1.times, &d)[index])
}

pub fn sigma_curve(traj1: &Trajectory, traj2: &Trajectory) -> Result<Vec<f64>> {
    let d = distinguishability(traj1, traj2)?;
    Ok(derivative(&traj1.times, &d))
}

/// Sum of all increases of `D` between consecutive grid points.
pub fn positive_increments(d: &[f64]) -> f64 {
    d.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

/// `int_{sigma > 0} sigma dt` by the trapezoid rule, splitting steps at
/// linearly interpolated zero crossings.
pub fn positive_sigma_integral(times: &[f64], sigma: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(sigma.windows(2))
        .map(|(t, s)| {
            let h = t[1] - t[0];
            let (a, b) = (s[0], s[1]);
            if a >= 0.0 && b >= 0.0 {
                0.5 * h * (a + b)
            } else if a <= 0.0 && b <= 0.0 {
                0.0
            } else {
                let pos = a.max(b);
                0.5 * h * pos * pos / (a.abs() + b.abs())
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlpResult {
    pub value: f64,
    pub best_pair: (InitialStateParam, InitialStateParam),
    pub times: Vec<f64>,
    pub distinguishability: Vec<f64>,
    pub sigma_curve: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlpOptions {
    /// Points per axis of the `(s, phi)` grid.
    pub resolution: usize,
    /// Grid intervals of each trajectory; `None` applies the default rule.
    pub grid_points: Option<usize>,
}

impl Default for BlpOptions {
    fn default() -> Self {
        BlpOptions {
            resolution: DEFAULT_PAIR_RESOLUTION,
            grid_points: None,
        }
    }
}

/// BLP measure over `[0, T]`, maximized over ordered-distinct pairs of
/// single-excitation initial states on a `resolution x resolution` grid.
pub fn blp_measure(m: &ModelParams, pulse: &ControlPulse, opts: &BlpOptions) -> Result<BlpResult> {
    if opts.resolution < 2 {
        return Err(Error::param("resolution", "needs at least 2 points per axis"));
    }
    let cells = SweepGrid::uniform(opts.resolution, opts.resolution)?.cells();
    let n = opts
        .grid_points
        .unwrap_or_else(|| crate::dynamics::grid_points_for(m.horizon, m.rabi));
    blp_measure_on(m, pulse, &cells, n)
}

/// BLP measure maximized over pairs drawn from `cells`.
///
/// Ties resolve to the lexicographically smallest index pair, so the result
/// does not depend on how the work was split across threads.
pub fn blp_measure_on(
    m: &ModelParams,
    pulse: &ControlPulse,
    cells: &[InitialStateParam],
    grid_points: usize,
) -> Result<BlpResult> {
    if cells.len() < 2 {
        return Err(Error::param("cells", "needs at least two initial states"));
    }
    let trajs: Vec<Trajectory> = cells
        .par_iter()
        .map(|p| propagate(m, &p.amplitudes(), pulse, grid_points, &[]))
        .collect::<Result<_>>()?;

    let better = |a: (f64, usize, usize), b: (f64, usize, usize)| {
        if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
            b
        } else {
            a
        }
    };
    let none = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
    let (_, i, j) = (0..cells.len())
        .into_par_iter()
        .map(|i| {
            let mut local = none;
            for j in (i + 1)..cells.len() {
                let v = pair_increments(&trajs[i].states, &trajs[j].states);
                local = better(local, (v, i, j));
            }
            local
        })
        .reduce(|| none, better);

    let d = distinguishability(&trajs[i], &trajs[j])?;
    let sig = derivative(&trajs[i].times, &d);
    Ok(BlpResult {
        value: positive_increments(&d),
        best_pair: (cells[i], cells[j]),
        times: trajs[i].times.clone(),
        distinguishability: d,
        sigma_curve: sig,
    })
}

fn pair_increments(a: &[ProbeAmplitudes], b: &[ProbeAmplitudes]) -> f64 {
    let mut prev = trace_distance_amplitudes(&a[0], &b[0]);
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b).skip(1) {
        let d = trace_distance_amplitudes(x, y);
        if d > prev {
            acc += d - prev;
        }
        prev = d;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::C64;
    use nalgebra::Vector4;

    #[test]
    fn trace_distance_examples() {
        let a = DensityMatrix4::diagonal([1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = DensityMatrix4::diagonal([0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((trace_distance(&a, &b) - 0.5).abs() < 1e-14);
        assert!(trace_distance(&a, &a).abs() < 1e-15);
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let x = DensityMatrix4::pure(&Vector4::new(z, o, z, z)).unwrap();
        let y = DensityMatrix4::pure(&Vector4::new(z, z, o, z)).unwrap();
        assert!((trace_distance(&x, &y) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_general() {
        let pairs = [
            ((0.6, 0.1), (0.2, -0.5), (0.3, 0.0), (0.1, 0.8)),
            ((0.1, 0.0), (0.0, 0.2), (0.5, 0.5), (-0.4, 0.3)),
        ];
        for (a1, a2, b1, b2) in pairs {
            let a = ProbeAmplitudes::at_rest(C64::new(a1.0, a1.1), C64::new(a2.0, a2.1));
            let b = ProbeAmplitudes::at_rest(C64::new(b1.0, b1.1), C64::new(b2.0, b2.1));
            let general = trace_distance(&a.density().unwrap(), &b.density().unwrap());
            assert!((general - trace_distance_amplitudes(&a, &b)).abs() < 1e-13);
        }
    }

    #[test]
    fn increments_and_integral_agree_on_smooth_curve() {
        let n = 20001;
        let times: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 / (n - 1) as f64).collect();
        let d: Vec<f64> = times.iter().map(|t| 0.5 + 0.3 * (-t).exp() * (7.0 * t).cos()).collect();
        let sig = derivative(&times, &d);
        let a = positive_increments(&d);
        let b = positive_sigma_integral(&times, &sig);
        assert!(a > 0.1);
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn derivative_endpoints_are_one_sided() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let v = [0.0, 1.0, 4.0, 9.0];
        assert_eq!(derivative(&t, &v), vec![1.0, 2.0, 4.0, 5.0]);
    }
}
