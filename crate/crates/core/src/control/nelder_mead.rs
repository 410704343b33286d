//! Box-constrained Nelder–Mead minimizer with dimension-adaptive coefficients.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
    /// Stop when the simplex values agree to `ftol * (1 + |f_best|)` ...
    pub ftol: f64,
    /// ... and every vertex lies within `xtol` of the best in max norm.
    pub xtol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 1500,
            initial_step: 0.1,
            ftol: 1e-10,
            xtol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// Best value after each iteration.
    pub history: Vec<f64>,
    pub evals: usize,
    pub converged: bool,
}

struct Coefficients {
    reflect: f64,
    expand: f64,
    contract: f64,
    shrink: f64,
}

impl Coefficients {
    fn adaptive(n: usize) -> Self {
        let n = n as f64;
        Coefficients {
            reflect: 1.0,
            expand: 1.0 + 2.0 / n,
            contract: 0.75 - 1.0 / (2.0 * n),
            shrink: 1.0 - 1.0 / n,
        }
    }
}

fn clamp_into(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// `c + t (p - c)`, clamped to the box.
fn along(c: &[f64], p: &[f64], t: f64, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = c.iter().zip(p).map(|(c, p)| c + t * (p - c)).collect();
    clamp_into(&mut x, lower, upper);
    x
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0`.
///
/// Every trial point is projected onto the box, so the returned minimizer is
/// always feasible.
pub fn minimize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let coef = Coefficients::adaptive(n.max(2));
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        f(x)
    };

    let mut start = x0.to_vec();
    clamp_into(&mut start, lower, upper);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&start, &mut evals)?;
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut v = start.clone();
        let step = opts.initial_step * (upper[i] - lower[i]);
        v[i] = if v[i] + step <= upper[i] { v[i] + step } else { v[i] - step };
        clamp_into(&mut v, lower, upper);
        let fv = eval(&v, &mut evals)?;
        simplex.push((v, fv));
    }

    let mut history = Vec::new();
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        history.push(simplex[0].1);
        let best = &simplex[0];
        let fspread = simplex.iter().map(|v| (v.1 - best.1).abs()).fold(0.0, f64::max);
        let xspread = simplex
            .iter()
            .flat_map(|v| v.0.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if fspread <= opts.ftol * (1.0 + best.1.abs()) && xspread <= opts.xtol {
            converged = true;
            break;
        }
        if evals >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(&v.0) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let second = simplex[n - 1].1;

        let xr = along(&centroid, &worst.0, -coef.reflect, lower, upper);
        let fr = eval(&xr, &mut evals)?;
        if fr < simplex[0].1 {
            let xe = along(&centroid, &xr, coef.expand, lower, upper);
            let fe = eval(&xe, &mut evals)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < worst.1 {
            let xc = along(&centroid, &xr, coef.contract, lower, upper);
            let fc = eval(&xc, &mut evals)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = along(&centroid, &worst.0, coef.contract, lower, upper);
            let fc = eval(&xc, &mut evals)?;
            (xc, fc, fc < worst.1)
        };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            v.0 = along(&anchor, &v.0, coef.shrink, lower, upper);
            v.1 = eval(&v.0, &mut evals)?;
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fbest) = simplex.swap_remove(0);
    Ok(NelderMeadResult {
        x,
        f: fbest,
        history,
        evals,
        converged,
    })
}
