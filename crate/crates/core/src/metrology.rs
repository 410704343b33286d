//! Quantum and classical Fisher information along a trajectory.

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::dynamics::{parameter_derivative, Parameter, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{DensityMatrix4, Operator4, C64, EIGEN_TOL, IDX_01, IDX_10};

/// Pairs with `w_n + w_m` below this are treated as lying in the kernel of rho.
pub const EIG_CUTOFF: f64 = 1e-12;
/// Outcomes with probability below this are degenerate.
pub const PROB_CUTOFF: f64 = 1e-12;
/// Fisher values in `(-CLAMP_TOL, 0)` are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-9;
const DRHO_HERMITIAN_TOL: f64 = 1e-10;
const DRHO_TRACE_TOL: f64 = 1e-8;

/// Eigenvalues (descending) and orthonormal eigenvectors of a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vector4<f64>,
    pub eigenvectors: Matrix4<C64>,
}

pub fn spectral_decomposition(rho: &DensityMatrix4) -> Result<SpectralDecomposition> {
    let (mut vals, vecs) = linalg::hermitian_eigen(rho.matrix());
    for v in vals.iter_mut() {
        if *v < -EIGEN_TOL {
            return Err(Error::NegativeEigenvalue { value: *v });
        }
        *v = v.max(0.0);
    }
    Ok(SpectralDecomposition {
        eigenvalues: vals,
        eigenvectors: vecs,
    })
}

fn check_derivative(drho: &Operator4) -> Result<()> {
    let dev = linalg::hermitian_deviation(drho);
    if dev > DRHO_HERMITIAN_TOL {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let tr = drho.trace();
    if tr.norm() > DRHO_TRACE_TOL {
        return Err(Error::BadTrace {
            trace: tr.re,
            expected: 0.0,
        });
    }
    Ok(())
}

fn clamp_fisher(v: f64) -> Result<f64> {
    if v < -CLAMP_TOL || v.is_nan() {
        return Err(Error::NegativeFisher(v));
    }
    Ok(v.max(0.0))
}

/// Quantum Fisher information of the family `rho(theta)` with derivative `drho`.
///
/// Evaluated in the eigenbasis of `rho` from the matrix elements
/// `D_nm = <psi_n| drho |psi_m>`:
///
/// ```text
/// F = sum_n D_nn^2 / w_n  +  2 sum_{n != m} |D_nm|^2 / (w_n + w_m)
/// ```
///
/// which equals the eigenvalue/eigenvector-derivative form because
/// `D_nm = (w_m - w_n) <psi_n|d psi_m>` off the diagonal. Kernel terms are
/// dropped using [`EIG_CUTOFF`].
pub fn qfi(rho: &DensityMatrix4, drho: &Operator4) -> Result<f64> {
    check_derivative(drho)?;
    let sd = spectral_decomposition(rho)?;
    let u = &sd.eigenvectors;
    let d = u.adjoint() * drho * u;
    let w = &sd.eigenvalues;
    let mut f = 0.0;
    for n in 0..4 {
        if w[n] >= EIG_CUTOFF {
            f += d[(n, n)].re.powi(2) / w[n];
        }
        for m in 0..4 {
            if m != n && w[n] + w[m] > EIG_CUTOFF {
                f += 2.0 * d[(n, m)].norm_sqr() / (w[n] + w[m]);
            }
        }
    }
    clamp_fisher(f)
}

/// QFI for time estimation, `qfi(rho(t), drho/dt)`.
pub fn qfi_time(traj: &Trajectory, index: usize) -> Result<f64> {
    qfi_at(traj, index, Parameter::Time)
}

pub fn qfi_at(traj: &Trajectory, index: usize, tag: Parameter) -> Result<f64> {
    let rho = traj.density(index)?;
    let drho = parameter_derivative(traj, index, tag)?;
    qfi(&rho, &drho)
}

/// QFI per grid point for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherCurve {
    pub tag: Parameter,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl FisherCurve {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }
}

pub fn qfi_curve(traj: &Trajectory, tag: Parameter) -> Result<FisherCurve> {
    if !traj.has_sensitivity(tag) {
        return Err(Error::MissingSensitivity(tag.to_string()));
    }
    let values = (0..traj.len())
        .map(|i| qfi_at(traj, i, tag))
        .collect::<Result<Vec<_>>>()?;
    Ok(FisherCurve {
        tag,
        times: traj.times.clone(),
        values,
    })
}

/// Trapezoidal integral of a Fisher curve over its time grid.
pub fn total_qfi(curve: &FisherCurve) -> f64 {
    trapezoid(&curve.times, &curve.values)
}

pub(crate) fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum::<f64>()
        .max(0.0)
}

/// A set of positive operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<Operator4>,
}

impl Povm {
    pub fn new(effects: Vec<Operator4>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidPovm("no effects".into()));
        }
        let mut sum = Operator4::zeros();
        for (k, e) in effects.iter().enumerate() {
            if linalg::hermitian_deviation(e) > 1e-10 {
                return Err(Error::InvalidPovm(format!("effect {k} is not Hermitian")));
            }
            let low = linalg::hermitian_eigenvalues(e)[3];
            if low < -1e-10 {
                return Err(Error::InvalidPovm(format!("effect {k} has eigenvalue {low}")));
            }
            sum += e;
        }
        let dev = (sum - Operator4::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::InvalidPovm(format!("effects sum to identity only within {dev:e}")));
        }
        Ok(Povm { effects })
    }

    pub fn effects(&self) -> &[Operator4] {
        &self.effects
    }

    /// Outcome probabilities `Tr(P_x rho)`.
    pub fn probabilities(&self, rho: &DensityMatrix4) -> Vec<f64> {
        self.effects.iter().map(|e| (e * rho.matrix()).trace().re).collect()
    }
}

/// POVM `{E1, E2, 1 - E1 - E2}` with `E1 = c|10><10|`, `E2 = c|01><01|`,
/// `c = sqrt(2) / (1 + sqrt(2))`.
pub fn fig5_povm() -> Povm {
    let c = std::f64::consts::SQRT_2 / (1.0 + std::f64::consts::SQRT_2);
    let mut e1 = Operator4::zeros();
    e1[(IDX_10, IDX_10)] = C64::new(c, 0.0);
    let mut e2 = Operator4::zeros();
    e2[(IDX_01, IDX_01)] = C64::new(c, 0.0);
    let e3 = Operator4::identity() - e1 - e2;
    Povm::new(vec![e1, e2, e3]).expect("fixed POVM is valid")
}

/// Classical Fisher information `sum_x (dp_x)^2 / p_x` of a fixed POVM.
///
/// Outcomes with `p_x < PROB_CUTOFF` are kept only while `|dp_x|` stays
/// below `sqrt(PROB_CUTOFF)`; otherwise they are dropped with a warning.
pub fn classical_fisher(rho: &DensityMatrix4, drho: &Operator4, povm: &Povm) -> Result<f64> {
    check_derivative(drho)?;
    let mut g = 0.0;
    for (k, e) in povm.effects().iter().enumerate() {
        let p = (e * rho.matrix()).trace().re;
        let dp = (e * drho).trace().re;
        if p < PROB_CUTOFF {
            if dp.abs() >= PROB_CUTOFF.sqrt() {
                log::warn!("outcome {k} has p = {p:e} but dp = {dp:e}; dropping divergent term");
                continue;
            }
            if p <= 0.0 {
                continue;
            }
        }
        g += dp * dp / p;
    }
    clamp_fisher(g)
}

/// Classical Fisher information of `povm` per grid point.
pub fn classical_fisher_curve(traj: &Trajectory, tag: Parameter, povm: &Povm) -> Result<FisherCurve> {
    let values = (0..traj.len())
        .map(|i| {
            let rho = traj.density(i)?;
            let d = parameter_derivative(traj, i, tag)?;
            classical_fisher(&rho, &d, povm)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FisherCurve {
        tag,
        times: traj.times.clone(),
        values,
    })
}
