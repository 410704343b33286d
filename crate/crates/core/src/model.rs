//! Physical parameters, initial-state parametrization and the probe density matrix.
//!
//! Basis ordering for every 4x4 operator in the crate is `{|11>, |10>, |01>, |00>}`.
//! Only the single-excitation block `{|10>, |01>}` and the ground population
//! `|00><00|` are ever populated by the dynamics.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub type C64 = Complex64;

/// A general 4x4 complex operator on the two-qubit space.
pub type Operator4 = Matrix4<C64>;

/// Index of `|11>` in the ordered basis.
pub const IDX_11: usize = 0;
/// Index of `|10>`.
pub const IDX_10: usize = 1;
/// Index of `|01>`.
pub const IDX_01: usize = 2;
/// Index of `|00>`.
pub const IDX_00: usize = 3;

/// Tolerance on the excitation bound when building a density matrix.
pub const POPULATION_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues above `-EIGEN_TOL` are treated as zero.
pub const EIGEN_TOL: f64 = 1e-10;

/// Constants defining one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Dimensionless coupling of atom 1.
    pub a1: f64,
    /// Dimensionless coupling of atom 2.
    pub a2: f64,
    /// Vacuum Rabi frequency.
    pub rabi: f64,
    /// Width of the Lorentzian spectral density.
    pub lambda: f64,
    /// Bare transition frequency. Cancels in the rotating frame of the reduced
    /// equations and is kept only so configurations are self-describing.
    pub omega0: f64,
    /// Final time of the evolution.
    pub horizon: f64,
}

impl ModelParams {
    pub fn new(a1: f64, a2: f64, rabi: f64, lambda: f64, horizon: f64) -> Result<Self> {
        let m = ModelParams {
            a1,
            a2,
            rabi,
            lambda,
            omega0: 0.0,
            horizon,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("a1", self.a1)?;
        positive("a2", self.a2)?;
        positive("lambda", self.lambda)?;
        positive("horizon", self.horizon)?;
        // R = 0 is admitted as the decoupled limit.
        if !(self.rabi.is_finite() && self.rabi >= 0.0) {
            return Err(Error::param("rabi", format!("must be non-negative, got {}", self.rabi)));
        }
        if !self.omega0.is_finite() {
            return Err(Error::param("omega0", "must be finite"));
        }
        Ok(())
    }

    /// Effective coupling `sqrt(a1^2 + a2^2)`.
    pub fn total_coupling(&self) -> f64 {
        self.a1.hypot(self.a2)
    }

    pub fn with_rabi(mut self, rabi: f64) -> Self {
        self.rabi = rabi;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    /// Unit vector along the super-radiant (bright) mode.
    pub fn bright_mode(&self) -> (f64, f64) {
        let at = self.total_coupling();
        (self.a1 / at, self.a2 / at)
    }
}

/// Initial separability `s` and phase `phi` of `C01|10> + C02|01>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialStateParam {
    pub s: f64,
    pub phi: f64,
}

impl InitialStateParam {
    pub fn new(s: f64, phi: f64) -> Result<Self> {
        let p = InitialStateParam { s, phi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.s) {
            return Err(Error::param("s", format!("must lie in [-1, 1], got {}", self.s)));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.phi) {
            return Err(Error::param("phi", format!("must lie in [0, pi], got {}", self.phi)));
        }
        Ok(())
    }

    /// `C01 = sqrt((1-s)/2)`, `C02 = sqrt((1+s)/2) e^{i phi}`, at rest.
    pub fn amplitudes(&self) -> ProbeAmplitudes {
        let c1 = ((1.0 - self.s) / 2.0).sqrt();
        let c2 = C64::from_polar(((1.0 + self.s) / 2.0).sqrt(), self.phi);
        ProbeAmplitudes::at_rest(C64::new(c1, 0.0), c2)
    }

    /// Derivative of the initial amplitudes with respect to `phi`.
    pub fn phase_derivative(&self) -> ProbeAmplitudes {
        phase_derivative_of(&self.amplitudes())
    }

    /// Inverse of [`amplitudes`](Self::amplitudes) for normalized pairs with
    /// real non-negative `c1`. A global phase is removed first.
    pub fn from_amplitudes(a: &ProbeAmplitudes) -> Result<Self> {
        let norm = a.population();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::param("amplitudes", format!("not normalized (norm^2 = {norm})")));
        }
        // Rotate so that c1 is real and non-negative.
        let phase = if a.c1.norm() > 0.0 {
            a.c1.conj() / a.c1.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let c2 = a.c2 * phase;
        let s = (c2.norm_sqr() - (a.c1.norm_sqr())).clamp(-1.0, 1.0);
        let phi = if c2.norm() > 0.0 { c2.arg() } else { 0.0 };
        if phi < -1e-12 {
            return Err(Error::param(
                "amplitudes",
                format!("relative phase {phi} lies outside [0, pi]"),
            ));
        }
        Ok(InitialStateParam { s, phi: phi.max(0.0) })
    }
}

fn phase_derivative_of(a: &ProbeAmplitudes) -> ProbeAmplitudes {
    ProbeAmplitudes::at_rest(C64::new(0.0, 0.0), C64::i() * a.c2)
}

/// Amplitudes `C1(t)`, `C2(t)` of `|10>` and `|01>` and their time derivatives.
///
/// The same shape is reused for sensitivity tracks, where the fields hold
/// `dC_i/dtheta` and `d/dt dC_i/dtheta`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProbeAmplitudes {
    pub c1: C64,
    pub c2: C64,
    pub c1dot: C64,
    pub c2dot: C64,
}

impl ProbeAmplitudes {
    pub fn at_rest(c1: C64, c2: C64) -> Self {
        ProbeAmplitudes {
            c1,
            c2,
            c1dot: C64::new(0.0, 0.0),
            c2dot: C64::new(0.0, 0.0),
        }
    }

    /// Excited-state population `|c1|^2 + |c2|^2`.
    pub fn population(&self) -> f64 {
        self.c1.norm_sqr() + self.c2.norm_sqr()
    }

    pub fn density(&self) -> Result<DensityMatrix4> {
        density_from_amplitudes(self)
    }

    /// Euclidean distance between the `(c1, c2)` pairs.
    pub fn distance(&self, other: &ProbeAmplitudes) -> f64 {
        ((self.c1 - other.c1).norm_sqr() + (self.c2 - other.c2).norm_sqr()).sqrt()
    }

    /// Hermitian inner product `<self|other>` on the `(c1, c2)` pair.
    pub fn inner(&self, other: &ProbeAmplitudes) -> C64 {
        self.c1.conj() * other.c1 + self.c2.conj() * other.c2
    }
}

pub fn amplitudes_from_param(p: &InitialStateParam) -> ProbeAmplitudes {
    p.amplitudes()
}

/// `(a2/a_t)|10> - (a1/a_t)|01>`: decoupled from the reservoir and stationary.
pub fn subradiant_state(m: &ModelParams) -> ProbeAmplitudes {
    let (u1, u2) = m.bright_mode();
    ProbeAmplitudes::at_rest(C64::new(u2, 0.0), C64::new(-u1, 0.0))
}

/// `(a1/a_t)|10> + (a2/a_t)|01>`: maximally coupled, decays fastest.
pub fn superradiant_state(m: &ModelParams) -> ProbeAmplitudes {
    let (u1, u2) = m.bright_mode();
    ProbeAmplitudes::at_rest(C64::new(u1, 0.0), C64::new(u2, 0.0))
}

/// `(s, phi) = ((a1^2 - a2^2)/a_t^2, pi)`.
pub fn subradiant_param(m: &ModelParams) -> InitialStateParam {
    let at2 = m.a1 * m.a1 + m.a2 * m.a2;
    InitialStateParam {
        s: (m.a1 * m.a1 - m.a2 * m.a2) / at2,
        phi: std::f64::consts::PI,
    }
}

/// `(s, phi) = ((a2^2 - a1^2)/a_t^2, 0)`.
pub fn superradiant_param(m: &ModelParams) -> InitialStateParam {
    let at2 = m.a1 * m.a1 + m.a2 * m.a2;
    InitialStateParam {
        s: (m.a2 * m.a2 - m.a1 * m.a1) / at2,
        phi: 0.0,
    }
}

/// A validated two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(Operator4);

impl DensityMatrix4 {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(m: Operator4) -> Result<Self> {
        let dev = linalg::hermitian_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NonHermitian { deviation: dev });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::BadTrace {
                trace: tr.re,
                expected: 1.0,
            });
        }
        let (vals, _) = linalg::hermitian_eigen(&m);
        if vals[3] < -EIGEN_TOL {
            return Err(Error::NegativeEigenvalue { value: vals[3] });
        }
        Ok(DensityMatrix4(m))
    }

    /// Diagonal state with the given populations, in basis order.
    pub fn diagonal(p: [f64; 4]) -> Result<Self> {
        let mut m = Operator4::zeros();
        for (i, v) in p.iter().enumerate() {
            m[(i, i)] = C64::new(*v, 0.0);
        }
        Self::from_matrix(m)
    }

    /// Pure state `|psi><psi|` for a normalized vector.
    pub fn pure(psi: &nalgebra::Vector4<C64>) -> Result<Self> {
        Self::from_matrix(psi * psi.adjoint())
    }

    pub fn matrix(&self) -> &Operator4 {
        &self.0
    }

    pub fn into_matrix(self) -> Operator4 {
        self.0
    }
}

/// Builds the single-excitation density matrix
///
/// ```text
/// | 0   0        0        0        |
/// | 0   |C1|^2   C1 C2*   0        |
/// | 0   C1* C2   |C2|^2   0        |
/// | 0   0        0        1 - |C|^2|
/// ```
pub fn density_from_amplitudes(a: &ProbeAmplitudes) -> Result<DensityMatrix4> {
    let pop = a.population();
    if !pop.is_finite() || pop > 1.0 + POPULATION_TOL {
        return Err(Error::ExcitationOverflow { population: pop });
    }
    let ground = (1.0 - pop).clamp(0.0, 1.0);
    let mut m = Operator4::zeros();
    m[(IDX_10, IDX_10)] = C64::new(a.c1.norm_sqr(), 0.0);
    m[(IDX_10, IDX_01)] = a.c1 * a.c2.conj();
    m[(IDX_01, IDX_10)] = a.c1.conj() * a.c2;
    m[(IDX_01, IDX_01)] = C64::new(a.c2.norm_sqr(), 0.0);
    m[(IDX_00, IDX_00)] = C64::new(ground, 0.0);
    Ok(DensityMatrix4(m))
}

/// First-order variation of the density matrix for amplitudes `a` moved along `da`.
///
/// Only `da.c1`, `da.c2` are used. With `da = (dC1/dt, dC2/dt)` this is
/// `drho/dt`; with a sensitivity track it is `drho/dtheta`. The result is
/// Hermitian and traceless.
pub fn density_variation(c1: C64, c2: C64, d1: C64, d2: C64) -> Operator4 {
    let mut m = Operator4::zeros();
    let p1 = 2.0 * (c1.conj() * d1).re;
    let p2 = 2.0 * (c2.conj() * d2).re;
    let coh = d1 * c2.conj() + c1 * d2.conj();
    m[(IDX_10, IDX_10)] = C64::new(p1, 0.0);
    m[(IDX_10, IDX_01)] = coh;
    m[(IDX_01, IDX_10)] = coh.conj();
    m[(IDX_01, IDX_01)] = C64::new(p2, 0.0);
    m[(IDX_00, IDX_00)] = C64::new(-(p1 + p2), 0.0);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: C64, b: f64) -> bool {
        (a - C64::new(b, 0.0)).norm() < 1e-12
    }

    #[test]
    fn parametrization_endpoints() {
        let a = InitialStateParam::new(0.0, 0.0).unwrap().amplitudes();
        assert!(close(a.c1, FRAC_1_SQRT_2) && close(a.c2, FRAC_1_SQRT_2));
        let a = InitialStateParam::new(1.0, 0.0).unwrap().amplitudes();
        assert!(close(a.c1, 0.0) && close(a.c2, 1.0));
        assert_eq!(a.c1dot, C64::new(0.0, 0.0));
    }

    #[test]
    fn superradiant_matches_parametrization() {
        let m = ModelParams::new(0.4, 0.6, 5.0, 1.0, 2.0).unwrap();
        let p = superradiant_param(&m);
        assert!((p.s - 0.384_615_384_615).abs() < 1e-9);
        let a = p.amplitudes();
        assert!(close(a.c1, 0.554_700_196_225_229_1));
        assert!(close(a.c2, 0.832_050_294_337_843_7));
        assert!(a.distance(&superradiant_state(&m)) < 1e-12);
    }

    #[test]
    fn subradiant_values_and_orthogonality() {
        let m = ModelParams::new(0.4, 0.6, 5.0, 1.0, 2.0).unwrap();
        let sub = subradiant_state(&m);
        assert!(close(sub.c1, 0.832_050_294_337_843_7));
        assert!(close(sub.c2, -0.554_700_196_225_229_1));
        assert!(sub.inner(&superradiant_state(&m)).norm() < 1e-15);
        let p = subradiant_param(&m);
        assert!((p.s + 0.384_615_384_615).abs() < 1e-9);
        assert_eq!(p.phi, PI);
        assert!(p.amplitudes().distance(&sub) < 1e-12);

        let sym = ModelParams::new(0.3, 0.3, 1.0, 1.0, 1.0).unwrap();
        let s = subradiant_state(&sym);
        assert!(close(s.c1, FRAC_1_SQRT_2) && close(s.c2, -FRAC_1_SQRT_2));
    }

    #[test]
    fn density_examples() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let rho = ProbeAmplitudes::at_rest(one, zero).density().unwrap();
        let expect = DensityMatrix4::diagonal([0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((rho.matrix() - expect.matrix()).norm() < 1e-15);

        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let rho = ProbeAmplitudes::at_rest(h, h).density().unwrap();
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            assert!(close(rho.matrix()[(i, j)], 0.5));
        }
        assert!(close(rho.matrix()[(3, 3)], 0.0));

        let q = C64::new(0.5, 0.0);
        let rho = ProbeAmplitudes::at_rest(q, q).density().unwrap();
        assert!(close(rho.matrix()[(3, 3)], 0.5));
        assert!(close(rho.matrix()[(1, 2)], 0.25));
        assert!(DensityMatrix4::from_matrix(*rho.matrix()).is_ok());
    }

    #[test]
    fn density_rejects_overflow_and_clamps_boundary() {
        let big = ProbeAmplitudes::at_rest(C64::new(0.8, 0.0), C64::new(0.7, 0.0));
        assert!(matches!(big.density(), Err(Error::ExcitationOverflow { .. })));
        let edge = ProbeAmplitudes::at_rest(C64::new(1.0 + 1e-10, 0.0), C64::new(0.0, 0.0));
        let rho = edge.density().unwrap();
        assert_eq!(rho.matrix()[(3, 3)].re, 0.0);
    }

    #[test]
    fn from_matrix_validation() {
        let mut m = Operator4::identity() * C64::new(0.25, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix4::from_matrix(m), Err(Error::NonHermitian { .. })));
        let m = Operator4::identity() * C64::new(0.3, 0.0);
        assert!(matches!(DensityMatrix4::from_matrix(m), Err(Error::BadTrace { .. })));
        assert!(matches!(
            DensityMatrix4::diagonal([1.2, -0.2, 0.0, 0.0]),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, 0.6, 5.0, 1.0, 2.0).is_err());
        assert!(ModelParams::new(0.4, 0.6, -1.0, 1.0, 2.0).is_err());
        assert!(ModelParams::new(0.4, 0.6, 5.0, 0.0, 2.0).is_err());
        assert!(InitialStateParam::new(1.5, 0.0).is_err());
        assert!(InitialStateParam::new(0.0, 4.0).is_err());
    }

    #[test]
    fn variation_is_traceless_and_matches_difference() {
        let a = InitialStateParam::new(0.3, 1.1).unwrap().amplitudes();
        let d1 = C64::new(0.2, -0.1);
        let d2 = C64::new(-0.05, 0.3);
        let v = density_variation(a.c1 * 0.9, a.c2 * 0.9, d1, d2);
        assert!(v.trace().norm() < 1e-15);
        let h = 1e-6;
        let shift = |sgn: f64| {
            let b = ProbeAmplitudes::at_rest(a.c1 * 0.9 + d1 * sgn * h, a.c2 * 0.9 + d2 * sgn * h);
            *b.density().unwrap().matrix()
        };
        let fd = (shift(1.0) - shift(-1.0)) / C64::new(2.0 * h, 0.0);
        assert!((fd - v).norm() < 1e-8);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn param_round_trip(s in -0.999f64..0.999, phi in 0.0f64..PI) {
                let p = InitialStateParam::new(s, phi).unwrap();
                let a = p.amplitudes();
                prop_assert!((a.population() - 1.0).abs() < 1e-14);
                let back = InitialStateParam::from_amplitudes(&a).unwrap();
                prop_assert!((back.s - s).abs() < 1e-12);
                prop_assert!((back.phi - phi).abs() < 1e-12);
            }

            #[test]
            fn density_has_rank_two_spectrum(
                r1 in 0.0f64..0.7, r2 in 0.0f64..0.7, t1 in 0.0f64..std::f64::consts::TAU, t2 in 0.0f64..std::f64::consts::TAU
            ) {
                let a = ProbeAmplitudes::at_rest(C64::from_polar(r1, t1), C64::from_polar(r2, t2));
                let rho = a.density().unwrap();
                let (vals, _) = linalg::hermitian_eigen(rho.matrix());
                let pop = a.population();
                let mut expect = [pop, 1.0 - pop, 0.0, 0.0];
                expect.sort_by(|x, y| y.partial_cmp(x).unwrap());
                for k in 0..4 {
                    prop_assert!((vals[k] - expect[k]).abs() < 1e-10);
                }
            }
        }
    }
}
