//! Two-qubit concurrence.

use nalgebra::Matrix4;

use crate::linalg;
use crate::model::{DensityMatrix4, ProbeAmplitudes, C64};

/// `2 |C1 C2*|`: the X-state concurrence of the single-excitation density
/// matrix, whose `|11><11|` population and `|11><00|` coherence vanish.
pub fn concurrence_closed(a: &ProbeAmplitudes) -> f64 {
    (2.0 * (a.c1 * a.c2.conj()).norm()).min(1.0)
}

/// `sigma_y (x) sigma_y` in the basis `{|11>, |10>, |01>, |00>}`.
fn spin_flip() -> Matrix4<C64> {
    let mut y = Matrix4::zeros();
    let one = C64::new(1.0, 0.0);
    y[(0, 3)] = -one;
    y[(3, 0)] = -one;
    y[(1, 2)] = one;
    y[(2, 1)] = one;
    y
}

/// Wootters concurrence `max(0, mu1 - mu2 - mu3 - mu4)`, where `mu_i` are the
/// square roots of the eigenvalues of `rho (Y rho* Y)`, `Y = sigma_y (x) sigma_y`.
///
/// The `mu_i` are obtained as singular values of `V^T Y V` with
/// `rho = V V^dagger`, which keeps kernel rounding noise at second order.
/// Complex conjugation is taken in the computational basis.
pub fn concurrence_wootters(rho: &DensityMatrix4) -> f64 {
    let v = linalg::sqrt_factor(rho.matrix());
    let tau = v.transpose() * spin_flip() * v;
    let mu = linalg::singular_values(&tau);
    (mu[0] - mu[1] - mu[2] - mu[3]).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector4;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn closed_form_examples() {
        let h = c(FRAC_1_SQRT_2);
        assert!((concurrence_closed(&ProbeAmplitudes::at_rest(h, h)) - 1.0).abs() < 1e-15);
        assert_eq!(concurrence_closed(&ProbeAmplitudes::at_rest(c(1.0), c(0.0))), 0.0);
        assert!((concurrence_closed(&ProbeAmplitudes::at_rest(c(0.6), c(0.5))) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn wootters_examples() {
        let z = c(0.0);
        let h = c(FRAC_1_SQRT_2);
        let bell = DensityMatrix4::pure(&Vector4::new(z, h, h, z)).unwrap();
        assert!((concurrence_wootters(&bell) - 1.0).abs() < 1e-12);
        let phi_plus = DensityMatrix4::pure(&Vector4::new(h, z, z, h)).unwrap();
        assert!((concurrence_wootters(&phi_plus) - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix4::diagonal([0.25; 4]).unwrap();
        assert!(concurrence_wootters(&mixed) < 1e-12);
        let a = ProbeAmplitudes::at_rest(c(0.6), c(0.5));
        assert!((concurrence_wootters(&a.density().unwrap()) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn separable_endpoints() {
        use crate::model::InitialStateParam;
        for s in [-1.0, 1.0] {
            let a = InitialStateParam::new(s, 0.4).unwrap().amplitudes();
            assert!(concurrence_closed(&a) < 1e-15);
        }
        let a = InitialStateParam::new(0.0, 2.0).unwrap().amplitudes();
        assert!((concurrence_closed(&a) - 1.0).abs() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn wootters_matches_closed_form(
                r1 in 0.0f64..0.7, r2 in 0.0f64..0.7, t1 in 0.0f64..std::f64::consts::TAU, t2 in 0.0f64..std::f64::consts::TAU
            ) {
                let a = ProbeAmplitudes::at_rest(C64::from_polar(r1, t1), C64::from_polar(r2, t2));
                let w = concurrence_wootters(&a.density().unwrap());
                prop_assert!((w - concurrence_closed(&a)).abs() < 1e-8);
            }

            #[test]
            fn invariant_under_local_phase(r1 in 0.0f64..0.7, r2 in 0.0f64..0.7, th in 0.0f64..std::f64::consts::TAU) {
                let a = ProbeAmplitudes::at_rest(c(r1), c(r2));
                let b = ProbeAmplitudes::at_rest(c(r1), c(r2) * C64::from_polar(1.0, th));
                prop_assert!((concurrence_closed(&a) - concurrence_closed(&b)).abs() < 1e-14);
                let wa = concurrence_wootters(&a.density().unwrap());
                let wb = concurrence_wootters(&b.density().unwrap());
                prop_assert!((wa - wb).abs() < 1e-8);
            }
        }
    }
}
