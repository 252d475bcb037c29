//! Exact stationary second moments under common phase diffusion.
//!
//! With Stratonovich noise dx = (M x + x0) dt + Σ_a D_a x ∘ dW_a and
//! ⟨dW_a dW_b⟩ = Q_ab dt, the Itô drift is A = M + ½ Σ Q_ab D_a D_b. The mean
//! m solves A m + x0 = 0 and the covariance K solves
//!
//! ```text
//! A K + K Aᵀ + Σ Q_ab D_a (K + m mᵀ) D_b = 0
//! ```
//!
//! Correlations then follow from ⟨δx(τ) δxᵀ(0)⟩ = e^{Aτ} K.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use super::{correlation_from, noise_covariance, readout, SpectraError};
use crate::bloch::{build_bloch_system, BlochSystem, Generator, State, SystemParams, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct FullOrderSolution {
    pub system: BlochSystem,
    /// Itô drift A.
    pub drift: Generator,
    pub mean: State,
    pub covariance: Generator,
    readout: [State; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSpectra {
    pub omega: f64,
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
    pub c: Option<f64>,
}

impl FullOrderSolution {
    pub fn new(params: &SystemParams) -> Result<Self, SpectraError> {
        let system = build_bloch_system(params)?;
        if params.rabi1 == 0.0 && params.rabi2 == 0.0 {
            return Err(crate::bloch::ModelError::Degenerate.into());
        }
        let q = noise_covariance(params);
        let d = [system.detuning_derivative(0), system.detuning_derivative(1)];

        let mut drift = system.m;
        for k in 0..8 {
            let mut s = C64::new(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    s += d[a][k] * d[b][k] * q[a][b];
                }
            }
            drift[(k, k)] += s * 0.5;
        }
        let mean = drift
            .lu()
            .solve(&(-system.x0))
            .ok_or(SpectraError::Singular { omega: 0.0 })?;

        let covariance = if params.gamma_bar == 0.0 {
            Generator::zeros()
        } else {
            // row-major vec: index k*8 + l for K_kl
            let n = 64;
            let mut l = DMatrix::<C64>::zeros(n, n);
            let mut rhs = DVector::<C64>::zeros(n);
            for k in 0..8 {
                for j in 0..8 {
                    let row = k * 8 + j;
                    for c in 0..8 {
                        l[(row, c * 8 + j)] += drift[(k, c)];
                        l[(row, k * 8 + c)] += drift[(j, c)];
                    }
                    let mut noise = C64::new(0.0, 0.0);
                    for a in 0..2 {
                        for b in 0..2 {
                            noise += d[a][k] * d[b][j] * q[a][b];
                        }
                    }
                    l[(row, row)] += noise;
                    rhs[row] = -noise * mean[k] * mean[j];
                }
            }
            let v = l.lu().solve(&rhs).ok_or(SpectraError::Singular { omega: 0.0 })?;
            Generator::from_fn(|k, j| v[k * 8 + j])
        };

        Ok(FullOrderSolution {
            readout: readout(params),
            system,
            drift,
            mean,
            covariance,
        })
    }

    /// Mean polarizations (p₁, p₂) including noise-induced broadening.
    pub fn mean_polarizations(&self) -> (C64, C64) {
        (self.mean[2], self.mean[4])
    }

    pub fn spectra(&self, omega: f64) -> Result<FullSpectra, SpectraError> {
        if !omega.is_finite() {
            return Err(SpectraError::InvalidArgument {
                name: "omega",
                value: omega,
            });
        }
        let r = (Generator::identity() * C64::new(0.0, omega) - self.drift)
            .try_inverse()
            .ok_or(SpectraError::Singular { omega })?;
        let rk = r * self.covariance;
        let g = &self.readout;
        let s = |i: usize, j: usize| {
            let a = (g[j].transpose() * rk * g[i])[0];
            let b = (g[i].transpose() * rk * g[j])[0];
            (a + b).re / TAU
        };
        let (s11, s22, s12) = (s(0, 0), s(1, 1), s(0, 1));
        Ok(FullSpectra {
            omega,
            s11,
            s22,
            s12,
            c: correlation_from(s11, s22, s12).ok(),
        })
    }

    /// Equal-time normalized intensity covariance.
    pub fn equal_time_correlation(&self) -> Result<f64, SpectraError> {
        let g = &self.readout;
        let c = |i: usize, j: usize| (g[i].transpose() * self.covariance * g[j])[0].re;
        correlation_from(c(0, 0), c(1, 1), c(0, 1)).map(|v| v.clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::steady_state;
    use crate::spectra::noise_spectra;
    use crate::units::mhz;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn fixture() {
        // independent dense solve of the moment equations
        let cases = [
            (0.5, 1.0, [3.601_047_035_114_005_5e-7, 1.452_000_526_744_660_6e-7, -4.850_891_069_590_126_5e-8]),
            (-3.0, 1.0, [2.181_559_889_868_081_5e-7, 6.017_412_569_196_034e-7, 1.725_436_198_987_771_5e-8]),
            (0.5, 0.6, [5.857_708_872_366_023e-7, 4.165_497_349_428_906_6e-7, 2.620_115_069_005_431e-7]),
        ];
        for (d, r, want) in cases {
            let p = SystemParams {
                phase_noise_correlation: r,
                ..SystemParams::reference().with_two_photon_detuning(mhz(d))
            };
            let s = FullOrderSolution::new(&p).unwrap().spectra(mhz(2.0)).unwrap();
            assert!(rel(s.s11, want[0]) < 1e-8, "{d} {r}");
            assert!(rel(s.s22, want[1]) < 1e-8);
            assert!(rel(s.s12, want[2]) < 1e-7);
        }
    }

    #[test]
    fn reduces_to_linear_response_for_weak_noise() {
        let base = SystemParams::reference().with_two_photon_detuning(mhz(0.5));
        for gb in [1e-3, 1e-4] {
            let p = SystemParams {
                gamma_bar: mhz(gb),
                ..base
            };
            let full = FullOrderSolution::new(&p).unwrap().spectra(mhz(2.0)).unwrap();
            let sys = build_bloch_system(&p).unwrap();
            let ss = steady_state(&sys).unwrap();
            let low = noise_spectra(&sys, &ss, &p, mhz(2.0)).unwrap();
            assert!(rel(full.s11, low.s11) < 200.0 * gb, "{gb}");
            assert!(rel(full.s22, low.s22) < 200.0 * gb);
        }
    }

    #[test]
    fn noiseless_limit() {
        let p = SystemParams {
            gamma_bar: 0.0,
            ..SystemParams::reference()
        };
        let sol = FullOrderSolution::new(&p).unwrap();
        let ss = steady_state(&sol.system).unwrap();
        assert!((sol.mean - ss.x_ss).norm() < 1e-12);
        let s = sol.spectra(1.0).unwrap();
        assert_eq!((s.s11, s.s22, s.s12), (0.0, 0.0, 0.0));
        assert!(s.c.is_none());
    }

    #[test]
    fn covariance_is_hermitian_under_pairing() {
        let sol = FullOrderSolution::new(&SystemParams::reference()).unwrap();
        let k = &sol.covariance;
        let pr = crate::bloch::idx::PARTNER;
        for i in 0..8 {
            for j in 0..8 {
                assert!((k[(pr[i], pr[j])] - k[(i, j)].conj()).norm() < 1e-14);
            }
        }
        // intensity variances are positive
        let g = readout(&SystemParams::reference());
        assert!((g[0].transpose() * k * g[0])[0].re > 0.0);
    }
}
