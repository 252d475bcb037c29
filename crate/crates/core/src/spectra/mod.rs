//! Intensity-noise spectra from laser phase diffusion.
//!
//! Both lasers share a phase φ(t) whose derivative is white with
//! ⟨φ̇(t)φ̇(t′)⟩ = 2γ̄ δ(t − t′). In the rotating frame this is a fluctuation
//! of both one-photon detunings. Two computations are provided:
//!
//! * [`noise_spectra`]: linear response around the noiseless steady state,
//!   lowest order in γ̄, with the regrouping into Π̃-weighted terms.
//! * [`FullOrderSolution`]: the exact stationary second moments of the
//!   linear stochastic system (closed at second order), valid at all orders
//!   in γ̄.
//!
//! Spectral densities are two-sided, per unit angular frequency, using
//! S_ij(ω) = (1/2π) ∫ ⟨δI_i(t+τ) δI_j(t)⟩ e^{iωτ} dτ symmetrized in (i, j).

mod full;
mod phasor;

pub use full::{FullOrderSolution, FullSpectra};
pub use phasor::{phasor_model, phasor_process, PhasorResponse, Process};

use std::f64::consts::TAU;

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch::{BlochSystem, Generator, ModelError, State, SteadyState, SystemParams, C64};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("M − iωI is singular at ω = {omega}")]
    Singular { omega: f64 },
    #[error("correlation undefined: S11·S22 = 0")]
    UndefinedCorrelation,
    #[error("g2(0) undefined: a polarization vanishes")]
    UndefinedG2,
    #[error("invalid argument {name} = {value}")]
    InvalidArgument { name: &'static str, value: f64 },
}

/// Spectra at one analysis frequency and their regrouping.
///
/// ε² = γ̄/Γ. The Π̃ products carry the factor 2ε²; ν, α, β are the
/// γ̄-independent weights that multiply them. Everything not attributable
/// to the listed products sits in `extra_c1`, `alpha_c`, `alpha_i2`,
/// `beta_c`, `beta_i1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub omega: f64,
    pub epsilon_sq: f64,
    pub pi_im: f64,
    pub pi_re: f64,
    pub pi_ri: f64,
    pub pi_ir: f64,
    pub nu_im: f64,
    pub nu_re: f64,
    pub nu_ri: f64,
    pub nu_ir: f64,
    pub extra_c1: f64,
    /// Same-beam products for beam 1: (2ε² Im²p₁, 2ε² Re²p₁, −2ε² Im p₁ Re p₁).
    pub pi_11: [f64; 3],
    pub alpha_im: f64,
    pub alpha_re: f64,
    pub alpha_ri: f64,
    pub alpha_c: f64,
    pub alpha_i2: f64,
    /// Same-beam products for beam 2.
    pub pi_22: [f64; 3],
    pub beta_im: f64,
    pub beta_re: f64,
    pub beta_ri: f64,
    pub beta_c: f64,
    pub beta_i1: f64,
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
    pub c: Option<f64>,
    /// Both κ are zero.
    pub degenerate: bool,
}

impl SpectralDecomposition {
    fn zero(omega: f64, epsilon_sq: f64, degenerate: bool) -> Self {
        SpectralDecomposition {
            omega,
            epsilon_sq,
            pi_im: 0.0,
            pi_re: 0.0,
            pi_ri: 0.0,
            pi_ir: 0.0,
            nu_im: 0.0,
            nu_re: 0.0,
            nu_ri: 0.0,
            nu_ir: 0.0,
            extra_c1: 0.0,
            pi_11: [0.0; 3],
            alpha_im: 0.0,
            alpha_re: 0.0,
            alpha_ri: 0.0,
            alpha_c: 0.0,
            alpha_i2: 0.0,
            pi_22: [0.0; 3],
            beta_im: 0.0,
            beta_re: 0.0,
            beta_ri: 0.0,
            beta_c: 0.0,
            beta_i1: 0.0,
            s11: 0.0,
            s22: 0.0,
            s12: 0.0,
            c: None,
            degenerate,
        }
    }

    /// (S11, S22, S12) rebuilt from the weighted products and buckets.
    pub fn resum(&self) -> (f64, f64, f64) {
        let s12 = self.nu_im * self.pi_im
            + self.nu_re * self.pi_re
            + self.nu_ri * self.pi_ri
            + self.nu_ir * self.pi_ir
            + self.extra_c1;
        let s11 = self.alpha_im * self.pi_11[0]
            + self.alpha_re * self.pi_11[1]
            + self.alpha_ri * self.pi_11[2]
            + self.alpha_c
            + self.alpha_i2;
        let s22 = self.beta_im * self.pi_22[0]
            + self.beta_re * self.pi_22[1]
            + self.beta_ri * self.pi_22[2]
            + self.beta_c
            + self.beta_i1;
        (s11, s22, s12)
    }
}

/// (Π̃_Im, Π̃_Re, Π̃_RI, Π̃_IR) for ε = √(γ̄/Γ).
pub fn pi_products(ss: &SteadyState, epsilon: f64) -> (f64, f64, f64, f64) {
    let e2 = 2.0 * epsilon * epsilon;
    let (p1, p2) = (ss.p1, ss.p2);
    (
        e2 * p1.im * p2.im,
        e2 * p1.re * p2.re,
        -e2 * p1.im * p2.re,
        -e2 * p2.im * p1.re,
    )
}

/// χ(ω) = (M − iωI)⁻¹.
pub fn response_kernel(sys: &BlochSystem, omega: f64) -> Result<Generator, SpectraError> {
    if !omega.is_finite() {
        return Err(SpectraError::InvalidArgument {
            name: "omega",
            value: omega,
        });
    }
    let a = sys.m - Generator::identity() * C64::new(0.0, omega);
    a.try_inverse().ok_or(SpectraError::Singular { omega })
}

/// Readout vectors g_i with δI_i = g_iᵀ δx = −2κ_i Im δp_i.
pub fn readout(params: &SystemParams) -> [State; 2] {
    let mut g1 = State::zeros();
    g1[2] = I * params.kappa1;
    g1[3] = -I * params.kappa1;
    let mut g2 = State::zeros();
    g2[4] = I * params.kappa2;
    g2[5] = -I * params.kappa2;
    [g1, g2]
}

/// Covariance of the two detuning noises, per unit time.
pub fn noise_covariance(params: &SystemParams) -> [[f64; 2]; 2] {
    let q = 2.0 * params.gamma_bar;
    let r = params.phase_noise_correlation;
    [[q, q * r], [q * r, q]]
}

/// x = T y with y = (ρ11, ρ22, Im p₁, Re p₁, Im p₂, Re p₂, Re ρ12, Im ρ12).
fn real_coordinates() -> Generator {
    let mut t = Generator::zeros();
    t[(0, 0)] = 1.0.into();
    t[(1, 1)] = 1.0.into();
    for (a, b, col) in [(2, 3, 2), (4, 5, 4), (6, 7, 6)] {
        let (im_col, re_col) = if col == 6 { (7, 6) } else { (col, col + 1) };
        t[(a, im_col)] = I;
        t[(b, im_col)] = -I;
        t[(a, re_col)] = 1.0.into();
        t[(b, re_col)] = 1.0.into();
    }
    t
}

fn real_state(ss: &SteadyState) -> [f64; 8] {
    let r12 = ss.rho12();
    [
        ss.populations.0,
        ss.populations.1,
        ss.p1.im,
        ss.p1.re,
        ss.p2.im,
        ss.p2.re,
        r12.re,
        r12.im,
    ]
}

const CROSS: [(usize, usize); 4] = [(2, 4), (3, 5), (2, 5), (3, 4)];

/// Lowest-order linear-response spectra and their Π̃ regrouping.
pub fn noise_spectra(
    sys: &BlochSystem,
    ss: &SteadyState,
    params: &SystemParams,
    omega: f64,
) -> Result<SpectralDecomposition, SpectraError> {
    params.validate()?;
    let eps2 = params.epsilon_sq();
    let degenerate = params.kappa1 == 0.0 && params.kappa2 == 0.0;
    if params.gamma_bar == 0.0 || degenerate {
        return Ok(SpectralDecomposition::zero(omega, eps2, degenerate));
    }
    let chi = response_kernel(sys, omega)?;
    let q = noise_covariance(params);
    let g = readout(params);
    let t = real_coordinates();

    // h[i][a] = g_iᵀ χ D_a x_ss, w[i][a] = g_iᵀ χ D_a T
    let mut h = [[C64::new(0.0, 0.0); 2]; 2];
    let mut w = [[SMatrix::<C64, 1, 8>::zeros(); 2]; 2];
    for i in 0..2 {
        let gchi = g[i].transpose() * chi;
        for a in 0..2 {
            let d = sys.detuning_derivative(a);
            let row = SMatrix::<C64, 1, 8>::from_fn(|_, k| gchi[k] * d[k]);
            h[i][a] = (row * ss.x_ss)[0];
            w[i][a] = row * t;
        }
    }
    let spec = |i: usize, j: usize| {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                s += q[a][b] * (h[i][a].conj() * h[j][b]).re;
            }
        }
        s / TAU
    };
    // c[k][l] for k ≤ l: coefficient of y_k y_l in S_ij
    let pair_coeffs = |i: usize, j: usize| {
        let mut kk = [[0.0; 8]; 8];
        for (k, row) in kk.iter_mut().enumerate() {
            for (l, v) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        s += q[a][b] * (w[i][a][k].conj() * w[j][b][l]).re;
                    }
                }
                *v = s / TAU;
            }
        }
        let mut c = [[0.0; 8]; 8];
        for k in 0..8 {
            c[k][k] = kk[k][k];
            for l in k + 1..8 {
                c[k][l] = kk[k][l] + kk[l][k];
            }
        }
        c
    };
    let y = real_state(ss);
    let sum_except = |c: &[[f64; 8]; 8], skip: &dyn Fn(usize, usize) -> bool| {
        let mut s = 0.0;
        for k in 0..8 {
            for l in k..8 {
                if !skip(k, l) {
                    s += c[k][l] * y[k] * y[l];
                }
            }
        }
        s
    };
    let is_cross = |k: usize, l: usize| CROSS.contains(&(k, l));

    let two_e2 = 2.0 * eps2;
    let (pi_im, pi_re, pi_ri, pi_ir) = pi_products(ss, eps2.sqrt());
    let (p1, p2) = (ss.p1, ss.p2);

    let c12 = pair_coeffs(0, 1);
    let c11 = pair_coeffs(0, 0);
    let c22 = pair_coeffs(1, 1);

    let same1 = [(2, 2), (3, 3), (2, 3)];
    let same2 = [(4, 4), (5, 5), (4, 5)];

    let s11 = spec(0, 0);
    let s22 = spec(1, 1);
    let s12 = spec(0, 1);
    let c = if s11 * s22 > 0.0 {
        Some(s12 / (s11 * s22).sqrt())
    } else {
        None
    };

    Ok(SpectralDecomposition {
        omega,
        epsilon_sq: eps2,
        pi_im,
        pi_re,
        pi_ri,
        pi_ir,
        nu_im: c12[2][4] / two_e2,
        nu_re: c12[3][5] / two_e2,
        nu_ri: -c12[2][5] / two_e2,
        nu_ir: -c12[3][4] / two_e2,
        extra_c1: sum_except(&c12, &is_cross),
        pi_11: [
            two_e2 * p1.im * p1.im,
            two_e2 * p1.re * p1.re,
            -two_e2 * p1.im * p1.re,
        ],
        alpha_im: c11[2][2] / two_e2,
        alpha_re: c11[3][3] / two_e2,
        alpha_ri: -c11[2][3] / two_e2,
        alpha_c: CROSS.iter().map(|&(k, l)| c11[k][l] * y[k] * y[l]).sum(),
        alpha_i2: sum_except(&c11, &|k, l| is_cross(k, l) || same1.contains(&(k, l))),
        pi_22: [
            two_e2 * p2.im * p2.im,
            two_e2 * p2.re * p2.re,
            -two_e2 * p2.im * p2.re,
        ],
        beta_im: c22[4][4] / two_e2,
        beta_re: c22[5][5] / two_e2,
        beta_ri: -c22[4][5] / two_e2,
        beta_c: CROSS.iter().map(|&(k, l)| c22[k][l] * y[k] * y[l]).sum(),
        beta_i1: sum_except(&c22, &|k, l| is_cross(k, l) || same2.contains(&(k, l))),
        s11,
        s22,
        s12,
        c,
        degenerate,
    })
}

/// C = S12/√(S11 S22).
pub fn correlation_point(dec: &SpectralDecomposition) -> Result<f64, SpectraError> {
    correlation_from(dec.s11, dec.s22, dec.s12)
}

pub(crate) fn correlation_from(s11: f64, s22: f64, s12: f64) -> Result<f64, SpectraError> {
    let d = s11 * s22;
    if !(d > 0.0) || !s12.is_finite() {
        return Err(SpectraError::UndefinedCorrelation);
    }
    Ok(s12 / d.sqrt())
}

/// Polarizations below this magnitude are treated as vanishing.
pub const POLARIZATION_FLOOR: f64 = 1e-13;

/// Cosine of the angle between p₁ and p₂ as plane vectors.
pub fn g2_zero(ss: &SteadyState) -> Result<f64, SpectraError> {
    let (a, b) = (ss.p1.norm(), ss.p2.norm());
    if !(a > POLARIZATION_FLOOR && b > POLARIZATION_FLOOR) {
        return Err(SpectraError::UndefinedG2);
    }
    let g = (ss.p1.re * ss.p2.re + ss.p1.im * ss.p2.im) / (a * b);
    Ok(g.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{build_bloch_system, steady_state};
    use crate::units::mhz;

    fn solve(p: &SystemParams) -> (BlochSystem, SteadyState) {
        let sys = build_bloch_system(p).unwrap();
        let ss = steady_state(&sys).unwrap();
        (sys, ss)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn pi_products_trivial_cases() {
        let mut x = State::zeros();
        x[2] = C64::new(0.0, 0.3);
        x[4] = C64::new(0.0, 0.3);
        let ss = SteadyState::from_state(x);
        let (im, re, ri, ir) = pi_products(&ss, 0.5);
        assert!((im - 2.0 * 0.25 * 0.09).abs() < 1e-16);
        assert_eq!((re, ri, ir), (0.0, 0.0, 0.0));
        let dark = SteadyState::from_state(State::zeros());
        assert_eq!(pi_products(&dark, 0.5), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn pi_products_fixture() {
        let p = SystemParams::reference().with_two_photon_detuning(mhz(1.0));
        let (_, ss) = solve(&p);
        let (im, re, ri, ir) = pi_products(&ss, p.epsilon_sq().sqrt());
        assert!(rel(im, 0.003_086_768_174_783_335_5) < 1e-10);
        assert!(rel(re, -0.000_320_716_987_685_002_44) < 1e-10);
        assert!(rel(ri, 0.000_508_059_086_392_117_6) < 1e-10);
        assert!(rel(ir, -0.001_948_550_901_291_003_7) < 1e-10);
        assert!(rel(g2_zero(&ss).unwrap(), 0.747_691_411_823_900_1) < 1e-10);
    }

    #[test]
    fn kernel_inverts() {
        let (sys, _) = solve(&SystemParams::reference());
        for w in [0.0, mhz(2.0), -7.0, 300.0] {
            let chi = response_kernel(&sys, w).unwrap();
            let a = sys.m - Generator::identity() * C64::new(0.0, w);
            assert!((chi * a - Generator::identity()).norm() < 1e-10);
        }
        let chi0 = response_kernel(&sys, 0.0).unwrap();
        assert!((chi0 - sys.m.try_inverse().unwrap()).norm() < 1e-12);
    }

    #[test]
    fn kernel_fixture() {
        let (sys, _) = solve(&SystemParams::reference());
        let chi = response_kernel(&sys, mhz(2.0)).unwrap();
        let want = [
            ((2, 2), C64::new(-0.040_907_776_743_848_93, 0.018_274_638_483_998_58)),
            ((4, 6), C64::new(0.001_836_872_702_973_002, -0.002_131_585_782_018_170_3)),
            ((6, 2), C64::new(-0.021_466_110_751_732_593, 0.005_810_918_826_055_657)),
            ((0, 3), C64::new(0.012_536_714_509_551_433, -0.000_834_250_882_139_170_7)),
        ];
        for (ij, z) in want {
            assert!((chi[ij] - z).norm() < 1e-13 * z.norm().max(1.0), "{ij:?}");
        }
    }

    #[test]
    fn spectra_fixture() {
        // independent dense solve of the same linear-response problem
        let cases = [
            (0.5, 1.0, [7.729_361_461_186_896e-7, 1.865_022_383_720_481_6e-7, -3.770_157_747_837_385e-7]),
            (-3.0, 1.0, [4.351_810_031_334_399_5e-8, 1.643_269_461_834_762_3e-6, -8.073_611_225_491_35e-8]),
            (0.5, 0.6, [1.642_458_507_833_525_2e-6, 1.423_906_919_137_432e-6, 8.183_660_099_814_618e-7]),
        ];
        for (d, r, want) in cases {
            let p = SystemParams {
                phase_noise_correlation: r,
                ..SystemParams::reference().with_two_photon_detuning(mhz(d))
            };
            let (sys, ss) = solve(&p);
            let dec = noise_spectra(&sys, &ss, &p, mhz(2.0)).unwrap();
            assert!(rel(dec.s11, want[0]) < 1e-9, "{d}");
            assert!(rel(dec.s22, want[1]) < 1e-9);
            assert!(rel(dec.s12, want[2]) < 1e-9);
        }
    }

    #[test]
    fn resum_identity() {
        for (d, r) in [(0.5, 1.0), (-3.0, 1.0), (1.2, 0.3), (0.0, 0.0)] {
            let p = SystemParams {
                phase_noise_correlation: r,
                ..SystemParams::reference().with_two_photon_detuning(mhz(d))
            };
            let (sys, ss) = solve(&p);
            let dec = noise_spectra(&sys, &ss, &p, mhz(2.0)).unwrap();
            let (s11, s22, s12) = dec.resum();
            let scale = (dec.s11 * dec.s22).sqrt();
            assert!((s11 - dec.s11).abs() <= 1e-10 * dec.s11);
            assert!((s22 - dec.s22).abs() <= 1e-10 * dec.s22);
            assert!((s12 - dec.s12).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn zero_noise_and_degenerate() {
        let p = SystemParams {
            gamma_bar: 0.0,
            ..SystemParams::reference()
        };
        let (sys, ss) = solve(&p);
        let dec = noise_spectra(&sys, &ss, &p, mhz(2.0)).unwrap();
        assert_eq!((dec.s11, dec.s22, dec.s12), (0.0, 0.0, 0.0));
        assert!(!dec.degenerate);
        assert_eq!(correlation_point(&dec), Err(SpectraError::UndefinedCorrelation));

        let p = SystemParams {
            kappa1: 0.0,
            kappa2: 0.0,
            ..SystemParams::reference()
        };
        let (sys, ss) = solve(&p);
        let dec = noise_spectra(&sys, &ss, &p, mhz(2.0)).unwrap();
        assert!(dec.degenerate);
        assert!(dec.c.is_none());
    }

    #[test]
    fn g2_trivial_cases() {
        let mk = |a: C64, b: C64| {
            let mut x = State::zeros();
            x[2] = a;
            x[4] = b;
            SteadyState::from_state(x)
        };
        let z = C64::new(0.3, -0.7);
        assert!((g2_zero(&mk(z, z)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(g2_zero(&mk(1.0.into(), (-1.0).into())).unwrap(), -1.0);
        assert_eq!(g2_zero(&mk(0.0.into(), z)), Err(SpectraError::UndefinedG2));
    }
}
