//! Optical Bloch equations of the driven Λ system in the rotating frame.
//!
//! Levels 1 and 2 are the ground states, 3 the excited state. Beam i drives
//! the |i⟩–|3⟩ transition with Rabi frequency Ωᵢ and detuning Δᵢ. The state
//! vector is
//!
//! ```text
//! x = (ρ11, ρ22, ρ13, ρ31, ρ23, ρ32, ρ12, ρ21)
//! ```
//!
//! with ρ33 = 1 − ρ11 − ρ22 eliminated, so that dx/dt = M x + x0.

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units;

pub type C64 = Complex64;
pub type State = SVector<C64, 8>;
pub type Generator = SMatrix<C64, 8, 8>;

/// Positions of the density-matrix elements in [`State`].
pub mod idx {
    pub const RHO11: usize = 0;
    pub const RHO22: usize = 1;
    pub const RHO13: usize = 2;
    pub const RHO31: usize = 3;
    pub const RHO23: usize = 4;
    pub const RHO32: usize = 5;
    pub const RHO12: usize = 6;
    pub const RHO21: usize = 7;

    /// Index of the complex conjugate partner of each component.
    pub const PARTNER: [usize; 8] = [0, 1, 3, 2, 5, 4, 7, 6];
}

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("both Rabi frequencies are zero; ground-state populations are undetermined")]
    Degenerate,
    #[error("Bloch matrix is singular")]
    Singular,
    #[error("steady-state residual {residual:e} exceeds tolerance")]
    Residual { residual: f64 },
}

/// Physical parameters. Angular frequencies in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub gamma: f64,
    pub gamma_d: f64,
    pub gamma_bar: f64,
    pub rabi1: f64,
    pub rabi2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub phase_noise_correlation: f64,
}

impl SystemParams {
    /// Rb-like reference point: Γ/2π = 6 MHz, γ_d/2π = 150 kHz,
    /// γ̄/2π = 1 MHz, Ω₁ = 0.30Γ, Ω₂ = 0.34Γ, Δ₁/2π = 0.2 MHz, δ = 0, κ = 0.1.
    pub fn reference() -> Self {
        let gamma = units::mhz(6.0);
        SystemParams {
            gamma,
            gamma_d: units::khz(150.0),
            gamma_bar: units::mhz(1.0),
            rabi1: 0.30 * gamma,
            rabi2: 0.34 * gamma,
            delta1: units::mhz(0.2),
            delta2: units::mhz(0.2),
            kappa1: 0.1,
            kappa2: 0.1,
            phase_noise_correlation: 1.0,
        }
    }

    /// Two-photon detuning δ = Δ₂ − Δ₁.
    pub fn two_photon_detuning(&self) -> f64 {
        self.delta2 - self.delta1
    }

    /// Keeps Δ₁ and sets Δ₂ = Δ₁ + δ.
    pub fn with_two_photon_detuning(mut self, delta: f64) -> Self {
        self.delta2 = self.delta1 + delta;
        self
    }

    /// Sets Δ₁, keeping δ.
    pub fn with_delta1(mut self, delta1: f64) -> Self {
        let d = self.two_photon_detuning();
        self.delta1 = delta1;
        self.delta2 = delta1 + d;
        self
    }

    /// Scales both beam powers by `s` (Ω ∝ √power).
    pub fn with_power_scale(mut self, s: f64) -> Self {
        let f = s.sqrt();
        self.rabi1 *= f;
        self.rabi2 *= f;
        self
    }

    /// Exchanges every beam-1 quantity with its beam-2 counterpart.
    pub fn swapped(self) -> Self {
        SystemParams {
            rabi1: self.rabi2,
            rabi2: self.rabi1,
            delta1: self.delta2,
            delta2: self.delta1,
            kappa1: self.kappa2,
            kappa2: self.kappa1,
            ..self
        }
    }

    /// Perturbation parameter ε² = γ̄/Γ.
    pub fn epsilon_sq(&self) -> f64 {
        self.gamma_bar / self.gamma
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("gamma", self.gamma),
            ("gamma_d", self.gamma_d),
            ("gamma_bar", self.gamma_bar),
            ("rabi1", self.rabi1),
            ("rabi2", self.rabi2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("phase_noise_correlation", self.phase_noise_correlation),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(ModelError::InvalidParameter {
                    name,
                    value,
                    reason: "not finite",
                });
            }
        }
        if self.gamma <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "gamma",
                value: self.gamma,
                reason: "must be positive",
            });
        }
        for (name, value) in fields.iter().copied().filter(|(n, _)| {
            matches!(*n, "gamma_d" | "gamma_bar" | "rabi1" | "rabi2" | "kappa1" | "kappa2")
        }) {
            if value < 0.0 {
                return Err(ModelError::InvalidParameter {
                    name,
                    value,
                    reason: "must be non-negative",
                });
            }
        }
        let r = self.phase_noise_correlation;
        if !(0.0..=1.0).contains(&r) {
            return Err(ModelError::InvalidParameter {
                name: "phase_noise_correlation",
                value: r,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Linear evolution dx/dt = M x + x0 in the documented basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochSystem {
    pub m: Generator,
    pub x0: State,
    /// Maps x to (ρ11, ρ22, Im ρ13, Re ρ13, Im ρ23, Re ρ23, ρ12, ρ21).
    pub u: Generator,
    pub params: SystemParams,
}

pub const BASIS: [&str; 8] = ["rho11", "rho22", "rho13", "rho31", "rho23", "rho32", "rho12", "rho21"];

pub fn build_bloch_system(params: &SystemParams) -> Result<BlochSystem, ModelError> {
    use idx::*;
    params.validate()?;
    let SystemParams {
        gamma: g,
        gamma_d: gd,
        rabi1: o1,
        rabi2: o2,
        delta1: d1,
        delta2: d2,
        ..
    } = *params;
    let h = g / 2.0;
    let (a1, a2) = (I * (o1 / 2.0), I * (o2 / 2.0));
    let delta = d2 - d1;

    let mut m = Generator::zeros();
    let mut x0 = State::zeros();

    m[(RHO11, RHO13)] = a1;
    m[(RHO11, RHO31)] = -a1;
    m[(RHO11, RHO11)] = (-h).into();
    m[(RHO11, RHO22)] = (-h).into();
    x0[RHO11] = h.into();

    m[(RHO22, RHO23)] = a2;
    m[(RHO22, RHO32)] = -a2;
    m[(RHO22, RHO11)] = (-h).into();
    m[(RHO22, RHO22)] = (-h).into();
    x0[RHO22] = h.into();

    // ρ33 − ρ11 = 1 − 2ρ11 − ρ22
    m[(RHO13, RHO13)] = C64::new(-h, -d1);
    m[(RHO13, RHO11)] = 2.0 * a1;
    m[(RHO13, RHO22)] = a1;
    m[(RHO13, RHO12)] = a2;
    x0[RHO13] = -a1;

    m[(RHO23, RHO23)] = C64::new(-h, -d2);
    m[(RHO23, RHO11)] = a2;
    m[(RHO23, RHO22)] = 2.0 * a2;
    m[(RHO23, RHO21)] = a1;
    x0[RHO23] = -a2;

    m[(RHO12, RHO12)] = C64::new(-gd, delta);
    m[(RHO12, RHO13)] = a2;
    m[(RHO12, RHO32)] = -a1;

    for row in [RHO13, RHO23, RHO12] {
        let prow = PARTNER[row];
        for col in 0..8 {
            m[(prow, PARTNER[col])] = m[(row, col)].conj();
        }
        x0[prow] = x0[row].conj();
    }

    Ok(BlochSystem {
        m,
        x0,
        u: transform_u(),
        params: *params,
    })
}

fn transform_u() -> Generator {
    use idx::*;
    let mut u = Generator::zeros();
    u[(0, RHO11)] = 1.0.into();
    u[(1, RHO22)] = 1.0.into();
    for (k, (a, b)) in [(RHO13, RHO31), (RHO23, RHO32)].into_iter().enumerate() {
        let row = 2 + 2 * k;
        // Im z = (z − z*)/2i, Re z = (z + z*)/2
        u[(row, a)] = -I / 2.0;
        u[(row, b)] = I / 2.0;
        u[(row + 1, a)] = 0.5.into();
        u[(row + 1, b)] = 0.5.into();
    }
    u[(6, RHO12)] = 1.0.into();
    u[(7, RHO21)] = 1.0.into();
    u
}

impl BlochSystem {
    /// ∂M/∂Δᵢ for beam index 0 or 1. Diagonal.
    pub fn detuning_derivative(&self, beam: usize) -> State {
        use idx::*;
        let mut d = State::zeros();
        let (a, b) = if beam == 0 { (RHO13, RHO31) } else { (RHO23, RHO32) };
        d[a] = -I;
        d[b] = I;
        // δ = Δ₂ − Δ₁ enters ρ12 with +i
        let s = if beam == 0 { -1.0 } else { 1.0 };
        d[RHO12] = I * s;
        d[RHO21] = -I * s;
        d
    }

    /// Eigenvalues of M, if the Schur iteration converges.
    pub fn eigenvalues(&self) -> Option<Vec<C64>> {
        self.m
            .schur()
            .eigenvalues()
            .map(|v| v.iter().copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub x_ss: State,
    pub p1: C64,
    pub p2: C64,
    pub populations: (f64, f64, f64),
}

impl SteadyState {
    pub fn from_state(x: State) -> Self {
        let (r11, r22) = (x[idx::RHO11].re, x[idx::RHO22].re);
        SteadyState {
            x_ss: x,
            p1: x[idx::RHO13],
            p2: x[idx::RHO23],
            populations: (r11, r22, 1.0 - r11 - r22),
        }
    }

    pub fn rho12(&self) -> C64 {
        self.x_ss[idx::RHO12]
    }

    /// Full 3×3 density matrix.
    pub fn density_matrix(&self) -> Matrix3<C64> {
        let x = &self.x_ss;
        let (r11, r22, r33) = self.populations;
        Matrix3::new(
            r11.into(),
            x[idx::RHO12],
            x[idx::RHO13],
            x[idx::RHO21],
            r22.into(),
            x[idx::RHO23],
            x[idx::RHO31],
            x[idx::RHO32],
            r33.into(),
        )
    }
}

pub fn steady_state(sys: &BlochSystem) -> Result<SteadyState, ModelError> {
    if sys.params.rabi1 == 0.0 && sys.params.rabi2 == 0.0 {
        return Err(ModelError::Degenerate);
    }
    let lu = sys.m.lu();
    let rhs = -sys.x0;
    let mut x = lu.solve(&rhs).ok_or(ModelError::Singular)?;
    // one step of iterative refinement
    let r = rhs - sys.m * x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    // restore exact conjugate pairing
    for (a, b) in [(2, 3), (4, 5), (6, 7)] {
        let z = (x[a] + x[b].conj()) * 0.5;
        x[a] = z;
        x[b] = z.conj();
    }
    x[0] = x[0].re.into();
    x[1] = x[1].re.into();

    let residual = (sys.m * x + sys.x0).norm();
    if !residual.is_finite() || residual > 1e-10 * sys.x0.norm() {
        return Err(ModelError::Residual { residual });
    }
    Ok(SteadyState::from_state(x))
}

/// Thin-sample DC transmission of each beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub t1: f64,
    pub t2: f64,
    /// Set when the raw value was negative and clamped to zero.
    pub clamped: [bool; 2],
}

pub fn transmission_of(p: C64, kappa: f64) -> f64 {
    1.0 - 2.0 * kappa * p.im + kappa * kappa * p.norm_sqr()
}

pub fn dc_transmission(ss: &SteadyState, params: &SystemParams) -> Result<Transmission, ModelError> {
    params.validate()?;
    let raw = [
        transmission_of(ss.p1, params.kappa1),
        transmission_of(ss.p2, params.kappa2),
    ];
    Ok(Transmission {
        t1: raw[0].max(0.0),
        t2: raw[1].max(0.0),
        clamped: [raw[0] < 0.0, raw[1] < 0.0],
    })
}
