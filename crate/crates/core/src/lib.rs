//! Phase-noise to intensity-noise conversion in a driven three-level Λ atom.
//!
//! Rates and frequencies are angular and in rad/µs internally, times in µs.
//! Conversion from ordinary frequency in MHz happens at the boundary via
//! [`units`].

// `!(x > 0.0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod oracle;
pub mod scan;
pub mod spectra;
pub mod units;

pub use bloch::{
    build_bloch_system, dc_transmission, steady_state, BlochSystem, ModelError, State,
    SteadyState, SystemParams, Transmission,
};
pub use spectra::{
    correlation_point, g2_zero, noise_spectra, phasor_model, pi_products, response_kernel,
    FullOrderSolution, FullSpectra, SpectraError, SpectralDecomposition,
};
