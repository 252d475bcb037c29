//! Linearized carrier/sideband picture of phase-to-amplitude conversion.
//!
//! A weakly phase-modulated field has, relative to its carrier, an upper
//! sideband `a` and a lower sideband `−a*`. The medium shifts the phase of
//! each spectral component. After removing the carrier phase, the
//! complex amplitude of intensity modulation at ω is `u + l*`, which
//! vanishes for pure phase modulation.

use super::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasorResponse {
    pub am1: C64,
    pub am2: C64,
    /// Sign of the time-averaged product of the two intensity modulations;
    /// 0 when it vanishes.
    pub sign: i8,
}

fn am(carrier: f64, upper: f64, lower: f64, a: C64) -> C64 {
    let u = a * C64::from_polar(1.0, upper - carrier);
    let l = -a.conj() * C64::from_polar(1.0, lower - carrier);
    u + l.conj()
}

/// `carrier_shifts[i]` is the phase given to carrier i,
/// `sideband_shifts[i] = [upper, lower]` those of its sidebands.
pub fn phasor_model(
    carrier_shifts: [f64; 2],
    sideband_shifts: [[f64; 2]; 2],
    sideband_amplitude: C64,
) -> PhasorResponse {
    let am1 = am(
        carrier_shifts[0],
        sideband_shifts[0][0],
        sideband_shifts[0][1],
        sideband_amplitude,
    );
    let am2 = am(
        carrier_shifts[1],
        sideband_shifts[1][0],
        sideband_shifts[1][1],
        sideband_amplitude,
    );
    let prod = (am1 * am2.conj()).re;
    let scale = am1.norm() * am2.norm();
    let sign = if scale == 0.0 || prod.abs() <= 1e-12 * scale {
        0
    } else if prod > 0.0 {
        1
    } else {
        -1
    };
    PhasorResponse { am1, am2, sign }
}

/// Which component of the scanned field 2 sits on which spectral slot of
/// the fixed field 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    /// Carriers coincide (two-photon resonance).
    Eit,
    /// Carrier 2 on the upper sideband of field 1.
    UpperSideband,
    /// Carrier 2 on the lower sideband of field 1.
    LowerSideband,
}

/// Evaluates [`phasor_model`] with phases assigned to five equally spaced
/// spectral slots. Field 1 occupies slots 1, 2, 3 (lower, carrier, upper).
pub fn phasor_process(process: Process, slot_shifts: [f64; 5], a: C64) -> PhasorResponse {
    let s = slot_shifts;
    let (l2, c2, u2) = match process {
        Process::Eit => (1, 2, 3),
        Process::UpperSideband => (2, 3, 4),
        Process::LowerSideband => (0, 1, 2),
    };
    phasor_model([s[2], s[c2]], [[s[3], s[1]], [s[u2], s[l2]]], a)
}
