//! C interface to the `eitcorr` model.
//!
//! All rates are angular frequencies in rad/µs. Every function returns an
//! [`EitStatus`]; outputs are written only on `EIT_STATUS_OK`. Panics never cross
//! the boundary.

use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eitcorr::scan::{fit_linewidth, Extremum};
use eitcorr::spectra::SpectraError;
use eitcorr::{
    build_bloch_system, dc_transmission, g2_zero, noise_spectra, steady_state, BlochSystem, FullOrderSolution,
    ModelError, SteadyState, SystemParams,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    /// Both drive fields vanish.
    Degenerate = 3,
    Singular = 4,
    /// The requested quantity is undefined at this point.
    Undefined = 5,
    Numerical = 6,
    Panic = 7,
}

/// Model parameters. Rates and detunings are angular frequencies in rad/µs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EitParams {
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

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EitComplex {
    pub re: f64,
    pub im: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EitSteadyState {
    pub p1: EitComplex,
    pub p2: EitComplex,
    pub rho12: EitComplex,
    pub populations: [f64; 3],
    pub t1: f64,
    pub t2: f64,
}

/// Lowest-order spectra and their regrouping. `c` is meaningful only when
/// `c_defined` is nonzero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EitDecomposition {
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
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
    pub c: f64,
    pub c_defined: c_int,
}

/// Spectra including all orders in the phase noise.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EitFullSpectra {
    pub omega: f64,
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
    pub c: f64,
    pub c_defined: c_int,
}

/// Opaque model handle.
pub struct EitSystem {
    params: SystemParams,
    system: BlochSystem,
    steady: SteadyState,
    full: Result<FullOrderSolution, SpectraError>,
}

impl From<EitParams> for SystemParams {
    fn from(p: EitParams) -> Self {
        SystemParams {
            gamma: p.gamma,
            gamma_d: p.gamma_d,
            gamma_bar: p.gamma_bar,
            rabi1: p.rabi1,
            rabi2: p.rabi2,
            delta1: p.delta1,
            delta2: p.delta2,
            kappa1: p.kappa1,
            kappa2: p.kappa2,
            phase_noise_correlation: p.phase_noise_correlation,
        }
    }
}

impl From<SystemParams> for EitParams {
    fn from(p: SystemParams) -> Self {
        EitParams {
            gamma: p.gamma,
            gamma_d: p.gamma_d,
            gamma_bar: p.gamma_bar,
            rabi1: p.rabi1,
            rabi2: p.rabi2,
            delta1: p.delta1,
            delta2: p.delta2,
            kappa1: p.kappa1,
            kappa2: p.kappa2,
            phase_noise_correlation: p.phase_noise_correlation,
        }
    }
}

fn model_status(e: &ModelError) -> EitStatus {
    match e {
        ModelError::InvalidParameter { .. } => EitStatus::InvalidParameter,
        ModelError::Degenerate => EitStatus::Degenerate,
        ModelError::Singular => EitStatus::Singular,
        ModelError::Residual { .. } => EitStatus::Numerical,
    }
}

fn spectra_status(e: &SpectraError) -> EitStatus {
    match e {
        SpectraError::Model(m) => model_status(m),
        SpectraError::Singular { .. } => EitStatus::Singular,
        SpectraError::UndefinedCorrelation | SpectraError::UndefinedG2 => EitStatus::Undefined,
        SpectraError::InvalidArgument { .. } => EitStatus::InvalidParameter,
    }
}

fn guard(f: impl FnOnce() -> EitStatus) -> EitStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(EitStatus::Panic)
}

fn cplx(z: eitcorr::bloch::C64) -> EitComplex {
    EitComplex { re: z.re, im: z.im }
}

/// Static description of a status code; unknown codes are reported as such.
#[no_mangle]
pub extern "C" fn eit_status_message(status: c_int) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer argument\0",
        2 => b"invalid parameter\0",
        3 => b"both drive fields vanish\0",
        4 => b"singular linear system\0",
        5 => b"quantity undefined at this point\0",
        6 => b"numerical accuracy check failed\0",
        7 => b"internal error\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Writes the reference parameter set.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eit_params_reference(out: *mut EitParams) -> EitStatus {
    guard(|| {
        if out.is_null() {
            return EitStatus::NullPointer;
        }
        unsafe { out.write(SystemParams::reference().into()) };
        EitStatus::Ok
    })
}

/// Builds a model and its steady state. Free with [`eit_system_free`].
///
/// # Safety
/// `params` must be null or point to a valid `EitParams`; `out` must be
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eit_system_new(params: *const EitParams, out: *mut *mut EitSystem) -> EitStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            return EitStatus::NullPointer;
        }
        unsafe { out.write(ptr::null_mut()) };
        let params: SystemParams = unsafe { params.read() }.into();
        let built = build_bloch_system(&params).and_then(|sys| steady_state(&sys).map(|ss| (sys, ss)));
        match built {
            Ok((system, steady)) => {
                let handle = Box::new(EitSystem {
                    params,
                    system,
                    steady,
                    full: FullOrderSolution::new(&params),
                });
                unsafe { out.write(Box::into_raw(handle)) };
                EitStatus::Ok
            }
            Err(e) => model_status(&e),
        }
    })
}

/// Releases a handle. Null is accepted.
///
/// # Safety
/// `sys` must be null or a handle from [`eit_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eit_system_free(sys: *mut EitSystem) {
    if !sys.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { Box::from_raw(sys) })));
    }
}

/// # Safety
/// `sys` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eit_system_steady_state(sys: *const EitSystem, out: *mut EitSteadyState) -> EitStatus {
    guard(|| {
        let (Some(sys), false) = (unsafe { sys.as_ref() }, out.is_null()) else {
            return EitStatus::NullPointer;
        };
        let ss = &sys.steady;
        let t = match dc_transmission(ss, &sys.params) {
            Ok(t) => t,
            Err(e) => return model_status(&e),
        };
        unsafe {
            out.write(EitSteadyState {
                p1: cplx(ss.p1),
                p2: cplx(ss.p2),
                rho12: cplx(ss.rho12()),
                populations: [ss.populations.0, ss.populations.1, ss.populations.2],
                t1: t.t1,
                t2: t.t2,
            })
        };
        EitStatus::Ok
    })
}

/// Lowest-order spectra at angular frequency `omega`.
///
/// # Safety
/// `sys` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eit_system_spectra(
    sys: *const EitSystem,
    omega: f64,
    out: *mut EitDecomposition,
) -> EitStatus {
    guard(|| {
        let (Some(sys), false) = (unsafe { sys.as_ref() }, out.is_null()) else {
            return EitStatus::NullPointer;
        };
        if !omega.is_finite() {
            return EitStatus::InvalidParameter;
        }
        match noise_spectra(&sys.system, &sys.steady, &sys.params, omega) {
            Ok(d) => {
                unsafe {
                    out.write(EitDecomposition {
                        omega: d.omega,
                        epsilon_sq: d.epsilon_sq,
                        pi_im: d.pi_im,
                        pi_re: d.pi_re,
                        pi_ri: d.pi_ri,
                        pi_ir: d.pi_ir,
                        nu_im: d.nu_im,
                        nu_re: d.nu_re,
                        nu_ri: d.nu_ri,
                        nu_ir: d.nu_ir,
                        extra_c1: d.extra_c1,
                        s11: d.s11,
                        s22: d.s22,
                        s12: d.s12,
                        c: d.c.unwrap_or(0.0),
                        c_defined: d.c.is_some() as c_int,
                    })
                };
                EitStatus::Ok
            }
            Err(e) => spectra_status(&e),
        }
    })
}

/// All-orders spectra at angular frequency `omega`.
///
/// # Safety
/// `sys` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eit_system_full_spectra(
    sys: *const EitSystem,
    omega: f64,
    out: *mut EitFullSpectra,
) -> EitStatus {
    guard(|| {
        let (Some(sys), false) = (unsafe { sys.as_ref() }, out.is_null()) else {
            return EitStatus::NullPointer;
        };
        let full = match &sys.full {
            Ok(f) => f,
            Err(e) => return spectra_status(e),
        };
        match full.spectra(omega) {
            Ok(f) => {
                unsafe {
                    out.write(EitFullSpectra {
                        omega: f.omega,
                        s11: f.s11,
                        s22: f.s22,
                        s12: f.s12,
                        c: f.c.unwrap_or(0.0),
                        c_defined: f.c.is_some() as c_int,
                    })
                };
                EitStatus::Ok
            }
            Err(e) => spectra_status(&e),
        }
    })
}

/// Zero-delay intensity correlation from the steady state.
///
/// # Safety
/// `sys` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn eit_system_g2_zero(sys: *const EitSystem, out: *mut f64) -> EitStatus {
    guard(|| {
        let (Some(sys), false) = (unsafe { sys.as_ref() }, out.is_null()) else {
            return EitStatus::NullPointer;
        };
        match g2_zero(&sys.steady) {
            Ok(g) => {
                unsafe { out.write(g) };
                EitStatus::Ok
            }
            Err(e) => spectra_status(&e),
        }
    })
}

/// Full width at half maximum of a sampled curve; `dip` selects a minimum.
///
/// # Safety
/// `x` and `y` must be null or valid for `n` reads; `fwhm` null or valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn eit_fit_linewidth(
    x: *const f64,
    y: *const f64,
    n: usize,
    dip: c_int,
    fwhm: *mut f64,
) -> EitStatus {
    guard(|| {
        if x.is_null() || y.is_null() || fwhm.is_null() {
            return EitStatus::NullPointer;
        }
        let (xs, ys) = unsafe { (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n)) };
        let curve: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        let kind = if dip != 0 { Extremum::Dip } else { Extremum::Peak };
        match fit_linewidth(&curve, kind) {
            Ok(w) => {
                unsafe { fwhm.write(w.fwhm) };
                EitStatus::Ok
            }
            Err(eitcorr::scan::FitError::BadCurve) => EitStatus::InvalidParameter,
            Err(_) => EitStatus::Undefined,
        }
    })
}
