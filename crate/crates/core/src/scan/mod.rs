//! Parameter scans over δ, Δ₁, analysis frequency and power.

mod config;
mod export;
mod fit;

pub use config::{ConfigError, Format, Grid, OracleScanSettings, ScanConfig};
pub use export::{export, import, read_records, write_records, ExportError};
pub use fit::{fit_linewidth, Extremum, FitError, Linewidth};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{build_bloch_system, dc_transmission, steady_state, SystemParams};
use crate::oracle::{run_oracle, EstimatorConfig, OracleSettings, TrajectoryConfig};
use crate::spectra::{g2_zero, noise_spectra, FullOrderSolution};
use crate::units::mhz;

/// One grid point. Frequencies are in MHz; `None` marks a quantity that is
/// undefined at this point (serialized as an empty cell or `null`).
///
/// `c_analytic` and the unsuffixed spectra are the lowest-order response in
/// the noise strength; `c_full` and `*_full` include all orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub delta_mhz: f64,
    pub delta1_mhz: f64,
    pub analysis_mhz: f64,
    pub power_scale: f64,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub g2: Option<f64>,
    pub c_analytic: Option<f64>,
    pub c_full: Option<f64>,
    pub s11: Option<f64>,
    pub s22: Option<f64>,
    pub s12: Option<f64>,
    pub s11_full: Option<f64>,
    pub s22_full: Option<f64>,
    pub s12_full: Option<f64>,
    pub pi_im: Option<f64>,
    pub pi_re: Option<f64>,
    pub pi_ri: Option<f64>,
    pub pi_ir: Option<f64>,
    pub nu_im: Option<f64>,
    pub nu_re: Option<f64>,
    pub nu_ri: Option<f64>,
    pub nu_ir: Option<f64>,
    pub c1: Option<f64>,
    pub c_oracle: Option<f64>,
    pub c_oracle_se: Option<f64>,
    /// `ok`, or the reasons some quantities are missing.
    pub status: String,
}

/// Column order of exported tables.
pub const COLUMNS: [&str; 27] = [
    "delta_mhz",
    "delta1_mhz",
    "analysis_mhz",
    "power_scale",
    "t1",
    "t2",
    "g2",
    "c_analytic",
    "c_full",
    "s11",
    "s22",
    "s12",
    "s11_full",
    "s22_full",
    "s12_full",
    "pi_im",
    "pi_re",
    "pi_ri",
    "pi_ir",
    "nu_im",
    "nu_re",
    "nu_ri",
    "nu_ir",
    "c1",
    "c_oracle",
    "c_oracle_se",
    "status",
];

impl ScanRecord {
    fn empty(delta: f64, delta1: f64, analysis: f64, power: f64) -> Self {
        ScanRecord {
            delta_mhz: delta,
            delta1_mhz: delta1,
            analysis_mhz: analysis,
            power_scale: power,
            t1: None,
            t2: None,
            g2: None,
            c_analytic: None,
            c_full: None,
            s11: None,
            s22: None,
            s12: None,
            s11_full: None,
            s22_full: None,
            s12_full: None,
            pi_im: None,
            pi_re: None,
            pi_ri: None,
            pi_ir: None,
            nu_im: None,
            nu_re: None,
            nu_ri: None,
            nu_ir: None,
            c1: None,
            c_oracle: None,
            c_oracle_se: None,
            status: String::new(),
        }
    }

    /// Named column by its serialized name.
    pub fn column(&self, name: &str) -> Option<Option<f64>> {
        let v = match name {
            "delta_mhz" => Some(self.delta_mhz),
            "delta1_mhz" => Some(self.delta1_mhz),
            "analysis_mhz" => Some(self.analysis_mhz),
            "power_scale" => Some(self.power_scale),
            "t1" => self.t1,
            "t2" => self.t2,
            "g2" => self.g2,
            "c_analytic" => self.c_analytic,
            "c_full" => self.c_full,
            "s11" => self.s11,
            "s22" => self.s22,
            "s12" => self.s12,
            "s11_full" => self.s11_full,
            "s22_full" => self.s22_full,
            "s12_full" => self.s12_full,
            "pi_im" => self.pi_im,
            "pi_re" => self.pi_re,
            "pi_ri" => self.pi_ri,
            "pi_ir" => self.pi_ir,
            "nu_im" => self.nu_im,
            "nu_re" => self.nu_re,
            "nu_ri" => self.nu_ri,
            "nu_ir" => self.nu_ir,
            "c1" => self.c1,
            "c_oracle" => self.c_oracle,
            "c_oracle_se" => self.c_oracle_se,
            _ => return None,
        };
        Some(v)
    }
}

/// Stochastic reference settings for one point.
pub fn oracle_settings_for(
    params: &SystemParams,
    omega_max: f64,
    s: &OracleScanSettings,
    base_seed: u64,
) -> OracleSettings {
    let dt = s.dt_us.unwrap_or_else(|| TrajectoryConfig::max_dt(params, omega_max));
    OracleSettings {
        n_traj: s.trajectories,
        base_seed,
        trajectory: TrajectoryConfig {
            dt,
            duration: s.duration_us,
            transient: s.transient_us,
            sample_every: ((s.sample_us / dt).round() as usize).max(1),
            omega_max,
            noise_substeps: 1,
        },
    }
}

/// All analysis frequencies at one (δ, Δ₁, power) point, in MHz.
///
/// Never fails; problems are reported in each record's `status`.
pub fn evaluate_point(
    base: &SystemParams,
    delta_mhz: f64,
    delta1_mhz: f64,
    power: f64,
    analysis_mhz: &[f64],
    oracle: Option<(&OracleScanSettings, u64)>,
) -> Vec<ScanRecord> {
    let params = base
        .with_power_scale(power)
        .with_delta1(mhz(delta1_mhz))
        .with_two_photon_detuning(mhz(delta_mhz));
    let mut recs: Vec<ScanRecord> = analysis_mhz
        .iter()
        .map(|&w| ScanRecord::empty(delta_mhz, delta1_mhz, w, power))
        .collect();
    let mut notes: Vec<String> = Vec::new();

    let model = build_bloch_system(&params).and_then(|sys| steady_state(&sys).map(|ss| (sys, ss)));
    match &model {
        Ok((sys, ss)) => {
            let tr = dc_transmission(ss, &params).ok();
            let g2 = g2_zero(ss);
            if let Err(e) = &g2 {
                notes.push(format!("g2: {e}"));
            }
            for r in recs.iter_mut() {
                r.t1 = tr.map(|t| t.t1);
                r.t2 = tr.map(|t| t.t2);
                r.g2 = g2.as_ref().ok().copied();
                match noise_spectra(sys, ss, &params, mhz(r.analysis_mhz)) {
                    Ok(d) => {
                        r.c_analytic = d.c;
                        r.s11 = Some(d.s11);
                        r.s22 = Some(d.s22);
                        r.s12 = Some(d.s12);
                        r.pi_im = Some(d.pi_im);
                        r.pi_re = Some(d.pi_re);
                        r.pi_ri = Some(d.pi_ri);
                        r.pi_ir = Some(d.pi_ir);
                        r.nu_im = Some(d.nu_im);
                        r.nu_re = Some(d.nu_re);
                        r.nu_ri = Some(d.nu_ri);
                        r.nu_ir = Some(d.nu_ir);
                        r.c1 = Some(d.extra_c1);
                    }
                    Err(e) => notes.push(format!("spectra: {e}")),
                }
            }
        }
        Err(e) => notes.push(format!("model: {e}")),
    }

    if model.is_ok() {
        match FullOrderSolution::new(&params) {
            Ok(full) => {
                for r in recs.iter_mut() {
                    match full.spectra(mhz(r.analysis_mhz)) {
                        Ok(f) => {
                            r.c_full = f.c;
                            r.s11_full = Some(f.s11);
                            r.s22_full = Some(f.s22);
                            r.s12_full = Some(f.s12);
                        }
                        Err(e) => notes.push(format!("full: {e}")),
                    }
                }
            }
            Err(e) => notes.push(format!("full: {e}")),
        }
    }

    if let (Some((s, seed)), true) = (oracle, model.is_ok()) {
        let omegas: Vec<f64> = analysis_mhz.iter().map(|&w| mhz(w)).collect();
        let w_max = omegas.iter().copied().fold(0.0, f64::max);
        let settings = oracle_settings_for(&params, w_max, s, seed);
        let result = EstimatorConfig::for_frequencies(omegas, settings.trajectory.sample_interval())
            .and_then(|cfg| run_oracle(&params, &settings, &cfg));
        match result {
            Ok(res) => {
                for (r, p) in recs.iter_mut().zip(&res.spectra.points) {
                    r.c_oracle = p.c;
                    r.c_oracle_se = p.c_se;
                }
            }
            Err(e) => notes.push(format!("oracle: {e}")),
        }
    }

    for r in recs.iter_mut() {
        let mut own = notes.clone();
        if r.c_analytic.is_none() && r.s11.is_some() {
            own.push("c_analytic undefined".into());
        }
        if r.c_full.is_none() && r.s11_full.is_some() {
            own.push("c_full undefined".into());
        }
        own.dedup();
        r.status = if own.is_empty() { "ok".into() } else { own.join("; ") };
    }
    recs
}

/// Evaluates the whole grid. Records come back ordered by Δ₁, power, δ,
/// then analysis frequency, whatever the scheduling.
pub fn run_scan(cfg: &ScanConfig) -> Vec<ScanRecord> {
    let deltas = cfg.delta.values();
    let mut points = Vec::new();
    for &d1 in &cfg.delta1_mhz {
        for &p in &cfg.power_scale {
            for &d in &deltas {
                points.push((d1, p, d));
            }
        }
    }
    let n_traj = cfg.oracle_settings.trajectories as u64;
    points
        .par_iter()
        .enumerate()
        .map(|(k, &(d1, p, d))| {
            // disjoint seed ranges per point
            let seed = cfg.seed.wrapping_add(k as u64 * n_traj);
            let oracle = cfg.oracle.then_some((&cfg.oracle_settings, seed));
            evaluate_point(&cfg.base, d, d1, p, &cfg.analysis_mhz, oracle)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// (δ, column) pairs of one curve, skipping undefined entries.
pub fn curve(
    records: &[ScanRecord],
    column: &str,
    delta1_mhz: f64,
    analysis_mhz: f64,
    power: f64,
) -> Option<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for r in records {
        if r.delta1_mhz == delta1_mhz && r.analysis_mhz == analysis_mhz && r.power_scale == power {
            if let Some(v) = r.column(column)? {
                out.push((r.delta_mhz, v));
            }
        }
    }
    Some(out)
}
