use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use eitcorr::oracle::{
    estimate_g2_zero, estimate_spectra, run_oracle, simulate_ensemble, EstimatorConfig, FrequencyEstimate,
    OracleError,
};
use eitcorr::scan::{
    curve, evaluate_point, fit_linewidth, oracle_settings_for, import, run_scan, write_records, Extremum,
    Format, ScanConfig,
};
use eitcorr::units::{mhz, to_khz};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "eitcorr", version, about = "Intensity-noise correlation spectra of a driven Λ system")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a grid and write one record per point.
    Scan(Common),
    /// Evaluate a single two-photon detuning (first value of each list).
    Point {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        delta_mhz: f64,
    },
    /// Run the stochastic reference at one point.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        delta_mhz: f64,
        /// Write every trajectory's intensity series as CSV.
        #[arg(long)]
        dump_trajectories: Option<PathBuf>,
    },
    /// FWHM of one curve in a scan output file.
    Fit {
        input: PathBuf,
        #[arg(long, default_value = "c_full")]
        column: String,
        #[arg(long, default_value = "peak")]
        kind: String,
        #[arg(long, allow_hyphen_values = true)]
        delta1_mhz: Option<f64>,
        #[arg(long)]
        analysis_mhz: Option<f64>,
        #[arg(long)]
        power_scale: Option<f64>,
        /// Restrict δ to `lo,hi` (MHz).
        #[arg(long, allow_hyphen_values = true)]
        window_mhz: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    delta1_mhz: Option<String>,
    /// `start,stop,count`
    #[arg(long, allow_hyphen_values = true)]
    delta_range_mhz: Option<String>,
    #[arg(long)]
    analysis_mhz: Option<String>,
    #[arg(long)]
    power_scale: Option<String>,
    #[arg(long)]
    gamma_d_khz: Option<String>,
    #[arg(long)]
    gamma_bar_mhz: Option<String>,
    /// Include the stochastic reference.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    format: Option<String>,
    /// Any other configuration key, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

struct Failure(u8, String);

impl<E: std::fmt::Display> From<(u8, E)> for Failure {
    fn from((code, e): (u8, E)) -> Self {
        Failure(code, e.to_string())
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure(EXIT_CONFIG, e.to_string())
}

fn oracle_err(e: OracleError) -> Failure {
    match e {
        OracleError::Precondition(_) | OracleError::InvalidConfig(_) => config_err(e),
        _ => Failure(EXIT_NUMERIC, e.to_string()),
    }
}

impl Common {
    fn load(&self) -> Result<ScanConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => ScanConfig::load(p).map_err(config_err)?,
            None => ScanConfig::default(),
        };
        let flags = [
            ("delta1_mhz", &self.delta1_mhz),
            ("delta_range_mhz", &self.delta_range_mhz),
            ("analysis_mhz", &self.analysis_mhz),
            ("power_scale", &self.power_scale),
            ("gamma_d_khz", &self.gamma_d_khz),
            ("gamma_bar_mhz", &self.gamma_bar_mhz),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                cfg.set(key, v).map_err(config_err)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| config_err(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim()).map_err(config_err)?;
        }
        if self.oracle {
            cfg.oracle = true;
        }
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }
}

fn output(cfg: &ScanConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            config_err(format!("{}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn json_out<T: Serialize>(cfg: &ScanConfig, value: &T) -> Result<(), Failure> {
    let mut w = output(cfg)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure(EXIT_NUMERIC, e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(config_err)
}

#[derive(Serialize)]
struct OracleReport {
    delta_mhz: f64,
    delta1_mhz: f64,
    power_scale: f64,
    trajectories: usize,
    dt_us: f64,
    sample_interval_us: f64,
    segments: usize,
    jackknife_units: usize,
    g2: Option<f64>,
    points: Vec<OraclePoint>,
}

#[derive(Serialize)]
struct OraclePoint {
    analysis_mhz: f64,
    #[serde(flatten)]
    estimate: FrequencyEstimate,
    c_full: Option<f64>,
    c_analytic: Option<f64>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Scan(common) => {
            let cfg = common.load()?;
            let records = run_scan(&cfg);
            let w = output(&cfg)?;
            write_records(w, &records, cfg.format).map_err(config_err)
        }
        Cmd::Point { common, delta_mhz } => {
            let cfg = common.load()?;
            let oracle = cfg.oracle.then_some((&cfg.oracle_settings, cfg.seed));
            let recs = evaluate_point(
                &cfg.base,
                delta_mhz,
                cfg.delta1_mhz[0],
                cfg.power_scale[0],
                &cfg.analysis_mhz,
                oracle,
            );
            if recs.iter().all(|r| r.t1.is_none()) {
                return Err(Failure(EXIT_NUMERIC, recs[0].status.clone()));
            }
            match cfg.format {
                Format::Json => json_out(&cfg, &recs),
                Format::Csv => write_records(output(&cfg)?, &recs, Format::Csv).map_err(config_err),
            }
        }
        Cmd::Oracle {
            common,
            delta_mhz,
            dump_trajectories,
        } => {
            let cfg = common.load()?;
            let (d1, power) = (cfg.delta1_mhz[0], cfg.power_scale[0]);
            let params = cfg
                .base
                .with_power_scale(power)
                .with_delta1(mhz(d1))
                .with_two_photon_detuning(mhz(delta_mhz));
            let omegas: Vec<f64> = cfg.analysis_mhz.iter().map(|&w| mhz(w)).collect();
            let w_max = omegas.iter().copied().fold(0.0, f64::max);
            let settings = oracle_settings_for(&params, w_max, &cfg.oracle_settings, cfg.seed);
            let est = EstimatorConfig::for_frequencies(omegas, settings.trajectory.sample_interval())
                .map_err(oracle_err)?;
            let (spectra, g2) = match dump_trajectories {
                Some(path) => {
                    let ens = simulate_ensemble(&params, &settings.trajectory, settings.n_traj, settings.base_seed)
                        .map_err(oracle_err)?;
                    ens.write_csv(&path).map_err(config_err)?;
                    (
                        estimate_spectra(&ens, &est).map_err(oracle_err)?,
                        estimate_g2_zero(&ens).ok(),
                    )
                }
                None => {
                    let r = run_oracle(&params, &settings, &est).map_err(oracle_err)?;
                    (r.spectra, r.g2)
                }
            };
            let analytic = evaluate_point(&cfg.base, delta_mhz, d1, power, &cfg.analysis_mhz, None);
            let report = OracleReport {
                delta_mhz,
                delta1_mhz: d1,
                power_scale: power,
                trajectories: settings.n_traj,
                dt_us: settings.trajectory.dt,
                sample_interval_us: settings.trajectory.sample_interval(),
                segments: spectra.segments,
                jackknife_units: spectra.units,
                g2,
                points: spectra
                    .points
                    .into_iter()
                    .zip(&analytic)
                    .map(|(estimate, a)| OraclePoint {
                        analysis_mhz: a.analysis_mhz,
                        estimate,
                        c_full: a.c_full,
                        c_analytic: a.c_analytic,
                    })
                    .collect(),
            };
            json_out(&cfg, &report)
        }
        Cmd::Fit {
            input,
            column,
            kind,
            delta1_mhz,
            analysis_mhz,
            power_scale,
            window_mhz,
        } => {
            let kind: Extremum = kind
                .parse()
                .map_err(|_| config_err(format!("--kind must be peak or dip, got `{kind}`")))?;
            let records = import(&input).map_err(config_err)?;
            let pick = |vals: Vec<f64>, given: Option<f64>, name: &str| -> Result<f64, Failure> {
                let mut vals = vals;
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                match (given, vals.as_slice()) {
                    (Some(v), _) if vals.contains(&v) => Ok(v),
                    (Some(v), _) => Err(config_err(format!("{name} = {v} not present in {}", input.display()))),
                    (None, [v]) => Ok(*v),
                    (None, _) => Err(config_err(format!("several {name} values present; choose one with --{name}"))),
                }
            };
            let d1 = pick(records.iter().map(|r| r.delta1_mhz).collect(), delta1_mhz, "delta1-mhz")?;
            let w = pick(records.iter().map(|r| r.analysis_mhz).collect(), analysis_mhz, "analysis-mhz")?;
            let p = pick(records.iter().map(|r| r.power_scale).collect(), power_scale, "power-scale")?;
            let mut c = curve(&records, &column, d1, w, p)
                .ok_or_else(|| config_err(format!("unknown column `{column}`")))?;
            if let Some(win) = window_mhz {
                let (lo, hi) = win
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
                    .ok_or_else(|| config_err(format!("--window-mhz expects lo,hi, got `{win}`")))?;
                c.retain(|&(x, _)| x >= lo && x <= hi);
            }
            let lw = fit_linewidth(&c, kind).map_err(|e| Failure(EXIT_NUMERIC, e.to_string()))?;
            println!(
                "fwhm_mhz = {}\nfwhm_khz = {}\ncenter_mhz = {}\nextremum = {}\nbaseline = {}",
                lw.fwhm,
                to_khz(mhz(lw.fwhm)),
                lw.center,
                lw.extremum,
                lw.baseline
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("eitcorr: {msg}");
            ExitCode::from(code)
        }
    }
}
