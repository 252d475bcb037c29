use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::OracleError;
use crate::bloch::{build_bloch_system, steady_state, transmission_of, Generator, State, SystemParams, C64};

/// Integration and sampling settings for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    /// Step (µs).
    pub dt: f64,
    /// Recorded length after the transient (µs).
    pub duration: f64,
    /// Discarded initial interval (µs).
    pub transient: f64,
    /// Integration steps averaged into one output sample.
    pub sample_every: usize,
    /// Highest analysis frequency of interest (rad/µs), enters the step bound.
    pub omega_max: f64,
    /// Gaussian draws summed per step. Running with `dt/2` and half the
    /// substeps consumes the generator identically, so both runs see the
    /// same Brownian path.
    pub noise_substeps: usize,
}

impl TrajectoryConfig {
    /// Largest step allowed for these parameters.
    pub fn max_dt(params: &SystemParams, omega_max: f64) -> f64 {
        let fastest = [
            params.gamma,
            params.delta1.abs(),
            params.delta2.abs(),
            params.rabi1,
            params.rabi2,
            omega_max.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        std::f64::consts::TAU / (50.0 * fastest)
    }

    /// Shortest recorded duration allowed for these parameters.
    pub fn min_duration(params: &SystemParams) -> f64 {
        if params.gamma_d > 0.0 {
            100.0 / params.gamma_d
        } else {
            100.0 * 100.0 / params.gamma
        }
    }

    pub fn check(&self, params: &SystemParams) -> Result<(), OracleError> {
        let bad = |what: String| Err(OracleError::Precondition(what));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        let max_dt = Self::max_dt(params, self.omega_max) * (1.0 + 1e-12);
        if self.dt > max_dt {
            return bad(format!("dt = {} exceeds the stability bound {max_dt}", self.dt));
        }
        let min_dur = Self::min_duration(params) * (1.0 - 1e-12);
        if !(self.duration >= min_dur) {
            return bad(format!("duration = {} below the minimum {min_dur}", self.duration));
        }
        if !(self.transient >= 0.0 && self.transient.is_finite()) {
            return bad(format!("transient = {} must be non-negative", self.transient));
        }
        if self.sample_every == 0 || self.noise_substeps == 0 {
            return bad("sample_every and noise_substeps must be at least 1".into());
        }
        Ok(())
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_every as f64
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.sample_interval()).round() as usize
    }

    fn transient_steps(&self) -> usize {
        (self.transient / self.dt).round() as usize
    }
}

/// Sampled output intensities of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    /// Time average of the state over the recorded interval.
    pub mean_state: State,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub dt: f64,
    pub duration: f64,
    pub transient: f64,
    pub sample_every: usize,
    pub seeds: Vec<u64>,
    pub series: Vec<Trajectory>,
}

impl TrajectoryEnsemble {
    pub fn n_traj(&self) -> usize {
        self.series.len()
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_every as f64
    }

    /// Writes `trajectory,seed,t_us,i1,i2` rows.
    pub fn write_csv(&self, path: &Path) -> Result<(), OracleError> {
        let io = |e: std::io::Error| OracleError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(w, "trajectory,seed,t_us,i1,i2").map_err(io)?;
        let ts = self.sample_interval();
        for (k, tr) in self.series.iter().enumerate() {
            for (n, (a, b)) in tr.i1.iter().zip(&tr.i2).enumerate() {
                let t = self.transient + (n as f64 + 0.5) * ts;
                writeln!(w, "{k},{},{t:.6},{a:.15e},{b:.15e}", tr.seed).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

/// Real coordinates r = (ρ11, ρ22, Re ρ13, Im ρ13, Re ρ23, Im ρ23, Re ρ12, Im ρ12).
fn to_real(x: &State) -> [f64; 8] {
    [
        x[0].re, x[1].re, x[2].re, x[2].im, x[4].re, x[4].im, x[6].re, x[6].im,
    ]
}

fn from_real(r: &[f64; 8]) -> State {
    let z = |a: f64, b: f64| C64::new(a, b);
    State::from_column_slice(&[
        z(r[0], 0.0),
        z(r[1], 0.0),
        z(r[2], r[3]),
        z(r[2], -r[3]),
        z(r[4], r[5]),
        z(r[4], -r[5]),
        z(r[6], r[7]),
        z(r[6], -r[7]),
    ])
}

struct Stepper {
    phi: [[f64; 8]; 8],
    c: [f64; 8],
    kappa: [f64; 2],
    sigma: f64,
    corr: f64,
    corr_c: f64,
    substeps: usize,
    independent: bool,
}

impl Stepper {
    fn new(params: &SystemParams, cfg: &TrajectoryConfig) -> Result<(Self, State), OracleError> {
        let sys = build_bloch_system(params)?;
        let ss = steady_state(&sys)?;
        let phi: Generator = (sys.m * C64::from(cfg.dt)).exp();
        let minv_x0 = sys
            .m
            .lu()
            .solve(&sys.x0)
            .ok_or(OracleError::Model(crate::bloch::ModelError::Singular))?;
        let c = (phi - Generator::identity()) * minv_x0;
        // real form of the affine step: r ← V⁻¹ Φ V r + V⁻¹ c
        let mut phi_r = [[0.0; 8]; 8];
        for j in 0..8 {
            let mut e = [0.0; 8];
            e[j] = 1.0;
            let col = to_real(&(phi * from_real(&e)));
            for i in 0..8 {
                phi_r[i][j] = col[i];
            }
        }
        let r = params.phase_noise_correlation;
        Ok((
            Stepper {
                phi: phi_r,
                c: to_real(&c),
                kappa: [params.kappa1, params.kappa2],
                sigma: (2.0 * params.gamma_bar * cfg.dt / cfg.noise_substeps as f64).sqrt(),
                corr: r,
                corr_c: (1.0 - r * r).max(0.0).sqrt(),
                substeps: cfg.noise_substeps,
                independent: r < 1.0,
            },
            ss.x_ss,
        ))
    }

    /// Detuning-noise increments (ΔW₁, ΔW₂) for one step.
    fn increments(&self, rng: &mut ChaCha8Rng, normal: &Normal<f64>) -> (f64, f64) {
        let (mut w1, mut w2) = (0.0, 0.0);
        for _ in 0..self.substeps {
            let a = normal.sample(rng);
            if self.independent {
                let b = normal.sample(rng);
                w1 += a;
                w2 += self.corr * a + self.corr_c * b;
            } else {
                w1 += a;
                w2 += a;
            }
        }
        (w1 * self.sigma, w2 * self.sigma)
    }

    /// Phase rotation exp(½(D₁ΔW₁ + D₂ΔW₂)) as (cos, sin) pairs acting on
    /// ρ13, ρ23 and ρ12.
    fn half_rotation(&self, w1: f64, w2: f64) -> [(f64, f64); 3] {
        let (s1, c1) = sin_cos(-0.5 * w1);
        if !self.independent {
            return [(c1, s1), (c1, s1), (1.0, 0.0)];
        }
        let (s2, c2) = sin_cos(-0.5 * w2);
        let (s12, c12) = sin_cos(0.5 * (w2 - w1));
        [(c1, s1), (c2, s2), (c12, s12)]
    }

    #[inline(always)]
    fn rotate(r: &mut [f64; 8], f: &[(f64, f64); 3]) {
        for (k, &(c, s)) in f.iter().enumerate() {
            let (a, b) = (r[2 + 2 * k], r[3 + 2 * k]);
            r[2 + 2 * k] = c * a - s * b;
            r[3 + 2 * k] = s * a + c * b;
        }
    }

    #[inline(always)]
    fn deterministic(&self, r: &mut [f64; 8]) {
        let mut y = self.c;
        for (yi, row) in y.iter_mut().zip(&self.phi) {
            let mut s = 0.0;
            for j in 0..8 {
                s += row[j] * r[j];
            }
            *yi += s;
        }
        *r = y;
    }
}

/// Truncated series for the small angles of typical steps; the omitted
/// terms are below 1e-17 for |θ| < 0.25.
fn sin_cos(t: f64) -> (f64, f64) {
    if t.abs() >= 0.25 {
        return t.sin_cos();
    }
    let t2 = t * t;
    let s = t * (1.0
        - t2 / 6.0
            * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0 * (1.0 - t2 / 110.0)))));
    let c = 1.0
        - t2 / 2.0
            * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0 * (1.0 - t2 / 56.0 * (1.0 - t2 / 90.0 * (1.0 - t2 / 132.0)))));
    (s, c)
}

fn unstable(r: &[f64; 8]) -> bool {
    !r.iter().all(|v| v.abs() <= 10.0)
}

fn intensity(re: f64, im: f64, kappa: f64) -> f64 {
    transmission_of(C64::new(re, im), kappa)
}

/// Drives the integration, handing each output sample (I₁, I₂) to `sink`.
fn integrate(
    params: &SystemParams,
    cfg: &TrajectoryConfig,
    seed: u64,
    mut sink: impl FnMut(f64, f64),
) -> Result<State, OracleError> {
    cfg.check(params)?;
    let (stepper, x_ss) = Stepper::new(params, cfg)?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = to_real(&x_ss);

    let transient = cfg.transient_steps();
    let samples = cfg.samples();
    let total = transient + samples * cfg.sample_every;
    let mut acc = [0.0; 2];
    let mut mean = [0.0; 8];
    let norm = 1.0 / cfg.sample_every as f64;
    let noisy = stepper.sigma > 0.0;
    let mut filled = 0;

    for step in 0..total {
        if noisy {
            let (w1, w2) = stepper.increments(&mut rng, &normal);
            let f = stepper.half_rotation(w1, w2);
            Stepper::rotate(&mut r, &f);
            stepper.deterministic(&mut r);
            Stepper::rotate(&mut r, &f);
        } else {
            stepper.deterministic(&mut r);
        }
        if unstable(&r) {
            return Err(OracleError::Unstable {
                step,
                t: step as f64 * cfg.dt,
            });
        }
        if step >= transient {
            acc[0] += intensity(r[2], r[3], stepper.kappa[0]);
            acc[1] += intensity(r[4], r[5], stepper.kappa[1]);
            for (m, v) in mean.iter_mut().zip(&r) {
                *m += v;
            }
            filled += 1;
            if filled == cfg.sample_every {
                sink(acc[0] * norm, acc[1] * norm);
                acc = [0.0; 2];
                filled = 0;
            }
        }
    }
    let n = (total - transient).max(1) as f64;
    Ok(from_real(&mean.map(|m| m / n)))
}

/// One trajectory started from the noiseless steady state.
pub fn simulate_trajectory(
    params: &SystemParams,
    cfg: &TrajectoryConfig,
    seed: u64,
) -> Result<Trajectory, OracleError> {
    cfg.check(params)?;
    let n = cfg.samples();
    let mut i1 = Vec::with_capacity(n);
    let mut i2 = Vec::with_capacity(n);
    let mean_state = integrate(params, cfg, seed, |a, b| {
        i1.push(a);
        i2.push(b);
    })?;
    Ok(Trajectory {
        seed,
        i1,
        i2,
        mean_state,
    })
}

/// Runs `n_traj` trajectories with seeds `base_seed + k`.
pub fn simulate_ensemble(
    params: &SystemParams,
    cfg: &TrajectoryConfig,
    n_traj: usize,
    base_seed: u64,
) -> Result<TrajectoryEnsemble, OracleError> {
    let seeds: Vec<u64> = (0..n_traj as u64).map(|k| base_seed.wrapping_add(k)).collect();
    let series = seeds
        .par_iter()
        .map(|&s| simulate_trajectory(params, cfg, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrajectoryEnsemble {
        dt: cfg.dt,
        duration: cfg.duration,
        transient: cfg.transient,
        sample_every: cfg.sample_every,
        seeds,
        series,
    })
}
