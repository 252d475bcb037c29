use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{OracleError, TrajectoryEnsemble};
use crate::bloch::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // periodic Hann
            Window::Hann => (0..n)
                .map(|k| 0.5 - 0.5 * (TAU * k as f64 / n as f64).cos())
                .collect(),
        }
    }

    /// Equivalent noise bandwidth in bins.
    pub fn enbw_bins(self) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Samples per segment.
    pub segment_length: usize,
    pub window: Window,
    /// Fraction of a segment shared with the next one.
    pub overlap: f64,
    /// Analysis frequencies (rad/µs).
    pub frequencies: Vec<f64>,
}

impl EstimatorConfig {
    /// Hann, 50% overlap, shortest segment with resolution bandwidth
    /// at most ω_min/20.
    pub fn for_frequencies(frequencies: Vec<f64>, sample_interval: f64) -> Result<Self, OracleError> {
        let w_min = frequencies.iter().map(|w| w.abs()).fold(f64::INFINITY, f64::min);
        if !(w_min > 0.0 && w_min.is_finite()) || !(sample_interval > 0.0) {
            return Err(OracleError::InvalidConfig(
                "analysis frequencies must be nonzero and finite".into(),
            ));
        }
        let window = Window::Hann;
        // rbw = enbw · 2π / (N ts) ≤ ω/20
        let n = (window.enbw_bins() * TAU * 20.0 / (w_min * sample_interval)).ceil() as usize;
        let cfg = EstimatorConfig {
            segment_length: n.max(16),
            window,
            overlap: 0.5,
            frequencies,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.segment_length < 16 {
            return Err(OracleError::InvalidConfig(format!(
                "segment_length {} < 16",
                self.segment_length
            )));
        }
        if !(0.0..=0.9).contains(&self.overlap) {
            return Err(OracleError::InvalidConfig(format!(
                "overlap {} outside [0, 0.9]",
                self.overlap
            )));
        }
        if self.frequencies.is_empty() || self.frequencies.iter().any(|w| !w.is_finite()) {
            return Err(OracleError::InvalidConfig("frequency grid empty or not finite".into()));
        }
        Ok(())
    }

    fn hop(&self) -> usize {
        let n = self.segment_length;
        (n - (self.overlap * n as f64).round() as usize).max(1)
    }
}

/// Per-frequency sums of |X₁|², |X₂|², Re(X₁* X₂) over some segments.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSums {
    pub segments: usize,
    pub sums: Vec<[f64; 3]>,
}

impl UnitSums {
    fn empty(nf: usize) -> Self {
        UnitSums {
            segments: 0,
            sums: vec![[0.0; 3]; nf],
        }
    }

    fn add(&mut self, other: &UnitSums) {
        self.segments += other.segments;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }
}

/// Precomputed windowed Fourier kernels.
pub(crate) struct Plan {
    n: usize,
    hop: usize,
    kernels: Vec<Vec<C64>>,
    kernel_sums: Vec<C64>,
    /// ts / (2π Σw²), divided by the box-average gain at each frequency.
    scale: Vec<f64>,
}

impl Plan {
    pub(crate) fn new(cfg: &EstimatorConfig, dt: f64, sample_every: usize) -> Result<Self, OracleError> {
        cfg.validate()?;
        let ts = dt * sample_every as f64;
        let n = cfg.segment_length;
        let w = cfg.window.weights(n);
        let w2: f64 = w.iter().map(|v| v * v).sum();
        let mut kernels = Vec::new();
        let mut kernel_sums = Vec::new();
        let mut scale = Vec::new();
        for &omega in &cfg.frequencies {
            let k: Vec<C64> = w
                .iter()
                .enumerate()
                .map(|(j, &wj)| C64::from_polar(wj, -omega * ts * j as f64))
                .collect();
            kernel_sums.push(k.iter().sum());
            kernels.push(k);
            scale.push(ts / (TAU * w2) / box_gain(omega, dt, sample_every));
        }
        Ok(Plan {
            n,
            hop: cfg.hop(),
            kernels,
            kernel_sums,
            scale,
        })
    }

    /// One [`UnitSums`] per segment of the series pair.
    pub(crate) fn segments(&self, a: &[f64], b: &[f64]) -> Vec<UnitSums> {
        let len = a.len().min(b.len());
        let mut out = Vec::new();
        let mut start = 0;
        while start + self.n <= len {
            let (sa, sb) = (&a[start..start + self.n], &b[start..start + self.n]);
            let ma = sa.iter().sum::<f64>() / self.n as f64;
            let mb = sb.iter().sum::<f64>() / self.n as f64;
            let flat_a = sa.iter().all(|&v| v == sa[0]);
            let flat_b = sb.iter().all(|&v| v == sb[0]);
            let sums = self
                .kernels
                .iter()
                .zip(&self.kernel_sums)
                .map(|(k, ks)| {
                    let mut xa = -ks * ma;
                    let mut xb = -ks * mb;
                    for ((kj, &va), &vb) in k.iter().zip(sa).zip(sb) {
                        xa += kj * va;
                        xb += kj * vb;
                    }
                    if flat_a {
                        xa = C64::new(0.0, 0.0);
                    }
                    if flat_b {
                        xb = C64::new(0.0, 0.0);
                    }
                    [xa.norm_sqr(), xb.norm_sqr(), (xa.conj() * xb).re]
                })
                .collect();
            out.push(UnitSums { segments: 1, sums });
            start += self.hop;
        }
        out
    }

    pub(crate) fn n_freq(&self) -> usize {
        self.kernels.len()
    }
}

/// |(1/k) Σ_m e^{−iωm dt}|², the gain of averaging k consecutive steps.
fn box_gain(omega: f64, dt: f64, k: usize) -> f64 {
    let x = 0.5 * omega * dt;
    if k == 1 || x.abs() < 1e-300 {
        return 1.0;
    }
    let s = x.sin();
    if s.abs() < 1e-300 {
        return 1.0;
    }
    let r = (k as f64 * x).sin() / (k as f64 * s);
    r * r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub omega: f64,
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
    /// `None` when a channel has no fluctuations.
    pub c: Option<f64>,
    pub s11_se: f64,
    pub s22_se: f64,
    pub s12_se: f64,
    pub c_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub points: Vec<FrequencyEstimate>,
    pub segments: usize,
    /// Number of jackknife units (trajectories, or segments if too few).
    pub units: usize,
}

fn c_of(s: &[f64; 3]) -> Option<f64> {
    let d = s[0] * s[1];
    if d > 0.0 {
        Some((s[2] / d.sqrt()).clamp(-1.0, 1.0))
    } else {
        None
    }
}

fn jackknife_se(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    ((n - 1.0) / n * values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt()
}

/// Combines jackknife units into estimates at each frequency.
pub(crate) fn finish(units: &[UnitSums], plan: &Plan, freqs: &[f64]) -> Result<SpectralEstimate, OracleError> {
    let mut total = UnitSums::empty(plan.n_freq());
    for u in units {
        total.add(u);
    }
    if total.segments < 8 || units.len() < 2 {
        return Err(OracleError::InsufficientData {
            segments: total.segments,
        });
    }
    let points = freqs
        .iter()
        .enumerate()
        .map(|(f, &omega)| {
            let sc = plan.scale[f];
            let tot = total.sums[f];
            let nseg = total.segments as f64;
            let mut loo = [Vec::new(), Vec::new(), Vec::new()];
            let mut loo_c = Vec::new();
            for u in units {
                let n = nseg - u.segments as f64;
                let s: [f64; 3] = std::array::from_fn(|k| tot[k] - u.sums[f][k]);
                for k in 0..3 {
                    loo[k].push(sc * s[k] / n);
                }
                if let Some(c) = c_of(&s) {
                    loo_c.push(c);
                }
            }
            let c = c_of(&tot);
            let c_se = (c.is_some() && loo_c.len() == units.len()).then(|| jackknife_se(&loo_c));
            FrequencyEstimate {
                omega,
                s11: sc * tot[0] / nseg,
                s22: sc * tot[1] / nseg,
                s12: sc * tot[2] / nseg,
                c,
                s11_se: jackknife_se(&loo[0]),
                s22_se: jackknife_se(&loo[1]),
                s12_se: jackknife_se(&loo[2]),
                c_se,
            }
        })
        .collect();
    Ok(SpectralEstimate {
        points,
        segments: total.segments,
        units: units.len(),
    })
}

pub(crate) fn merge(segs: &[UnitSums], nf: usize) -> UnitSums {
    let mut u = UnitSums::empty(nf);
    for s in segs {
        u.add(s);
    }
    u
}

/// Groups per-trajectory segment lists into jackknife units.
pub(crate) fn group_units(per_traj: Vec<Vec<UnitSums>>, nf: usize) -> Vec<UnitSums> {
    if per_traj.len() >= 8 {
        per_traj.iter().map(|segs| merge(segs, nf)).collect()
    } else {
        per_traj.into_iter().flatten().collect()
    }
}

/// Averaged windowed (cross-)periodograms with jackknife errors.
pub fn estimate_spectra(ens: &TrajectoryEnsemble, cfg: &EstimatorConfig) -> Result<SpectralEstimate, OracleError> {
    let plan = Plan::new(cfg, ens.dt, ens.sample_every)?;
    let per_traj = ens
        .series
        .iter()
        .map(|t| plan.segments(&t.i1, &t.i2))
        .collect();
    let units = group_units(per_traj, plan.n_freq());
    finish(&units, &plan, &cfg.frequencies)
}

/// Sums of (δI₁δI₂, δI₁², δI₂²) about the series' own means.
pub(crate) fn covariance_sums(a: &[f64], b: &[f64]) -> [f64; 3] {
    let n = a.len().min(b.len());
    if n == 0 {
        return [0.0; 3];
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let mut s = [0.0; 3];
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        let (dx, dy) = (x - ma, y - mb);
        s[0] += dx * dy;
        s[1] += dx * dx;
        s[2] += dy * dy;
    }
    s
}

pub(crate) fn g2_from_sums(s: [f64; 3]) -> Result<f64, OracleError> {
    let d = s[1] * s[2];
    if !(d > 0.0) {
        return Err(OracleError::ZeroVariance);
    }
    Ok((s[0] / d.sqrt()).clamp(-1.0, 1.0))
}

/// Equal-time normalized covariance pooled over trajectories.
pub fn estimate_g2_zero(ens: &TrajectoryEnsemble) -> Result<f64, OracleError> {
    let mut s = [0.0; 3];
    for t in &ens.series {
        let c = covariance_sums(&t.i1, &t.i2);
        for k in 0..3 {
            s[k] += c[k];
        }
    }
    g2_from_sums(s)
}

/// Equivalent noise bandwidth of one segment (rad/µs).
pub fn resolution_bandwidth(cfg: &EstimatorConfig, sample_interval: f64) -> f64 {
    cfg.window.enbw_bins() * 2.0 * PI / (cfg.segment_length as f64 * sample_interval)
}
