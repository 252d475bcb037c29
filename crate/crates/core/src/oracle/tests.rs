use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::*;
use crate::spectra::FullOrderSolution;
use crate::units::mhz;

fn short_cfg(params: &SystemParams) -> TrajectoryConfig {
    let omega_max = mhz(2.0);
    let dt = TrajectoryConfig::max_dt(params, omega_max);
    TrajectoryConfig {
        dt,
        duration: TrajectoryConfig::min_duration(params),
        transient: 10.0,
        sample_every: 8,
        omega_max,
        noise_substeps: 1,
    }
}

fn ensemble_of(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> TrajectoryEnsemble {
    let series = a
        .into_iter()
        .zip(b)
        .enumerate()
        .map(|(k, (i1, i2))| Trajectory {
            seed: k as u64,
            i1,
            i2,
            mean_state: State::zeros(),
        })
        .collect::<Vec<_>>();
    TrajectoryEnsemble {
        dt: 0.01,
        duration: 0.0,
        transient: 0.0,
        sample_every: 1,
        seeds: (0..series.len() as u64).collect(),
        series,
    }
}

fn white(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| nd.sample(&mut rng)).collect()
}

fn est_cfg() -> EstimatorConfig {
    EstimatorConfig {
        segment_length: 256,
        window: Window::Hann,
        overlap: 0.5,
        frequencies: vec![5.0, 40.0, 150.0],
    }
}

#[test]
fn noiseless_intensities_are_constant() {
    let p = SystemParams {
        gamma_bar: 0.0,
        ..SystemParams::reference()
    };
    let t = simulate_trajectory(&p, &short_cfg(&p), 1).unwrap();
    let first = t.i1[0];
    assert!(t.i1.iter().all(|v| ((v - first) / first).abs() < 1e-9));
    let first = t.i2[0];
    assert!(t.i2.iter().all(|v| ((v - first) / first).abs() < 1e-9));
}

#[test]
fn zero_coupling_gives_unit_intensity() {
    let p = SystemParams {
        kappa1: 0.0,
        kappa2: 0.0,
        ..SystemParams::reference()
    };
    let t = simulate_trajectory(&p, &short_cfg(&p), 1).unwrap();
    assert!(t.i1.iter().chain(&t.i2).all(|&v| v == 1.0));
}

#[test]
fn bitwise_reproducible() {
    let p = SystemParams::reference();
    let cfg = short_cfg(&p);
    let a = simulate_ensemble(&p, &cfg, 3, 42).unwrap();
    let b = simulate_ensemble(&p, &cfg, 3, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seeds, vec![42, 43, 44]);
    assert!(a.series[0].i1 != a.series[1].i1);
    assert!(a
        .series
        .iter()
        .all(|t| t.i1.iter().chain(&t.i2).all(|v| v.is_finite() && *v >= 0.0)));
}

#[test]
fn rejects_violated_preconditions() {
    let p = SystemParams::reference();
    let good = short_cfg(&p);
    for bad in [
        TrajectoryConfig { dt: good.dt * 1.5, ..good },
        TrajectoryConfig { duration: good.duration * 0.5, ..good },
        TrajectoryConfig { sample_every: 0, ..good },
        TrajectoryConfig { omega_max: 1e4, ..good },
    ] {
        assert!(matches!(
            simulate_trajectory(&p, &bad, 0),
            Err(OracleError::Precondition(_))
        ));
    }
}

#[test]
fn identical_and_opposite_series() {
    let a: Vec<Vec<f64>> = (0..4).map(|s| white(s, 4000)).collect();
    let neg: Vec<Vec<f64>> = a.iter().map(|v| v.iter().map(|x| 3.0 - x).collect()).collect();
    let est = estimate_spectra(&ensemble_of(a.clone(), a.clone()), &est_cfg()).unwrap();
    for p in &est.points {
        assert!((p.c.unwrap() - 1.0).abs() < 1e-12);
    }
    let est = estimate_spectra(&ensemble_of(a.clone(), neg.clone()), &est_cfg()).unwrap();
    for p in &est.points {
        assert!((p.c.unwrap() + 1.0).abs() < 1e-12);
    }
    let g = estimate_g2_zero(&ensemble_of(a.clone(), a.clone())).unwrap();
    assert!((g - 1.0).abs() < 1e-12);
    let g = estimate_g2_zero(&ensemble_of(a, neg)).unwrap();
    assert!((g + 1.0).abs() < 1e-12);
}

#[test]
fn mixed_white_noise() {
    // b = ρ a + √(1−ρ²) n has correlation ρ at every frequency
    let rho: f64 = 0.5;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for s in 0..16 {
        let x = white(1000 + s, 20_000);
        let n = white(5000 + s, 20_000);
        b.push(
            x.iter()
                .zip(&n)
                .map(|(x, n)| rho * x + (1.0 - rho * rho).sqrt() * n)
                .collect(),
        );
        a.push(x);
    }
    let ens = ensemble_of(a, b);
    let est = estimate_spectra(&ens, &est_cfg()).unwrap();
    assert_eq!(est.units, 16);
    for p in &est.points {
        let (c, se) = (p.c.unwrap(), p.c_se.unwrap());
        assert!((c - rho).abs() <= 3.0 * se, "{c} ± {se}");
        // unit-variance white noise: S = ts/2π
        let s = 0.01 / std::f64::consts::TAU;
        assert!((p.s11 - s).abs() <= 3.0 * p.s11_se);
    }
}

#[test]
fn flat_and_short_inputs() {
    let flat = vec![vec![1.0; 4000]; 2];
    let est = estimate_spectra(&ensemble_of(flat.clone(), flat.clone()), &est_cfg()).unwrap();
    assert!(est.points.iter().all(|p| p.c.is_none() && p.s11 == 0.0));
    assert_eq!(
        estimate_g2_zero(&ensemble_of(flat.clone(), flat)),
        Err(OracleError::ZeroVariance)
    );
    let short = vec![white(1, 600)];
    assert!(matches!(
        estimate_spectra(&ensemble_of(short.clone(), short), &est_cfg()),
        Err(OracleError::InsufficientData { .. })
    ));
}

#[test]
fn default_estimator_resolution() {
    let w = mhz(2.0);
    let cfg = EstimatorConfig::for_frequencies(vec![w, mhz(4.0)], 0.02).unwrap();
    assert!(resolution_bandwidth(&cfg, 0.02) <= w / 20.0);
    assert!(EstimatorConfig { overlap: 0.95, ..cfg.clone() }.validate().is_err());
    assert!(EstimatorConfig { segment_length: 8, ..cfg }.validate().is_err());
}

#[test]
fn time_average_matches_noisy_mean() {
    let p = SystemParams::reference();
    let settings = OracleSettings {
        n_traj: 16,
        base_seed: 7,
        trajectory: short_cfg(&p),
    };
    let cfg = EstimatorConfig::for_frequencies(vec![mhz(2.0)], settings.trajectory.sample_interval()).unwrap();
    let res = run_oracle(&p, &settings, &cfg).unwrap();
    let (m, se) = res.mean_component(2);
    let exact = FullOrderSolution::new(&p).unwrap().mean[2];
    assert!((m.im - exact.im).abs() <= 3.0 * se, "{m} vs {exact} ± {se}");
    assert!((m.re - exact.re).abs() <= 3.0 * se);
}
