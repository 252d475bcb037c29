use eitcorr::oracle::{run_oracle, simulate_trajectory, EstimatorConfig, OracleSettings, TrajectoryConfig};
use eitcorr::units::mhz;
use eitcorr::{FullOrderSolution, SystemParams};

fn weak_noise(delta1_mhz: f64, delta_mhz: f64) -> SystemParams {
    SystemParams {
        gamma_bar: mhz(0.1),
        ..SystemParams::reference()
    }
    .with_delta1(mhz(delta1_mhz))
    .with_two_photon_detuning(mhz(delta_mhz))
}

#[test]
fn correlation_matches_closed_moments() {
    let w = mhz(2.0);
    for (d1, d) in [(-6.0, 2.0), (0.0, 2.0)] {
        let p = weak_noise(d1, d);
        let mut s = OracleSettings::standard(&p, w, 11);
        s.n_traj = 16;
        s.trajectory.duration = 400.0;
        let cfg = EstimatorConfig::for_frequencies(vec![w], s.trajectory.sample_interval()).unwrap();
        let r = run_oracle(&p, &s, &cfg).unwrap();
        let pt = &r.spectra.points[0];
        let full = FullOrderSolution::new(&p).unwrap().spectra(w).unwrap();
        let (c, se) = (pt.c.unwrap(), pt.c_se.unwrap());
        let cf = full.c.unwrap();
        assert!((c - cf).abs() <= 0.1f64.max(3.0 * se), "Δ1 {d1}: {c} ± {se} vs {cf}");
        // absolute spectra too, within a few standard errors and 15%
        let tol = (4.0 * pt.s11_se).max(0.15 * full.s11);
        assert!((pt.s11 - full.s11).abs() <= tol, "{} vs {}", pt.s11, full.s11);
    }
}

#[test]
fn coupled_step_refinement_converges() {
    let p = weak_noise(0.2, 1.0);
    let base = TrajectoryConfig {
        dt: 0.003,
        duration: 110.0,
        transient: 0.0,
        sample_every: 4,
        omega_max: mhz(2.0),
        noise_substeps: 4,
    };
    let run = |halvings: u32| {
        let k = 1usize << halvings;
        let cfg = TrajectoryConfig {
            dt: base.dt / k as f64,
            sample_every: base.sample_every * k,
            noise_substeps: base.noise_substeps / k,
            ..base
        };
        simulate_trajectory(&p, &cfg, 5).unwrap()
    };
    let (a, b, c) = (run(0), run(1), run(2));
    assert_eq!(a.i1.len(), c.i1.len());
    let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    let e_coarse = dist(&a.i1, &c.i1).max(dist(&a.i2, &c.i2));
    let e_mid = dist(&b.i1, &c.i1).max(dist(&b.i2, &c.i2));
    assert!(e_coarse > 0.0);
    assert!(e_mid < 0.6 * e_coarse, "{e_mid} vs {e_coarse}");
    // same Brownian path: the series agree far below the fluctuation size
    let spread = a.i1.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - a.i1.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(e_coarse < 0.05 * spread, "{e_coarse} vs {spread}");
}
