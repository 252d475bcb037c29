use std::path::PathBuf;
use std::process::{Command, Output};

use eitcorr::scan::{read_records, Format};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eitcorr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}_{name}", std::process::id()))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn scan_writes_grid_and_is_deterministic() {
    let out = scratch("scan.csv");
    let args = [
        "scan",
        "--delta1-mhz=-6,0.2",
        "--delta-range-mhz=-2,2,21",
        "--analysis-mhz=2,4",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(run(&args).status.code(), Some(0));
    let first = std::fs::read(&out).unwrap();
    assert_eq!(run(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&out).unwrap());

    let recs = read_records(first.as_slice(), Format::Csv).unwrap();
    assert_eq!(recs.len(), 2 * 21 * 2);
    assert_eq!(recs[0].delta_mhz, -2.0);
    assert_eq!(recs[40].delta_mhz, 2.0);
    assert!(recs.iter().all(|r| r.c_full.is_some() && r.t1.is_some()));
}

#[test]
fn config_files_load() {
    for name in ["detunings.conf", "sidebands.conf", "power.conf"] {
        let path = configs().join(name);
        let o = run(&[
            "scan",
            "--config",
            path.to_str().unwrap(),
            "--delta-range-mhz=-1,1,3",
            "--format",
            "json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let recs = read_records(o.stdout.as_slice(), Format::Json).unwrap();
        assert!(!recs.is_empty());
    }
}

#[test]
fn fit_reads_scan_output() {
    let out = scratch("fit.json");
    let o = run(&[
        "scan",
        "--delta-range-mhz=-10,10,401",
        "--format=json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["fit", out.to_str().unwrap(), "--column", "c_full"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let fwhm: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("fwhm_mhz = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(fwhm > 0.0 && fwhm < 1.0, "{fwhm}");

    let o = run(&["fit", out.to_str().unwrap(), "--column", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["fit", out.to_str().unwrap(), "--column", "t1"]);
    assert_eq!(o.status.code(), Some(3), "absorption dip has no peak");
}

#[test]
fn point_and_oracle() {
    let o = run(&["point", "--delta-mhz", "0.5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = read_records(o.stdout.as_slice(), Format::Json).unwrap();
    assert_eq!(recs.len(), 1);
    assert!((recs[0].c_full.unwrap() + 0.2121405734056179).abs() < 1e-9);

    let dump = scratch("traj.csv");
    let o = run(&[
        "oracle",
        "--delta-mhz",
        "1",
        "--gamma-bar-mhz",
        "0.1",
        "--set",
        "oracle_trajectories=3",
        "--set",
        "oracle_duration_us=150",
        "--dump-trajectories",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["trajectories"], 3);
    assert!(report["points"][0]["c"].as_f64().unwrap().abs() <= 1.0);
    let csv = std::fs::read_to_string(&dump).unwrap();
    assert!(csv.starts_with("trajectory,seed,t_us,i1,i2"));
    assert_eq!(csv.lines().count(), 1 + 3 * 7500);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["scan", "--delta-range-mhz=1,-1,5"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--set", "bogus=1"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--config", "/nonexistent.conf"]).status.code(), Some(2));
    assert_eq!(run(&["point"]).status.code(), Some(2));
    assert_eq!(
        run(&["point", "--delta-mhz=0", "--set", "rabi1_over_gamma=0", "--set", "rabi2_over_gamma=0"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&["oracle", "--delta-mhz=0", "--set", "oracle_duration_us=5"]).status.code(),
        Some(2)
    );
}
