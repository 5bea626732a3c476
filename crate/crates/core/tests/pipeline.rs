use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use sagnac_core::pipeline::{
    calibrate_dispersion, derive_seed, run_experiment, sha256_hex, simulate, v_ad_at, CalibrationError, EnvelopeKind,
    RunConfig, ACCEPT_TOL,
};
use sagnac_core::source::{SourceConfig, SpectralEnvelope};

/// Short acquisitions so a full run takes well under a second.
fn quick(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.detection.duration_s = 0.2;
    cfg.scan.point_duration_s = 0.05;
    cfg.reproduce.stability_blocks = 3;
    cfg.reproduce.stability_block_s = 0.05;
    cfg.outputs.dir = dir.to_string_lossy().into_owned();
    cfg
}

#[test]
fn seed_paths_are_stable_and_distinct() {
    assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
    let mut seen = BTreeSet::new();
    for root in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                assert!(seen.insert(derive_seed(root, &[a, b])));
            }
        }
        assert!(seen.insert(derive_seed(root, &[])));
    }
}

#[test]
fn config_files() {
    let cfg = RunConfig::default();
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    let text = "seed = 9\n[source]\nenvelope = \"single\"\n[detection]\ncoincidence_window_ns = 2.5\n";
    let parsed = RunConfig::from_toml(text).unwrap();
    assert_eq!(parsed.seed, 9);
    assert_eq!(parsed.source.envelope, EnvelopeKind::Single);
    assert_eq!(parsed.detection.coincidence_window_ns, 2.5);
    for bad in ["[detection]\nwindow_ns = 3\n", "seed = \"x\"\n", "[source\n", "[scan]\nsteps = 2\n"] {
        assert_eq!(RunConfig::from_toml(bad).unwrap_err().exit_code(), 2, "{bad}");
    }
    assert_eq!(RunConfig::load(Path::new("/nonexistent/run.toml")).unwrap_err().exit_code(), 4);
}

#[test]
fn ideal_narrowband_run_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick(dir.path());
    cfg.source.envelope = EnvelopeKind::Single;
    cfg.reproduce.calibrate = false;
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.c2_rad_per_nm2, 0.0);
    for case in &report.cases {
        assert!((case.hv.v_exact - 1.0).abs() < 1e-12);
        assert!((case.ad.v_exact - 1.0).abs() < 1e-12);
        assert!((case.exact.fidelity - 1.0).abs() < 1e-12);
        assert!((case.weight - 1.0).abs() < 1e-12);
    }
}

#[test]
fn calibrated_run_matches_reported_figures() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&quick(dir.path())).unwrap();
    let cal = report.calibration.unwrap();
    assert!(report.c2_rad_per_nm2 > 0.0);
    assert!((cal.v_ad - 0.78).abs() <= ACCEPT_TOL);

    let narrow = report.case("narrowband").unwrap();
    assert!(narrow.hv.v_exact >= 0.99 && narrow.ad.v_exact >= 0.98);
    assert!((narrow.exact.fidelity - 0.992).abs() <= 0.02);
    let broad = report.case("broadband").unwrap();
    assert!((broad.ad.v_exact - 0.78).abs() <= 0.02);
    assert!((broad.exact.fidelity - 0.88).abs() <= 0.03);
    // Accidental subtraction can only help.
    assert!(broad.ad.v_subtracted >= broad.ad.v_raw - 1e-12);

    let m = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(m.contains(&format!("c2_rad_per_nm2 = {}", report.c2_rad_per_nm2)));
}

#[test]
fn manifest_lists_every_file_with_its_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&quick(dir.path())).unwrap();
    let listed: BTreeSet<String> = report.files.iter().map(|f| f.name.clone()).collect();
    let on_disk: BTreeSet<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.toml")
        .collect();
    assert_eq!(listed, on_disk);
    let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    for f in &report.files {
        let bytes = fs::read(dir.path().join(&f.name)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256, "{}", f.name);
        assert!(manifest.contains(&f.sha256));
    }
    let config = fs::read(dir.path().join("config.toml")).unwrap();
    assert!(manifest.contains(&format!("config_sha256 = \"{}\"", sha256_hex(&config))));
    for name in ["fringe_narrowband_hv.csv", "fringe_broadband_ad.csv", "histogram_narrowband.csv", "tags_narrowband.ttag", "metrics.csv", "metrics.txt"] {
        assert!(listed.contains(name), "{name}");
    }
    let fringe = fs::read_to_string(dir.path().join("fringe_narrowband_hv.csv")).unwrap();
    assert!(fringe.starts_with("theta_rad,probability\n"));
    let hist = fs::read_to_string(dir.path().join("histogram_narrowband.csv")).unwrap();
    assert!(hist.starts_with("delay_ps,count\n"));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&quick(a.path())).unwrap();
    let rb = run_experiment(&quick(b.path())).unwrap();
    assert_eq!(ra.files, rb.files);
    assert_eq!(fs::read(a.path().join("manifest.toml")).unwrap(), fs::read(b.path().join("manifest.toml")).unwrap());

    let c = tempfile::tempdir().unwrap();
    let mut other = quick(c.path());
    other.seed += 1;
    let rc = run_experiment(&other).unwrap();
    let tags = |r: &sagnac_core::pipeline::RunReport| r.files.iter().find(|f| f.name == "tags_narrowband.ttag").unwrap().sha256.clone();
    assert_ne!(tags(&ra), tags(&rc));
}

#[test]
fn calibration_examples() {
    let ideal = SourceConfig::ideal();
    assert_eq!(calibrate_dispersion(1.0, &ideal, 16).unwrap().c2, 0.0);
    assert_eq!(calibrate_dispersion(0.999, &ideal, 16).unwrap().c2, 0.0);

    let broad = SourceConfig::with_envelope(SpectralEnvelope::gaussian(20.0).unwrap());
    let cal = calibrate_dispersion(0.78, &broad, 16).unwrap();
    assert!(cal.c2 > 0.0);
    assert!((cal.v_ad - 0.78).abs() <= ACCEPT_TOL);
    assert_eq!(v_ad_at(&broad, cal.c2, 16).unwrap(), cal.v_ad);
    assert_eq!(calibrate_dispersion(0.78, &broad, 16).unwrap(), cal);

    let dephased = SourceConfig { cw_ccw_delay_fs: 1e7, ..SourceConfig::ideal() };
    assert!(matches!(calibrate_dispersion(0.5, &dephased, 16), Err(CalibrationError::Unreachable { .. })));
    assert!(matches!(calibrate_dispersion(0.0, &broad, 16), Err(CalibrationError::InvalidTarget(_))));
}

#[test]
fn simulate_applies_the_filter() {
    let mut cfg = RunConfig::default();
    cfg.source.phase_coeffs = vec![0.0, 0.0, 0.0074];
    let broad = simulate(&cfg).unwrap();
    cfg.source.filter_nm = Some(3.0);
    let narrow = simulate(&cfg).unwrap();
    assert!((broad.v_ad - 0.78).abs() < 0.01);
    assert!(narrow.v_ad >= 0.98);
    assert!((narrow.v_hv - 1.0).abs() < 1e-10);
}
