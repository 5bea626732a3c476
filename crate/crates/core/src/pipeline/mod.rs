//! Config-driven runs: simulate the source, synthesise detector streams for
//! each polariser setting, correlate and reduce to the reported metrics.

mod calibrate;
mod config;
mod report;

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::detection::{
    accidentals, correlate_window, fringe_scan, generate_timetags, raw_visibility, scan_angles,
    single_pass_probability, visibility, coincidence_probability, Channel, Correlation, DetectionConfig,
    DetectionError, FringeCurve, PolarizerSetting, TagStream,
};
use crate::fock::{Port, StateVector};
use crate::metrics::{
    concurrence_bound, fidelity_bound, rate_metrics, stability_stats, RateReport, StabilitySample, StabilitySeries,
    StabilitySummary,
};
use crate::source::{sagnac_state, PhaseProfile, SourceConfig};
use crate::Error;

pub use calibrate::{calibrate_dispersion, v_ad_at, Calibration, CalibrationError, ACCEPT_TOL, SEARCH_TOL};
pub use config::{
    DetectionSection, EnvelopeKind, MetadataSection, OutputSection, ReproduceSection, RunConfig, ScanSection,
    SourceSection,
};
pub use report::{
    fringe_csv, hex, histogram_csv, metric_rows, metrics_csv, metrics_table, sha256_hex, write_fringe_csv,
    write_histogram_csv, FileRecord, Manifest,
};

/// Derives an independent seed for one stochastic stage from the root seed
/// and a path of counters. The same path always yields the same seed.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(root);
    for &id in path {
        h = splitmix64(h ^ splitmix64(id.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// Seed path tags.
const STREAM_UNPOLARISED: u64 = 0;
const STREAM_FRINGE: u64 = 1;
const STREAM_STABILITY: u64 = 2;

/// One polariser setting measured with synthetic detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticPoint {
    pub setting: PolarizerSetting,
    pub probability: f64,
    pub coincidences: u64,
    /// Expected accidental counts from the measured singles.
    pub accidentals: f64,
    pub signal_cps: f64,
    pub idler_cps: f64,
}

impl SyntheticPoint {
    pub fn subtracted(&self) -> f64 {
        (self.coincidences as f64 - self.accidentals).max(0.0)
    }
}

/// Rates seen behind polarisers at `setting`.
///
/// Pairs pass with the joint probability. Each detector sees the pair
/// photons passing its own polariser plus half of the uncorrelated singles.
pub fn polarised_rates(
    state: &StateVector,
    setting: &PolarizerSetting,
    base: &DetectionConfig,
) -> Result<(f64, f64, f64), DetectionError> {
    let p = coincidence_probability(state, setting)?;
    let m1 = single_pass_probability(state, Port::OUT1, setting.theta1)?;
    let m2 = single_pass_probability(state, Port::OUT2, setting.theta2)?;
    let rc = base.pair_rate_cps;
    let rs = rc * m1 + 0.5 * (base.rate_signal_cps - rc);
    let ri = rc * m2 + 0.5 * (base.rate_idler_cps - rc);
    Ok(((rc * p).min(rs).min(ri), rs, ri))
}

/// Synthesises and correlates one polarised acquisition.
pub fn measure_point(
    state: &StateVector,
    setting: PolarizerSetting,
    base: &DetectionConfig,
    duration_s: f64,
    seed: u64,
) -> Result<SyntheticPoint, DetectionError> {
    let probability = coincidence_probability(state, &setting)?;
    let (pair, rs, ri) = polarised_rates(state, &setting, base)?;
    let cfg = DetectionConfig {
        pair_rate_cps: pair,
        rate_signal_cps: rs,
        rate_idler_cps: ri,
        duration_s,
        seed,
        ..base.clone()
    };
    let stream = generate_timetags(&cfg)?;
    let corr = correlate_window(&stream, cfg.coincidence_window_ns)?;
    let (s, i) = measured_singles(&stream, duration_s);
    Ok(SyntheticPoint {
        setting,
        probability,
        coincidences: corr.coincidences,
        accidentals: accidentals(s, i, cfg.coincidence_window_ns) * duration_s,
        signal_cps: s,
        idler_cps: i,
    })
}

fn measured_singles(stream: &TagStream, duration_s: f64) -> (f64, f64) {
    if duration_s > 0.0 {
        (
            stream.count(Channel::Signal) as f64 / duration_s,
            stream.count(Channel::Idler) as f64 / duration_s,
        )
    } else {
        (0.0, 0.0)
    }
}

/// Synthetic fringe over `θ₂` with `θ₁` fixed.
pub fn measure_fringe(
    state: &StateVector,
    theta1: f64,
    steps: usize,
    base: &DetectionConfig,
    duration_s: f64,
    seed_path: &[u64],
) -> Result<Vec<SyntheticPoint>, DetectionError> {
    if steps < 8 {
        return Err(DetectionError::TooFewSteps(steps));
    }
    let angles: Vec<f64> = scan_angles(steps).collect();
    angles
        .par_iter()
        .enumerate()
        .map(|(j, &theta2)| {
            let mut path = seed_path.to_vec();
            path.push(j as u64);
            measure_point(state, PolarizerSetting::custom(theta1, theta2), base, duration_s, derive_seed(base.seed, &path))
        })
        .collect()
}

fn counts_curve(points: &[SyntheticPoint], subtract: bool) -> FringeCurve {
    FringeCurve::new(
        points
            .iter()
            .map(|p| (p.setting.theta2, if subtract { p.subtracted() } else { p.coincidences as f64 }))
            .collect(),
    )
}

/// Visibilities of one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisResult {
    pub exact_curve: FringeCurve,
    pub points: Vec<SyntheticPoint>,
    pub v_exact: f64,
    pub v_raw: f64,
    pub v_subtracted: f64,
    /// Raw-extrema visibility of the uncorrected counts.
    pub v_raw_extrema: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub fidelity: f64,
    pub concurrence: f64,
}

impl Bounds {
    pub fn from_visibilities(v_hv: f64, v_ad: f64) -> Result<Self, Error> {
        let fidelity = fidelity_bound(v_hv, v_ad)?;
        Ok(Bounds { fidelity, concurrence: concurrence_bound(fidelity)? })
    }
}

/// Everything reported for one spectral configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub name: String,
    pub bandwidth_nm: f64,
    pub weight: f64,
    pub hv: BasisResult,
    pub ad: BasisResult,
    pub exact: Bounds,
    pub raw: Bounds,
    pub subtracted: Bounds,
    pub coincidence_cps: f64,
    pub accidental_cps: f64,
    pub signal_cps: f64,
    pub idler_cps: f64,
    pub rates: RateReport,
    pub correlation: Correlation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub c2_rad_per_nm2: f64,
    pub calibration: Option<Calibration>,
    pub cases: Vec<CaseReport>,
    pub stability: Vec<StabilitySample>,
    pub stability_summary: Option<StabilitySummary>,
    pub files: Vec<FileRecord>,
    pub out_dir: PathBuf,
}

impl RunReport {
    pub fn case(&self, name: &str) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.name == name)
    }
}

/// Exact and synthetic measurements of one source configuration.
pub fn run_case(
    name: &str,
    case_id: u64,
    source: &SourceConfig,
    det: &DetectionConfig,
    scan: &ScanSection,
    pump_power_mw: f64,
    bandwidth_nm: f64,
) -> Result<CaseReport, Error> {
    let sagnac = sagnac_state(source)?;
    let state = sagnac.conditional.ok_or(DetectionError::NotTwoPhoton)?;

    let basis = |basis_id: u64, theta1: f64| -> Result<BasisResult, Error> {
        let exact_curve = fringe_scan(&state, theta1, scan.steps)?;
        let points = measure_fringe(
            &state,
            theta1,
            scan.steps,
            det,
            scan.point_duration_s,
            &[STREAM_FRINGE, case_id, basis_id],
        )?;
        Ok(BasisResult {
            v_exact: visibility(&exact_curve)?,
            v_raw: visibility(&counts_curve(&points, false))?,
            v_subtracted: visibility(&counts_curve(&points, true))?,
            v_raw_extrema: raw_visibility(&counts_curve(&points, false))?,
            exact_curve,
            points,
        })
    };
    let hv = basis(0, 0.0)?;
    let ad = basis(1, FRAC_PI_4)?;

    let stream = generate_timetags(&DetectionConfig {
        seed: derive_seed(det.seed, &[STREAM_UNPOLARISED, case_id]),
        ..det.clone()
    })?;
    let correlation = correlate_window(&stream, det.coincidence_window_ns)?;
    let (signal_cps, idler_cps) = measured_singles(&stream, det.duration_s);
    let accidental_cps = accidentals(signal_cps, idler_cps, det.coincidence_window_ns);
    let coincidence_cps = if det.duration_s > 0.0 { correlation.coincidences as f64 / det.duration_s } else { 0.0 };
    let net = (coincidence_cps - accidental_cps).max(0.0);
    let rates = rate_metrics(net, signal_cps, idler_cps, pump_power_mw, bandwidth_nm)?;

    Ok(CaseReport {
        name: name.to_string(),
        bandwidth_nm,
        weight: sagnac.weight,
        exact: Bounds::from_visibilities(hv.v_exact, ad.v_exact)?,
        raw: Bounds::from_visibilities(hv.v_raw, ad.v_raw)?,
        subtracted: Bounds::from_visibilities(hv.v_subtracted, ad.v_subtracted)?,
        hv,
        ad,
        coincidence_cps,
        accidental_cps,
        signal_cps,
        idler_cps,
        rates,
        correlation,
    })
}

/// Correlated (D/D against D/A) and anti-correlated (A/A against A/D)
/// visibilities plus the unpolarised coincidence count of each block.
pub fn stability_series(
    state: &StateVector,
    det: &DetectionConfig,
    blocks: usize,
    interval_s: f64,
    block_s: f64,
) -> Result<Vec<StabilitySample>, Error> {
    let d = FRAC_PI_4;
    let a = 3.0 * FRAC_PI_4;
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let seed = |k: u64| derive_seed(det.seed, &[STREAM_STABILITY, b as u64, k]);
            let pair_v = |hi: (f64, f64), lo: (f64, f64), k: u64| -> Result<f64, DetectionError> {
                let max = measure_point(state, PolarizerSetting::custom(hi.0, hi.1), det, block_s, seed(k))?;
                let min = measure_point(state, PolarizerSetting::custom(lo.0, lo.1), det, block_s, seed(k + 1))?;
                let (x, n) = (max.subtracted(), min.subtracted());
                Ok(if x + n > 0.0 { (x - n) / (x + n) } else { 0.0 })
            };
            let stream = generate_timetags(&DetectionConfig { duration_s: block_s, seed: seed(0), ..det.clone() })?;
            let coincidences = correlate_window(&stream, det.coincidence_window_ns)?.coincidences as f64;
            Ok(StabilitySample {
                time_s: b as f64 * interval_s,
                coincidences,
                v_ad_correlated: pair_v((d, d), (d, a), 1)?,
                v_ad_anticorrelated: pair_v((a, a), (a, d), 3)?,
            })
        })
        .collect()
}

/// Applies the calibration setting of `cfg` to its unfiltered source.
pub fn calibrated_source(cfg: &RunConfig) -> Result<(SourceConfig, Option<Calibration>), Error> {
    let base = cfg.source_config()?;
    if !cfg.reproduce.calibrate {
        return Ok((base, None));
    }
    let cal = calibrate_dispersion(cfg.reproduce.target_v_ad, &base, cfg.scan.steps)?;
    Ok((SourceConfig { phase_profile: PhaseProfile::quadratic(cal.c2), ..base }, Some(cal)))
}

/// Full reproduction: optional dispersion calibration on the broadband
/// source, then the broadband and filtered narrowband cases, a stability
/// series and all output files under `cfg.outputs.dir`.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunReport, Error> {
    cfg.check()?;
    let out_dir = PathBuf::from(&cfg.outputs.dir);
    std::fs::create_dir_all(&out_dir)?;

    let (broad_src, calibration) = calibrated_source(cfg)?;
    let c2 = broad_src.phase_profile.coeffs.get(2).copied().unwrap_or(0.0);
    let narrow_src = broad_src.filtered(cfg.reproduce.narrow_filter_nm)?;

    let narrow_det = cfg.detection_config();
    narrow_det.validate()?;
    let r = &cfg.reproduce;
    let broad_det = DetectionConfig {
        pair_rate_cps: r.broadband_pair_rate_cps,
        rate_signal_cps: r.broadband_signal_rate_cps,
        rate_idler_cps: r.broadband_idler_rate_cps,
        ..narrow_det.clone()
    };
    broad_det.validate()?;

    let power = cfg.detection.pump_power_mw;
    let narrow = run_case("narrowband", 0, &narrow_src, &narrow_det, &cfg.scan, power, r.narrow_filter_nm)?;
    let broad = run_case("broadband", 1, &broad_src, &broad_det, &cfg.scan, power, cfg.source.fwhm_nm)?;

    let narrow_state = sagnac_state(&narrow_src)?.conditional.ok_or(DetectionError::NotTwoPhoton)?;
    let stability =
        stability_series(&narrow_state, &narrow_det, r.stability_blocks, r.stability_interval_s, r.stability_block_s)?;
    let stability_summary = if stability.len() >= 2 {
        Some(stability_stats(&StabilitySeries::new(stability.clone())?)?)
    } else {
        None
    };

    let tags = generate_timetags(&DetectionConfig {
        seed: derive_seed(narrow_det.seed, &[STREAM_UNPOLARISED, 0]),
        ..narrow_det.clone()
    })?;

    let mut report = RunReport {
        c2_rad_per_nm2: c2,
        calibration,
        cases: vec![narrow, broad],
        stability,
        stability_summary,
        files: Vec::new(),
        out_dir: out_dir.clone(),
    };
    report.files = report::write_run(&out_dir, cfg, &report, &tags)?;
    Ok(report)
}

/// Source simulation only: exact fringes of the configured (optionally
/// filtered) source.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub weight: f64,
    pub hv: FringeCurve,
    pub ad: FringeCurve,
    pub v_hv: f64,
    pub v_ad: f64,
    pub bounds: Bounds,
}

pub fn simulate(cfg: &RunConfig) -> Result<Simulation, Error> {
    cfg.check()?;
    let src = cfg.filtered_source_config()?;
    let sagnac = sagnac_state(&src)?;
    let state = sagnac.conditional.ok_or(DetectionError::NotTwoPhoton)?;
    let hv = fringe_scan(&state, 0.0, cfg.scan.steps)?;
    let ad = fringe_scan(&state, FRAC_PI_4, cfg.scan.steps)?;
    let (v_hv, v_ad) = (visibility(&hv)?, visibility(&ad)?);
    Ok(Simulation { weight: sagnac.weight, bounds: Bounds::from_visibilities(v_hv, v_ad)?, hv, ad, v_hv, v_ad })
}

/// Writes the two fringe files of a simulation into `dir`.
pub fn write_simulation(dir: &Path, sim: &Simulation) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(dir)?;
    let hv = dir.join("fringe_hv.csv");
    let ad = dir.join("fringe_ad.csv");
    write_fringe_csv(&hv, &sim.hv)?;
    write_fringe_csv(&ad, &sim.ad)?;
    Ok(vec![hv, ad])
}
