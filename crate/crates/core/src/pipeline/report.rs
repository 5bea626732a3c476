//! CSV, text and manifest writers for run outputs.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{CaseReport, RunConfig, RunReport};
use crate::detection::{ttag, DelayHistogram, FringeCurve, TagStream};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_sha256: String,
    pub c2_rad_per_nm2: f64,
    pub files: Vec<FileRecord>,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn fringe_csv(curve: &FringeCurve) -> String {
    let mut s = String::from("theta_rad,probability\n");
    for (t, p) in &curve.points {
        let _ = writeln!(s, "{t},{p}");
    }
    s
}

pub fn histogram_csv(h: &DelayHistogram) -> String {
    let mut s = String::from("delay_ps,count\n");
    for (d, c) in h.rows() {
        let _ = writeln!(s, "{d},{c}");
    }
    s
}

pub fn write_fringe_csv(path: &Path, curve: &FringeCurve) -> io::Result<()> {
    fs::write(path, fringe_csv(curve))
}

pub fn write_histogram_csv(path: &Path, h: &DelayHistogram) -> io::Result<()> {
    fs::write(path, histogram_csv(h))
}

/// `(case, metric, value)` rows in a fixed order.
pub fn metric_rows(report: &RunReport) -> Vec<(String, &'static str, f64)> {
    let mut rows = vec![("source".to_string(), "c2_rad_per_nm2", report.c2_rad_per_nm2)];
    for c in &report.cases {
        rows.extend(case_rows(c).into_iter().map(|(m, v)| (c.name.clone(), m, v)));
    }
    if let Some(s) = &report.stability_summary {
        for (m, v) in [
            ("coincidences_mean", s.coincidences.mean),
            ("coincidences_std", s.coincidences.std_dev),
            ("coincidences_drift_per_hour", s.coincidences.drift_per_hour()),
            ("v_ad_correlated_mean", s.v_ad_correlated.mean),
            ("v_ad_correlated_std", s.v_ad_correlated.std_dev),
            ("v_ad_correlated_drift_per_hour", s.v_ad_correlated.drift_per_hour()),
            ("v_ad_anticorrelated_mean", s.v_ad_anticorrelated.mean),
            ("v_ad_anticorrelated_std", s.v_ad_anticorrelated.std_dev),
            ("v_ad_anticorrelated_drift_per_hour", s.v_ad_anticorrelated.drift_per_hour()),
        ] {
            rows.push(("stability".to_string(), m, v));
        }
    }
    rows
}

fn case_rows(c: &CaseReport) -> Vec<(&'static str, f64)> {
    vec![
        ("bandwidth_nm", c.bandwidth_nm),
        ("post_selection_weight", c.weight),
        ("v_hv_exact", c.hv.v_exact),
        ("v_ad_exact", c.ad.v_exact),
        ("fidelity_bound_exact", c.exact.fidelity),
        ("concurrence_bound_exact", c.exact.concurrence),
        ("v_hv_raw", c.hv.v_raw),
        ("v_ad_raw", c.ad.v_raw),
        ("fidelity_bound_raw", c.raw.fidelity),
        ("concurrence_bound_raw", c.raw.concurrence),
        ("v_hv_subtracted", c.hv.v_subtracted),
        ("v_ad_subtracted", c.ad.v_subtracted),
        ("fidelity_bound_subtracted", c.subtracted.fidelity),
        ("concurrence_bound_subtracted", c.subtracted.concurrence),
        ("v_hv_raw_extrema", c.hv.v_raw_extrema),
        ("v_ad_raw_extrema", c.ad.v_raw_extrema),
        ("coincidence_rate_cps", c.coincidence_cps),
        ("accidental_rate_cps", c.accidental_cps),
        ("signal_rate_cps", c.signal_cps),
        ("idler_rate_cps", c.idler_cps),
        ("pair_rate_norm_cps_per_mw", c.rates.pair_rate_norm),
        ("spectral_brightness_cps_per_mw_nm", c.rates.spectral_brightness),
        ("heralding", c.rates.heralding),
        ("heralding_symmetric", c.rates.heralding_symmetric),
    ]
}

pub fn metrics_csv(report: &RunReport) -> String {
    let mut s = String::from("case,metric,value\n");
    for (case, m, v) in metric_rows(report) {
        let _ = writeln!(s, "{case},{m},{v}");
    }
    s
}

pub fn metrics_table(report: &RunReport) -> String {
    let rows = metric_rows(report);
    let w = rows.iter().map(|(_, m, _)| m.len()).max().unwrap_or(6);
    let mut s = format!("{:<12} {:<w$} {:>16}\n", "case", "metric", "value");
    let _ = writeln!(s, "{}", "-".repeat(12 + w + 18));
    for (case, m, v) in rows {
        let _ = writeln!(s, "{case:<12} {m:<w$} {v:>16.6}");
    }
    s
}

pub fn counts_csv(c: &CaseReport, hv: bool) -> String {
    let basis = if hv { &c.hv } else { &c.ad };
    let mut s = String::from("theta_rad,probability,coincidences,accidentals\n");
    for p in &basis.points {
        let _ = writeln!(s, "{},{},{},{}", p.setting.theta2, p.probability, p.coincidences, p.accidentals);
    }
    s
}

pub fn stability_csv(report: &RunReport) -> String {
    let mut s = String::from("time_s,coincidences,v_ad_correlated,v_ad_anticorrelated\n");
    for x in &report.stability {
        let _ = writeln!(s, "{},{},{},{}", x.time_s, x.coincidences, x.v_ad_correlated, x.v_ad_anticorrelated);
    }
    s
}

/// Writes every output of a run and the manifest; returns the file records
/// listed in the manifest.
pub(super) fn write_run(
    dir: &Path,
    cfg: &RunConfig,
    report: &RunReport,
    tags: &TagStream,
) -> Result<Vec<FileRecord>, Error> {
    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    // The output location does not affect any result, so it is left out of
    // the recorded config and its hash.
    let mut recorded = cfg.clone();
    recorded.outputs.dir = ".".into();
    let config_text = recorded.to_toml();
    outputs.push(("config.toml".into(), config_text.clone().into_bytes()));
    for c in &report.cases {
        outputs.push((format!("fringe_{}_hv.csv", c.name), fringe_csv(&c.hv.exact_curve).into_bytes()));
        outputs.push((format!("fringe_{}_ad.csv", c.name), fringe_csv(&c.ad.exact_curve).into_bytes()));
        outputs.push((format!("counts_{}_hv.csv", c.name), counts_csv(c, true).into_bytes()));
        outputs.push((format!("counts_{}_ad.csv", c.name), counts_csv(c, false).into_bytes()));
        outputs.push((format!("histogram_{}.csv", c.name), histogram_csv(&c.correlation.histogram).into_bytes()));
    }
    outputs.push(("tags_narrowband.ttag".into(), ttag::encode(&tags.tags)));
    outputs.push(("metrics.csv".into(), metrics_csv(report).into_bytes()));
    outputs.push(("metrics.txt".into(), metrics_table(report).into_bytes()));
    outputs.push(("stability.csv".into(), stability_csv(report).into_bytes()));

    let mut records = Vec::with_capacity(outputs.len());
    for (name, bytes) in &outputs {
        let mut w = BufWriter::new(fs::File::create(dir.join(name))?);
        w.write_all(bytes)?;
        w.flush()?;
        records.push(FileRecord { name: name.clone(), sha256: sha256_hex(bytes) });
    }
    let manifest = Manifest {
        seed: cfg.seed,
        config_sha256: sha256_hex(config_text.as_bytes()),
        c2_rad_per_nm2: report.c2_rad_per_nm2,
        files: records.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_eq!(hex(&[0, 15, 255]), "000fff");
    }

    #[test]
    fn csv_headers() {
        let c = FringeCurve::new(vec![(0.0, 0.5)]);
        assert_eq!(fringe_csv(&c), "theta_rad,probability\n0,0.5\n");
    }
}
