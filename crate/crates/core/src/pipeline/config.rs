use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::DetectionConfig;
use crate::source::{
    EnvelopeShape, PhaseProfile, SourceConfig, SourceError, SourceMetadata, SpectralEnvelope, DEFAULT_BINS,
    DEFAULT_BIN_WIDTH_NM, DEFAULT_COHERENCE_TIME_FS, DEFAULT_FWHM_NM, PAIR_CENTER_NM,
};
use crate::Error;

/// Complete description of a run. Every physical quantity carries its unit
/// in the key name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub source: SourceSection,
    pub detection: DetectionSection,
    pub scan: ScanSection,
    pub reproduce: ReproduceSection,
    pub outputs: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 2018,
            source: SourceSection::default(),
            detection: DetectionSection::default(),
            scan: ScanSection::default(),
            reproduce: ReproduceSection::default(),
            outputs: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    Gaussian,
    Sinc2,
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub phi_rad: f64,
    pub envelope: EnvelopeKind,
    pub fwhm_nm: f64,
    pub bins: usize,
    pub bin_width_nm: f64,
    pub center_nm: f64,
    /// Optional rectangular band-pass applied by `simulate`.
    pub filter_nm: Option<f64>,
    pub crystal_delay_fs: f64,
    pub cw_ccw_delay_fs: f64,
    pub coherence_time_fs: f64,
    /// `φ(λ) = Σ cₙ (λ − 810 nm)ⁿ`, units rad/nmⁿ.
    pub phase_coeffs: Vec<f64>,
    pub metadata: MetadataSection,
}

impl Default for SourceSection {
    fn default() -> Self {
        SourceSection {
            phi_rad: PI,
            envelope: EnvelopeKind::Gaussian,
            fwhm_nm: DEFAULT_FWHM_NM,
            bins: DEFAULT_BINS,
            bin_width_nm: DEFAULT_BIN_WIDTH_NM,
            center_nm: PAIR_CENTER_NM,
            filter_nm: None,
            crystal_delay_fs: 0.0,
            cw_ccw_delay_fs: 0.0,
            coherence_time_fs: DEFAULT_COHERENCE_TIME_FS,
            phase_coeffs: vec![0.0, 0.0, 0.0],
            metadata: MetadataSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetadataSection {
    pub pump_wavelength_nm: f64,
    pub pair_center_nm: f64,
    pub crystal_length_mm: f64,
    pub temperature_c: f64,
}

impl Default for MetadataSection {
    fn default() -> Self {
        let m = SourceMetadata::default();
        MetadataSection {
            pump_wavelength_nm: m.pump_wavelength_nm,
            pair_center_nm: m.pair_center_nm,
            crystal_length_mm: m.crystal_length_mm,
            temperature_c: m.temperature_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    pub coincidence_window_ns: f64,
    pub pair_rate_cps: f64,
    pub signal_rate_cps: f64,
    pub idler_rate_cps: f64,
    pub jitter_ps: f64,
    /// Length of the unpolarised rate measurement.
    pub duration_s: f64,
    pub pump_power_mw: f64,
}

impl Default for DetectionSection {
    fn default() -> Self {
        let d = DetectionConfig::default();
        DetectionSection {
            coincidence_window_ns: d.coincidence_window_ns,
            pair_rate_cps: d.pair_rate_cps,
            signal_rate_cps: d.rate_signal_cps,
            idler_rate_cps: d.rate_idler_cps,
            jitter_ps: d.jitter_ps,
            duration_s: d.duration_s,
            pump_power_mw: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub steps: usize,
    /// Acquisition time per polariser setting in synthetic scans.
    pub point_duration_s: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { steps: 16, point_duration_s: 0.2 }
    }
}

/// Settings used only by the full reproduction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceSection {
    /// Search the quadratic dispersion coefficient before running.
    pub calibrate: bool,
    pub target_v_ad: f64,
    pub narrow_filter_nm: f64,
    pub broadband_pair_rate_cps: f64,
    pub broadband_signal_rate_cps: f64,
    pub broadband_idler_rate_cps: f64,
    pub stability_blocks: usize,
    pub stability_interval_s: f64,
    pub stability_block_s: f64,
}

impl Default for ReproduceSection {
    fn default() -> Self {
        ReproduceSection {
            calibrate: true,
            target_v_ad: 0.78,
            narrow_filter_nm: 3.0,
            broadband_pair_rate_cps: 107_000.0,
            broadband_signal_rate_cps: 575_000.0,
            broadband_idler_rate_cps: 575_000.0,
            stability_blocks: 20,
            stability_interval_s: 60.0,
            stability_block_s: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        // Unreadable files are I/O failures; unparsable ones are config errors.
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    /// Structural checks that belong to the file rather than the physics.
    pub fn check(&self) -> Result<(), Error> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.scan.steps < 8 {
            return cfg_err(format!("scan.steps must be at least 8, got {}", self.scan.steps));
        }
        if self.source.bins == 0 {
            return cfg_err("source.bins must be positive".into());
        }
        if !(self.scan.point_duration_s > 0.0) {
            return cfg_err("scan.point_duration_s must be positive".into());
        }
        if !(self.detection.pump_power_mw > 0.0) {
            return cfg_err("detection.pump_power_mw must be positive".into());
        }
        Ok(())
    }

    /// Unfiltered source described by the `[source]` table.
    pub fn source_config(&self) -> Result<SourceConfig, SourceError> {
        let s = &self.source;
        let envelope = match s.envelope {
            EnvelopeKind::Single => SpectralEnvelope::single_bin(s.center_nm),
            EnvelopeKind::Gaussian => {
                SpectralEnvelope::shaped(EnvelopeShape::Gaussian, s.center_nm, s.fwhm_nm, s.bins, s.bin_width_nm)?
            }
            EnvelopeKind::Sinc2 => {
                SpectralEnvelope::shaped(EnvelopeShape::Sinc2, s.center_nm, s.fwhm_nm, s.bins, s.bin_width_nm)?
            }
        };
        let cfg = SourceConfig {
            phi: s.phi_rad,
            envelope_c1: envelope.clone(),
            envelope_c2: envelope,
            cw_ccw_delay_fs: s.cw_ccw_delay_fs,
            crystal_delay_fs: s.crystal_delay_fs,
            coherence_time_fs: s.coherence_time_fs,
            phase_profile: PhaseProfile { coeffs: s.phase_coeffs.clone() },
            metadata: SourceMetadata {
                pump_wavelength_nm: s.metadata.pump_wavelength_nm,
                pair_center_nm: s.metadata.pair_center_nm,
                crystal_length_mm: s.metadata.crystal_length_mm,
                temperature_c: s.metadata.temperature_c,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Source with the optional `filter_nm` applied.
    pub fn filtered_source_config(&self) -> Result<SourceConfig, SourceError> {
        let cfg = self.source_config()?;
        match self.source.filter_nm {
            Some(w) => cfg.filtered(w),
            None => Ok(cfg),
        }
    }

    /// Detector settings at the narrowband operating point.
    pub fn detection_config(&self) -> DetectionConfig {
        let d = &self.detection;
        DetectionConfig {
            coincidence_window_ns: d.coincidence_window_ns,
            rate_signal_cps: d.signal_rate_cps,
            rate_idler_cps: d.idler_rate_cps,
            pair_rate_cps: d.pair_rate_cps,
            jitter_ps: d.jitter_ps,
            duration_s: d.duration_s,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = RunConfig::from_toml("seed = 5\n[detection]\ncoincidence_window_ns = 2.0\n").unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.detection.coincidence_window_ns, 2.0);
        assert_eq!(cfg.detection.pair_rate_cps, 16_000.0);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = RunConfig::from_toml("[detection]\nwindow = 3\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::from_toml("[scan]\nsteps = 4\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn metadata_does_not_touch_the_physics() {
        let mut a = RunConfig::default();
        let b = a.clone();
        a.source.metadata.temperature_c = -40.0;
        a.source.metadata.crystal_length_mm = 1.0;
        let sa = crate::source::sagnac_state(&a.source_config().unwrap()).unwrap();
        let sb = crate::source::sagnac_state(&b.source_config().unwrap()).unwrap();
        assert_eq!(sa, sb);
    }
}
