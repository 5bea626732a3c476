//! Few-photon simulation of a crossed-crystal polarisation-Sagnac source of
//! entangled photon pairs, together with the detection chain and figures of
//! merit used to characterise it.
//!
//! The crate is layered bottom-up:
//!
//! * [`fock`]: creation-operator polynomials and sparse Fock states.
//! * [`optics`]: unitary mode maps for waveplates and beam splitters.
//! * [`source`]: crossed-crystal pair emission and the Sagnac superposition.
//! * [`detection`]: polariser projections, fringe scans, synthetic time
//!   tags and the coincidence correlator.
//! * [`metrics`]: fidelity/concurrence bounds, brightness and stability.
//! * [`pipeline`]: config-driven end-to-end runs and dispersion calibration.

pub mod detection;
pub mod fock;
pub mod metrics;
pub mod optics;
pub mod pipeline;
pub mod source;

pub use num_complex::Complex64;

pub use detection::{
    coincidence_probability, correlate_window, fringe_scan, generate_timetags, visibility, Channel,
    DetectionConfig, DetectionError, FringeCurve, PolarizerSetting, Tag, TagStream,
};
pub use fock::{
    AlgebraError, CreationMonomial, FockKet, KetPattern, ModeLabel, OperatorPoly, Pol, Port, PortMode,
    StateVector,
};
pub use metrics::{concurrence_bound, fidelity_bound, rate_metrics, MetricsError, RateReport};
pub use optics::{bs_map, compose, pbs_map, waveplate_map, ModeMap, OpticsError};
pub use pipeline::{calibrate_dispersion, run_experiment, CalibrationError, RunConfig, RunReport};
pub use source::{
    crossed_crystal_poly, sagnac_state, temporal_overlap, SagnacState, SourceConfig, SourceError,
    SpectralEnvelope,
};

use thiserror::Error;

/// Any failure of the toolkit, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fock algebra: {0}")]
    Algebra(#[from] AlgebraError),
    #[error("optics: {0}")]
    Optics(#[from] OpticsError),
    #[error("source: {0}")]
    Source(#[from] SourceError),
    #[error("detection: {0}")]
    Detection(#[from] DetectionError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("calibration: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("config: {0}")]
    Config(String),
    #[error("tag file: {0}")]
    Ttag(#[from] detection::ttag::TtagError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 config, 3 domain, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Ttag(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
