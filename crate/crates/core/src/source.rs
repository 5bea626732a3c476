//! Crossed-crystal pair emission inside a bidirectionally pumped Sagnac loop.
//!
//! Each propagation direction emits one pair, either two diagonal photons
//! (crystal 1) or two anti-diagonal photons (crystal 2), with relative phase
//! `φ`. The clockwise pair enters the PBS through port 1, the
//! counter-clockwise pair through port 2.
//!
//! Both photons of a pair carry one joint bin label. A joint bin combines
//! the spectral bin `k` of the signal (the idler sits at the mirrored
//! wavelength) with two binary temporal labels: which crystal emitted the
//! pair and which direction it travelled. Partially distinguishable
//! emissions are written as superpositions over those labels, with pair
//! overlap `γ²` for a per-photon overlap `γ`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fock::{AlgebraError, KetPattern, ModeLabel, OperatorPoly, Pol, Port, StateVector};
use crate::optics::{pbs_map, ModeMap, OpticsError};

/// Centre wavelength of the degenerate pairs.
pub const PAIR_CENTER_NM: f64 = 810.0;
/// Default spectral grid: 41 bins of 1 nm across ±20 nm.
pub const DEFAULT_BINS: usize = 41;
pub const DEFAULT_BIN_WIDTH_NM: f64 = 1.0;
pub const DEFAULT_FWHM_NM: f64 = 20.0;
pub const DEFAULT_COHERENCE_TIME_FS: f64 = 1000.0;

const ENVELOPE_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error("spectral envelope has no bins")]
    EmptyEnvelope,
    #[error("spectral envelope is not normalised (Σ|a|² = {0})")]
    EnvelopeNotNormalized(f64),
    #[error("crystal envelopes do not share one bin grid")]
    GridMismatch,
    #[error("coherence time must be positive, got {0} fs")]
    NonpositiveCoherence(f64),
    #[error("non-finite source parameter {0}")]
    NonFinite(&'static str),
    #[error("filter passes no spectral bin")]
    FilterBlocksAll,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeShape {
    Gaussian,
    Sinc2,
}

/// Discretised single-pair spectral amplitude on a uniform wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEnvelope {
    amplitudes: Vec<Complex64>,
    bin_width_nm: f64,
    center_nm: f64,
}

impl SpectralEnvelope {
    pub fn new(amplitudes: Vec<Complex64>, bin_width_nm: f64, center_nm: f64) -> Result<Self, SourceError> {
        if amplitudes.is_empty() {
            return Err(SourceError::EmptyEnvelope);
        }
        if !(bin_width_nm.is_finite() && bin_width_nm > 0.0) {
            return Err(SourceError::NonFinite("bin_width_nm"));
        }
        if !center_nm.is_finite() {
            return Err(SourceError::NonFinite("center_nm"));
        }
        let env = SpectralEnvelope { amplitudes, bin_width_nm, center_nm };
        env.validate()?;
        Ok(env)
    }

    /// Monochromatic limit.
    pub fn single_bin(center_nm: f64) -> Self {
        SpectralEnvelope {
            amplitudes: vec![Complex64::new(1.0, 0.0)],
            bin_width_nm: DEFAULT_BIN_WIDTH_NM,
            center_nm,
        }
    }

    /// Envelope whose intensity `|a|²` has the given shape and FWHM.
    pub fn shaped(
        shape: EnvelopeShape,
        center_nm: f64,
        fwhm_nm: f64,
        bins: usize,
        bin_width_nm: f64,
    ) -> Result<Self, SourceError> {
        if bins == 0 {
            return Err(SourceError::EmptyEnvelope);
        }
        if !(fwhm_nm.is_finite() && fwhm_nm > 0.0) {
            return Err(SourceError::NonFinite("fwhm_nm"));
        }
        let mid = (bins as f64 - 1.0) / 2.0;
        let intensity: Vec<f64> = (0..bins)
            .map(|k| {
                let d = (k as f64 - mid) * bin_width_nm;
                match shape {
                    EnvelopeShape::Gaussian => (-4.0 * std::f64::consts::LN_2 * d * d / (fwhm_nm * fwhm_nm)).exp(),
                    EnvelopeShape::Sinc2 => {
                        // sinc²(x) falls to one half at x ≈ 1.391557.
                        let x = 2.0 * 1.391_557_378_251_57 * d / fwhm_nm;
                        if x == 0.0 {
                            1.0
                        } else {
                            (x.sin() / x).powi(2)
                        }
                    }
                }
            })
            .collect();
        let total: f64 = intensity.iter().sum();
        let amplitudes = intensity.iter().map(|i| Complex64::new((i / total).sqrt(), 0.0)).collect();
        SpectralEnvelope::new(amplitudes, bin_width_nm, center_nm)
    }

    /// Gaussian envelope on the default 41 × 1 nm grid.
    pub fn gaussian(fwhm_nm: f64) -> Result<Self, SourceError> {
        Self::shaped(EnvelopeShape::Gaussian, PAIR_CENTER_NM, fwhm_nm, DEFAULT_BINS, DEFAULT_BIN_WIDTH_NM)
    }

    fn validate(&self) -> Result<(), SourceError> {
        let total: f64 = self.amplitudes.iter().map(Complex64::norm_sqr).sum();
        if (total - 1.0).abs() > ENVELOPE_NORM_TOL {
            return Err(SourceError::EnvelopeNotNormalized(total));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn bin_width_nm(&self) -> f64 {
        self.bin_width_nm
    }

    pub fn center_nm(&self) -> f64 {
        self.center_nm
    }

    /// Wavelength at the centre of bin `k`.
    pub fn wavelength(&self, k: usize) -> f64 {
        self.center_nm + (k as f64 - (self.bins() as f64 - 1.0) / 2.0) * self.bin_width_nm
    }

    pub fn same_grid(&self, other: &SpectralEnvelope) -> bool {
        self.bins() == other.bins()
            && self.bin_width_nm == other.bin_width_nm
            && self.center_nm == other.center_nm
    }

    /// Rectangular band-pass of full width `width_nm` around `center_nm`.
    /// Returns the renormalised envelope and the transmitted pair fraction.
    pub fn filtered(&self, center_nm: f64, width_nm: f64) -> Result<(Self, f64), SourceError> {
        let half = width_nm / 2.0 + 1e-9;
        let kept: Vec<Complex64> = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| if (self.wavelength(k) - center_nm).abs() <= half { *a } else { Complex64::default() })
            .collect();
        let passed: f64 = kept.iter().map(Complex64::norm_sqr).sum();
        if passed <= 0.0 {
            return Err(SourceError::FilterBlocksAll);
        }
        let norm = passed.sqrt();
        let env = SpectralEnvelope {
            amplitudes: kept.into_iter().map(|a| a / norm).collect(),
            bin_width_nm: self.bin_width_nm,
            center_nm: self.center_nm,
        };
        Ok((env, passed))
    }
}

/// Documentation-only description of the physical source. Nothing in the
/// simulation reads these values.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceMetadata {
    pub pump_wavelength_nm: f64,
    pub pair_center_nm: f64,
    pub crystal_length_mm: f64,
    pub temperature_c: f64,
}

impl Default for SourceMetadata {
    fn default() -> Self {
        SourceMetadata {
            pump_wavelength_nm: 405.0,
            pair_center_nm: PAIR_CENTER_NM,
            crystal_length_mm: 11.48,
            temperature_c: 107.0,
        }
    }
}

/// Wavelength-dependent phase between the two propagation directions,
/// `Σ cₙ (λ − 810 nm)ⁿ` in radians.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseProfile {
    pub coeffs: Vec<f64>,
}

impl PhaseProfile {
    pub fn quadratic(c2: f64) -> Self {
        PhaseProfile { coeffs: vec![0.0, 0.0, c2] }
    }

    pub fn at(&self, lambda_nm: f64) -> f64 {
        phase_profile(lambda_nm, &self.coeffs)
    }
}

pub fn phase_profile(lambda_nm: f64, coeffs: &[f64]) -> f64 {
    let d = lambda_nm - PAIR_CENTER_NM;
    coeffs.iter().rev().fold(0.0, |acc, c| acc * d + c)
}

/// Gaussian temporal mode overlap `exp(−τ²/(2 T_c²))` of one photon
/// displaced by `delay_fs`.
pub fn temporal_overlap(delay_fs: f64, coherence_time_fs: f64) -> Result<f64, SourceError> {
    if !(coherence_time_fs > 0.0) || !coherence_time_fs.is_finite() {
        return Err(SourceError::NonpositiveCoherence(coherence_time_fs));
    }
    if delay_fs.is_nan() {
        return Err(SourceError::NonFinite("delay_fs"));
    }
    Ok((-delay_fs * delay_fs / (2.0 * coherence_time_fs * coherence_time_fs)).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    /// Relative phase between the D-pair and A-pair emission amplitudes.
    pub phi: f64,
    /// Spectrum of pairs from crystal 1 (diagonal pairs).
    pub envelope_c1: SpectralEnvelope,
    /// Spectrum of pairs from crystal 2 (anti-diagonal pairs).
    pub envelope_c2: SpectralEnvelope,
    pub cw_ccw_delay_fs: f64,
    pub crystal_delay_fs: f64,
    pub coherence_time_fs: f64,
    /// Attached to the counter-clockwise arm, bin by bin.
    pub phase_profile: PhaseProfile,
    pub metadata: SourceMetadata,
}

impl SourceConfig {
    /// Single bin, `φ = π`, no delays, no dispersion.
    pub fn ideal() -> Self {
        let env = SpectralEnvelope::single_bin(PAIR_CENTER_NM);
        SourceConfig {
            phi: PI,
            envelope_c1: env.clone(),
            envelope_c2: env,
            cw_ccw_delay_fs: 0.0,
            crystal_delay_fs: 0.0,
            coherence_time_fs: DEFAULT_COHERENCE_TIME_FS,
            phase_profile: PhaseProfile::default(),
            metadata: SourceMetadata::default(),
        }
    }

    /// Same envelope for both crystals, otherwise ideal.
    pub fn with_envelope(envelope: SpectralEnvelope) -> Self {
        SourceConfig { envelope_c1: envelope.clone(), envelope_c2: envelope, ..Self::ideal() }
    }

    /// Applies the same rectangular filter to both crystal envelopes.
    pub fn filtered(&self, width_nm: f64) -> Result<Self, SourceError> {
        let center = self.envelope_c1.center_nm();
        let (c1, _) = self.envelope_c1.filtered(center, width_nm)?;
        let (c2, _) = self.envelope_c2.filtered(center, width_nm)?;
        Ok(SourceConfig { envelope_c1: c1, envelope_c2: c2, ..self.clone() })
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        self.envelope_c1.validate()?;
        self.envelope_c2.validate()?;
        if !self.envelope_c1.same_grid(&self.envelope_c2) {
            return Err(SourceError::GridMismatch);
        }
        for (name, x) in [
            ("phi", self.phi),
            ("cw_ccw_delay_fs", self.cw_ccw_delay_fs),
            ("crystal_delay_fs", self.crystal_delay_fs),
        ] {
            if !x.is_finite() {
                return Err(SourceError::NonFinite(name));
            }
        }
        if self.phase_profile.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SourceError::NonFinite("phase_profile"));
        }
        temporal_overlap(0.0, self.coherence_time_fs)?;
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.envelope_c1.bins()
    }

    /// Joint bin index for spectral bin `k`, crystal label and direction
    /// label (each 0 or 1).
    pub fn joint_bin(&self, k: usize, crystal: usize, direction: usize) -> u32 {
        (k + self.bins() * (crystal + 2 * direction)) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Cw,
    Ccw,
}

impl Direction {
    pub fn input_port(self) -> Port {
        match self {
            Direction::Cw => Port::IN1,
            Direction::Ccw => Port::IN2,
        }
    }
}

/// Amplitudes over a binary distinguishing label for a pair whose photons
/// each overlap the reference mode by `gamma`.
fn label_amplitudes(gamma: f64) -> [f64; 2] {
    let pair = gamma * gamma;
    [pair, (1.0 - pair * pair).max(0.0).sqrt()]
}

/// `((a†_D)² + e^{iφ}(a†_A)²)/2` for one direction, summed over spectral
/// bins and distinguishing labels. Applied to the vacuum it gives a unit
/// norm state.
pub fn crossed_crystal_poly(cfg: &SourceConfig, direction: Direction) -> Result<OperatorPoly, SourceError> {
    cfg.validate()?;
    let port = direction.input_port();
    let crystal = label_amplitudes(temporal_overlap(cfg.crystal_delay_fs, cfg.coherence_time_fs)?);
    let dir_amps = match direction {
        Direction::Cw => [1.0, 0.0],
        Direction::Ccw => label_amplitudes(temporal_overlap(cfg.cw_ccw_delay_fs, cfg.coherence_time_fs)?),
    };
    let e_phi = Complex64::from_polar(1.0, cfg.phi);
    let env1 = cfg.envelope_c1.amplitudes();
    let env2 = cfg.envelope_c2.amplitudes();

    let per_bin: Vec<OperatorPoly> = (0..cfg.bins())
        .into_par_iter()
        .map(|k| {
            let dispersion = match direction {
                Direction::Cw => Complex64::new(1.0, 0.0),
                Direction::Ccw => Complex64::from_polar(1.0, cfg.phase_profile.at(cfg.envelope_c1.wavelength(k))),
            };
            let mut poly = OperatorPoly::zero();
            for (d, &wd) in dir_amps.iter().enumerate() {
                if wd == 0.0 {
                    continue;
                }
                let d_pair = OperatorPoly::diagonal(port, cfg.joint_bin(k, 0, d)).pow(2);
                poly = poly.add(&d_pair.scale(env1[k] * wd));
                for (c, &wc) in crystal.iter().enumerate() {
                    if wc == 0.0 {
                        continue;
                    }
                    let a_pair = OperatorPoly::anti_diagonal(port, cfg.joint_bin(k, c, d)).pow(2);
                    poly = poly.add(&a_pair.scale(env2[k] * e_phi * wc * wd));
                }
            }
            poly.scale(dispersion * 0.5)
        })
        .collect();
    Ok(per_bin.iter().fold(OperatorPoly::zero(), |acc, p| acc.add(p)))
}

/// Balanced coherent sum of both directions before the PBS.
pub fn sagnac_poly(cfg: &SourceConfig) -> Result<OperatorPoly, SourceError> {
    let cw = crossed_crystal_poly(cfg, Direction::Cw)?;
    let ccw = crossed_crystal_poly(cfg, Direction::Ccw)?;
    Ok(cw.add(&ccw).scale(Complex64::new(FRAC_1_SQRT_2, 0.0)))
}

pub fn loop_pbs() -> Result<ModeMap, OpticsError> {
    pbs_map((Port::IN1, Port::IN2), (Port::OUT1, Port::OUT2))
}

/// Output of the Sagnac source after the PBS.
#[derive(Debug, Clone, PartialEq)]
pub struct SagnacState {
    /// Full two-photon state over ports 1′ and 2′.
    pub full: StateVector,
    /// Normalised projection on one photon per output port; `None` when the
    /// post-selection weight vanishes.
    pub conditional: Option<StateVector>,
    /// Anti-bunching probability.
    pub weight: f64,
}

const WEIGHT_FLOOR: f64 = 1e-12;

pub fn sagnac_state(cfg: &SourceConfig) -> Result<SagnacState, SourceError> {
    let poly = sagnac_poly(cfg)?;
    propagate_through_pbs(&poly)
}

/// Sends an arbitrary input polynomial over ports 1 and 2 through the loop
/// PBS and post-selects one photon per output port.
pub fn propagate_through_pbs(poly: &OperatorPoly) -> Result<SagnacState, SourceError> {
    let full = poly.substitute(&loop_pbs()?)?.apply_to_vacuum()?;
    let split = KetPattern::split_outputs();
    let kept = full.project(|k| split.matches(k));
    let weight = kept.norm_sqr();
    let conditional = if weight > WEIGHT_FLOOR { Some(kept.normalize()?) } else { None };
    Ok(SagnacState { full, conditional, weight })
}

/// `(|H₁′V₂′⟩ + |V₁′H₂′⟩)/√2` on bin 0.
pub fn psi_plus() -> StateVector {
    use crate::fock::FockKet;
    let m = |port, pol| ModeLabel::new(port, pol, 0);
    let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector::from_amplitudes([
        (FockKet::photons([m(Port::OUT1, Pol::H), m(Port::OUT2, Pol::V)]), a),
        (FockKet::photons([m(Port::OUT1, Pol::V), m(Port::OUT2, Pol::H)]), a),
    ])
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.inner_product(b).norm_sqr()
}
