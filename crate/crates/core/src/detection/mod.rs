//! Polarisation-resolved measurement of simulated states, synthetic time
//! tags and the windowed coincidence correlator.

mod correlator;
mod timetags;
pub mod ttag;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{AlgebraError, Pol, Port, StateVector};

pub use correlator::{
    accidentals, correlate_window, correlate_window_chunked, correlate_window_with_bins, subtract_accidentals,
    Correlation, DelayHistogram, DEFAULT_HIST_BIN_PS,
};
pub use timetags::{generate_timetags, Channel, DetectionConfig, Tag, TagStream, MAX_DURATION_S};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error("state is not a two-photon state with one photon per output port")]
    NotTwoPhoton,
    #[error("fringe scan needs at least 8 steps, got {0}")]
    TooFewSteps(usize),
    #[error("curve is empty or identically zero")]
    DegenerateCurve,
    #[error("curve contains a negative or non-finite value")]
    InvalidCurve,
    #[error("pair rate {pair} cps exceeds the singles rates")]
    RateInconsistent { pair: f64 },
    #[error("invalid detection parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("tag stream is not time ordered at index {0}")]
    UnsortedStream(usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    HV,
    AD,
    Custom,
}

/// Linear polariser angles (from H) in front of the detectors on ports 1′
/// and 2′.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizerSetting {
    pub theta1: f64,
    pub theta2: f64,
    pub basis: Basis,
}

impl PolarizerSetting {
    pub fn custom(theta1: f64, theta2: f64) -> Self {
        PolarizerSetting { theta1, theta2, basis: Basis::Custom }
    }

    /// Fixed angle on port 1′ for a basis: 0 for H/V, π/4 for A/D.
    pub fn basis_angle(basis: Basis) -> f64 {
        match basis {
            Basis::HV | Basis::Custom => 0.0,
            Basis::AD => FRAC_PI_4,
        }
    }

    /// Correlated (`anti = false`) or anti-correlated setting in a basis.
    pub fn in_basis(basis: Basis, anti: bool) -> Self {
        let t = Self::basis_angle(basis);
        PolarizerSetting { theta1: t, theta2: if anti { t + FRAC_PI_2 } else { t }, basis }
    }
}

fn transmission(theta: f64, pol: Pol) -> f64 {
    match pol {
        Pol::H => theta.cos(),
        Pol::V => theta.sin(),
    }
}

/// Probability that the 1′ photon passes a polariser at `θ₁` and the 2′
/// photon passes one at `θ₂`, summed over all bin combinations.
pub fn coincidence_probability(s: &StateVector, set: &PolarizerSetting) -> Result<f64, DetectionError> {
    s.ensure_normalized()?;
    let mut amps: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
    for (ket, a) in s.iter() {
        let mut first = None;
        let mut second = None;
        for (mode, n) in ket.occupations() {
            let slot = match mode.port {
                Port::OUT1 => &mut first,
                Port::OUT2 => &mut second,
                _ => return Err(DetectionError::NotTwoPhoton),
            };
            if *n != 1 || slot.is_some() {
                return Err(DetectionError::NotTwoPhoton);
            }
            *slot = Some(*mode);
        }
        let (Some(m1), Some(m2)) = (first, second) else {
            return Err(DetectionError::NotTwoPhoton);
        };
        let w = transmission(set.theta1, m1.pol) * transmission(set.theta2, m2.pol);
        *amps.entry((m1.bin, m2.bin)).or_default() += a * w;
    }
    let p: f64 = amps.values().map(Complex64::norm_sqr).sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Probability that the photon in `port` passes a polariser at `theta`,
/// marginalised over the partner photon.
pub fn single_pass_probability(s: &StateVector, port: Port, theta: f64) -> Result<f64, DetectionError> {
    let (a, b) = match port {
        Port::OUT1 => (
            PolarizerSetting::custom(theta, 0.0),
            PolarizerSetting::custom(theta, FRAC_PI_2),
        ),
        Port::OUT2 => (
            PolarizerSetting::custom(0.0, theta),
            PolarizerSetting::custom(FRAC_PI_2, theta),
        ),
        _ => return Err(DetectionError::NotTwoPhoton),
    };
    Ok(coincidence_probability(s, &a)? + coincidence_probability(s, &b)?)
}

/// Sampled fringe `(θ, value)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FringeCurve {
    pub points: Vec<(f64, f64)>,
}

impl FringeCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        FringeCurve { points }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|(_, p)| *p)
    }

    pub fn raw_max(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn raw_min(&self) -> f64 {
        self.values().fold(f64::INFINITY, f64::min)
    }
}

/// Scans `θ₂` over one period `[0, π)` in `steps` uniform steps.
pub fn fringe_scan(s: &StateVector, fixed_theta1: f64, steps: usize) -> Result<FringeCurve, DetectionError> {
    if steps < 8 {
        return Err(DetectionError::TooFewSteps(steps));
    }
    scan_angles(steps)
        .map(|theta2| {
            coincidence_probability(s, &PolarizerSetting::custom(fixed_theta1, theta2)).map(|p| (theta2, p))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(FringeCurve::new)
}

pub fn scan_angles(steps: usize) -> impl Iterator<Item = f64> {
    (0..steps).map(move |j| j as f64 * PI / steps as f64)
}

/// Sinusoid `mean + a·cos 2θ + b·sin 2θ` fitted by least squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub mean: f64,
    pub amplitude: f64,
    /// Angle of the fringe maximum in `[0, π)`.
    pub phase: f64,
}

impl SinusoidFit {
    pub fn max(&self) -> f64 {
        self.mean + self.amplitude
    }

    pub fn min(&self) -> f64 {
        (self.mean - self.amplitude).max(0.0)
    }
}

pub fn fit_sinusoid(curve: &FringeCurve) -> Option<SinusoidFit> {
    if curve.points.len() < 3 {
        return None;
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for &(theta, p) in &curve.points {
        let row = Vector3::new(1.0, (2.0 * theta).cos(), (2.0 * theta).sin());
        ata += row * row.transpose();
        atb += row * p;
    }
    let x = ata.lu().solve(&atb)?;
    let amplitude = x[1].hypot(x[2]);
    let phase = (x[2].atan2(x[1]) / 2.0).rem_euclid(PI);
    Some(SinusoidFit { mean: x[0], amplitude, phase })
}

/// Fringe visibility `(max − min)/(max + min)` from the fitted sinusoid,
/// falling back to raw extrema when a fit is not possible.
pub fn visibility(curve: &FringeCurve) -> Result<f64, DetectionError> {
    check_curve(curve)?;
    match fit_sinusoid(curve) {
        Some(fit) if fit.mean > 0.0 => {
            let (max, min) = (fit.max(), fit.min());
            Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
        }
        Some(_) => Err(DetectionError::DegenerateCurve),
        None => raw_visibility(curve),
    }
}

/// Visibility from the raw sample extrema.
pub fn raw_visibility(curve: &FringeCurve) -> Result<f64, DetectionError> {
    check_curve(curve)?;
    let (max, min) = (curve.raw_max(), curve.raw_min());
    Ok((max - min) / (max + min))
}

fn check_curve(curve: &FringeCurve) -> Result<(), DetectionError> {
    if curve.points.iter().any(|(t, p)| !t.is_finite() || !p.is_finite() || *p < 0.0) {
        return Err(DetectionError::InvalidCurve);
    }
    if curve.points.iter().all(|(_, p)| *p == 0.0) {
        return Err(DetectionError::DegenerateCurve);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{psi_plus, sagnac_state, SourceConfig};

    #[test]
    fn psi_plus_fixed_points() {
        let s = psi_plus();
        let p = |a, b| coincidence_probability(&s, &PolarizerSetting::custom(a, b)).unwrap();
        assert!(p(0.0, 0.0).abs() < 1e-15);
        assert!((p(0.0, FRAC_PI_2) - 0.5).abs() < 1e-15);
        assert!((p(FRAC_PI_4, FRAC_PI_4) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn marginals_of_psi_plus_are_unpolarized() {
        let s = psi_plus();
        for theta in [0.0, 0.3, FRAC_PI_4, 2.0] {
            assert!((single_pass_probability(&s, Port::OUT1, theta).unwrap() - 0.5).abs() < 1e-12);
            assert!((single_pass_probability(&s, Port::OUT2, theta).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn bunched_state_is_not_two_photon() {
        let cfg = SourceConfig { crystal_delay_fs: 1e6, ..SourceConfig::ideal() };
        let full = sagnac_state(&cfg).unwrap().full;
        assert_eq!(
            coincidence_probability(&full, &PolarizerSetting::custom(0.0, 0.0)),
            Err(DetectionError::NotTwoPhoton)
        );
    }

    #[test]
    fn ideal_fringe_is_full_contrast() {
        let curve = fringe_scan(&psi_plus(), 0.0, 16).unwrap();
        assert_eq!(curve.points.len(), 16);
        assert!(curve.raw_min().abs() < 1e-15);
        assert!((curve.raw_max() - 0.5).abs() < 1e-15);
        assert!((visibility(&curve).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fringe_scan(&psi_plus(), 0.0, 7), Err(DetectionError::TooFewSteps(7)));
    }

    #[test]
    fn dephased_directions_give_flat_diagonal_fringe() {
        let cfg = SourceConfig { cw_ccw_delay_fs: 1e6, ..SourceConfig::ideal() };
        let st = sagnac_state(&cfg).unwrap();
        let s = st.conditional.unwrap();
        let ad = fringe_scan(&s, FRAC_PI_4, 16).unwrap();
        assert!((ad.raw_max() - ad.raw_min()).abs() < 1e-12);
        assert!(visibility(&ad).unwrap() < 1e-12);
        let hv = fringe_scan(&s, 0.0, 16).unwrap();
        assert!((visibility(&hv).unwrap() - 1.0).abs() < 1e-12);
    }

    fn sinusoid(min: f64, max: f64, steps: usize) -> FringeCurve {
        let mid = (max + min) / 2.0;
        let amp = (max - min) / 2.0;
        FringeCurve::new(scan_angles(steps).map(|t| (t, mid + amp * (2.0 * t).cos())).collect())
    }

    #[test]
    fn visibility_is_scale_invariant() {
        for k in [1.0, 3.7, 1e4] {
            let v = visibility(&sinusoid(0.00176 * k, 0.498 * k, 16)).unwrap();
            assert!((v - 0.993).abs() < 5e-4, "{v}");
        }
        assert!((visibility(&sinusoid(0.0, 0.5, 16)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_and_zero_curves() {
        let flat = FringeCurve::new(scan_angles(10).map(|t| (t, 0.3)).collect());
        assert!(visibility(&flat).unwrap() < 1e-12);
        let zero = FringeCurve::new(scan_angles(10).map(|t| (t, 0.0)).collect());
        assert_eq!(visibility(&zero), Err(DetectionError::DegenerateCurve));
        assert_eq!(visibility(&FringeCurve::default()), Err(DetectionError::DegenerateCurve));
    }

    #[test]
    fn short_curves_use_raw_extrema() {
        let c = FringeCurve::new(vec![(0.0, 1.0), (1.0, 3.0)]);
        assert!((visibility(&c).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_phase() {
        let curve = FringeCurve::new(scan_angles(12).map(|t| (t, 1.0 + 0.5 * (2.0 * (t - 0.4)).cos())).collect());
        let fit = fit_sinusoid(&curve).unwrap();
        assert!((fit.phase - 0.4).abs() < 1e-12);
        assert!((fit.amplitude - 0.5).abs() < 1e-12);
    }
}
