use std::f64::consts::{FRAC_PI_4, PI};

use thiserror::Error;

use crate::detection::{fringe_scan, visibility, DetectionError};
use crate::source::{sagnac_state, PhaseProfile, SourceConfig, SourceError};

/// Calibration stops once `|V_AD − target|` is below this.
pub const SEARCH_TOL: f64 = 1e-4;
/// Largest acceptable miss; targets closer than this to `V_AD(0)` return 0.
pub const ACCEPT_TOL: f64 = 0.005;

const MAX_BRACKET_STEPS: usize = 256;
const MAX_BISECTIONS: usize = 80;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("target visibility {0} is not in (0, 1]")]
    InvalidTarget(f64),
    #[error("target {target} is unreachable; attainable range is [{floor}, {ceiling}]")]
    Unreachable { target: f64, floor: f64, ceiling: f64 },
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Quadratic dispersion coefficient in rad/nm².
    pub c2: f64,
    /// A/D visibility reached at `c2`.
    pub v_ad: f64,
    pub evaluations: usize,
}

/// A/D fringe visibility of the post-selected state with the phase profile
/// replaced by `c2·(λ − 810)²`.
pub fn v_ad_at(base: &SourceConfig, c2: f64, steps: usize) -> Result<f64, CalibrationError> {
    let cfg = SourceConfig { phase_profile: PhaseProfile::quadratic(c2), ..base.clone() };
    let Some(state) = sagnac_state(&cfg)?.conditional else {
        return Ok(0.0);
    };
    Ok(visibility(&fringe_scan(&state, FRAC_PI_4, steps)?)?)
}

/// Finds the smallest `c2 ≥ 0` whose A/D visibility equals `target`.
///
/// `c2` is stepped upward from zero until the visibility crosses the
/// target, then the bracket is bisected. If the visibility bottoms out
/// first the target is reported unreachable.
pub fn calibrate_dispersion(target: f64, base: &SourceConfig, steps: usize) -> Result<Calibration, CalibrationError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(CalibrationError::InvalidTarget(target));
    }
    let mut evaluations = 1;
    let v0 = v_ad_at(base, 0.0, steps)?;
    if (v0 - target).abs() <= ACCEPT_TOL {
        return Ok(Calibration { c2: 0.0, v_ad: v0, evaluations });
    }
    if target > v0 {
        return Err(CalibrationError::Unreachable { target, floor: 0.0, ceiling: v0 });
    }

    let span = max_detuning_nm(base);
    // Phase at the band edge advances by π/8 per step.
    let h = PI / (8.0 * span * span);
    let (mut lo, mut hi) = (0.0, f64::NAN);
    let mut prev = v0;
    for j in 1..=MAX_BRACKET_STEPS {
        let c = j as f64 * h;
        let v = v_ad_at(base, c, steps)?;
        evaluations += 1;
        if v <= target {
            hi = c;
            break;
        }
        if v > prev {
            return Err(CalibrationError::Unreachable { target, floor: prev, ceiling: v0 });
        }
        lo = c;
        prev = v;
    }
    if hi.is_nan() {
        return Err(CalibrationError::Unreachable { target, floor: prev, ceiling: v0 });
    }

    let mut best = (hi, f64::NAN);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let v = v_ad_at(base, mid, steps)?;
        evaluations += 1;
        best = (mid, v);
        if (v - target).abs() <= SEARCH_TOL {
            break;
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration { c2: best.0, v_ad: best.1, evaluations })
}

/// Largest |λ − 810 nm| over bins that carry amplitude, at least one bin width.
fn max_detuning_nm(cfg: &SourceConfig) -> f64 {
    let env = &cfg.envelope_c1;
    let reach = (0..env.bins())
        .filter(|&k| env.amplitudes()[k].norm() > 0.0 || cfg.envelope_c2.amplitudes()[k].norm() > 0.0)
        .map(|k| (env.wavelength(k) - crate::source::PAIR_CENTER_NM).abs())
        .fold(0.0, f64::max);
    reach.max(env.bin_width_nm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::SpectralEnvelope;

    #[test]
    fn target_one_needs_no_dispersion() {
        let base = SourceConfig::with_envelope(SpectralEnvelope::gaussian(20.0).unwrap());
        let c = calibrate_dispersion(1.0, &base, 16).unwrap();
        assert_eq!(c.c2, 0.0);
        let c = calibrate_dispersion(0.999, &SourceConfig::ideal(), 16).unwrap();
        assert_eq!(c.c2, 0.0);
    }

    #[test]
    fn broadband_target_is_reached() {
        let base = SourceConfig::with_envelope(SpectralEnvelope::gaussian(20.0).unwrap());
        let c = calibrate_dispersion(0.78, &base, 16).unwrap();
        assert!(c.c2 > 0.0);
        assert!((c.v_ad - 0.78).abs() <= SEARCH_TOL);
        assert!((v_ad_at(&base, c.c2, 16).unwrap() - 0.78).abs() <= ACCEPT_TOL);
    }

    #[test]
    fn single_bin_cannot_lose_visibility() {
        let err = calibrate_dispersion(0.5, &SourceConfig::ideal(), 16).unwrap_err();
        assert!(matches!(err, CalibrationError::Unreachable { .. }));
    }

    #[test]
    fn unreachable_above_ceiling_and_invalid_targets() {
        let base = SourceConfig { cw_ccw_delay_fs: 1000.0, ..SourceConfig::ideal() };
        assert!(matches!(calibrate_dispersion(0.99, &base, 16), Err(CalibrationError::Unreachable { .. })));
        assert_eq!(calibrate_dispersion(0.0, &base, 16), Err(CalibrationError::InvalidTarget(0.0)));
        assert_eq!(calibrate_dispersion(1.5, &base, 16), Err(CalibrationError::InvalidTarget(1.5)));
    }
}
