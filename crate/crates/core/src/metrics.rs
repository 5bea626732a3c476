//! Entanglement bounds, brightness figures and stability statistics.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("{name} must be positive, got {value}")]
    NonpositivePower { name: &'static str, value: f64 },
    #[error("rate {name} = {value} is negative or not finite")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("pair rate exceeds both singles rates")]
    RateInconsistent,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample timestamps must be strictly increasing (index {0})")]
    NonIncreasingTime(usize),
}

fn unit_interval(name: &'static str, value: f64) -> Result<f64, MetricsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(MetricsError::OutOfRange { name, value })
    }
}

/// Lower bound on the Bell-state fidelity from the H/V and A/D fringe
/// visibilities, `(V_HV + V_AD)/2`.
pub fn fidelity_bound(v_hv: f64, v_ad: f64) -> Result<f64, MetricsError> {
    Ok((unit_interval("v_hv", v_hv)? + unit_interval("v_ad", v_ad)?) / 2.0)
}

/// Concurrence lower bound `max(0, 2F − 1)`.
pub fn concurrence_bound(fidelity: f64) -> Result<f64, MetricsError> {
    Ok((2.0 * unit_interval("fidelity", fidelity)? - 1.0).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    /// Pair rate per pump power, cps/mW.
    pub pair_rate_norm: f64,
    /// cps/mW/nm.
    pub spectral_brightness: f64,
    /// `R_c / max(R_s, R_i)`.
    pub heralding: f64,
    /// `R_c / √(R_s·R_i)`.
    pub heralding_symmetric: f64,
}

pub fn rate_metrics(
    pair_rate_cps: f64,
    rate_signal_cps: f64,
    rate_idler_cps: f64,
    pump_power_mw: f64,
    bandwidth_nm: f64,
) -> Result<RateReport, MetricsError> {
    for (name, value) in [("pump_power_mw", pump_power_mw), ("bandwidth_nm", bandwidth_nm)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(MetricsError::NonpositivePower { name, value });
        }
    }
    for (name, value) in [("R_c", pair_rate_cps), ("R_s", rate_signal_cps), ("R_i", rate_idler_cps)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(MetricsError::InvalidRate { name, value });
        }
    }
    let max_singles = rate_signal_cps.max(rate_idler_cps);
    if pair_rate_cps > max_singles {
        return Err(MetricsError::RateInconsistent);
    }
    let ratio = |den: f64| if pair_rate_cps == 0.0 { 0.0 } else { pair_rate_cps / den };
    let pair_rate_norm = pair_rate_cps / pump_power_mw;
    Ok(RateReport {
        pair_rate_norm,
        spectral_brightness: pair_rate_norm / bandwidth_nm,
        heralding: ratio(max_singles),
        heralding_symmetric: ratio((rate_signal_cps * rate_idler_cps).sqrt()).min(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySample {
    pub time_s: f64,
    pub coincidences: f64,
    pub v_ad_correlated: f64,
    pub v_ad_anticorrelated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySeries {
    samples: Vec<StabilitySample>,
}

impl StabilitySeries {
    pub fn new(samples: Vec<StabilitySample>) -> Result<Self, MetricsError> {
        if let Some(i) = samples.windows(2).position(|w| w[1].time_s <= w[0].time_s) {
            return Err(MetricsError::NonIncreasingTime(i + 1));
        }
        Ok(StabilitySeries { samples })
    }

    pub fn samples(&self) -> &[StabilitySample] {
        &self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_dev: f64,
    /// Least-squares slope per second.
    pub slope_per_s: f64,
}

impl ColumnStats {
    pub fn drift_per_hour(&self) -> f64 {
        self.slope_per_s * 3600.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySummary {
    pub coincidences: ColumnStats,
    pub v_ad_correlated: ColumnStats,
    pub v_ad_anticorrelated: ColumnStats,
}

fn column_stats(t: &[f64], y: &[f64]) -> ColumnStats {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let t_mean = t.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - t_mean) * (b - mean)).sum();
    let sxx: f64 = t.iter().map(|a| (a - t_mean).powi(2)).sum();
    ColumnStats { mean, std_dev: var.sqrt(), slope_per_s: sxy / sxx }
}

pub fn stability_stats(series: &StabilitySeries) -> Result<StabilitySummary, MetricsError> {
    let s = series.samples();
    if s.len() < 2 {
        return Err(MetricsError::TooFewSamples(s.len()));
    }
    let t: Vec<f64> = s.iter().map(|x| x.time_s).collect();
    let col = |f: fn(&StabilitySample) -> f64| column_stats(&t, &s.iter().map(f).collect::<Vec<_>>());
    Ok(StabilitySummary {
        coincidences: col(|x| x.coincidences),
        v_ad_correlated: col(|x| x.v_ad_correlated),
        v_ad_anticorrelated: col(|x| x.v_ad_anticorrelated),
    })
}
