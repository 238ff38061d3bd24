//! Transmon and Josephson-junction relations, the resistance-to-frequency
//! power-law correlation, and grouped frequency scatter.
//!
//! Energies are expressed as frequencies (E/h). Transmon energies are in GHz,
//! frequencies produced by the power-law fit are in GHz, and scatter figures
//! reported alongside them are in MHz.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Result};
use crate::scalar::{linear_fit, median, Real};

/// Smallest E_J/E_C ratio accepted as a transmon.
pub const MIN_TRANSMON_RATIO: f64 = 10.0;

/// Default superconducting gap of thin-film aluminium, µeV.
pub const DEFAULT_GAP_UEV: f64 = 180.0;

const RATIO_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams<T> {
    josephson_energy_ghz: T,
    charging_energy_ghz: T,
    anharmonicity_mhz: T,
}

impl<T: Real> TransmonParams<T> {
    pub fn new(josephson_energy_ghz: T, charging_energy_ghz: T, anharmonicity_mhz: T) -> Result<Self> {
        if !(josephson_energy_ghz > T::zero()) || !(charging_energy_ghz > T::zero()) {
            return Err(invalid_param("E_J and E_C must both be positive"));
        }
        let ratio = josephson_energy_ghz / charging_energy_ghz;
        if ratio < T::lit(MIN_TRANSMON_RATIO * (1.0 - RATIO_SLACK)) {
            return Err(invalid_param(format!(
                "E_J/E_C = {ratio} is below the transmon regime ({MIN_TRANSMON_RATIO})"
            )));
        }
        Ok(Self {
            josephson_energy_ghz,
            charging_energy_ghz,
            anharmonicity_mhz,
        })
    }

    pub fn josephson_energy_ghz(&self) -> T {
        self.josephson_energy_ghz
    }

    pub fn charging_energy_ghz(&self) -> T {
        self.charging_energy_ghz
    }

    pub fn anharmonicity_mhz(&self) -> T {
        self.anharmonicity_mhz
    }
}

/// Qubit 0→1 frequency in GHz: √(8·E_J·E_C) − E_C.
pub fn transmon_frequency<T: Real>(p: &TransmonParams<T>) -> T {
    (T::lit(8.0) * p.josephson_energy_ghz * p.charging_energy_ghz).sqrt() - p.charging_energy_ghz
}

/// Ambegaokar-Baratoff critical current, in nA, for a normal-state resistance
/// in Ω and a gap in µeV.
pub fn critical_current_from_resistance<T: Real>(resistance_ohm: T, gap_uev: T) -> Result<T> {
    if !(resistance_ohm > T::zero()) || !(gap_uev > T::zero()) {
        return Err(invalid_param("resistance and gap must both be positive"));
    }
    // Δ/e in volts is gap_uev·1e-6; the result in nA picks up 1e9.
    Ok(T::lit(std::f64::consts::PI) * gap_uev * T::lit(1e3) / (T::lit(2.0) * resistance_ohm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionParams<T> {
    normal_resistance_ohm: T,
    gap_uev: T,
    critical_current_na: T,
}

impl<T: Real> JunctionParams<T> {
    pub fn new(normal_resistance_ohm: T, gap_uev: T) -> Result<Self> {
        let critical_current_na = critical_current_from_resistance(normal_resistance_ohm, gap_uev)?;
        Ok(Self {
            normal_resistance_ohm,
            gap_uev,
            critical_current_na,
        })
    }

    /// Validates a measured triple against the Ambegaokar-Baratoff relation.
    pub fn from_parts(normal_resistance_ohm: T, gap_uev: T, critical_current_na: T) -> Result<Self> {
        let expected = critical_current_from_resistance(normal_resistance_ohm, gap_uev)?;
        if ((critical_current_na - expected) / expected).abs() > T::lit(1e-9) {
            return Err(invalid_param(format!(
                "I_c = {critical_current_na} nA is inconsistent with R_n and gap (expected {expected} nA)"
            )));
        }
        Ok(Self {
            normal_resistance_ohm,
            gap_uev,
            critical_current_na,
        })
    }

    pub fn normal_resistance_ohm(&self) -> T {
        self.normal_resistance_ohm
    }

    pub fn gap_uev(&self) -> T {
        self.gap_uev
    }

    pub fn critical_current_na(&self) -> T {
        self.critical_current_na
    }
}

/// How the exponent of the power law is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ExponentMode<T> {
    #[default]
    Free,
    Fixed(T),
}

/// `f = prefactor · R^exponent`, f in GHz and R in Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    pub prefactor: T,
    pub exponent: T,
    #[serde(rename = "residual_std_mhz")]
    pub residual_std_mhz: T,
    #[serde(rename = "n")]
    pub sample_count: usize,
}

impl<T: Real> PowerLawFit<T> {
    /// A fit with a known law and no sample history.
    pub fn from_law(prefactor: T, exponent: T, residual_std_mhz: T) -> Result<Self> {
        if !(prefactor > T::zero()) || !exponent.is_finite() || exponent == T::zero() {
            return Err(invalid_param("prefactor must be positive and exponent finite and non-zero"));
        }
        if !(residual_std_mhz >= T::zero()) {
            return Err(invalid_param("residual_std_mhz must be non-negative"));
        }
        Ok(Self {
            prefactor,
            exponent,
            residual_std_mhz,
            sample_count: 2,
        })
    }
}

/// Least-squares fit of `ln f = ln a + p·ln R` over `(resistance Ω, frequency GHz)` points.
///
/// The residual scatter is the sample standard deviation of `f_i − a·R_i^p`, in MHz.
pub fn fit_power_law<T: Real>(points: &[(T, T)], mode: ExponentMode<T>) -> Result<PowerLawFit<T>> {
    if points.len() < 2 {
        return Err(invalid_input(format!(
            "power-law fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some((r, f)) = points.iter().find(|(r, f)| !(*r > T::zero()) || !(*f > T::zero())) {
        return Err(invalid_input(format!("non-positive point ({r}, {f})")));
    }
    let log_r: Vec<T> = points.iter().map(|(r, _)| r.ln()).collect();
    let log_f: Vec<T> = points.iter().map(|(_, f)| f.ln()).collect();

    let (log_a, exponent) = match mode {
        ExponentMode::Free => linear_fit(&log_r, &log_f)
            .ok_or_else(|| invalid_input("all resistances identical; exponent undetermined"))?,
        ExponentMode::Fixed(p) => {
            let n = T::from_usize_lossy(points.len());
            let mean = log_r
                .iter()
                .zip(&log_f)
                .map(|(&lr, &lf)| lf - p * lr)
                .sum::<T>()
                / n;
            (mean, p)
        }
    };
    let prefactor = log_a.exp();

    let residuals: Vec<T> = points
        .iter()
        .map(|&(r, f)| (f - prefactor * r.powf(exponent)) * T::lit(1000.0))
        .collect();
    let n = T::from_usize_lossy(residuals.len());
    let mean = residuals.iter().copied().sum::<T>() / n;
    let var = residuals.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one());

    Ok(PowerLawFit {
        prefactor,
        exponent,
        residual_std_mhz: var.sqrt(),
        sample_count: points.len(),
    })
}

/// Frequency (GHz) predicted for a resistance (Ω).
pub fn predict_frequency<T: Real>(fit: &PowerLawFit<T>, resistance_ohm: T) -> Result<T> {
    if !(resistance_ohm > T::zero()) {
        return Err(invalid_param(format!("resistance must be positive, got {resistance_ohm}")));
    }
    Ok(fit.prefactor * resistance_ohm.powf(fit.exponent))
}

/// Resistance (Ω) whose predicted frequency equals `frequency_ghz`.
pub fn target_resistance<T: Real>(fit: &PowerLawFit<T>, frequency_ghz: T) -> Result<T> {
    if !(frequency_ghz > T::zero()) {
        return Err(invalid_param(format!("frequency must be positive, got {frequency_ghz}")));
    }
    Ok((frequency_ghz / fit.prefactor).powf(T::one() / fit.exponent))
}

/// Per-group medians and the pooled RMS deviation of each value from its own
/// group's median. Output units follow the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedScatter<T> {
    pub group_medians: Vec<T>,
    pub pooled_sigma: T,
}

pub fn grouped_sigma<T: Real>(values: &[T], groups: &[usize]) -> Result<GroupedScatter<T>> {
    if values.len() != groups.len() {
        return Err(invalid_input(format!(
            "{} values but {} group assignments",
            values.len(),
            groups.len()
        )));
    }
    if values.is_empty() {
        return Err(invalid_input("no values"));
    }
    let group_count = groups.iter().max().map_or(0, |g| g + 1);
    let mut members: Vec<Vec<T>> = vec![Vec::new(); group_count];
    for (&v, &g) in values.iter().zip(groups) {
        members[g].push(v);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(invalid_input(format!("group {empty} has no members")));
    }
    let group_medians: Vec<T> = members.iter().map(|m| median(m)).collect();
    let sum_sq = values
        .iter()
        .zip(groups)
        .map(|(&v, &g)| (v - group_medians[g]) * (v - group_medians[g]))
        .sum::<T>();
    Ok(GroupedScatter {
        group_medians,
        pooled_sigma: (sum_sq / T::from_usize_lossy(values.len())).sqrt(),
    })
}
