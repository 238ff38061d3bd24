//! Adaptive laser-anneal tuning of junction resistances.
//!
//! Annealing only ever raises a junction's normal-state resistance. Each
//! junction starts below its target and is stepped up with shots chosen from
//! a calibration table until it lands within a fractional tolerance of the
//! target, overshoots it, or runs out of iterations. Final frequencies follow
//! from the resistance-to-frequency power law plus its residual scatter.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Result};
use crate::physics::{grouped_sigma, predict_frequency, target_resistance, PowerLawFit};
use crate::rng::{standard_normal, stream};
use crate::scalar::{median, Real};

const DOMAIN_POPULATION: u64 = 1;
const DOMAIN_ANNEAL: u64 = 2;
const DOMAIN_RESIDUAL: u64 = 3;
const DOMAIN_TARGET: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JunctionStatus {
    Pending,
    Converged,
    Overshot,
    Exhausted,
}

impl JunctionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pending => "pending",
            Self::Converged => "converged",
            Self::Overshot => "overshot",
            Self::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealStep<T> {
    /// Relative to the reference power.
    pub power: T,
    pub duration_s: T,
    pub resistance_ohm: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionRecord<T> {
    pub id: usize,
    pub group: usize,
    pub initial_resistance_ohm: T,
    pub current_resistance_ohm: T,
    pub target_resistance_ohm: T,
    pub history: Vec<AnnealStep<T>>,
    pub status: JunctionStatus,
}

impl<T: Real> JunctionRecord<T> {
    pub fn new(id: usize, resistance_ohm: T) -> Self {
        Self {
            id,
            group: 0,
            initial_resistance_ohm: resistance_ohm,
            current_resistance_ohm: resistance_ohm,
            target_resistance_ohm: resistance_ohm,
            history: Vec::new(),
            status: JunctionStatus::Pending,
        }
    }

    /// `R / R_target − 1`.
    pub fn relative_error(&self) -> T {
        self.current_resistance_ohm / self.target_resistance_ohm - T::one()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry<T> {
    pub power: T,
    pub duration_s: T,
    /// Expected fractional resistance increase.
    pub expected_shift: T,
}

/// Parameters of the default response `c·(P/P₀)^γ·(t/t₀)^β`, tabulated on a
/// power grid spanning `[P₀/power_span, P₀]` and a duration grid spanning
/// `[t₀/duration_span, t₀]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct AnnealLaw<T> {
    pub max_shift: T,
    pub power_exponent: T,
    pub duration_exponent: T,
    pub reference_duration_s: T,
    pub power_span: T,
    pub duration_span: T,
    pub power_levels: usize,
    pub duration_levels: usize,
    /// Log-scale spread of the multiplicative shot-to-shot noise.
    pub noise_sigma: T,
}

impl<T: Real> Default for AnnealLaw<T> {
    fn default() -> Self {
        Self {
            max_shift: T::lit(0.15),
            power_exponent: T::lit(15.0),
            duration_exponent: T::lit(1.0),
            reference_duration_s: T::lit(10.0),
            power_span: T::lit(1.2),
            duration_span: T::lit(10.0),
            power_levels: 9,
            duration_levels: 5,
            noise_sigma: T::lit(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealResponseModel<T> {
    /// Sorted by expected shift.
    calibration: Vec<CalibrationEntry<T>>,
    noise_sigma: T,
}

impl<T: Real> Default for AnnealResponseModel<T> {
    fn default() -> Self {
        Self::from_law(&AnnealLaw::default()).expect("default law is valid")
    }
}

impl<T: Real> AnnealResponseModel<T> {
    pub fn from_law(law: &AnnealLaw<T>) -> Result<Self> {
        let positive = [
            law.max_shift,
            law.power_exponent,
            law.reference_duration_s,
        ];
        if positive.iter().any(|v| !(*v > T::zero())) || law.duration_exponent < T::zero() {
            return Err(invalid_param("anneal law needs positive shift, exponents and reference duration"));
        }
        if !(law.power_span > T::one()) || !(law.duration_span >= T::one()) {
            return Err(invalid_param("power span must exceed 1 and duration span be at least 1"));
        }
        if law.power_levels < 2 || law.duration_levels < 1 {
            return Err(invalid_param("need at least 2 power levels and 1 duration level"));
        }
        let level = |i: usize, n: usize, span: T| {
            if n == 1 {
                T::one()
            } else {
                // geometric grid from 1/span to 1
                span.powf(T::from_usize_lossy(i) / T::from_usize_lossy(n - 1) - T::one())
            }
        };
        let mut calibration = Vec::with_capacity(law.power_levels * law.duration_levels);
        for pi in 0..law.power_levels {
            let p = level(pi, law.power_levels, law.power_span);
            for ti in 0..law.duration_levels {
                let t = level(ti, law.duration_levels, law.duration_span);
                calibration.push(CalibrationEntry {
                    power: p,
                    duration_s: t * law.reference_duration_s,
                    expected_shift: law.max_shift * p.powf(law.power_exponent) * t.powf(law.duration_exponent),
                });
            }
        }
        Self::new(calibration, law.noise_sigma)
    }

    pub fn new(mut calibration: Vec<CalibrationEntry<T>>, noise_sigma: T) -> Result<Self> {
        if calibration.is_empty() {
            return Err(invalid_input("calibration table is empty"));
        }
        if !(noise_sigma >= T::zero()) {
            return Err(invalid_param(format!("noise sigma must be >= 0, got {noise_sigma}")));
        }
        let cap = T::lit(0.15) * (T::one() + T::lit(1e-9));
        if let Some(e) = calibration
            .iter()
            .find(|e| !(e.expected_shift > T::zero()) || e.expected_shift > cap)
        {
            return Err(invalid_param(format!(
                "expected shifts must lie in (0, 0.15], got {}",
                e.expected_shift
            )));
        }
        calibration.sort_by(|a, b| {
            a.expected_shift
                .partial_cmp(&b.expected_shift)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.power.partial_cmp(&b.power).unwrap_or(std::cmp::Ordering::Equal))
                .then(a.duration_s.partial_cmp(&b.duration_s).unwrap_or(std::cmp::Ordering::Equal))
        });
        Ok(Self {
            calibration,
            noise_sigma,
        })
    }

    pub fn calibration(&self) -> &[CalibrationEntry<T>] {
        &self.calibration
    }

    pub fn noise_sigma(&self) -> T {
        self.noise_sigma
    }

    /// Largest expected shift not above `aim`, or the smallest available.
    pub fn choose(&self, aim: T) -> &CalibrationEntry<T> {
        let idx = self.calibration.partition_point(|e| e.expected_shift <= aim);
        &self.calibration[idx.saturating_sub(1)]
    }

    /// Realized shift for one shot: expected times `exp(noise·z)`.
    pub fn sample_shift<R: Rng + ?Sized>(&self, entry: &CalibrationEntry<T>, rng: &mut R) -> T {
        let z: f64 = StandardNormal.sample(rng);
        entry.expected_shift * (self.noise_sigma * T::from_f64(z).unwrap_or_else(T::zero)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct TunePolicy<T> {
    /// Fraction of the remaining gap each shot aims for.
    pub aim_fraction: T,
    /// Fractional band `|R/R_target − 1|` counted as converged.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for TunePolicy<T> {
    fn default() -> Self {
        Self {
            aim_fraction: T::lit(0.5),
            tolerance: T::lit(0.003),
            max_iterations: 30,
        }
    }
}

impl<T: Real> TunePolicy<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.aim_fraction > T::zero() && self.aim_fraction <= T::one()) {
            return Err(invalid_param("aim fraction must lie in (0, 1]"));
        }
        if !(self.tolerance > T::zero()) {
            return Err(invalid_param("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Anneals one junction toward its target.
///
/// A junction whose target sits below the convergence band cannot be reached
/// and is marked exhausted without any shot.
pub fn tune_junction<T: Real, R: Rng + ?Sized>(
    mut j: JunctionRecord<T>,
    model: &AnnealResponseModel<T>,
    policy: &TunePolicy<T>,
    rng: &mut R,
) -> JunctionRecord<T> {
    let tol = policy.tolerance;
    loop {
        let err = j.relative_error();
        if err.abs() <= tol {
            j.status = JunctionStatus::Converged;
        } else if err > tol {
            j.status = if j.history.is_empty() {
                JunctionStatus::Exhausted
            } else {
                JunctionStatus::Overshot
            };
        } else if j.history.len() >= policy.max_iterations {
            j.status = JunctionStatus::Exhausted;
        } else {
            let gap = j.target_resistance_ohm / j.current_resistance_ohm - T::one();
            let entry = *model.choose(policy.aim_fraction * gap);
            let shift = model.sample_shift(&entry, rng);
            j.current_resistance_ohm = j.current_resistance_ohm * (T::one() + shift);
            j.history.push(AnnealStep {
                power: entry.power,
                duration_s: entry.duration_s,
                resistance_ohm: j.current_resistance_ohm,
            });
            continue;
        }
        return j;
    }
}

/// `n` lognormal resistances with the given median and fractional standard
/// deviation (std / mean).
pub fn generate_population<T: Real>(
    n: usize,
    median_ohm: T,
    fractional_sigma: T,
    seed: u64,
) -> Result<Vec<JunctionRecord<T>>> {
    if n == 0 {
        return Err(invalid_param("population must have at least one junction"));
    }
    if !(median_ohm > T::zero()) || !(fractional_sigma >= T::zero()) {
        return Err(invalid_param("median must be positive and scatter non-negative"));
    }
    let s = (T::one() + fractional_sigma * fractional_sigma).ln().sqrt();
    Ok((0..n)
        .map(|id| {
            let z: T = standard_normal(seed, DOMAIN_POPULATION, id as u64);
            JunctionRecord::new(id, median_ohm * (s * z).exp())
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCampaign<T> {
    pub junctions: Vec<JunctionRecord<T>>,
    pub fit: PowerLawFit<T>,
    pub target_frequencies_ghz: Vec<T>,
}

impl<T: Real> TuneCampaign<T> {
    pub fn new(junctions: Vec<JunctionRecord<T>>, fit: PowerLawFit<T>, target_frequencies_ghz: Vec<T>) -> Result<Self> {
        if junctions.len() != target_frequencies_ghz.len() {
            return Err(invalid_input(format!(
                "{} junctions but {} target frequencies",
                junctions.len(),
                target_frequencies_ghz.len()
            )));
        }
        Ok(Self {
            junctions,
            fit,
            target_frequencies_ghz,
        })
    }
}

/// Sets each target resistance from its target frequency.
///
/// Junctions already inside the band of their target stay pending (they
/// converge without a shot); those whose target lies further below are
/// marked exhausted.
pub fn assign_targets<T: Real>(mut campaign: TuneCampaign<T>, policy: &TunePolicy<T>) -> Result<TuneCampaign<T>> {
    for (j, &f) in campaign.junctions.iter_mut().zip(&campaign.target_frequencies_ghz) {
        j.target_resistance_ohm = target_resistance(&campaign.fit, f)?;
        j.status = if j.relative_error() > policy.tolerance {
            JunctionStatus::Exhausted
        } else {
            JunctionStatus::Pending
        };
    }
    Ok(campaign)
}

/// Knobs for the built-in scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ScenarioParams<T> {
    pub median_resistance_ohm: T,
    pub fractional_sigma: T,
    pub prefactor_ghz: T,
    pub exponent: T,
    pub residual_std_mhz: T,
}

impl<T: Real> Default for ScenarioParams<T> {
    fn default() -> Self {
        Self {
            median_resistance_ohm: T::lit(7935.0),
            fractional_sigma: T::lit(0.046),
            prefactor_ghz: T::lit(509.73),
            exponent: T::lit(-0.5),
            residual_std_mhz: T::lit(14.5),
        }
    }
}

impl<T: Real> ScenarioParams<T> {
    fn fit(&self) -> Result<PowerLawFit<T>> {
        PowerLawFit::from_law(self.prefactor_ghz, self.exponent, self.residual_std_mhz)
    }
}

/// Splits a population into two frequency groups: the lowest-resistance
/// `low_count` junctions aim at `high_ghz`, the rest at `low_ghz`.
pub fn two_group_campaign<T: Real>(
    n: usize,
    low_count: usize,
    high_ghz: T,
    low_ghz: T,
    params: &ScenarioParams<T>,
    seed: u64,
) -> Result<TuneCampaign<T>> {
    if low_count > n {
        return Err(invalid_param(format!("group of {low_count} exceeds {n} junctions")));
    }
    let mut junctions = generate_population(n, params.median_resistance_ohm, params.fractional_sigma, seed)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        junctions[a]
            .initial_resistance_ohm
            .partial_cmp(&junctions[b].initial_resistance_ohm)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut targets = vec![low_ghz; n];
    for (rank, &id) in order.iter().enumerate() {
        let high = rank < low_count;
        junctions[id].group = usize::from(!high);
        if high {
            targets[id] = high_ghz;
        }
    }
    TuneCampaign::new(junctions, params.fit()?, targets)
}

/// Targets drawn uniformly between `min_gap` and `max_gap` above each
/// junction's initial resistance.
pub fn spread_campaign<T: Real>(
    n: usize,
    min_gap: T,
    max_gap: T,
    params: &ScenarioParams<T>,
    seed: u64,
) -> Result<TuneCampaign<T>> {
    if !(min_gap >= T::zero() && max_gap >= min_gap) {
        return Err(invalid_param("target spread needs 0 <= min <= max"));
    }
    let fit = params.fit()?;
    let junctions = generate_population(n, params.median_resistance_ohm, params.fractional_sigma, seed)?;
    let targets = junctions
        .iter()
        .map(|j| {
            let u: f64 = stream(seed, DOMAIN_TARGET, j.id as u64).random();
            let gap = min_gap + (max_gap - min_gap) * T::from_f64(u).unwrap_or_else(T::zero);
            predict_frequency(&fit, j.initial_resistance_ohm * (T::one() + gap))
        })
        .collect::<Result<Vec<T>>>()?;
    TuneCampaign::new(junctions, fit, targets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary<T> {
    pub junctions: usize,
    pub converged: usize,
    pub overshot: usize,
    pub exhausted: usize,
    pub convergence_fraction: T,
    /// RMS of `R_final − R_target` over all junctions.
    pub sigma_r_ohm: T,
    pub mean_steps: T,
    pub max_steps: usize,
    pub group_median_frequencies_ghz: Vec<T>,
    pub mean_frequency_ghz: T,
    /// RMS deviation of final frequencies from their group medians.
    pub pooled_sigma_f_mhz: T,
    /// `√(residual² + (|p|·tolerance·⟨f⟩)²)`, treating both errors as independent.
    pub quadrature_sigma_f_mhz: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignOutcome<T> {
    pub campaign: TuneCampaign<T>,
    pub final_frequencies_ghz: Vec<T>,
    pub summary: CampaignSummary<T>,
}

/// Assigns targets, tunes every junction on its own stream and applies the
/// power-law residual to the final frequencies.
pub fn run_campaign<T: Real>(
    campaign: TuneCampaign<T>,
    model: &AnnealResponseModel<T>,
    policy: &TunePolicy<T>,
    seed: u64,
) -> Result<CampaignOutcome<T>> {
    policy.validate()?;
    let mut campaign = assign_targets(campaign, policy)?;
    campaign.junctions = std::mem::take(&mut campaign.junctions)
        .into_par_iter()
        .map(|j| {
            if j.status == JunctionStatus::Pending {
                let mut rng = stream(seed, DOMAIN_ANNEAL, j.id as u64);
                tune_junction(j, model, policy, &mut rng)
            } else {
                j
            }
        })
        .collect();

    let fit = campaign.fit;
    let final_frequencies_ghz = campaign
        .junctions
        .iter()
        .map(|j| {
            let z: T = standard_normal(seed, DOMAIN_RESIDUAL, j.id as u64);
            Ok(predict_frequency(&fit, j.current_resistance_ohm)? + fit.residual_std_mhz * z / T::lit(1000.0))
        })
        .collect::<Result<Vec<T>>>()?;

    let summary = summarize(&campaign, &final_frequencies_ghz, policy)?;
    Ok(CampaignOutcome {
        campaign,
        final_frequencies_ghz,
        summary,
    })
}

fn summarize<T: Real>(campaign: &TuneCampaign<T>, freqs: &[T], policy: &TunePolicy<T>) -> Result<CampaignSummary<T>> {
    let js = &campaign.junctions;
    let n = T::from_usize_lossy(js.len());
    let count = |s: JunctionStatus| js.iter().filter(|j| j.status == s).count();
    let converged = count(JunctionStatus::Converged);
    let sigma_r = (js
        .iter()
        .map(|j| {
            let e = j.current_resistance_ohm - j.target_resistance_ohm;
            e * e
        })
        .sum::<T>()
        / n)
        .sqrt();
    let steps: Vec<usize> = js.iter().map(|j| j.history.len()).collect();
    let mhz: Vec<T> = freqs.iter().map(|&f| f * T::lit(1000.0)).collect();
    let groups: Vec<usize> = js.iter().map(|j| j.group).collect();
    let scatter = grouped_sigma(&mhz, &groups)?;
    let mean_f = freqs.iter().copied().sum::<T>() / n;
    let tuning = campaign.fit.exponent.abs() * policy.tolerance * mean_f * T::lit(1000.0);
    let res = campaign.fit.residual_std_mhz;
    Ok(CampaignSummary {
        junctions: js.len(),
        converged,
        overshot: count(JunctionStatus::Overshot),
        exhausted: count(JunctionStatus::Exhausted),
        convergence_fraction: T::from_usize_lossy(converged) / n,
        sigma_r_ohm: sigma_r,
        mean_steps: T::from_usize_lossy(steps.iter().sum()) / n,
        max_steps: steps.iter().copied().max().unwrap_or(0),
        group_median_frequencies_ghz: scatter.group_medians.iter().map(|&m| m / T::lit(1000.0)).collect(),
        mean_frequency_ghz: mean_f,
        pooled_sigma_f_mhz: scatter.pooled_sigma,
        quadrature_sigma_f_mhz: (res * res + tuning * tuning).sqrt(),
    })
}

/// Median number of shots among junctions that needed at least one.
pub fn median_steps<T: Real>(junctions: &[JunctionRecord<T>]) -> Option<T> {
    let steps: Vec<T> = junctions
        .iter()
        .filter(|j| !j.history.is_empty())
        .map(|j| T::from_usize_lossy(j.history.len()))
        .collect();
    (!steps.is_empty()).then(|| median(&steps))
}

/// History rows `id,step,power,duration_s,resistance_ohm,status`; step 0 is
/// the initial state.
pub fn write_history_csv<T: Real, W: std::io::Write>(junctions: &[JunctionRecord<T>], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "step", "power", "duration_s", "resistance_ohm", "status"])?;
    for j in junctions {
        out.write_record([
            j.id.to_string(),
            "0".into(),
            "0".into(),
            "0".into(),
            j.initial_resistance_ohm.to_string(),
            j.status.as_str().into(),
        ])?;
        for (k, s) in j.history.iter().enumerate() {
            out.write_record([
                j.id.to_string(),
                (k + 1).to_string(),
                s.power.to_string(),
                s.duration_s.to_string(),
                s.resistance_ohm.to_string(),
                j.status.as_str().into(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
