//! Monte Carlo collision statistics.
//!
//! Each trial draws every qubit frequency from `Normal(set-point, σ_f)` and
//! counts collisions. Deviates come from a [`DeviateTable`] keyed by
//! `(master_seed, trial, qubit)`, and per-trial counts are reduced as
//! integers, so results are bit-identical serial or parallel. One table is
//! shared by every spacing and σ_f of a sweep.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::{CollisionRuleSet, CollisionTopology, RoleAssignment, COLLISION_TYPES};
use crate::error::{invalid_input, invalid_param, Result};
use crate::lattice::{FrequencyPattern, Lattice, LatticeFamily};
use crate::rng::{standard_normal, DeviateTable};
use crate::scalar::Real;

pub const DEFAULT_BASE_FREQUENCY_MHZ: f64 = 5000.0;

/// Spacing grid searched when none is given: 30 to 150 MHz in 5 MHz steps.
pub fn default_spacing_grid<T: Real>() -> Vec<T> {
    (0..=24).map(|i| T::lit(30.0 + 5.0 * f64::from(i))).collect()
}

/// σ_f grid from `start` to `stop` inclusive in `step` increments.
pub fn sigma_grid<T: Real>(start: T, stop: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) || start < T::zero() || stop < start {
        return Err(invalid_param(format!(
            "sigma grid needs 0 <= start <= stop and step > 0, got {start}:{stop}:{step}"
        )));
    }
    let n = ((stop - start) / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    Ok((0..=n).map(|i| start + T::from_usize_lossy(i) * step).collect())
}

/// Settings for one `(σ_f, spacing)` evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct McConfig<T> {
    pub sigma_f_mhz: T,
    pub trials: usize,
    pub master_seed: u64,
    pub spacing_mhz: T,
    pub base_frequency_mhz: T,
    pub roles: RoleAssignment,
    pub rules: CollisionRuleSet<T>,
}

impl<T: Real> McConfig<T> {
    pub fn new(sigma_f_mhz: T, trials: usize, master_seed: u64, spacing_mhz: T) -> Result<Self> {
        let cfg = Self {
            sigma_f_mhz,
            trials,
            master_seed,
            spacing_mhz,
            base_frequency_mhz: T::lit(DEFAULT_BASE_FREQUENCY_MHZ),
            roles: RoleAssignment::default(),
            rules: CollisionRuleSet::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma_f_mhz)?;
        if self.trials == 0 {
            return Err(invalid_param("trials must be at least 1"));
        }
        FrequencyPattern::new(self.base_frequency_mhz, self.spacing_mhz, 3)?;
        self.rules.validate()
    }
}

fn check_sigma<T: Real>(sigma: T) -> Result<()> {
    if sigma >= T::zero() && sigma.is_finite() {
        Ok(())
    } else {
        Err(invalid_param(format!("sigma_f must be finite and >= 0, got {sigma}")))
    }
}

/// Statistics for one `(lattice, σ_f, spacing)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub family: LatticeFamily,
    pub distance: usize,
    pub sigma_f_mhz: T,
    pub spacing_mhz: T,
    pub trials: usize,
    pub collision_free_trials: usize,
    pub mean_collisions: T,
    #[serde(rename = "yield")]
    pub yield_fraction: T,
    pub per_type_means: BTreeMap<u8, T>,
}

/// How many trials each σ_f point gets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrialsPolicy {
    Fixed { trials: usize },
    Staged(StagedTrials),
}

impl Default for TrialsPolicy {
    fn default() -> Self {
        Self::Staged(StagedTrials::default())
    }
}

impl TrialsPolicy {
    pub fn fixed(trials: usize) -> Self {
        Self::Fixed { trials }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = match self {
            Self::Fixed { trials } => vec![*trials],
            Self::Staged(s) => vec![s.base, s.escalated, s.large_low_sigma, s.large_high_sigma],
        };
        if counts.contains(&0) {
            return Err(invalid_param("trial counts must be at least 1"));
        }
        Ok(())
    }

    /// Trials for the spacing search at `(distance, σ_f)`.
    pub fn pilot_trials(&self, distance: usize, sigma_f_mhz: f64) -> usize {
        match self {
            Self::Fixed { trials } => *trials,
            Self::Staged(s) if distance >= s.large_distance => {
                if sigma_f_mhz <= s.sigma_threshold_mhz {
                    s.large_low_sigma
                } else {
                    s.large_high_sigma
                }
            }
            Self::Staged(s) => s.base,
        }
    }

    /// Trials for re-evaluating the chosen spacing when the pilot yield is
    /// too small to resolve.
    pub fn escalation(&self, distance: usize, pilot_yield: f64) -> Option<usize> {
        let Self::Staged(s) = self else { return None };
        if distance >= s.large_distance {
            return None;
        }
        let floor = if distance <= 3 {
            s.escalate_below_yield_d3
        } else {
            s.escalate_below_yield_d5
        };
        (pilot_yield < floor && s.escalated > s.base).then_some(s.escalated)
    }

    pub fn max_trials(&self, distance: usize) -> usize {
        match self {
            Self::Fixed { trials } => *trials,
            Self::Staged(s) if distance >= s.large_distance => s.large_low_sigma.max(s.large_high_sigma),
            Self::Staged(s) => s.base.max(s.escalated),
        }
    }
}

/// 1000 trials, 4000 when the yield falls below 0.2 % (d = 3) or 1 % (d = 5);
/// from d = 7 on, 100 trials up to σ_f = 16 MHz and 40 beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StagedTrials {
    pub base: usize,
    pub escalated: usize,
    pub escalate_below_yield_d3: f64,
    pub escalate_below_yield_d5: f64,
    pub large_distance: usize,
    pub sigma_threshold_mhz: f64,
    pub large_low_sigma: usize,
    pub large_high_sigma: usize,
}

impl Default for StagedTrials {
    fn default() -> Self {
        Self {
            base: 1000,
            escalated: 4000,
            escalate_below_yield_d3: 0.002,
            escalate_below_yield_d5: 0.01,
            large_distance: 7,
            sigma_threshold_mhz: 16.0,
            large_low_sigma: 100,
            large_high_sigma: 40,
        }
    }
}

/// Settings shared by every point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SweepConfig<T> {
    pub master_seed: u64,
    pub spacing_grid_mhz: Vec<T>,
    pub base_frequency_mhz: T,
    pub roles: RoleAssignment,
    pub rules: CollisionRuleSet<T>,
    pub trials: TrialsPolicy,
}

impl<T: Real> SweepConfig<T> {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            spacing_grid_mhz: default_spacing_grid(),
            base_frequency_mhz: T::lit(DEFAULT_BASE_FREQUENCY_MHZ),
            roles: RoleAssignment::default(),
            rules: CollisionRuleSet::default(),
            trials: TrialsPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spacing_grid_mhz.is_empty() {
            return Err(invalid_input("spacing grid is empty"));
        }
        for &s in &self.spacing_grid_mhz {
            FrequencyPattern::new(self.base_frequency_mhz, s, 3)?;
        }
        self.trials.validate()?;
        self.rules.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    per_type: [u64; COLLISION_TYPES],
    collision_free: u64,
    trials: u64,
}

impl Tally {
    fn total(&self) -> u64 {
        self.per_type.iter().sum()
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.per_type.iter_mut().zip(other.per_type) {
            *a += b;
        }
        self.collision_free += other.collision_free;
        self.trials += other.trials;
        self
    }
}

struct Engine<'a, T> {
    lattice: &'a Lattice,
    topology: CollisionTopology,
    deviates: DeviateTable<T>,
    base: T,
    roles: RoleAssignment,
    rules: CollisionRuleSet<T>,
}

impl<'a, T: Real> Engine<'a, T> {
    fn new(
        lattice: &'a Lattice,
        seed: u64,
        max_trials: usize,
        base: T,
        roles: RoleAssignment,
        rules: CollisionRuleSet<T>,
    ) -> Self {
        Self {
            lattice,
            topology: CollisionTopology::new(lattice),
            deviates: DeviateTable::new(seed, max_trials, lattice.len()),
            base,
            roles,
            rules,
        }
    }

    fn set_points(&self, spacing: T) -> Vec<T> {
        self.lattice
            .nodes
            .iter()
            .map(|n| self.base + T::from_usize_lossy(n.pattern_index as usize - 1) * spacing)
            .collect()
    }

    fn evaluate(&self, spacing: T, sigma: T, trials: usize) -> Tally {
        let set = self.set_points(spacing);
        (0..trials)
            .into_par_iter()
            .fold(
                || (Tally::default(), vec![T::zero(); set.len()]),
                |(mut acc, mut f), t| {
                    for ((fq, &s), &z) in f.iter_mut().zip(&set).zip(self.deviates.row(t)) {
                        *fq = s + sigma * z;
                    }
                    let mut counts = [0u32; COLLISION_TYPES];
                    self.topology.tally(&f, &self.rules, self.roles, &mut counts, None);
                    for (a, c) in acc.per_type.iter_mut().zip(counts) {
                        *a += u64::from(c);
                    }
                    acc.collision_free += u64::from(counts.iter().all(|&c| c == 0));
                    acc.trials += 1;
                    (acc, f)
                },
            )
            .map(|(t, _)| t)
            .reduce(Tally::default, Tally::merge)
    }

    fn result(&self, sigma: T, spacing: T, tally: &Tally) -> SweepResult<T> {
        let n = T::from_u64(tally.trials).unwrap_or_else(T::infinity);
        let to_t = |x: u64| T::from_u64(x).unwrap_or_else(T::infinity);
        SweepResult {
            family: self.lattice.family,
            distance: self.lattice.distance,
            sigma_f_mhz: sigma,
            spacing_mhz: spacing,
            trials: tally.trials as usize,
            collision_free_trials: tally.collision_free as usize,
            mean_collisions: to_t(tally.total()) / n,
            yield_fraction: to_t(tally.collision_free) / n,
            per_type_means: (1..=COLLISION_TYPES as u8)
                .zip(tally.per_type.iter().map(|&c| to_t(c) / n))
                .collect(),
        }
    }

    /// Best spacing by fewest collisions, then most collision-free trials,
    /// then smallest spacing. All candidates share trial counts, so integer
    /// totals compare exactly.
    fn best_spacing(&self, grid: &[T], sigma: T, trials: usize) -> (T, Tally) {
        let mut best: Option<(T, Tally)> = None;
        for &s in grid {
            let tally = self.evaluate(s, sigma, trials);
            let better = match &best {
                None => true,
                Some((bs, bt)) => (tally.total(), std::cmp::Reverse(tally.collision_free))
                    .cmp(&(bt.total(), std::cmp::Reverse(bt.collision_free)))
                    .then_with(|| s.partial_cmp(bs).unwrap_or(std::cmp::Ordering::Equal))
                    .is_lt(),
            };
            if better {
                best = Some((s, tally));
            }
        }
        best.expect("non-empty grid")
    }
}

/// Runs `cfg.trials` trials at a single spacing.
pub fn run_trials<T: Real>(lattice: &Lattice, cfg: &McConfig<T>) -> Result<SweepResult<T>> {
    cfg.validate()?;
    let engine = Engine::new(
        lattice,
        cfg.master_seed,
        cfg.trials,
        cfg.base_frequency_mhz,
        cfg.roles,
        cfg.rules,
    );
    let tally = engine.evaluate(cfg.spacing_mhz, cfg.sigma_f_mhz, cfg.trials);
    Ok(engine.result(cfg.sigma_f_mhz, cfg.spacing_mhz, &tally))
}

/// Frequencies of one trial, as [`run_trials`] would draw them.
pub fn sample_frequencies<T: Real>(lattice: &Lattice, cfg: &McConfig<T>, trial: usize) -> Result<Vec<T>> {
    cfg.validate()?;
    Ok(lattice
        .nodes
        .iter()
        .map(|n| {
            let set = cfg.base_frequency_mhz + T::from_usize_lossy(n.pattern_index as usize - 1) * cfg.spacing_mhz;
            set + cfg.sigma_f_mhz * standard_normal::<T>(cfg.master_seed, trial as u64, n.id as u64)
        })
        .collect())
}

/// Searches `config.spacing_grid_mhz` at one σ_f with a fixed trial count.
pub fn optimize_spacing<T: Real>(
    lattice: &Lattice,
    sigma_f_mhz: T,
    trials: usize,
    config: &SweepConfig<T>,
) -> Result<(T, SweepResult<T>)> {
    config.validate()?;
    check_sigma(sigma_f_mhz)?;
    if trials == 0 {
        return Err(invalid_param("trials must be at least 1"));
    }
    let engine = Engine::new(
        lattice,
        config.master_seed,
        trials,
        config.base_frequency_mhz,
        config.roles,
        config.rules,
    );
    let (s, tally) = engine.best_spacing(&config.spacing_grid_mhz, sigma_f_mhz, trials);
    Ok((s, engine.result(sigma_f_mhz, s, &tally)))
}

/// One result per σ_f, each at its own optimal spacing.
///
/// The spacing search uses the policy's pilot trial count; when the policy
/// escalates, only the chosen spacing is re-run with more trials.
pub fn sweep_sigma<T: Real>(lattice: &Lattice, sigma_grid: &[T], config: &SweepConfig<T>) -> Result<Vec<SweepResult<T>>> {
    config.validate()?;
    for &s in sigma_grid {
        check_sigma(s)?;
    }
    let d = lattice.distance;
    let engine = Engine::new(
        lattice,
        config.master_seed,
        config.trials.max_trials(d),
        config.base_frequency_mhz,
        config.roles,
        config.rules,
    );
    Ok(sigma_grid
        .iter()
        .map(|&sigma| {
            let pilot = config.trials.pilot_trials(d, sigma.as_f64());
            let (spacing, mut tally) = engine.best_spacing(&config.spacing_grid_mhz, sigma, pilot);
            let pilot_yield = tally.collision_free as f64 / tally.trials as f64;
            if let Some(more) = config.trials.escalation(d, pilot_yield) {
                tally = engine.evaluate(spacing, sigma, more);
            }
            engine.result(sigma, spacing, &tally)
        })
        .collect())
}
