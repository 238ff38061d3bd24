//! TOML model configuration. Every section and key is optional; unknown keys
//! are rejected.

use std::path::Path;

use anyhow::Context;
use crowding::collision::CollisionRuleSet;
use crowding::mc::{default_spacing_grid, TrialsPolicy, DEFAULT_BASE_FREQUENCY_MHZ};
use crowding::tunesim::{AnnealLaw, ScenarioParams, TunePolicy};
use crowding::RoleAssignment;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub collision: CollisionRuleSet<f64>,
    pub sweep: SweepSection,
    pub tune: TuneSection,
    pub physics: PhysicsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub base_frequency_mhz: f64,
    pub spacing_grid_mhz: Vec<f64>,
    pub roles: RoleAssignment,
    pub trials: TrialsPolicy,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            base_frequency_mhz: DEFAULT_BASE_FREQUENCY_MHZ,
            spacing_grid_mhz: default_spacing_grid(),
            roles: RoleAssignment::default(),
            trials: TrialsPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub policy: TunePolicy<f64>,
    pub anneal: AnnealLaw<f64>,
    pub population: ScenarioParams<f64>,
    /// Two-group scenario: the `high_count` lowest-resistance junctions aim at
    /// `high_frequency_ghz`, the rest at `low_frequency_ghz`.
    pub high_frequency_ghz: f64,
    pub low_frequency_ghz: f64,
    /// Defaults to the larger half of the population.
    pub high_count: Option<usize>,
}

impl Default for TuneSection {
    fn default() -> Self {
        Self {
            policy: TunePolicy::default(),
            anneal: AnnealLaw::default(),
            population: ScenarioParams::default(),
            high_frequency_ghz: 5.7046,
            low_frequency_ghz: 5.430,
            high_count: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    /// Superconducting gap Δ in µeV.
    pub gap_uev: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            gap_uev: crowding::physics::DEFAULT_GAP_UEV,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.collision.validate()?;
        self.sweep.trials.validate()?;
        self.tune.policy.validate()?;
        crowding::tunesim::AnnealResponseModel::from_law(&self.tune.anneal)?;
        anyhow::ensure!(self.physics.gap_uev > 0.0, "physics.gap_uev must be positive");
        anyhow::ensure!(
            self.tune.high_frequency_ghz > 0.0 && self.tune.low_frequency_ghz > 0.0,
            "tune frequencies must be positive"
        );
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        let cfg: Config = toml::from_str("").unwrap();
        assert_eq!(cfg, Config::default());
    }

    #[test]
    fn partial_sections_merge_with_defaults() {
        let cfg: Config = toml::from_str(
            "[collision.bounds_mhz]\ntype3 = 25.0\n[sweep.trials]\nkind = \"fixed\"\ntrials = 500\n[tune.policy]\ntolerance = 0.005\n",
        )
        .unwrap();
        assert_eq!(cfg.collision.bounds_mhz.type3, 25.0);
        assert_eq!(cfg.collision.bounds_mhz.type1, 17.0);
        assert_eq!(cfg.sweep.trials, TrialsPolicy::fixed(500));
        assert_eq!(cfg.tune.policy.tolerance, 0.005);
        assert_eq!(cfg.tune.policy.max_iterations, 30);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Config>("[collision]\nanharmonicity = -300\n").is_err());
        assert!(toml::from_str::<Config>("[nope]\n").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = Config::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<Config>(&text).unwrap(), cfg);
    }
}
