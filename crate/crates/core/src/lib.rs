//! Frequency-crowding analysis for fixed-frequency transmon lattices.
//!
//! Monte Carlo collision and yield statistics over square, heavy-square and
//! heavy-hexagon coupling graphs, the fixed-window yield model and its
//! extrapolation, and a simulator for adaptive laser-anneal resistance tuning.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`. Frequencies are in MHz unless a
//! name says GHz.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collision;
pub mod error;
pub mod io;
pub mod lattice;
pub mod mc;
pub mod physics;
pub mod rng;
pub mod scalar;
pub mod tunesim;
pub mod window;

pub use collision::{count_collisions, CollisionReport, RoleAssignment};
pub use error::{Error, Result};
pub use lattice::{build_lattice, next_nearest_triples, Lattice, LatticeFamily};
pub use scalar::{normal_cdf, Real};

pub type CollisionRuleSet = collision::CollisionRuleSet<f64>;
pub type FrequencyPattern = lattice::FrequencyPattern<f64>;
pub type PatternedLattice = lattice::PatternedLattice<f64>;
pub type TransmonParams = physics::TransmonParams<f64>;
pub type JunctionParams = physics::JunctionParams<f64>;
pub type PowerLawFit = physics::PowerLawFit<f64>;
pub type McConfig = mc::McConfig<f64>;
pub type SweepConfig = mc::SweepConfig<f64>;
pub type SweepResult = mc::SweepResult<f64>;
pub type WindowFit = window::WindowFit<f64>;
pub type WindowTrend = window::WindowTrend<f64>;
pub type JunctionRecord = tunesim::JunctionRecord<f64>;
pub type AnnealResponseModel = tunesim::AnnealResponseModel<f64>;
pub type TunePolicy = tunesim::TunePolicy<f64>;
pub type TuneCampaign = tunesim::TuneCampaign<f64>;
pub type CampaignSummary = tunesim::CampaignSummary<f64>;
