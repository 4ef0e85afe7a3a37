//! Analytical and simulated performance of a wireless caching helper that
//! shares its airtime between a dedicated destination with bursty traffic
//! and an opportunistic nearby user.
//!
//! The crate is organised bottom-up:
//!
//! - [`catalog`]: Zipf content popularity and MPC/CMPC placement, giving the
//!   user's external request probability and the helper hit probability.
//! - [`phy`]: Rayleigh-fading link success probabilities with and without
//!   one interferer.
//! - [`analysis`]: closed-form throughput and regenerative delay formulas for
//!   the stable and saturated helper queue.
//! - [`optimizer`]: weighted sum throughput maximisation over the access
//!   probabilities, with an exhaustive grid oracle.
//! - [`simulator`]: slot-level Monte Carlo engine of the four-node protocol.
//!
//! Data-parallel loops (replications, grid points, sweeps) go through
//! [`exec`], which uses rayon when the `parallel` feature is enabled and
//! falls back to plain iteration otherwise.

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod exec;
pub mod optimizer;
pub mod phy;
pub mod presets;
pub mod simulator;
pub mod stats;

pub use analysis::{AnalysisReport, Delay, Regime, ScenarioParams};
pub use catalog::{CacheConfig, CachePolicy, ZipfCatalog};
pub use error::{ModelError, Result};
pub use exec::Execution;
pub use optimizer::OptimizationResult;
pub use phy::{Geometry, InterfererSpec, LinkBudget, LinkProbabilities, LinkSet};
pub use simulator::{RequestModel, SimConfig, SimulationReport};
pub use stats::Estimate;
