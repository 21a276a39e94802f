//! Exit-time simulation for discrete-state reaction kinetics.
//!
//! Two ways to sample the time a stochastic reaction system needs to reach a
//! boundary of its state space:
//!
//! * [`ssa::run_ssa`], the classical direct method, drawing one exponential
//!   holding time per reaction fired;
//! * [`ssa::run_timefree`] followed by [`exit_time::partition`] and
//!   [`exit_time::sample_exit_time`], which walks the same jump chain without
//!   time and then draws one Gamma variate per group of similar total
//!   propensities.
//!
//! [`hypoexp`] holds exact reference laws for validation and [`harness`]
//! runs paired ensembles and error studies.

pub mod exit_time;
pub mod harness;
pub mod hypoexp;
pub mod model;
pub mod report;
pub mod rng;
pub mod ssa;
pub mod stats;

pub use exit_time::{partition, sample_exit_time, GroupedPropensities};
pub use harness::{run_ensemble, Ensemble, EnsembleHistogram, Method};
pub use model::{Comparator, ExitCondition, Model, Reaction, ReactionSystem, SystemState};
pub use rng::{RandomStream, RngCounters};
pub use ssa::{run_ssa, run_timefree, PropensityLog, TrajectoryOutcome, TrajectoryStatus};
