//! Real-time model predictive control driven by a projected fast-gradient
//! solver, with an on-line rule that adapts how many solver iterations are
//! spent per control updating interval.
//!
//! The crate is organised bottom-up:
//!
//! - [`plant`]: discrete linear models and the triple-integrator benchmark.
//! - [`control`]: the boxed control parameter vector.
//! - [`cost`]: the condensed quadratic tracking cost and its curvature data.
//! - [`solver`]: projected (fast) gradient iterations with constant restart.
//! - [`monitor`]: per-interval cost ratios and the iteration-budget update.
//! - [`closedloop`]: the distributed-in-time engine and scenario runner.
//! - [`config`], [`presets`], [`trace`]: scenario files, canned runs and
//!   trace emission.

// `!(x > 0.0)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closedloop;
pub mod config;
pub mod control;
pub mod cost;
pub mod error;
pub mod linalg;
pub mod monitor;
pub mod plant;
pub mod presets;
pub mod solver;
pub mod trace;

pub use closedloop::{run_scenario, warm_start_shift, Engine, ExtendedState, IntervalRecord, SignalSample, Trace};
pub use config::ScenarioConfig;
pub use control::ControlParameter;
pub use cost::{eval_cost, grad_cost, momentum_constant, CondensedCost, ReferenceSignal};
pub use error::{Error, Result};
pub use monitor::{Branch, IntervalCosts, MonitorSettings, MonitorState};
pub use plant::{discretize_triple_integrator, DisturbanceSequence, LinearPlant};
pub use presets::{run_preset, Preset, PresetOutput};
pub use solver::{fast_gradient, project_box, solve_to_tolerance, IterationLog, SolverConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
