//! Canned scenarios on the triple-integrator benchmark.
//!
//! | preset | run                                                          |
//! |--------|--------------------------------------------------------------|
//! | fig1   | single-instant solver sweep: gradient, no restart, s_max 5/8 |
//! | fig2   | adaptive, N = 200, q_init = 2                                |
//! | fig3   | adaptive, N = 200, q_init = 100                              |
//! | fig4   | constant q = 2, N = 200                                      |
//! | fig5   | constant q = 100, N = 200                                    |
//! | fig6   | constant q = 20, N = 200                                     |
//! | fig7   | constant q = 20, N = 100                                     |
//! | fig8   | adaptive, N = 100, q_init = 20                               |
//!
//! All use tau = 0.02, Q = 100, R = 1, s_max = 8, q_max = 100, delta = 10,
//! and track a +/-1 square wave switching every 1000 periods (20 s) over
//! 4800 periods. The library default switches every 200 periods, which is
//! exactly the minimum rest-to-rest time for a unit-jerk triple integrator
//! moving by 2: the loop is then saturated permanently and the N = 100 runs
//! lose stability for every budget, so the budget comparison says nothing.

use std::fmt;
use std::str::FromStr;

use crate::closedloop::{run_scenario, Engine, Trace};
use crate::config::{ReferenceSpec, ScenarioConfig};
use crate::control::ControlParameter;
use crate::error::{invalid, Result};
use crate::solver::{fast_gradient, IterationLog, SolverConfig};

pub const PRESET_AMPLITUDE: f64 = 1.0;
pub const PRESET_HALF_PERIOD: usize = 1000;
pub const PRESET_DURATION: usize = 4800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Fig1,
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Fig8,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
        }
    }

    /// Scenario behind the preset. `fig1` replays an instant of `fig2`.
    pub fn config(&self) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.cost.reference = ReferenceSpec::Square {
            amplitude: PRESET_AMPLITUDE,
            half_period: PRESET_HALF_PERIOD,
        };
        cfg.run.duration = PRESET_DURATION;
        let (adaptive, q, horizon) = match self {
            Preset::Fig1 | Preset::Fig2 => (true, 2, 200),
            Preset::Fig3 => (true, 100, 200),
            Preset::Fig4 => (false, 2, 200),
            Preset::Fig5 => (false, 100, 200),
            Preset::Fig6 => (false, 20, 200),
            Preset::Fig7 => (false, 20, 100),
            Preset::Fig8 => (true, 20, 100),
        };
        cfg.cost.horizon = horizon;
        cfg.monitor.q_max = cfg.monitor.q_max.min(horizon);
        cfg.run.adaptive = adaptive;
        if adaptive {
            cfg.monitor.q_init = q;
        } else {
            cfg.run.q_const = q;
            cfg.monitor.q_init = q.min(cfg.monitor.q_max);
        }
        cfg
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown preset `{s}` (expected fig1..fig8)")))
    }
}

/// One solver configuration replayed on a frozen instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub label: String,
    pub config: SolverConfig,
    pub log: IterationLog,
}

/// Solver behaviour on a single frozen optimisation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSweep {
    pub config: ScenarioConfig,
    /// Interval of the source scenario whose instance was captured.
    pub interval: usize,
    /// Absolute period of the predicted state.
    pub k0: usize,
    pub x_hat: Vec<f64>,
    pub p0: ControlParameter,
    pub curves: Vec<SweepCurve>,
}

impl SolverSweep {
    pub fn curve(&self, label: &str) -> Option<&SweepCurve> {
        self.curves.iter().find(|c| c.label == label)
    }
}

/// Captures the instance solved during interval `interval` of `config` and
/// replays it with pure gradient, fast gradient without restart and fast
/// gradient restarted every 5 and 8 iterations.
pub fn solver_sweep(config: &ScenarioConfig) -> Result<SolverSweep> {
    let mut engine = Engine::new(config.clone())?;
    let target = config.run.snapshot_interval;
    for _ in 0..target {
        if engine.remaining() < engine.state().q {
            return Err(invalid(format!(
                "scenario ends before interval {target}"
            )));
        }
        engine.step_interval()?;
    }
    let (p0, x_hat, k0) = engine.next_instance()?;
    let tuned = *engine.solver();
    let cost = engine.cost();
    let iters = config.run.sweep_iterations;
    let variants = [
        ("gradient", SolverConfig::new(tuned.lipschitz, 0.0, None)?),
        ("no_restart", SolverConfig::new(tuned.lipschitz, tuned.momentum, None)?),
        ("s_max_5", SolverConfig::new(tuned.lipschitz, tuned.momentum, Some(5))?),
        ("s_max_8", SolverConfig::new(tuned.lipschitz, tuned.momentum, Some(8))?),
    ];
    let mut curves = Vec::with_capacity(variants.len());
    for (label, cfg) in variants {
        let (_, log) = fast_gradient(cost, &x_hat, k0, &p0, iters, &cfg)?;
        curves.push(SweepCurve {
            label: label.to_string(),
            config: cfg,
            log,
        });
    }
    Ok(SolverSweep {
        config: config.clone(),
        interval: target,
        k0,
        x_hat: x_hat.as_slice().to_vec(),
        p0,
        curves,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetOutput {
    ClosedLoop(Box<Trace>),
    SolverSweep(Box<SolverSweep>),
}

/// Runs a preset with `section.key=value` overrides applied on top.
pub fn run_preset<S: AsRef<str>>(preset: Preset, overrides: &[S]) -> Result<PresetOutput> {
    let cfg = preset.config().with_overrides(overrides)?;
    match preset {
        Preset::Fig1 => Ok(PresetOutput::SolverSweep(Box::new(solver_sweep(&cfg)?))),
        _ => Ok(PresetOutput::ClosedLoop(Box::new(run_scenario(&cfg)?))),
    }
}

/// Summary of one constant-budget run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: usize,
    pub tracking_cost: f64,
    pub intervals: usize,
    pub mean_k: f64,
}

/// Runs `base` with the budget held constant at each of `budgets`.
pub fn constant_budget_sweep(base: &ScenarioConfig, budgets: &[usize]) -> Result<Vec<SweepRow>> {
    budgets
        .iter()
        .map(|&q| {
            let mut cfg = base.clone();
            cfg.run.adaptive = false;
            cfg.run.q_const = q;
            cfg.monitor.q_init = q.clamp(2, cfg.monitor.q_max);
            let trace = run_scenario(&cfg)?;
            let n = trace.records.len().max(1) as f64;
            Ok(SweepRow {
                q,
                tracking_cost: trace.tracking_cost(),
                intervals: trace.records.len(),
                mean_k: trace.records.iter().map(|r| r.k).sum::<f64>() / n,
            })
        })
        .collect()
}
