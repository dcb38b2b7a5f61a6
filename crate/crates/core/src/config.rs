//! Scenario configuration: a TOML document with one table per concern.
//!
//! ```toml
//! [plant]
//! tau_c = 0.02
//! disturbance = { kind = "none" }
//!
//! [cost]
//! horizon = 200
//! q_weight = 100.0
//! r_weight = 1.0
//! j_floor = 1.0
//! u_max = 1.0
//! reference = { kind = "square", amplitude = 1.0, half_period = 200 }
//!
//! [solver]
//! momentum = "auto"     # or a number in [0, 1)
//! lipschitz = "auto"    # or a positive number
//! restart = 8           # or "never"
//!
//! [monitor]
//! q_init = 20
//! delta = 10
//! q_max = 100
//! log_guard = 1e-9
//!
//! [run]
//! duration = 2400
//! x0 = [0.0, 0.0, 0.0]
//! p0 = 0.0
//! warm_start = "warm"   # or "cold"
//! adaptive = true
//! q_const = 20
//! snapshot_interval = 8
//! sweep_iterations = 100
//! ```
//!
//! Values given on the command line as `section.key=value` override the file.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::control::ControlParameter;
use crate::cost::{momentum_constant, CondensedCost, ReferenceSignal};
use crate::error::{Error, Result};
use crate::monitor::{MonitorSettings, MIN_BUDGET};
use crate::plant::{discretize_triple_integrator, DisturbanceSequence, LinearPlant};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

/// A numeric setting that may be derived from the problem instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Auto(Auto),
    Value(f64),
}

impl AutoOr {
    pub fn resolve(self, auto: impl FnOnce() -> Result<f64>) -> Result<f64> {
        match self {
            AutoOr::Auto(_) => auto(),
            AutoOr::Value(v) => Ok(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Never {
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Restart {
    Never(Never),
    Every(usize),
}

impl Restart {
    pub fn threshold(self) -> Option<usize> {
        match self {
            Restart::Never(_) => None,
            Restart::Every(n) => Some(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DisturbanceSpec {
    None,
    /// Same vector added every period.
    Constant { value: Vec<f64> },
    /// Single-period kicks at the given absolute steps.
    Impulses { steps: Vec<usize>, values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReferenceSpec {
    /// `+amplitude` from period 0, sign flips every `half_period`.
    Square { amplitude: f64, half_period: usize },
    /// Scalar steps: `values[i]` from period `starts[i]` on.
    Steps { starts: Vec<usize>, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarmStart {
    /// Shift by the applied samples, hold the last sample in the tail.
    Warm,
    /// Restart the iterations from the previous parameter unchanged.
    Cold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSettings {
    pub tau_c: f64,
    pub disturbance: DisturbanceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSettings {
    pub horizon: usize,
    pub q_weight: f64,
    pub r_weight: f64,
    pub j_floor: f64,
    /// Symmetric input bound `|u| <= u_max`.
    pub u_max: f64,
    pub reference: ReferenceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub momentum: AutoOr,
    pub lipschitz: AutoOr,
    pub restart: Restart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    pub q_init: usize,
    pub delta: usize,
    pub q_max: usize,
    pub log_guard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    /// Scenario length in basic periods.
    pub duration: usize,
    pub x0: Vec<f64>,
    /// Initial control sequence, constant.
    pub p0: f64,
    pub warm_start: WarmStart,
    pub adaptive: bool,
    /// Budget used every interval when `adaptive` is off.
    pub q_const: usize,
    /// Interval whose solver instance the single-instant sweep replays.
    pub snapshot_interval: usize,
    /// Iterations of the single-instant sweep.
    pub sweep_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantSettings,
    pub cost: CostSettings,
    pub solver: SolverSettings,
    pub monitor: MonitorConfig,
    pub run: RunSettings,
}

impl Default for ScenarioConfig {
    /// Triple-integrator benchmark, adaptive budget starting at 20.
    fn default() -> Self {
        Self {
            plant: PlantSettings {
                tau_c: 0.02,
                disturbance: DisturbanceSpec::None,
            },
            cost: CostSettings {
                horizon: 200,
                q_weight: 100.0,
                r_weight: 1.0,
                j_floor: 1.0,
                u_max: 1.0,
                reference: ReferenceSpec::Square {
                    amplitude: 1.0,
                    half_period: 200,
                },
            },
            solver: SolverSettings {
                momentum: AutoOr::Auto(Auto::Auto),
                lipschitz: AutoOr::Auto(Auto::Auto),
                restart: Restart::Every(8),
            },
            monitor: MonitorConfig {
                q_init: 20,
                delta: 10,
                q_max: 100,
                log_guard: crate::monitor::DEFAULT_LOG_GUARD,
            },
            run: RunSettings {
                duration: 2400,
                x0: vec![0.0; 3],
                p0: 0.0,
                warm_start: WarmStart::Warm,
                adaptive: true,
                q_const: 20,
                snapshot_interval: 8,
                sweep_iterations: 100,
            },
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&s).map_err(|e| match e {
            Error::Config(m) => cfg_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    /// Applies one `section.key=value` override. The value is read as a TOML
    /// value, falling back to a bare string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| cfg_err(format!("override `{assignment}` is not key=value")))?;
        let path = path.trim();
        let raw = raw.trim();
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key present"),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        let mut doc = toml::Value::try_from(&*self).map_err(|e| cfg_err(e.to_string()))?;
        let keys: Vec<&str> = path.split('.').collect();
        let mut node = &mut doc;
        for (i, key) in keys.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| cfg_err(format!("`{path}` does not name a config entry")))?;
            if i + 1 == keys.len() {
                if !table.contains_key(*key) {
                    return Err(cfg_err(format!("unknown config entry `{path}`")));
                }
                table.insert((*key).to_string(), value);
                break;
            }
            node = table
                .get_mut(*key)
                .ok_or_else(|| cfg_err(format!("unknown config section in `{path}`")))?;
        }
        let updated: Self = doc.try_into().map_err(|e: toml::de::Error| cfg_err(format!("{path}: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn with_overrides<S: AsRef<str>>(mut self, overrides: &[S]) -> Result<Self> {
        for o in overrides {
            self.apply_override(o.as_ref())?;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cost.horizon;
        if !(self.plant.tau_c > 0.0) {
            return Err(cfg_err("plant.tau_c must be positive"));
        }
        if n == 0 {
            return Err(cfg_err("cost.horizon must be positive"));
        }
        if !(self.cost.u_max > 0.0) {
            return Err(cfg_err("cost.u_max must be positive"));
        }
        if !(self.cost.j_floor > 0.0) {
            return Err(cfg_err("cost.j_floor must be positive"));
        }
        if self.run.x0.len() != 3 {
            return Err(cfg_err("run.x0 must have 3 entries"));
        }
        let m = &self.monitor;
        if m.q_max < MIN_BUDGET || m.q_max > n {
            return Err(cfg_err(format!("monitor.q_max must lie in {MIN_BUDGET}..={n}")));
        }
        if m.q_init < MIN_BUDGET || m.q_init > m.q_max {
            return Err(cfg_err(format!(
                "monitor.q_init must lie in {MIN_BUDGET}..={}",
                m.q_max
            )));
        }
        if self.run.q_const < MIN_BUDGET || self.run.q_const > n {
            return Err(cfg_err(format!("run.q_const must lie in {MIN_BUDGET}..={n}")));
        }
        let first = if self.run.adaptive { m.q_init } else { self.run.q_const };
        if self.run.duration < first {
            return Err(cfg_err("run.duration must cover at least one interval"));
        }
        if self.run.sweep_iterations < MIN_BUDGET {
            return Err(cfg_err("run.sweep_iterations must be at least 2"));
        }
        if let Restart::Every(0) = self.solver.restart {
            return Err(cfg_err("solver.restart must be at least 1"));
        }
        if let DisturbanceSpec::Impulses { steps, values } = &self.plant.disturbance {
            if steps.len() != values.len() {
                return Err(cfg_err("disturbance steps and values differ in length"));
            }
        }
        Ok(())
    }

    /// Budget of the first interval.
    pub fn initial_budget(&self) -> usize {
        if self.run.adaptive {
            self.monitor.q_init
        } else {
            self.run.q_const
        }
    }

    pub fn build_plant(&self) -> Result<LinearPlant> {
        discretize_triple_integrator(self.plant.tau_c)
    }

    pub fn build_reference(&self) -> Result<ReferenceSignal> {
        match &self.cost.reference {
            ReferenceSpec::Square {
                amplitude,
                half_period,
            } => ReferenceSignal::square_wave(
                *amplitude,
                *half_period,
                self.run.duration + self.cost.horizon + 1,
            ),
            ReferenceSpec::Steps { starts, values } => {
                if starts.len() != values.len() {
                    return Err(cfg_err("reference starts and values differ in length"));
                }
                ReferenceSignal::new(starts.iter().zip(values).map(|(s, v)| (*s, vec![*v])).collect())
            }
        }
    }

    pub fn build_cost(&self) -> Result<CondensedCost> {
        CondensedCost::new(
            self.build_plant()?,
            self.cost.horizon,
            DMatrix::from_element(1, 1, self.cost.q_weight),
            DMatrix::from_element(1, 1, self.cost.r_weight),
            self.cost.j_floor,
            self.build_reference()?,
        )
    }

    pub fn build_solver(&self, cost: &CondensedCost) -> Result<SolverConfig> {
        let (lmin, lmax) = cost.hessian_extremes();
        let lipschitz = self.solver.lipschitz.resolve(|| Ok(cost.lipschitz_bound()))?;
        let momentum = self.solver.momentum.resolve(|| momentum_constant(lmin, lmax))?;
        SolverConfig::new(lipschitz, momentum, self.solver.restart.threshold())
    }

    pub fn build_disturbance(&self) -> Result<DisturbanceSequence> {
        match &self.plant.disturbance {
            DisturbanceSpec::None => Ok(DisturbanceSequence::zero(3)),
            DisturbanceSpec::Constant { value } => {
                if value.len() != 3 {
                    return Err(cfg_err("disturbance value must have 3 entries"));
                }
                Ok(DisturbanceSequence::constant(
                    DVector::from_column_slice(value),
                    self.run.duration,
                ))
            }
            DisturbanceSpec::Impulses { steps, values } => {
                let len = steps.iter().max().map_or(0, |m| m + 1);
                let mut table = vec![DVector::zeros(3); len];
                for (s, v) in steps.iter().zip(values) {
                    if v.len() != 3 {
                        return Err(cfg_err("disturbance impulses must have 3 entries"));
                    }
                    table[*s] += DVector::from_column_slice(v);
                }
                DisturbanceSequence::from_vectors(3, table)
            }
        }
    }

    pub fn build_monitor_settings(&self) -> Result<MonitorSettings> {
        let s = MonitorSettings {
            delta: self.monitor.delta,
            q_max: self.monitor.q_max,
            horizon: self.cost.horizon,
            log_guard: self.monitor.log_guard,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn initial_parameter(&self) -> Result<ControlParameter> {
        let u = self.cost.u_max;
        let mut p = ControlParameter::uniform(self.cost.horizon, 1, -u, u, self.run.p0)?;
        p.project();
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = ScenarioConfig::default();
        let text = cfg.to_toml_string();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
        assert!(text.contains("momentum = \"auto\""));
        assert!(text.contains("restart = 8"));
    }

    #[test]
    fn overrides() {
        let mut cfg = ScenarioConfig::default();
        cfg.apply_override("monitor.q_init=100").unwrap();
        assert_eq!(cfg.monitor.q_init, 100);
        cfg.apply_override("solver.restart = never").unwrap();
        assert_eq!(cfg.solver.restart.threshold(), None);
        cfg.apply_override("solver.momentum=0.5").unwrap();
        assert_eq!(cfg.solver.momentum, AutoOr::Value(0.5));
        cfg.apply_override("run.warm_start=cold").unwrap();
        assert_eq!(cfg.run.warm_start, WarmStart::Cold);
        cfg.apply_override("run.x0=[1.0, 0.0, 0.0]").unwrap();
        assert_eq!(cfg.run.x0, vec![1.0, 0.0, 0.0]);
        cfg.apply_override("cost.reference={ kind = \"steps\", starts = [0, 50], values = [0.5, -0.5] }")
            .unwrap();
        assert!(matches!(cfg.cost.reference, ReferenceSpec::Steps { .. }));
    }

    #[test]
    fn bad_overrides_are_rejected() {
        let mut cfg = ScenarioConfig::default();
        assert!(cfg.apply_override("monitor.q_init").is_err());
        assert!(cfg.apply_override("monitor.nope=3").is_err());
        assert!(cfg.apply_override("nope.q=3").is_err());
        assert!(cfg.apply_override("monitor.q_init=1").is_err());
        assert!(cfg.apply_override("monitor.q_init=\"many\"").is_err());
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn validation() {
        let mut cfg = ScenarioConfig::default();
        cfg.monitor.q_max = 300;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.run.duration = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.run.x0 = vec![0.0; 2];
        assert!(cfg.validate().is_err());
        assert!(ScenarioConfig::from_toml_str("[plant]\ntau_c = 1.0").is_err());
    }

    #[test]
    fn builds_components() {
        let cfg = ScenarioConfig::default();
        let cost = cfg.build_cost().unwrap();
        let solver = cfg.build_solver(&cost).unwrap();
        assert_eq!(solver.restart, Some(8));
        assert!(solver.momentum > 0.9 && solver.momentum < 1.0);
        assert_eq!(solver.lipschitz, cost.lipschitz_bound());
        assert_eq!(cfg.initial_parameter().unwrap().len(), 200);
        let mut cfg = cfg;
        cfg.plant.disturbance = DisturbanceSpec::Impulses {
            steps: vec![3, 3],
            values: vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.5]],
        };
        let w = cfg.build_disturbance().unwrap();
        assert_eq!(w.get(3).unwrap()[2], 1.5);
        assert!(w.get(4).is_none());
    }
}
