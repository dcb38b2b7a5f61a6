//! Distributed-in-time MPC engine.
//!
//! During each updating interval `[t_k, t_k + q]` the engine applies the
//! first `q` samples of the stored parameter `p(t_k)` to the plant while the
//! solver spends exactly `q` iterations on the problem posed at the predicted
//! state `xhat(t_k + q)`, starting from the shifted parameter. At the end of
//! the interval the new parameter is available, the true state is measured
//! and the monitor fixes the next budget.

use nalgebra::DVector;

use crate::config::{ScenarioConfig, WarmStart};
use crate::control::ControlParameter;
use crate::cost::CondensedCost;
use crate::error::{invalid, Error, Result};
use crate::monitor::{Branch, IntervalCosts, MonitorState};
use crate::plant::{DisturbanceSequence, LinearPlant};
use crate::solver::{fast_gradient, SolverConfig};

/// Shift out the first `q_applied` samples and hold the last one in the tail.
pub fn warm_start_shift(p: &ControlParameter, q_applied: usize) -> Result<ControlParameter> {
    let n = p.horizon();
    if q_applied == 0 || q_applied > n {
        return Err(invalid(format!("shift {q_applied} outside 1..={n}")));
    }
    let nu = p.n_u();
    let last = p.sample(n - 1).to_vec();
    let values = DVector::from_iterator(
        p.len(),
        (0..n).flat_map(|i| {
            let src = if i + q_applied < n { p.sample(i + q_applied) } else { &last[..] };
            src.to_vec()
        }),
    );
    debug_assert_eq!(values.len(), n * nu);
    let mut out = p.with_values(values)?;
    out.project();
    Ok(out)
}

/// State of the extended system at an updating instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub x: DVector<f64>,
    pub p: ControlParameter,
    /// Budget of the interval starting at `t`.
    pub q: usize,
    /// Absolute basic-period index of the updating instant.
    pub t: usize,
}

/// One basic period of the plant signals.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSample {
    pub t: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub y_ref: Vec<f64>,
    /// Length of the updating interval this period belongs to.
    pub q: usize,
}

/// Monitor quantities of one completed updating interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRecord {
    pub index: usize,
    pub t: usize,
    pub q: usize,
    pub j_k: f64,
    pub j_k_plus: f64,
    pub j_hat_next: f64,
    pub j_next: f64,
    pub e: f64,
    pub d: f64,
    pub k: f64,
    pub shift_ratio: f64,
    pub prediction_ratio: f64,
    pub alpha_d: f64,
    pub de_dq: f64,
    pub dk_dq: f64,
    pub gamma: f64,
    pub branch: Branch,
    pub restarts: usize,
    pub q_next: usize,
    /// `|x(t_k+1) - xhat(t_k+1)|_inf`.
    pub prediction_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: ScenarioConfig,
    pub records: Vec<IntervalRecord>,
    /// One sample per basic period `0..final_t`.
    pub signals: Vec<SignalSample>,
    pub final_t: usize,
    pub final_state: Vec<f64>,
    /// Weighted tracking error of the final state.
    pub final_tracking: f64,
    /// Weighted tracking error per signal sample, aligned with `signals`.
    pub tracking: Vec<f64>,
    /// Resolved solver settings.
    pub solver: SolverConfig,
    pub hessian_extremes: (f64, f64),
}

impl Trace {
    /// `sum_{t=1..T} |y(t) - y_ref(t)|_Q^2` over the whole run.
    pub fn tracking_cost(&self) -> f64 {
        self.tracking.iter().skip(1).sum::<f64>() + self.final_tracking
    }

    pub fn budgets(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.q).collect()
    }

    /// Time-weighted mean of `q` over the periods `from..final_t`.
    pub fn mean_budget_from(&self, from: usize) -> f64 {
        let tail: Vec<_> = self.signals.iter().filter(|s| s.t >= from).collect();
        if tail.is_empty() {
            return f64::NAN;
        }
        tail.iter().map(|s| s.q as f64).sum::<f64>() / tail.len() as f64
    }
}

/// The engine: extended state plus everything needed to advance it.
#[derive(Debug, Clone)]
pub struct Engine {
    config: ScenarioConfig,
    plant: LinearPlant,
    cost: CondensedCost,
    solver: SolverConfig,
    disturbance: DisturbanceSequence,
    nominal: DisturbanceSequence,
    monitor: MonitorState,
    state: ExtendedState,
    /// `J(p(t_k), x(t_k))`.
    j_k: f64,
    signals: Vec<SignalSample>,
    tracking: Vec<f64>,
    records: Vec<IntervalRecord>,
}

impl Engine {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let plant = config.build_plant()?;
        let cost = config.build_cost()?;
        let solver = config.build_solver(&cost)?;
        let disturbance = config.build_disturbance()?;
        let q0 = config.initial_budget();
        let monitor = MonitorState::new(q0, config.build_monitor_settings()?)?;
        let p = config.initial_parameter()?;
        let x = DVector::from_column_slice(&config.run.x0);
        let j_k = cost.eval(&p, &x, 0)?;
        Ok(Self {
            nominal: DisturbanceSequence::zero(plant.n_x()),
            plant,
            cost,
            solver,
            disturbance,
            monitor,
            state: ExtendedState { x, p, q: q0, t: 0 },
            j_k,
            signals: Vec::new(),
            tracking: Vec::new(),
            records: Vec::new(),
            config,
        })
    }

    pub fn state(&self) -> &ExtendedState {
        &self.state
    }

    pub fn cost(&self) -> &CondensedCost {
        &self.cost
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn records(&self) -> &[IntervalRecord] {
        &self.records
    }

    pub fn remaining(&self) -> usize {
        self.config.run.duration - self.state.t
    }

    /// The optimisation problem the next interval will work on: initial
    /// guess `p+`, predicted state `xhat` and its absolute period.
    pub fn next_instance(&self) -> Result<(ControlParameter, DVector<f64>, usize)> {
        let ExtendedState { x, p, q, t } = &self.state;
        let p_plus = match self.config.run.warm_start {
            WarmStart::Warm => warm_start_shift(p, *q)?,
            WarmStart::Cold => p.clone(),
        };
        let x_hat = crate::plant::predict(&self.plant, x, p, *q)?;
        Ok((p_plus, x_hat, t + q))
    }

    fn push_signals(&mut self, x_start: &DVector<f64>, states: &[DVector<f64>], t: usize, q: usize) {
        let p = &self.state.p;
        for i in 0..states.len() {
            let xi = if i == 0 { x_start } else { &states[i - 1] };
            let y = self.plant.output(xi);
            self.tracking.push(self.cost.tracking_error(&y, t + i));
            self.signals.push(SignalSample {
                t: t + i,
                x: xi.as_slice().to_vec(),
                u: p.sample(i).to_vec(),
                y: y.as_slice().to_vec(),
                y_ref: self.cost.reference().at(t + i).to_vec(),
                q,
            });
        }
    }

    /// Runs one full updating interval.
    pub fn step_interval(&mut self) -> Result<IntervalRecord> {
        let (q, t) = (self.state.q, self.state.t);
        if self.remaining() < q {
            return Err(invalid(format!(
                "interval of {q} periods does not fit in the remaining {}",
                self.remaining()
            )));
        }
        let (p_plus, x_hat, k_next) = self.next_instance()?;
        let (p_next, log) = fast_gradient(&self.cost, &x_hat, k_next, &p_plus, q, &self.solver)?;

        let real = self
            .plant
            .rollout(&self.state.x, &self.state.p, q, &self.disturbance, t)?;
        let x_next = real.last().expect("q >= 1").clone();
        let x_start = self.state.x.clone();
        self.push_signals(&x_start, &real, t, q);

        let costs = IntervalCosts {
            j_k: self.j_k,
            j_k_plus: log.initial(),
            j_hat_next: log.last(),
            j_next: self.cost.eval(&p_next, &x_next, k_next)?,
        };
        let est = self.monitor.observe(costs, &log)?;
        let q_next = if self.config.run.adaptive {
            self.monitor.update_q()?
        } else {
            self.config.run.q_const
        };
        self.monitor.advance(q_next)?;

        let record = IntervalRecord {
            index: self.records.len(),
            t,
            q,
            j_k: costs.j_k,
            j_k_plus: costs.j_k_plus,
            j_hat_next: costs.j_hat_next,
            j_next: costs.j_next,
            e: est.e,
            d: est.d,
            k: est.k,
            shift_ratio: est.shift_ratio,
            prediction_ratio: est.prediction_ratio,
            alpha_d: est.alpha_d,
            de_dq: est.de_dq,
            dk_dq: est.dk_dq,
            gamma: est.gamma,
            branch: est.branch,
            restarts: log.restarts.len(),
            q_next,
            prediction_error: (&x_next - &x_hat).amax(),
        };
        self.state = ExtendedState {
            x: x_next,
            p: p_next,
            q: q_next,
            t: k_next,
        };
        self.j_k = costs.j_next;
        self.records.push(record.clone());
        Ok(record)
    }

    /// Applies whatever is left of the stored sequence (no further solve)
    /// and closes the trace.
    pub fn finish(mut self) -> Result<Trace> {
        let left = self.remaining();
        if left > 0 {
            if left >= self.state.q {
                return Err(invalid("scenario still has complete intervals to run"));
            }
            let t = self.state.t;
            let real = self
                .plant
                .rollout(&self.state.x, &self.state.p, left, &self.disturbance, t)?;
            let x_start = self.state.x.clone();
            self.push_signals(&x_start, &real, t, self.state.q);
            self.state.x = real.last().expect("left >= 1").clone();
            self.state.t += left;
        }
        Ok(self.into_trace())
    }

    fn into_trace(self) -> Trace {
        let y = self.plant.output(&self.state.x);
        Trace {
            final_tracking: self.cost.tracking_error(&y, self.state.t),
            final_t: self.state.t,
            final_state: self.state.x.as_slice().to_vec(),
            hessian_extremes: self.cost.hessian_extremes(),
            solver: self.solver,
            config: self.config,
            records: self.records,
            signals: self.signals,
            tracking: self.tracking,
        }
    }

    /// Nominal model rollout, used by tests to check prediction consistency.
    pub fn nominal_rollout(&self, j: usize) -> Result<Vec<DVector<f64>>> {
        self.plant
            .rollout(&self.state.x, &self.state.p, j, &self.nominal, self.state.t)
    }
}

/// Runs a scenario to the end. On failure the partial trace is attached to
/// [`Error::Aborted`].
pub fn run_scenario(config: &ScenarioConfig) -> Result<Trace> {
    let mut engine = Engine::new(config.clone())?;
    while engine.remaining() >= engine.state().q {
        if let Err(e) = engine.step_interval() {
            return Err(Error::Aborted {
                source: Box::new(e),
                partial: Box::new(engine.into_trace()),
            });
        }
    }
    engine.finish()
}
