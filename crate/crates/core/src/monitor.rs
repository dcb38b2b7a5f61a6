//! On-line monitoring of the iteration budget `q`.
//!
//! At the end of every updating interval four costs are known:
//!
//! | name         | value                                   |
//! |--------------|-----------------------------------------|
//! | `j_k`        | `J(p(t_k), x(t_k))`                     |
//! | `j_k_plus`   | `J(p+(t_k), xhat(t_k+1))`, warm start   |
//! | `j_hat_next` | `J(p(t_k+1), xhat(t_k+1))`, after solve |
//! | `j_next`     | `J(p(t_k+1), x(t_k+1))`, measured state |
//!
//! From them the efficiency `E = j_hat_next / j_k_plus`, the
//! disturbance/shift factor `D = (j_next j_k_plus) / (j_hat_next j_k)` and the
//! contraction `K = E D = j_next / j_k` follow. Their sensitivities to `q` are
//! estimated from the solver's own cost log (for `E`) and a linear model
//! `D(q) = 1 + alpha_D q` (for `D`), and `q` takes a step of size `delta`
//! against the sign of either `dK/dq` (no contraction) or the sensitivity of
//! the settling time `q / |log K|` (contraction).

use crate::error::{invalid, Error, Result};
use crate::solver::IterationLog;

/// Default threshold on `|log K|` below which the settling-time sensitivity
/// is treated as singular and `q` is held.
pub const DEFAULT_LOG_GUARD: f64 = 1e-9;

/// Smallest budget for which the solver log supports a secant of `E`.
pub const MIN_BUDGET: usize = 2;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvariantViolation(format!("{name} must be a positive finite cost, got {v}")))
    }
}

/// `E_k = j_hat_next / j_k_plus`.
pub fn estimate_e(j_hat_next: f64, j_k_plus: f64) -> Result<f64> {
    positive("j_hat_next", j_hat_next)?;
    positive("j_k_plus", j_k_plus)?;
    Ok(j_hat_next / j_k_plus)
}

/// Secant of the efficiency map at the realised budget:
/// `(J(p(q)) - J(p(q-1))) / J(p(0))`.
pub fn estimate_de_dq(log: &IterationLog) -> Result<f64> {
    let c = &log.costs;
    if c.len() < 3 {
        return Err(invalid(format!(
            "need at least 2 logged iterations, got {}",
            log.iterations()
        )));
    }
    positive("J(p(0))", c[0])?;
    Ok((c[c.len() - 1] - c[c.len() - 2]) / c[0])
}

/// Slope of the linear disturbance model `D(q) = 1 + alpha_D q` through the
/// measured `D` at the realised `q`.
pub fn estimate_alpha_d(j_next: f64, j_hat_next: f64, j_k_plus: f64, j_k: f64, q: usize) -> Result<f64> {
    if q == 0 {
        return Err(invalid("budget must be at least 1"));
    }
    positive("j_next", j_next)?;
    positive("j_hat_next", j_hat_next)?;
    positive("j_k_plus", j_k_plus)?;
    positive("j_k", j_k)?;
    Ok(((j_next * j_k_plus) / (j_hat_next * j_k) - 1.0) / q as f64)
}

/// Product rule `dK/dq = E dD/dq + D dE/dq` with `dD/dq = alpha_D`.
pub fn estimate_dk_dq(e: f64, d: f64, de_dq: f64, alpha_d: f64) -> f64 {
    e * alpha_d + d * de_dq
}

/// Sensitivity of the settling-time proxy `q / |log K|` for `0 < K < 1`:
/// `(-log K + (q / K) dK/dq) / (log K)^2`.
pub fn settling_sensitivity(q: usize, k: f64, dk_dq: f64, log_guard: f64) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(invalid(format!("settling sensitivity needs 0 < K < 1, got {k}")));
    }
    let lk = k.ln();
    if lk.abs() < log_guard {
        return Err(Error::NearUnityContraction { k });
    }
    Ok((-lk + (q as f64 / k) * dk_dq) / (lk * lk))
}

/// Value of the ideal per-interval objective for a candidate `q` whose
/// contraction `k` is known: the settling time `q / |log K|` when `K < 1`,
/// otherwise `K` itself. Used for offline sweeps only; the closed loop never
/// has the full map `K(q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackObjective {
    SettlingTime(f64),
    Contraction(f64),
}

pub fn ideal_feedback_objective(q: usize, k: f64) -> Result<FeedbackObjective> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(invalid(format!("contraction must be positive, got {k}")));
    }
    Ok(if k < 1.0 {
        FeedbackObjective::SettlingTime(q as f64 / k.ln().abs())
    } else {
        FeedbackObjective::Contraction(k)
    })
}

/// Pick the minimiser of the ideal feedback over a fully known map `K(q)`:
/// lowest settling time among contracting candidates if any contract,
/// otherwise lowest `K`.
pub fn ideal_feedback(candidates: &[(usize, f64)]) -> Result<usize> {
    let mut best_settle: Option<(f64, usize)> = None;
    let mut best_k: Option<(f64, usize)> = None;
    for &(q, k) in candidates {
        match ideal_feedback_objective(q, k)? {
            FeedbackObjective::SettlingTime(t) => {
                if best_settle.is_none_or(|(b, _)| t < b) {
                    best_settle = Some((t, q));
                }
            }
            FeedbackObjective::Contraction(v) => {
                if best_k.is_none_or(|(b, _)| v < b) {
                    best_k = Some((v, q));
                }
            }
        }
    }
    best_settle
        .or(best_k)
        .map(|(_, q)| q)
        .ok_or_else(|| invalid("no candidates"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `K >= 1`: step against `dK/dq`.
    KReduction,
    /// `K < 1`: step against the settling-time sensitivity.
    Contraction,
    /// `K < 1` but `|log K|` under the guard: hold `q`.
    NearUnity,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::KReduction => "k_reduction",
            Branch::Contraction => "contraction",
            Branch::NearUnity => "near_unity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "k_reduction" => Some(Branch::KReduction),
            "contraction" => Some(Branch::Contraction),
            "near_unity" => Some(Branch::NearUnity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorSettings {
    pub delta: usize,
    pub q_max: usize,
    /// Prediction horizon; `q` can never exceed it.
    pub horizon: usize,
    pub log_guard: f64,
}

impl MonitorSettings {
    pub fn new(delta: usize, q_max: usize, horizon: usize) -> Result<Self> {
        let s = Self {
            delta,
            q_max,
            horizon,
            log_guard: DEFAULT_LOG_GUARD,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cap() < MIN_BUDGET {
            return Err(invalid(format!(
                "min(q_max, N) = {} leaves no room for q >= {MIN_BUDGET}",
                self.cap()
            )));
        }
        if !(self.log_guard >= 0.0) {
            return Err(invalid("log guard must be non-negative"));
        }
        Ok(())
    }

    /// Upper clamp `min(q_max, N)`.
    pub fn cap(&self) -> usize {
        self.q_max.min(self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalCosts {
    pub j_k: f64,
    pub j_k_plus: f64,
    pub j_hat_next: f64,
    pub j_next: f64,
}

/// Everything the monitor derives from one completed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates {
    pub e: f64,
    pub d: f64,
    pub k: f64,
    /// `j_k_plus / j_k`: horizon shift under the warm start.
    pub shift_ratio: f64,
    /// `j_next / j_hat_next`: prediction mismatch.
    pub prediction_ratio: f64,
    pub alpha_d: f64,
    pub de_dq: f64,
    pub dk_dq: f64,
    pub gamma: f64,
    pub branch: Branch,
}

impl Estimates {
    pub fn compute(q: usize, costs: &IntervalCosts, log: &IterationLog, log_guard: f64) -> Result<Self> {
        let IntervalCosts {
            j_k,
            j_k_plus,
            j_hat_next,
            j_next,
        } = *costs;
        let e = estimate_e(j_hat_next, j_k_plus)?;
        let alpha_d = estimate_alpha_d(j_next, j_hat_next, j_k_plus, j_k, q)?;
        let d = (j_next * j_k_plus) / (j_hat_next * j_k);
        let k = e * d;
        let de_dq = estimate_de_dq(log)?;
        let dk_dq = estimate_dk_dq(e, d, de_dq, alpha_d);
        let (gamma, branch) = if k >= 1.0 {
            (dk_dq, Branch::KReduction)
        } else {
            match settling_sensitivity(q, k, dk_dq, log_guard) {
                Ok(g) => (g, Branch::Contraction),
                Err(Error::NearUnityContraction { .. }) => (0.0, Branch::NearUnity),
                Err(e) => return Err(e),
            }
        };
        if !gamma.is_finite() {
            return Err(Error::Numeric(format!("non-finite update direction (K = {k})")));
        }
        Ok(Self {
            e,
            d,
            k,
            shift_ratio: j_k_plus / j_k,
            prediction_ratio: j_next / j_hat_next,
            alpha_d,
            de_dq,
            dk_dq,
            gamma,
            branch,
        })
    }
}

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `max{2, min{cap, q - delta sign(gamma)}}` with `sign(0) = 0`.
pub fn next_budget(q: usize, gamma: f64, settings: &MonitorSettings) -> usize {
    let proposed = q as i64 - settings.delta as i64 * sign(gamma);
    proposed.clamp(MIN_BUDGET as i64, settings.cap() as i64) as usize
}

/// Budget `q` for the current interval plus the data of the last completed
/// one.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorState {
    q: usize,
    settings: MonitorSettings,
    costs: Option<IntervalCosts>,
    estimates: Option<Estimates>,
}

impl MonitorState {
    pub fn new(q_init: usize, settings: MonitorSettings) -> Result<Self> {
        settings.validate()?;
        if q_init < MIN_BUDGET || q_init > settings.horizon {
            return Err(invalid(format!(
                "initial budget {q_init} outside {MIN_BUDGET}..={}",
                settings.horizon
            )));
        }
        Ok(Self {
            q: q_init,
            settings,
            costs: None,
            estimates: None,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn settings(&self) -> &MonitorSettings {
        &self.settings
    }

    pub fn costs(&self) -> Option<&IntervalCosts> {
        self.costs.as_ref()
    }

    pub fn estimates(&self) -> Option<&Estimates> {
        self.estimates.as_ref()
    }

    /// Records the interval that just ran with the current budget.
    pub fn observe(&mut self, costs: IntervalCosts, log: &IterationLog) -> Result<Estimates> {
        if log.iterations() != self.q {
            return Err(invalid(format!(
                "solver log has {} iterations, budget was {}",
                log.iterations(),
                self.q
            )));
        }
        let est = Estimates::compute(self.q, &costs, log, self.settings.log_guard)?;
        self.costs = Some(costs);
        self.estimates = Some(est);
        Ok(est)
    }

    /// Budget for the next interval according to the update rule.
    pub fn update_q(&self) -> Result<usize> {
        let est = self
            .estimates
            .as_ref()
            .ok_or_else(|| invalid("monitor has not observed an interval yet"))?;
        Ok(next_budget(self.q, est.gamma, &self.settings))
    }

    /// Moves to the next interval with budget `q`.
    pub fn advance(&mut self, q: usize) -> Result<()> {
        if q == 0 || q > self.settings.horizon {
            return Err(invalid(format!(
                "budget {q} outside 1..={}",
                self.settings.horizon
            )));
        }
        self.q = q;
        self.costs = None;
        self.estimates = None;
        Ok(())
    }
}
