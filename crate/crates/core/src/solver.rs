//! Projected gradient and fast-gradient iterations over a box, with the
//! constant restarting strategy: every `s_max` iterations the extrapolated
//! point is reset onto the current iterate, which discards the momentum.
//!
//! With `momentum = 0` the iteration is plain projected gradient with step
//! `1/L`; with `restart = None` it is the textbook fast gradient scheme.

use nalgebra::{DMatrix, DVector};

use crate::control::ControlParameter;
use crate::cost::{CondensedCost, FixedStateCost};
use crate::error::{invalid, Error, Result};

/// A smooth function of the decision vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, p: &DVector<f64>) -> f64;
    fn gradient(&self, p: &DVector<f64>) -> DVector<f64>;
}

impl Objective for FixedStateCost<'_> {
    fn dim(&self) -> usize {
        self.hessian().nrows()
    }

    fn value(&self, p: &DVector<f64>) -> f64 {
        FixedStateCost::value(self, p)
    }

    fn gradient(&self, p: &DVector<f64>) -> DVector<f64> {
        FixedStateCost::gradient(self, p)
    }
}

/// `0.5 p' H p + f' p + constant`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl QuadraticObjective {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        if !hessian.is_square() || hessian.nrows() != linear.len() {
            return Err(invalid("Hessian and linear term dimensions disagree"));
        }
        Ok(Self {
            hessian,
            linear,
            constant,
        })
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, p: &DVector<f64>) -> f64 {
        0.5 * p.dot(&(&self.hessian * p)) + self.linear.dot(p) + self.constant
    }

    fn gradient(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.hessian * p + &self.linear
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Upper bound on the gradient's Lipschitz constant; the step is `1/L`.
    pub lipschitz: f64,
    /// Momentum constant `c` in `[0, 1)`.
    pub momentum: f64,
    /// Restart threshold `s_max`; `None` never restarts.
    pub restart: Option<usize>,
}

impl SolverConfig {
    pub fn new(lipschitz: f64, momentum: f64, restart: Option<usize>) -> Result<Self> {
        let cfg = Self {
            lipschitz,
            momentum,
            restart,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn projected_gradient(lipschitz: f64) -> Result<Self> {
        Self::new(lipschitz, 0.0, None)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0) || !self.lipschitz.is_finite() {
            return Err(invalid(format!("Lipschitz bound must be positive, got {}", self.lipschitz)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if self.restart == Some(0) {
            return Err(invalid("restart threshold must be at least 1"));
        }
        Ok(())
    }
}

/// Costs `J(p(0)), ..., J(p(q))` of one solver run and the iterations at
/// which the momentum was restarted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub costs: Vec<f64>,
    pub restarts: Vec<usize>,
}

impl IterationLog {
    pub fn iterations(&self) -> usize {
        self.costs.len().saturating_sub(1)
    }

    pub fn initial(&self) -> f64 {
        self.costs[0]
    }

    pub fn last(&self) -> f64 {
        *self.costs.last().expect("log is never empty")
    }

    /// `(J(p(i)) - J(p(0))) / |J(p(0))|`.
    pub fn relative_decrease(&self) -> Vec<f64> {
        let j0 = self.initial();
        self.costs.iter().map(|j| (j - j0) / j0.abs()).collect()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.costs.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Element-wise clamp of `v` into `[lower, upper]`.
pub fn project_box(v: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != lower.len() || v.len() != upper.len() {
        return Err(invalid("vector and bounds must have equal length"));
    }
    if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
        return Err(invalid("lower bound exceeds upper bound"));
    }
    Ok(clamp(v, lower, upper))
}

fn clamp(v: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        v.len(),
        v.iter()
            .zip(lower.iter().zip(upper.iter()))
            .map(|(x, (l, u))| x.clamp(*l, *u)),
    )
}

fn check_finite(v: &DVector<f64>, what: &str, iter: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite {what} at iteration {iter}")))
    }
}

/// Runs exactly `q` iterations from `p0` and logs the cost of every iterate.
pub fn iterate<O: Objective + ?Sized>(
    objective: &O,
    p0: &ControlParameter,
    q: usize,
    config: &SolverConfig,
) -> Result<(ControlParameter, IterationLog)> {
    config.validate()?;
    if q == 0 {
        return Err(invalid("iteration count must be at least 1"));
    }
    if objective.dim() != p0.len() {
        return Err(invalid(format!(
            "objective has dimension {}, parameter has length {}",
            objective.dim(),
            p0.len()
        )));
    }
    let (lower, upper) = (p0.lower(), p0.upper());
    let step = 1.0 / config.lipschitz;
    let c = config.momentum;

    let mut prev = clamp(p0.values(), lower, upper);
    let mut r = prev.clone();
    let mut s = 0;
    let mut log = IterationLog {
        costs: Vec::with_capacity(q + 1),
        restarts: Vec::new(),
    };
    log.costs.push(finite_cost(objective.value(&prev), 0)?);

    for i in 1..=q {
        s += 1;
        let grad = objective.gradient(&r);
        check_finite(&grad, "gradient", i)?;
        let p = clamp(&(&r - grad * step), lower, upper);
        r = &p + (&p - &prev) * c;
        if config.restart == Some(s) {
            r.copy_from(&p);
            s = 0;
            log.restarts.push(i);
        }
        log.costs.push(finite_cost(objective.value(&p), i)?);
        prev = p;
    }
    Ok((p0.with_values(prev)?, log))
}

fn finite_cost(j: f64, iter: usize) -> Result<f64> {
    if j.is_finite() {
        Ok(j)
    } else {
        Err(Error::Numeric(format!("non-finite cost at iteration {iter}")))
    }
}

/// `q` iterations on the MPC cost frozen at `(x, k0)`.
pub fn fast_gradient(
    cost: &CondensedCost,
    x: &DVector<f64>,
    k0: usize,
    p0: &ControlParameter,
    q: usize,
    config: &SolverConfig,
) -> Result<(ControlParameter, IterationLog)> {
    iterate(&cost.at(x, k0)?, p0, q, config)
}

/// `|p - P(p - grad J(p) / L)|_inf`, zero exactly at constrained minimizers.
pub fn fixed_point_residual<O: Objective + ?Sized>(
    objective: &O,
    p: &ControlParameter,
    lipschitz: f64,
) -> f64 {
    let g = objective.gradient(p.values());
    let moved = clamp(&(p.values() - g / lipschitz), p.lower(), p.upper());
    (p.values() - moved).amax()
}

/// Runs the restarted fast gradient until the fixed-point residual drops to
/// `tol`, returning the first iterate that meets it.
pub fn solve_objective<O: Objective + ?Sized>(
    objective: &O,
    p0: &ControlParameter,
    config: &SolverConfig,
    tol: f64,
    max_iter: usize,
) -> Result<ControlParameter> {
    config.validate()?;
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if objective.dim() != p0.len() {
        return Err(invalid("objective and parameter dimensions disagree"));
    }
    let (lower, upper) = (p0.lower(), p0.upper());
    let step = 1.0 / config.lipschitz;
    let c = config.momentum;

    let start = p0.with_values(clamp(p0.values(), lower, upper))?;
    let res0 = fixed_point_residual(objective, &start, config.lipschitz);
    if res0 <= tol {
        return Ok(start);
    }
    let mut best = (res0, start.values().clone());

    let mut prev = start.values().clone();
    let mut r = prev.clone();
    let mut s = 0;
    for i in 1..=max_iter {
        s += 1;
        let grad = objective.gradient(&r);
        check_finite(&grad, "gradient", i)?;
        let p = clamp(&(&r - grad * step), lower, upper);
        r = &p + (&p - &prev) * c;
        if config.restart == Some(s) {
            r.copy_from(&p);
            s = 0;
        }
        let candidate = p0.with_values(p.clone())?;
        let res = fixed_point_residual(objective, &candidate, config.lipschitz);
        if res <= tol {
            return Ok(candidate);
        }
        if res < best.0 {
            best = (res, p.clone());
        }
        prev = p;
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual: best.0,
        best: Box::new(p0.with_values(best.1)?),
    })
}

/// High-accuracy solution of the MPC problem at `(x, k0)`; baseline only.
pub fn solve_to_tolerance(
    cost: &CondensedCost,
    x: &DVector<f64>,
    k0: usize,
    p0: &ControlParameter,
    config: &SolverConfig,
    tol: f64,
    max_iter: usize,
) -> Result<ControlParameter> {
    solve_objective(&cost.at(x, k0)?, p0, config, tol, max_iter)
}
