//! Condensed quadratic tracking cost
//!
//! ```text
//! J(p, x) = J_floor + sum_{k=1..N} |y(k) - y_ref(k0 + k)|_Q^2 + |u(k)|_R^2
//! ```
//!
//! with the states eliminated through the linear model, so that the stacked
//! output trajectory is `Y = Phi x + G p` and
//! `J = J_floor + (Y - Y_ref)' Qbar (Y - Y_ref) + p' Rbar p`.
//! The Hessian `H = 2 (G' Qbar G + Rbar)` does not depend on the state.

use nalgebra::{DMatrix, DVector};

use crate::control::ControlParameter;
use crate::error::{invalid, Result};
use crate::linalg;
use crate::plant::LinearPlant;

/// Piecewise-constant set-point schedule indexed by absolute basic period.
/// The last set-point is held past the end of the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    starts: Vec<usize>,
    setpoints: Vec<Vec<f64>>,
}

impl ReferenceSignal {
    pub fn new(segments: Vec<(usize, Vec<f64>)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(invalid("reference schedule is empty"));
        }
        if segments[0].0 != 0 {
            return Err(invalid("reference schedule must start at period 0"));
        }
        if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("reference segment starts must be strictly increasing"));
        }
        let dim = segments[0].1.len();
        if dim == 0 || segments.iter().any(|(_, s)| s.len() != dim) {
            return Err(invalid("all set-points must share one non-zero dimension"));
        }
        let (starts, setpoints) = segments.into_iter().unzip();
        Ok(Self { starts, setpoints })
    }

    pub fn constant(setpoint: Vec<f64>) -> Result<Self> {
        Self::new(vec![(0, setpoint)])
    }

    /// Scalar square wave alternating `+amplitude, -amplitude, ...` every
    /// `half_period` basic periods, covering at least `span` periods.
    pub fn square_wave(amplitude: f64, half_period: usize, span: usize) -> Result<Self> {
        if half_period == 0 {
            return Err(invalid("square wave half period must be positive"));
        }
        let count = span.div_ceil(half_period).max(1);
        let segments = (0..count)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                (i * half_period, vec![sign * amplitude])
            })
            .collect();
        Self::new(segments)
    }

    pub fn dim(&self) -> usize {
        self.setpoints[0].len()
    }

    pub fn at(&self, k: usize) -> &[f64] {
        let idx = self.starts.partition_point(|&s| s <= k) - 1;
        &self.setpoints[idx]
    }

    pub fn segments(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.starts.iter().copied().zip(self.setpoints.iter().map(Vec::as_slice))
    }
}

#[derive(Debug, Clone)]
pub struct CondensedCost {
    plant: LinearPlant,
    horizon: usize,
    q_weight: DMatrix<f64>,
    r_weight: DMatrix<f64>,
    j_floor: f64,
    reference: ReferenceSignal,
    /// Stacked free response `C A^k`, k = 1..N.
    phi: DMatrix<f64>,
    /// Block lower-triangular input-to-output map, block (k, j) = `C A^(k-j) B`.
    g: DMatrix<f64>,
    /// `2 G' Qbar`, maps the free residual to the linear term of the gradient.
    gtq2: DMatrix<f64>,
    hessian: DMatrix<f64>,
    extremes: (f64, f64),
}

impl CondensedCost {
    pub fn new(
        plant: LinearPlant,
        horizon: usize,
        q_weight: DMatrix<f64>,
        r_weight: DMatrix<f64>,
        j_floor: f64,
        reference: ReferenceSignal,
    ) -> Result<Self> {
        let (nx, nu, ny) = (plant.n_x(), plant.n_u(), plant.n_y());
        if horizon == 0 {
            return Err(invalid("prediction horizon must be positive"));
        }
        if q_weight.shape() != (ny, ny) || r_weight.shape() != (nu, nu) {
            return Err(invalid(format!(
                "weights must be {ny}x{ny} (Q) and {nu}x{nu} (R)"
            )));
        }
        if !(j_floor > 0.0) || !j_floor.is_finite() {
            return Err(invalid(format!("cost floor must be positive, got {j_floor}")));
        }
        if reference.dim() != ny {
            return Err(invalid(format!(
                "reference has dimension {}, plant has {ny} outputs",
                reference.dim()
            )));
        }
        let sym_tol = |m: &DMatrix<f64>| 1e-12 * (1.0 + m.amax());
        if (&q_weight - q_weight.transpose()).amax() > sym_tol(&q_weight)
            || (&r_weight - r_weight.transpose()).amax() > sym_tol(&r_weight)
        {
            return Err(invalid("weights must be symmetric"));
        }
        let (q_min, _) = linalg::symmetric_extremes(&q_weight)?;
        if q_min < -sym_tol(&q_weight) {
            return Err(invalid("Q must be positive semi-definite"));
        }
        let (r_min, _) = linalg::symmetric_extremes(&r_weight)?;
        if !(r_min > 0.0) {
            return Err(invalid("R must be positive definite"));
        }

        let n = horizon;
        let mut phi = DMatrix::zeros(n * ny, nx);
        // markov[m] = C A^m B
        let mut markov = Vec::with_capacity(n);
        let mut a_pow = DMatrix::identity(nx, nx);
        for k in 0..n {
            markov.push(plant.c() * &a_pow * plant.b());
            a_pow = plant.a() * a_pow;
            phi.view_mut((k * ny, 0), (ny, nx)).copy_from(&(plant.c() * &a_pow));
        }
        let mut g = DMatrix::zeros(n * ny, n * nu);
        for k in 0..n {
            for j in 0..=k {
                g.view_mut((k * ny, j * nu), (ny, nu)).copy_from(&markov[k - j]);
            }
        }
        let mut qg = DMatrix::zeros(n * ny, n * nu);
        for k in 0..n {
            let rows = g.view((k * ny, 0), (ny, n * nu));
            qg.view_mut((k * ny, 0), (ny, n * nu)).copy_from(&(&q_weight * rows));
        }
        let gtq2 = {
            let mut m = DMatrix::zeros(n * nu, n * ny);
            for k in 0..n {
                let cols = g.view((k * ny, 0), (ny, n * nu));
                m.view_mut((0, k * ny), (n * nu, ny))
                    .copy_from(&(cols.transpose() * &q_weight * 2.0));
            }
            m
        };
        let mut hessian = g.transpose() * qg * 2.0;
        for k in 0..n {
            let mut blk = hessian.view_mut((k * nu, k * nu), (nu, nu));
            blk += &r_weight * 2.0;
        }
        // exact symmetry keeps the tridiagonal reduction honest
        hessian = (&hessian + hessian.transpose()) * 0.5;
        let extremes = linalg::symmetric_extremes(&hessian)?;

        Ok(Self {
            plant,
            horizon,
            q_weight,
            r_weight,
            j_floor,
            reference,
            phi,
            g,
            gtq2,
            hessian,
            extremes,
        })
    }

    /// Single-output, single-input shorthand with scalar weights.
    pub fn scalar(
        plant: LinearPlant,
        horizon: usize,
        q: f64,
        r: f64,
        j_floor: f64,
        reference: ReferenceSignal,
    ) -> Result<Self> {
        let (ny, nu) = (plant.n_y(), plant.n_u());
        Self::new(
            plant,
            horizon,
            DMatrix::identity(ny, ny) * q,
            DMatrix::identity(nu, nu) * r,
            j_floor,
            reference,
        )
    }

    pub fn plant(&self) -> &LinearPlant {
        &self.plant
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn j_floor(&self) -> f64 {
        self.j_floor
    }

    pub fn q_weight(&self) -> &DMatrix<f64> {
        &self.q_weight
    }

    pub fn r_weight(&self) -> &DMatrix<f64> {
        &self.r_weight
    }

    pub fn reference(&self) -> &ReferenceSignal {
        &self.reference
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// Input-to-output prediction operator `G`.
    pub fn prediction_operator(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Length of the decision vector, `N * n_u`.
    pub fn dim(&self) -> usize {
        self.horizon * self.plant.n_u()
    }

    fn check(&self, p: &DVector<f64>, x: &DVector<f64>) -> Result<()> {
        if p.len() != self.dim() {
            return Err(invalid(format!(
                "parameter has length {}, cost expects {}",
                p.len(),
                self.dim()
            )));
        }
        if x.len() != self.plant.n_x() {
            return Err(invalid(format!(
                "state has length {}, cost expects {}",
                x.len(),
                self.plant.n_x()
            )));
        }
        Ok(())
    }

    /// The cost frozen at state `x` with the reference window starting after
    /// absolute period `k0`.
    pub fn at(&self, x: &DVector<f64>, k0: usize) -> Result<FixedStateCost<'_>> {
        if x.len() != self.plant.n_x() {
            return Err(invalid(format!(
                "state has length {}, cost expects {}",
                x.len(),
                self.plant.n_x()
            )));
        }
        let ny = self.plant.n_y();
        let mut free = &self.phi * x;
        for k in 0..self.horizon {
            let r = self.reference.at(k0 + k + 1);
            for (i, ri) in r.iter().enumerate() {
                free[k * ny + i] -= ri;
            }
        }
        let linear = &self.gtq2 * &free;
        Ok(FixedStateCost {
            cost: self,
            free_residual: free,
            linear,
        })
    }

    pub fn eval(&self, p: &ControlParameter, x: &DVector<f64>, k0: usize) -> Result<f64> {
        self.check(p.values(), x)?;
        Ok(self.at(x, k0)?.value(p.values()))
    }

    pub fn grad(&self, p: &ControlParameter, x: &DVector<f64>, k0: usize) -> Result<DVector<f64>> {
        self.check(p.values(), x)?;
        Ok(self.at(x, k0)?.gradient(p.values()))
    }

    /// `(lambda_min(H), lambda_max(H))`, computed once at construction.
    pub fn hessian_extremes(&self) -> (f64, f64) {
        self.extremes
    }

    /// Upper bound on the Lipschitz constant of the gradient.
    pub fn lipschitz_bound(&self) -> f64 {
        self.extremes.1
    }

    /// Weighted output tracking error `|y - y_ref(k)|_Q^2` for one sample.
    pub fn tracking_error(&self, y: &DVector<f64>, k: usize) -> f64 {
        let e = y - DVector::from_column_slice(self.reference.at(k));
        (e.transpose() * &self.q_weight * &e)[(0, 0)]
    }
}

/// Free functions mirroring the operation names used throughout the docs.
pub fn eval_cost(cost: &CondensedCost, p: &ControlParameter, x: &DVector<f64>, k0: usize) -> Result<f64> {
    cost.eval(p, x, k0)
}

pub fn grad_cost(
    cost: &CondensedCost,
    p: &ControlParameter,
    x: &DVector<f64>,
    k0: usize,
) -> Result<DVector<f64>> {
    cost.grad(p, x, k0)
}

/// Cost restricted to one `(x, k0)`: a fixed quadratic in `p`.
#[derive(Debug, Clone)]
pub struct FixedStateCost<'a> {
    cost: &'a CondensedCost,
    free_residual: DVector<f64>,
    linear: DVector<f64>,
}

impl FixedStateCost<'_> {
    /// Evaluated on the explicit residual, which avoids the cancellation of
    /// the expanded quadratic form near the optimum.
    pub fn value(&self, p: &DVector<f64>) -> f64 {
        let c = self.cost;
        let (ny, nu) = (c.plant.n_y(), c.plant.n_u());
        let resid = &c.g * p + &self.free_residual;
        let mut j = c.j_floor;
        for k in 0..c.horizon {
            let e = resid.rows(k * ny, ny);
            j += (e.transpose() * &c.q_weight * e)[(0, 0)];
            let u = p.rows(k * nu, nu);
            j += (u.transpose() * &c.r_weight * u)[(0, 0)];
        }
        j
    }

    pub fn gradient(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.cost.hessian * p + &self.linear
    }

    /// Linear term `g` of `grad J = H p + g`.
    pub fn linear_term(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.cost.hessian
    }
}

/// Momentum constant `(sqrt(lmax) - sqrt(lmin)) / (sqrt(lmax) + sqrt(lmin))`.
pub fn momentum_constant(lambda_min: f64, lambda_max: f64) -> Result<f64> {
    if !(lambda_min > 0.0) || !(lambda_max >= lambda_min) || !lambda_max.is_finite() {
        return Err(invalid(format!(
            "need 0 < lambda_min <= lambda_max, got ({lambda_min}, {lambda_max})"
        )));
    }
    let (a, b) = (lambda_max.sqrt(), lambda_min.sqrt());
    Ok((a - b) / (a + b))
}
