//! Discrete-time linear plant models: nominal prediction and "real"
//! simulation with an additive state disturbance.

use nalgebra::{DMatrix, DVector};

use crate::control::ControlParameter;
use crate::error::{invalid, Result};

/// `x(k+1) = A x(k) + B u(k)`, `y(k) = C x(k)`, sampled every `tau_c` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    tau_c: f64,
}

impl LinearPlant {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, tau_c: f64) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(invalid("A must be a non-empty square matrix"));
        }
        if b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(invalid(format!(
                "B must have {} rows and at least one column",
                a.nrows()
            )));
        }
        if c.ncols() != a.nrows() || c.nrows() == 0 {
            return Err(invalid(format!(
                "C must have {} columns and at least one row",
                a.nrows()
            )));
        }
        if !(tau_c > 0.0) || !tau_c.is_finite() {
            return Err(invalid(format!("sampling period must be positive, got {tau_c}")));
        }
        Ok(Self { a, b, c, tau_c })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }

    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_y(&self) -> usize {
        self.c.nrows()
    }

    pub fn step(&self, x: &DVector<f64>, u: &[f64]) -> DVector<f64> {
        &self.a * x + &self.b * DVector::from_column_slice(u)
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }

    fn check_rollout(&self, x: &DVector<f64>, p: &ControlParameter, j: usize) -> Result<()> {
        if x.len() != self.n_x() {
            return Err(invalid(format!(
                "state has length {}, plant expects {}",
                x.len(),
                self.n_x()
            )));
        }
        if p.n_u() != self.n_u() {
            return Err(invalid(format!(
                "parameter carries {} inputs per sample, plant expects {}",
                p.n_u(),
                self.n_u()
            )));
        }
        if j == 0 || j > p.horizon() {
            return Err(invalid(format!(
                "step count {j} outside 1..={}",
                p.horizon()
            )));
        }
        Ok(())
    }

    /// States `x(k+1), ..., x(k+j)` of the real system, with `w(k0+i)` added
    /// after the `i`-th step.
    pub fn rollout(
        &self,
        x: &DVector<f64>,
        p: &ControlParameter,
        j: usize,
        w: &DisturbanceSequence,
        k0: usize,
    ) -> Result<Vec<DVector<f64>>> {
        self.check_rollout(x, p, j)?;
        if w.dim() != self.n_x() {
            return Err(invalid("disturbance dimension does not match the state"));
        }
        let mut out = Vec::with_capacity(j);
        let mut xi = x.clone();
        for i in 0..j {
            xi = self.step(&xi, p.sample(i));
            if let Some(wi) = w.get(k0 + i) {
                xi += wi;
            }
            out.push(xi.clone());
        }
        Ok(out)
    }
}

/// Exact zero-order-hold discretization of `x1' = x2, x2' = x3, x3' = u`
/// with output `y = x1`.
pub fn discretize_triple_integrator(tau_c: f64) -> Result<LinearPlant> {
    if !(tau_c > 0.0) || !tau_c.is_finite() {
        return Err(invalid(format!("sampling period must be positive, got {tau_c}")));
    }
    let t = tau_c;
    let t2 = t * t / 2.0;
    let t3 = t * t * t / 6.0;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(3, 3, &[
        1.0, t,   t2,
        0.0, 1.0, t,
        0.0, 0.0, 1.0,
    ]);
    let b = DMatrix::from_column_slice(3, 1, &[t3, t2, t]);
    let c = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
    LinearPlant::new(a, b, c, tau_c)
}

/// Nominal model state after `j` steps under the first `j` samples of `p`.
pub fn predict(
    plant: &LinearPlant,
    x: &DVector<f64>,
    p: &ControlParameter,
    j: usize,
) -> Result<DVector<f64>> {
    plant.check_rollout(x, p, j)?;
    let mut xi = x.clone();
    for i in 0..j {
        xi = plant.step(&xi, p.sample(i));
    }
    Ok(xi)
}

/// Like [`predict`] but with `w(k0 + i)` added to the state after step `i`.
pub fn simulate_real(
    plant: &LinearPlant,
    x: &DVector<f64>,
    p: &ControlParameter,
    j: usize,
    w: &DisturbanceSequence,
    k0: usize,
) -> Result<DVector<f64>> {
    let mut states = plant.rollout(x, p, j, w, k0)?;
    Ok(states.pop().expect("rollout returns j >= 1 states"))
}

/// Additive state disturbance per basic period, indexed by absolute step.
/// Steps past the end of the table are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisturbanceSequence {
    dim: usize,
    values: Vec<DVector<f64>>,
}

impl DisturbanceSequence {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            values: Vec::new(),
        }
    }

    pub fn from_vectors(dim: usize, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.iter().any(|v| v.len() != dim) {
            return Err(invalid(format!("every disturbance vector must have length {dim}")));
        }
        Ok(Self { dim, values })
    }

    pub fn constant(value: DVector<f64>, len: usize) -> Self {
        Self {
            dim: value.len(),
            values: vec![value; len],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize) -> Option<&DVector<f64>> {
        self.values.get(k)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|&x| x == 0.0))
    }
}
