//! The decision vector of the MPC problem: a stacked piecewise-constant
//! control sequence `(u(1), ..., u(N))` with element-wise box bounds.

use nalgebra::DVector;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ControlParameter {
    values: DVector<f64>,
    lower: DVector<f64>,
    upper: DVector<f64>,
    n_u: usize,
}

impl ControlParameter {
    /// Builds a parameter from explicit values and bounds. Values are not
    /// projected; use [`ControlParameter::project`] for that.
    pub fn new(
        values: DVector<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
        n_u: usize,
    ) -> Result<Self> {
        if n_u == 0 {
            return Err(invalid("control dimension must be positive"));
        }
        let m = values.len();
        if m == 0 || !m.is_multiple_of(n_u) {
            return Err(invalid(format!(
                "parameter length {m} is not a positive multiple of n_u = {n_u}"
            )));
        }
        if lower.len() != m || upper.len() != m {
            return Err(invalid("bound vectors must match the parameter length"));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(invalid("lower bound exceeds upper bound"));
        }
        Ok(Self {
            values,
            lower,
            upper,
            n_u,
        })
    }

    /// Constant sequence `fill` over `horizon` samples with the same scalar
    /// box `[lo, hi]` on every entry.
    pub fn uniform(horizon: usize, n_u: usize, lo: f64, hi: f64, fill: f64) -> Result<Self> {
        let m = horizon * n_u;
        Self::new(
            DVector::from_element(m, fill),
            DVector::from_element(m, lo),
            DVector::from_element(m, hi),
            n_u,
        )
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    /// Number of control samples N.
    pub fn horizon(&self) -> usize {
        self.values.len() / self.n_u
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Control applied during the `i`-th future period (0-based).
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values.as_slice()[i * self.n_u..(i + 1) * self.n_u]
    }

    /// Same bounds, new values.
    pub fn with_values(&self, values: DVector<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(invalid(format!(
                "expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        Ok(Self {
            values,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            n_u: self.n_u,
        })
    }

    pub fn is_feasible(&self) -> bool {
        self.values
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (l, u))| l <= v && v <= u)
    }

    /// Clamp the values into the box in place.
    pub fn project(&mut self) {
        for ((v, l), u) in self
            .values
            .iter_mut()
            .zip(self.lower.iter())
            .zip(self.upper.iter())
        {
            *v = v.clamp(*l, *u);
        }
    }
}
