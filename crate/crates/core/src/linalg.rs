//! Extreme eigenvalues of small dense symmetric matrices.
//!
//! The matrix is reduced to tridiagonal form by Householder reflections, then
//! each extreme eigenvalue is isolated by bisection on the Sturm sequence
//! count. Bisection runs until the bracket stops shrinking, so the result is
//! accurate to a few ulps of the spectral radius regardless of how tightly
//! the spectrum is clustered.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Diagonal and sub-diagonal of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

pub fn tridiagonalize(m: &DMatrix<f64>) -> Result<Tridiagonal> {
    let n = m.nrows();
    if n == 0 || !m.is_square() {
        return Err(invalid("expected a non-empty square matrix"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let mut a = m.clone();
    for k in 0..n.saturating_sub(2) {
        let norm = a.view((k + 1, k), (n - k - 1, 1)).norm();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        let mut v = a.view((k + 1, k), (n - k - 1, 1)).clone_owned();
        v[0] -= alpha;
        let vn = v.norm();
        if vn == 0.0 {
            continue;
        }
        v /= vn;

        // A' = (I - 2vv^T) A (I - 2vv^T) = A - 2 v w^T - 2 w v^T, w = Av - (v^T A v) v
        let mut sub = a.view_mut((k + 1, k + 1), (n - k - 1, n - k - 1));
        let p = &sub * &v;
        let kappa = v.dot(&p);
        let w = p - &v * kappa;
        sub -= &v * w.transpose() * 2.0;
        sub -= &w * v.transpose() * 2.0;

        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
            a[(k, i)] = 0.0;
        }
    }
    Ok(Tridiagonal {
        diag: (0..n).map(|i| a[(i, i)]).collect(),
        off: (0..n - 1).map(|i| a[(i + 1, i)]).collect(),
    })
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for (i, d) in self.diag.iter().enumerate() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] / q };
            q = d - x - coupling;
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based).
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * (lo.abs().max(hi.abs()) + 1.0);
        lo -= pad;
        hi += pad;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return hi;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
}

/// `(lambda_min, lambda_max)` of a symmetric matrix. Only the lower triangle
/// is trusted to be meaningful; the matrix is assumed symmetric.
pub fn symmetric_extremes(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let t = tridiagonalize(m)?;
    let n = t.diag.len();
    Ok((t.eigenvalue(0), t.eigenvalue(n - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_matrix() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0, 7.5, 2.0]));
        let (lo, hi) = symmetric_extremes(&m).unwrap();
        assert_relative_eq!(lo, -1.0, max_relative = 1e-14);
        assert_relative_eq!(hi, 7.5, max_relative = 1e-14);
    }

    #[test]
    fn scalar_and_two_by_two() {
        let (lo, hi) = symmetric_extremes(&DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_eq!((lo, hi), (4.0, 4.0));
        // eigenvalues 1 and 3
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (lo, hi) = symmetric_extremes(&m).unwrap();
        assert_relative_eq!(lo, 1.0, max_relative = 1e-14);
        assert_relative_eq!(hi, 3.0, max_relative = 1e-14);
    }

    #[test]
    fn random_symmetric_matches_dense_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3usize, 8, 25, 60] {
            let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let m = &g + g.transpose();
            let eig = m.clone().symmetric_eigen().eigenvalues;
            let (lo, hi) = symmetric_extremes(&m).unwrap();
            assert_relative_eq!(lo, eig.min(), epsilon = 1e-12, max_relative = 1e-10);
            assert_relative_eq!(hi, eig.max(), epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn sturm_count_is_monotone() {
        let m = DMatrix::from_fn(10, 10, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let t = tridiagonalize(&m).unwrap();
        let mut prev = 0;
        for s in -10..=30 {
            let c = t.count_below(s as f64 * 0.1);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(prev, 10);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DMatrix::identity(3, 3);
        m[(1, 1)] = f64::NAN;
        assert!(symmetric_extremes(&m).is_err());
    }
}
