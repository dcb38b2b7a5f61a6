//! Oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rtmpc::solver::QuadraticObjective;
use rtmpc::ControlParameter;

/// Random strictly convex box QP `0.5 p'Hp + f'p` with a non-trivial box.
pub fn random_box_qp<R: Rng>(rng: &mut R, n: usize) -> (QuadraticObjective, ControlParameter) {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let h = &m * m.transpose() + DMatrix::identity(n, n) * rng.gen_range(0.1..1.0);
    let f = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
    let lower = DVector::from_fn(n, |_, _| rng.gen_range(-1.5..-0.1));
    let upper = DVector::from_fn(n, |_, _| rng.gen_range(0.1..1.5));
    let p0 = DVector::zeros(n);
    let obj = QuadraticObjective::new(h, f, 0.0).unwrap();
    (obj, ControlParameter::new(p0, lower, upper, 1).unwrap())
}

/// Brute-force KKT solution of `min 0.5 p'Hp + f'p` over a box: every
/// coordinate is free, at its lower bound or at its upper bound; each pattern
/// gives a linear system for the free block, and the pattern whose solution
/// is feasible with correctly signed multipliers is the optimum.
pub fn active_set_oracle(h: &DMatrix<f64>, f: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> DVector<f64> {
    let n = f.len();
    let total = 3usize.pow(n as u32);
    let slack = 1e-10;
    for code in 0..total {
        let mut c = code;
        let mut state = vec![0u8; n];
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let mut p = DVector::zeros(n);
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        for i in 0..n {
            match state[i] {
                1 => p[i] = lower[i],
                2 => p[i] = upper[i],
                _ => {}
            }
        }
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let rhs = DVector::from_fn(free.len(), |a, _| {
                let i = free[a];
                -f[i] - (0..n).filter(|j| state[*j] != 0).map(|j| h[(i, j)] * p[j]).sum::<f64>()
            });
            let Some(sol) = hff.lu().solve(&rhs) else { continue };
            for (a, &i) in free.iter().enumerate() {
                p[i] = sol[a];
            }
        }
        let g = h * &p + f;
        let ok = (0..n).all(|i| match state[i] {
            0 => p[i] >= lower[i] - slack && p[i] <= upper[i] + slack,
            1 => g[i] >= -slack,
            _ => g[i] <= slack,
        });
        if ok {
            return p;
        }
    }
    panic!("no KKT point found");
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
