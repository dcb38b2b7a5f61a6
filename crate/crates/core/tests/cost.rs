use nalgebra::DVector;
use proptest::prelude::*;
use rtmpc::{
    discretize_triple_integrator, eval_cost, grad_cost, momentum_constant, CondensedCost, ControlParameter,
    DisturbanceSequence, ReferenceSignal,
};

fn cost(horizon: usize, reference: ReferenceSignal) -> CondensedCost {
    let plant = discretize_triple_integrator(0.02).unwrap();
    CondensedCost::scalar(plant, horizon, 100.0, 1.0, 1.0, reference).unwrap()
}

fn square(horizon: usize) -> CondensedCost {
    cost(horizon, ReferenceSignal::square_wave(1.0, 7, 400).unwrap())
}

fn param(values: Vec<f64>) -> ControlParameter {
    let n = values.len();
    ControlParameter::new(
        DVector::from_vec(values),
        DVector::from_element(n, -1.0),
        DVector::from_element(n, 1.0),
        1,
    )
    .unwrap()
}

// The cost computed the long way: simulate, then sum the weighted errors.
fn simulated_cost(c: &CondensedCost, p: &ControlParameter, x: &DVector<f64>, k0: usize) -> f64 {
    let states = c
        .plant()
        .rollout(x, p, c.horizon(), &DisturbanceSequence::zero(3), 0)
        .unwrap();
    let mut j = c.j_floor();
    for (i, s) in states.iter().enumerate() {
        let e = s[0] - c.reference().at(k0 + i + 1)[0];
        let u = p.sample(i)[0];
        j += 100.0 * e * e + u * u;
    }
    j
}

fn state() -> impl Strategy<Value = DVector<f64>> {
    prop::array::uniform3(-2.0f64..2.0).prop_map(|a| DVector::from_column_slice(&a))
}

proptest! {
    #[test]
    fn condensed_matches_simulation(
        u in prop::collection::vec(-1.0f64..1.0, 25),
        x in state(),
        k0 in 0usize..40,
    ) {
        let c = square(25);
        let p = param(u);
        let a = eval_cost(&c, &p, &x, k0).unwrap();
        let b = simulated_cost(&c, &p, &x, k0);
        prop_assert!((a - b).abs() <= 1e-10 * b.abs());
    }

    #[test]
    fn cost_never_below_floor(u in prop::collection::vec(-1.0f64..1.0, 25), x in state(), k0 in 0usize..40) {
        let c = square(25);
        prop_assert!(eval_cost(&c, &param(u), &x, k0).unwrap() >= c.j_floor());
    }

    #[test]
    fn gradient_matches_central_differences(
        u in prop::collection::vec(-1.0f64..1.0, 20),
        x in state(),
        k0 in 0usize..40,
    ) {
        let c = square(20);
        let p = param(u);
        let g = grad_cost(&c, &p, &x, k0).unwrap();
        let h = 1e-5;
        for i in 0..20 {
            let mut up = p.values().clone();
            let mut dn = p.values().clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (c.eval(&p.with_values(up).unwrap(), &x, k0).unwrap()
                - c.eval(&p.with_values(dn).unwrap(), &x, k0).unwrap())
                / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "i={} fd={} g={}", i, fd, g[i]);
        }
    }

    #[test]
    fn gradient_is_lipschitz(
        a in prop::collection::vec(-1.0f64..1.0, 30),
        b in prop::collection::vec(-1.0f64..1.0, 30),
        x in state(),
    ) {
        let c = square(30);
        let (pa, pb) = (param(a), param(b));
        let dg = grad_cost(&c, &pa, &x, 3).unwrap() - grad_cost(&c, &pb, &x, 3).unwrap();
        let dp = pa.values() - pb.values();
        prop_assert!(dg.norm() <= c.lipschitz_bound() * dp.norm() * (1.0 + 1e-9));
    }

    #[test]
    fn cost_is_quadratic_along_lines(
        a in prop::collection::vec(-1.0f64..1.0, 15),
        b in prop::collection::vec(-1.0f64..1.0, 15),
        x in state(),
    ) {
        // J(a + t d) is exactly quadratic in t with curvature d' H d.
        let c = square(15);
        let (pa, pb) = (param(a), param(b));
        let d = pb.values() - pa.values();
        let f = |t: f64| c.eval(&pa.with_values(pa.values() + &d * t).unwrap(), &x, 0).unwrap();
        let second = f(1.0) - 2.0 * f(0.0) + f(-1.0);
        let curv = d.dot(&(c.hessian() * &d));
        prop_assert!((second - curv).abs() <= 1e-8 * (1.0 + curv.abs()));
    }
}

#[test]
fn benchmark_extremes_match_dense_eigensolver() {
    for horizon in [20, 100, 200] {
        let c = square(horizon);
        let eig = c.hessian().clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = c.hessian_extremes();
        assert!((lo - eig.min()).abs() <= 1e-6 * eig.min(), "N={horizon}: {lo} vs {}", eig.min());
        assert!((hi - eig.max()).abs() <= 1e-6 * eig.max(), "N={horizon}: {hi} vs {}", eig.max());
    }
}

#[test]
fn hessian_is_state_and_reference_free() {
    let a = square(30);
    let b = cost(30, ReferenceSignal::constant(vec![0.3]).unwrap());
    assert_eq!(a.hessian(), b.hessian());
    assert!(a.hessian().transpose() == *a.hessian());
}

#[test]
fn lower_bound_on_spectrum_is_twice_input_weight() {
    // H = 2 (G'QG + R I) >= 2R; the bound is nearly tight for long horizons.
    let (lo, _) = square(200).hessian_extremes();
    assert!((2.0 - 1e-9..2.0 + 1e-3).contains(&lo));
    let c = momentum_constant(2.0, 2.0).unwrap();
    assert_eq!(c, 0.0);
}

#[test]
fn reference_hold_past_schedule_end() {
    let r = ReferenceSignal::new(vec![(0, vec![1.0]), (10, vec![-2.0])]).unwrap();
    assert_eq!(r.at(9), &[1.0]);
    assert_eq!(r.at(10), &[-2.0]);
    assert_eq!(r.at(1_000_000), &[-2.0]);
    let c = cost(5, r);
    let p = param(vec![0.0; 5]);
    let x = DVector::from_column_slice(&[-2.0, 0.0, 0.0]);
    assert_eq!(eval_cost(&c, &p, &x, 500).unwrap(), c.j_floor());
}
