use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rtmpc::plant::predict;
use rtmpc::{discretize_triple_integrator, ControlParameter, DisturbanceSequence};

fn param(values: &[f64]) -> ControlParameter {
    ControlParameter::new(
        DVector::from_column_slice(values),
        DVector::from_element(values.len(), -10.0),
        DVector::from_element(values.len(), 10.0),
        1,
    )
    .unwrap()
}

// Closed-form solution of the continuous triple integrator under a constant
// input held for `t` seconds.
fn continuous(x: &[f64; 3], u: f64, t: f64) -> [f64; 3] {
    [
        x[0] + x[1] * t + x[2] * t * t / 2.0 + u * t.powi(3) / 6.0,
        x[1] + x[2] * t + u * t * t / 2.0,
        x[2] + u * t,
    ]
}

proptest! {
    #[test]
    fn one_step_matches_continuous_solution(
        tau in 0.001f64..0.5,
        x in prop::array::uniform3(-5.0f64..5.0),
        u in -1.0f64..1.0,
    ) {
        let plant = discretize_triple_integrator(tau).unwrap();
        let next = plant.step(&DVector::from_column_slice(&x), &[u]);
        let want = continuous(&x, u, tau);
        for i in 0..3 {
            prop_assert!((next[i] - want[i]).abs() <= 1e-12 * (1.0 + want[i].abs()));
        }
    }

    #[test]
    fn semigroup(tau in 0.005f64..0.1, j in 1usize..20, x in prop::array::uniform3(-3.0f64..3.0)) {
        let plant = discretize_triple_integrator(tau).unwrap();
        let big = discretize_triple_integrator(tau * j as f64).unwrap();
        let mut a = DMatrix::identity(3, 3);
        for _ in 0..j {
            a = plant.a() * a;
        }
        prop_assert!((a - big.a()).amax() <= 1e-12 * (1.0 + big.a().amax()));
        // Zero input: j small steps equal one long step.
        let x = DVector::from_column_slice(&x);
        let p = param(&vec![0.0; j]);
        let end = predict(&plant, &x, &p, j).unwrap();
        let direct = big.step(&x, &[0.0]);
        prop_assert!((end - direct).amax() <= 1e-10);
    }

    #[test]
    fn rollout_is_linear(
        seq_a in prop::collection::vec(-1.0f64..1.0, 8),
        seq_b in prop::collection::vec(-1.0f64..1.0, 8),
        xa in prop::array::uniform3(-2.0f64..2.0),
        xb in prop::array::uniform3(-2.0f64..2.0),
        alpha in -2.0f64..2.0,
    ) {
        let plant = discretize_triple_integrator(0.02).unwrap();
        let (xa, xb) = (DVector::from_column_slice(&xa), DVector::from_column_slice(&xb));
        let mix: Vec<f64> = seq_a.iter().zip(&seq_b).map(|(a, b)| a + alpha * b).collect();
        let lhs = predict(&plant, &(&xa + &xb * alpha), &param(&mix), 8).unwrap();
        let rhs = predict(&plant, &xa, &param(&seq_a), 8).unwrap()
            + predict(&plant, &xb, &param(&seq_b), 8).unwrap() * alpha;
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    #[test]
    fn zero_disturbance_rollout_equals_prediction(
        seq in prop::collection::vec(-1.0f64..1.0, 12),
        j in 1usize..=12,
        k0 in 0usize..100,
    ) {
        let plant = discretize_triple_integrator(0.02).unwrap();
        let x = DVector::from_column_slice(&[0.3, -0.1, 0.2]);
        let p = param(&seq);
        let states = plant.rollout(&x, &p, j, &DisturbanceSequence::zero(3), k0).unwrap();
        prop_assert_eq!(states.len(), j);
        prop_assert_eq!(states.last().unwrap(), &predict(&plant, &x, &p, j).unwrap());
    }
}

#[test]
fn constant_disturbance_accumulates() {
    let plant = discretize_triple_integrator(0.02).unwrap();
    let w = DVector::from_column_slice(&[0.0, 0.0, 0.01]);
    let x = DVector::zeros(3);
    let p = param(&[0.0; 5]);
    let states = plant.rollout(&x, &p, 5, &DisturbanceSequence::constant(w, 100), 0).unwrap();
    // x3 integrates the kick, x2 and x1 follow the discrete sums.
    let x3: Vec<f64> = states.iter().map(|s| s[2]).collect();
    for (i, v) in x3.iter().enumerate() {
        assert!((v - 0.01 * (i + 1) as f64).abs() < 1e-15);
    }
}

#[test]
fn disturbance_past_table_end_is_zero() {
    let plant = discretize_triple_integrator(0.02).unwrap();
    let w = DisturbanceSequence::constant(DVector::from_element(3, 1.0), 3);
    let x = DVector::zeros(3);
    let p = param(&[0.0; 5]);
    let late = plant.rollout(&x, &p, 5, &w, 3).unwrap();
    assert!(late.iter().all(|s| s.amax() == 0.0));
}

#[test]
fn rejects_bad_inputs() {
    assert!(discretize_triple_integrator(0.0).is_err());
    assert!(discretize_triple_integrator(f64::NAN).is_err());
    let plant = discretize_triple_integrator(0.02).unwrap();
    let p = param(&[0.0; 4]);
    assert!(predict(&plant, &DVector::zeros(3), &p, 5).is_err());
    assert!(predict(&plant, &DVector::zeros(2), &p, 2).is_err());
}
