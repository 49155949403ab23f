mod common;

use common::*;
use drds_core::system::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn scalar_model(a: f64, nh: usize) -> LtiModel {
    let one = DMatrix::from_element(1, 1, 1.0);
    LtiModel::time_invariant(DMatrix::from_element(1, 1, a), one.clone(), one, nh).unwrap()
}

#[test]
fn one_step_unrolling() {
    let aug = build_augmented(&scalar_model(2.0, 1));
    assert_eq!(aug.a.as_slice(), &[1.0, 2.0]);
    assert_eq!(aug.b.as_slice(), &[0.0, 1.0]);
    assert_eq!(aug.dist.as_slice(), &[0.0, 1.0]);
}

#[test]
fn two_step_integrator() {
    let aug = build_augmented(&scalar_model(1.0, 2));
    assert_eq!(aug.a, DMatrix::from_element(3, 1, 1.0));
    assert_eq!(aug.b, DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0]));
}

#[test]
fn stacked_maps_are_causal() {
    let aug = build_augmented(&double_integrator(0.3, 20));
    let n = aug.n;
    assert_eq!(aug.a.rows(0, n), DMatrix::<f64>::identity(n, n));
    for k in 0..=aug.horizon {
        for j in k..aug.horizon {
            assert!(aug.b.view((k * n, j * aug.m), (n, aug.m)).iter().all(|&v| v == 0.0), "B block ({k}, {j})");
            assert!(aug.dist.view((k * n, j * aug.d), (n, aug.d)).iter().all(|&v| v == 0.0), "D block ({k}, {j})");
        }
    }
}

#[test]
fn open_loop_rollout_matches_stacked() {
    let model = double_integrator(0.3, 20);
    let aug = build_augmented(&model);
    let mut r = rng(1);
    let x0 = random_vec(&mut r, 4, 2.0);
    let u = random_vec(&mut r, aug.input_len(), 1.0);
    let w = random_vec(&mut r, aug.noise_len(), 1.0);
    let stacked = &aug.a * &x0 + &aug.b * &u + &aug.dist * &w;
    let mut x = x0.clone();
    for k in 0..20 {
        assert!((stacked.rows(4 * k, 4) - &x).amax() < 1e-12);
        x = model.a(k) * &x + model.b(k) * u.rows(2 * k, 2) + model.d(k) * w.rows(4 * k, 4);
    }
    assert!((stacked.rows(80, 4) - x).amax() < 1e-12);
}

#[test]
fn zero_gain_maps_to_zero() {
    let aug = build_augmented(&double_integrator(0.3, 5));
    let l = DMatrix::zeros(aug.input_len(), aug.state_len());
    assert_eq!(gain_l_to_k(&l, &aug).unwrap(), l);
}

#[test]
fn one_step_gain_is_unchanged() {
    // With N = 1, B L only feeds block row 1 from block column 0, and L has no
    // column that reads row 1, so (I + B L)^{-1} leaves L alone.
    let aug = build_augmented(&scalar_model(1.0, 1));
    let l = DMatrix::from_row_slice(1, 2, &[0.7, 0.0]);
    let k = gain_l_to_k(&l, &aug).unwrap();
    assert!((&k - &l).amax() < 1e-15);
    let mut t = DMatrix::identity(2, 2) - &aug.b * &k;
    t = t.try_inverse().unwrap();
    assert!((&k * t - &l).amax() < 1e-15);
}

#[test]
fn gain_round_trip_double_integrator() {
    let aug = build_augmented(&double_integrator(0.3, 5));
    let mut r = rng(2);
    let l = random_causal_gain(&mut r, &aug, 1.0);
    let k = gain_l_to_k(&l, &aug).unwrap();
    let back = gain_k_to_l(&k, &aug).unwrap();
    assert!((&back - &l).amax() < 1e-10);
    let lhs = DMatrix::identity(aug.state_len(), aug.state_len()) + &aug.b * &l;
    let rhs = (DMatrix::identity(aug.state_len(), aug.state_len()) - &aug.b * &k).try_inverse().unwrap();
    assert!((lhs - rhs).amax() < 1e-9);
}

#[test]
fn noncausal_gain_rejected() {
    let aug = build_augmented(&double_integrator(0.3, 3));
    let mut l = DMatrix::zeros(aug.input_len(), aug.state_len());
    l[(0, 4)] = 1.0;
    assert!(matches!(gain_l_to_k(&l, &aug), Err(drds_core::Error::NotCausal { row: 0, col: 1 })));
}

#[test]
fn error_map_edges() {
    let aug = build_augmented(&double_integrator(0.3, 6));
    let mut r = rng(3);
    let l = random_causal_gain(&mut r, &aug, 1.0);
    assert!(error_map(0, &l, &aug).unwrap().iter().all(|&v| v == 0.0));
    let zero = DMatrix::zeros(aug.input_len(), aug.state_len());
    assert_eq!(error_map(6, &zero, &aug).unwrap(), aug.dist_row(6));
    assert!(error_map(7, &l, &aug).is_err());
}

#[test]
fn error_map_matches_closed_loop_chain() {
    let model = scalar_model(0.9, 3);
    let aug = build_augmented(&model);
    let mut r = rng(4);
    let l = random_causal_gain(&mut r, &aug, 1.0);
    let policy = Policy::from_disturbance_feedback(DVector::zeros(3), l.clone(), &aug).unwrap();
    let w = random_vec(&mut r, 3, 1.0);
    let x0 = DVector::zeros(1);
    let (xs, _) = simulate_recursive(&model, &policy, &x0, &w);
    for k in 0..=3 {
        let e = error_map(k, &l, &aug).unwrap() * &w;
        assert!((e[0] - xs[k][0]).abs() < 1e-12, "step {k}");
    }
}

#[test]
fn nominal_trajectory_cases() {
    let aug = build_augmented(&double_integrator(0.3, 4));
    let x0 = DVector::from_vec(vec![-1.0, 2.0, 0.1, -0.1]);
    let v0 = DVector::zeros(aug.input_len());
    assert_eq!(nominal_trajectory(&v0, &x0, &aug).unwrap(), &aug.a * &x0);
    let one = build_augmented(&scalar_model(5.0, 1));
    let xb = nominal_trajectory(&DVector::from_vec(vec![3.0]), &DVector::zeros(1), &one).unwrap();
    assert_eq!(xb.as_slice(), &[0.0, 3.0]);
}

#[test]
fn nominal_trajectory_matches_recursion() {
    let model = double_integrator(0.3, 20);
    let aug = build_augmented(&model);
    let mut r = rng(5);
    let x0 = random_vec(&mut r, 4, 2.0);
    let v = random_vec(&mut r, aug.input_len(), 1.0);
    let xb = nominal_trajectory(&v, &x0, &aug).unwrap();
    let mut x = x0;
    for k in 0..20 {
        x = model.a(k) * &x + model.b(k) * v.rows(2 * k, 2);
        assert!((xb.rows(4 * (k + 1), 4) - &x).amax() < 1e-12);
    }
}

#[test]
fn apply_policy_special_cases() {
    let aug = build_augmented(&double_integrator(0.3, 5));
    let mut r = rng(6);
    let x0 = random_vec(&mut r, 4, 1.0);
    let v = random_vec(&mut r, aug.input_len(), 1.0);
    let l = random_causal_gain(&mut r, &aug, 1.0);
    let p = Policy::from_disturbance_feedback(v.clone(), l, &aug).unwrap();
    let (x, u) = apply_policy(&p, &x0, &DVector::zeros(aug.noise_len()), &aug).unwrap();
    assert_eq!(x, nominal_trajectory(&v, &x0, &aug).unwrap());
    assert_eq!(u, v);
    let open = Policy::open_loop(v.clone(), &aug).unwrap();
    let w = random_vec(&mut r, aug.noise_len(), 1.0);
    let (x, _) = apply_policy(&open, &x0, &w, &aug).unwrap();
    assert!((x - nominal_trajectory(&v, &x0, &aug).unwrap() - &aug.dist * &w).amax() < 1e-14);
}

#[test]
fn time_varying_model_stacks() {
    let mut r = rng(7);
    let a: Vec<_> = (0..3).map(|_| random_mat(&mut r, 2, 2, 1.0)).collect();
    let b: Vec<_> = (0..3).map(|_| random_mat(&mut r, 2, 1, 1.0)).collect();
    let d: Vec<_> = (0..3).map(|_| random_mat(&mut r, 2, 3, 1.0)).collect();
    let model = LtiModel::time_varying(a, b, d).unwrap();
    let aug = build_augmented(&model);
    let l = random_causal_gain(&mut r, &aug, 0.5);
    let p = Policy::from_disturbance_feedback(random_vec(&mut r, 3, 1.0), l, &aug).unwrap();
    let x0 = random_vec(&mut r, 2, 1.0);
    let w = random_vec(&mut r, 9, 1.0);
    let (xs, us) = simulate_recursive(&model, &p, &x0, &w);
    let (x, u) = apply_policy(&p, &x0, &w, &aug).unwrap();
    assert!((x - stack(&xs)).amax() < 1e-10);
    assert!((u - stack(&us)).amax() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gain_round_trip(seed in any::<u64>(), nh in 1usize..7, scale in 0.01f64..3.0) {
        let aug = build_augmented(&double_integrator(0.3, nh));
        let mut r = rng(seed);
        let l = random_causal_gain(&mut r, &aug, scale);
        let back = gain_k_to_l(&gain_l_to_k(&l, &aug).unwrap(), &aug).unwrap();
        prop_assert!((&back - &l).norm() <= 1e-9 * (1.0 + l.norm()));
    }

    #[test]
    fn stacked_equals_recursive(seed in any::<u64>()) {
        let model = double_integrator(0.3, 8);
        let aug = build_augmented(&model);
        let mut r = rng(seed);
        let x0 = random_vec(&mut r, 4, 2.0);
        let v = random_vec(&mut r, aug.input_len(), 1.0);
        let l = random_causal_gain(&mut r, &aug, 1.0);
        let w = random_vec(&mut r, aug.noise_len(), 1.0);
        let p = Policy::from_disturbance_feedback(v, l, &aug).unwrap();
        let (x, u) = apply_policy(&p, &x0, &w, &aug).unwrap();
        let (xs, us) = simulate_recursive(&model, &p, &x0, &w);
        prop_assert!((x - stack(&xs)).amax() <= 1e-10);
        prop_assert!((u - stack(&us)).amax() <= 1e-10);
    }
}
