#![allow(dead_code)]

use drds_core::system::{AugmentedSystem, LtiModel, Policy};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn double_integrator(dt: f64, nh: usize) -> LtiModel {
    let mut a = DMatrix::identity(4, 4);
    a[(0, 2)] = dt;
    a[(1, 3)] = dt;
    let mut b = DMatrix::zeros(4, 2);
    b[(0, 0)] = dt * dt / 2.0;
    b[(1, 1)] = dt * dt / 2.0;
    b[(2, 0)] = dt;
    b[(3, 1)] = dt;
    LtiModel::time_invariant(a, b, DMatrix::identity(4, 4) * 5e-3, nh).unwrap()
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.random_range(-scale..scale))
}

pub fn random_mat(r: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-scale..scale))
}

pub fn random_psd(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let f = random_mat(r, n, n, 1.0);
    &f * f.transpose()
}

/// Random gain with block `(k, j)` nonzero only for `j <= k`.
pub fn random_causal_gain(r: &mut ChaCha8Rng, aug: &AugmentedSystem, scale: f64) -> DMatrix<f64> {
    let (m, n) = (aug.m, aug.n);
    let mut g = DMatrix::zeros(aug.input_len(), aug.state_len());
    for k in 0..aug.horizon {
        for j in 0..=k {
            g.view_mut((k * m, j * n), (m, n)).copy_from(&random_mat(r, m, n, scale));
        }
    }
    g
}

/// Step-by-step closed loop with `u_k = v_k + sum_j K_kj (x_j - xbar_j)`.
pub fn simulate_recursive(
    model: &LtiModel,
    policy: &Policy,
    x0: &DVector<f64>,
    w: &DVector<f64>,
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let (n, m, d, nh) = (model.state_dim(), model.input_dim(), model.noise_dim(), model.horizon());
    let mut xbar = vec![x0.clone()];
    let mut xs = vec![x0.clone()];
    let mut us = Vec::new();
    for k in 0..nh {
        let v = policy.v.rows(k * m, m).into_owned();
        let mut u = v.clone();
        for j in 0..=k {
            u += policy.k.view((k * m, j * n), (m, n)) * (&xs[j] - &xbar[j]);
        }
        let wk = w.rows(k * d, d).into_owned();
        xbar.push(model.a(k) * &xbar[k] + model.b(k) * &v);
        xs.push(model.a(k) * &xs[k] + model.b(k) * &u + model.d(k) * wk);
        us.push(u);
    }
    (xs, us)
}

pub fn stack(v: &[DVector<f64>]) -> DVector<f64> {
    let mut out = Vec::new();
    for x in v {
        out.extend(x.iter().copied());
    }
    DVector::from_vec(out)
}

/// Short-horizon double-integrator scenario with one position halfspace.
pub fn small_scenario(nh: usize, epsilon: f64) -> drds_core::drds::Scenario {
    use drds_core::drds::{CostWeights, Halfspace, Scenario, TerminalTarget};
    let model = double_integrator(0.3, nh);
    let weights = CostWeights::uniform(DMatrix::identity(4, 4), DMatrix::identity(2, 2), 1.0, nh).unwrap();
    let h = Halfspace::new(DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), -0.5, 0.05, (1..=nh).collect()).unwrap();
    let terminal = TerminalTarget { mean: DVector::zeros(4), cov: DMatrix::identity(4, 4) * 0.01, radius: 0.05 };
    let x0 = DVector::from_vec(vec![-0.4, 0.3, 0.1, 0.0]);
    Scenario::new(model, x0, weights, vec![h], DMatrix::identity(4 * nh, 4 * nh), epsilon, terminal).unwrap()
}
