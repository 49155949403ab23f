use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use drds_core::drds::{CostWeights, Halfspace, Scenario, TerminalTarget};
use drds_core::noise_sim::{sample_noise_with, simulate_closed_loop_with, NoiseKind, NoiseModel};
use drds_core::system::{build_augmented, LtiModel, Policy};
use drds_core::Exec;
use nalgebra::{DMatrix, DVector};
use std::hint::black_box;

/// Double integrator over 20 steps with a fixed, hand-made feedback gain.
fn setup() -> (Scenario, Policy) {
    let dt = 0.3;
    let mut a = DMatrix::identity(4, 4);
    a[(0, 2)] = dt;
    a[(1, 3)] = dt;
    let mut b = DMatrix::zeros(4, 2);
    b[(0, 0)] = dt * dt / 2.0;
    b[(1, 1)] = dt * dt / 2.0;
    b[(2, 0)] = dt;
    b[(3, 1)] = dt;
    let nh = 20;
    let model = LtiModel::time_invariant(a, b, DMatrix::identity(4, 4) * 5e-3, nh).unwrap();
    let weights = CostWeights::uniform(DMatrix::identity(4, 4), DMatrix::identity(2, 2), 1.0, nh).unwrap();
    let hs = Halfspace::new(DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), -0.2, 0.05, (8..=nh).collect()).unwrap();
    let terminal = TerminalTarget { mean: DVector::zeros(4), cov: DMatrix::identity(4, 4) * 1e-3, radius: 0.05 };
    let x0 = DVector::from_vec(vec![-1.0, 2.0, 0.1, -0.1]);
    let sc = Scenario::new(model, x0, weights, vec![hs], DMatrix::identity(80, 80), 15.0, terminal).unwrap();
    let aug = build_augmented(&sc.model);
    let l = DMatrix::from_fn(aug.input_len(), aug.state_len(), |r, c| {
        let (k, j) = (r / 2, c / 4);
        if j >= 1 && j <= k && r % 2 == c % 4 { -0.5 / (1 + k - j) as f64 } else { 0.0 }
    });
    let policy = Policy::from_disturbance_feedback(DVector::zeros(aug.input_len()), l, &aug).unwrap();
    (sc, policy)
}

fn execs() -> Vec<(&'static str, Exec)> {
    let mut v = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Exec::Parallel));
    v
}

fn sampling(c: &mut Criterion) {
    let (sc, policy) = setup();
    let model = NoiseModel::new(NoiseKind::StudentT { dof: 3.0 }, sc.noise_cov().clone(), 7).unwrap();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for (name, exec) in execs() {
        group.bench_with_input(BenchmarkId::new("sample_and_rollout", name), &exec, |bch, &exec| {
            bch.iter(|| {
                let w = sample_noise_with(&model, 0, 5000, exec).unwrap();
                black_box(simulate_closed_loop_with(&policy, &sc, &w, exec).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, sampling);
criterion_main!(benches);
