mod common;

use common::{double_integrator, small_scenario};
use drds_conic::{ConeKind, ConicProblem, Settings, Status};
use drds_core::ambiguity::{drcvar_value, pushforward_radius, GaussianMoments, PushforwardMode};
use drds_core::drds::{
    build_baseline, build_drds, cost_form, policy_cost, solve_baseline_cs, solve_drds, AssemblyOptions, CostForm,
    CostWeights, Halfspace, Scenario, TerminalTarget,
};
use drds_core::linalg::{max_singular, min_eig};
use drds_core::system::{build_augmented, error_map, nominal_trajectory, LtiModel};
use drds_core::{drds::worstcase_quadratic_value, Error};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

fn count(p: &ConicProblem, kind: ConeKind) -> usize {
    p.blocks().iter().filter(|b| b.kind == kind).count()
}

fn section_scenario(eps: f64) -> Scenario {
    let nh = 20;
    let weights = CostWeights::uniform(DMatrix::identity(4, 4), DMatrix::identity(2, 2), 1.0, nh).unwrap();
    let e = |s: f64| DVector::from_vec(vec![s, 0.0, 0.0, 0.0]);
    let h1 = Halfspace::new(e(-1.0), -0.2, 0.05, (8..=nh).collect()).unwrap();
    let h2 = Halfspace::new(e(1.0), -0.2, 0.05, (8..=nh).collect()).unwrap();
    let terminal = TerminalTarget { mean: DVector::zeros(4), cov: DMatrix::identity(4, 4) * (0.1f64 / 3.0).powi(2), radius: 0.05 };
    let x0 = DVector::from_vec(vec![-1.0, 2.0, 0.1, -0.1]);
    Scenario::new(double_integrator(0.3, nh), x0, weights, vec![h1, h2], DMatrix::identity(80, 80), eps, terminal).unwrap()
}

#[test]
fn block_structure() {
    let sc = section_scenario(15.0);
    let p = build_drds(&sc, AssemblyOptions::default()).unwrap().problem;
    // 20 input epigraphs and 2 x 13 DR-CVaR cones; 13 rho blocks, one cost block, two terminal blocks.
    assert_eq!(count(&p, ConeKind::SecondOrder), 20 + 26);
    assert_eq!(count(&p, ConeKind::Psd), 13 + 1 + 2);
    assert_eq!(count(&p, ConeKind::Zero), 1);
    let split = build_drds(&sc, AssemblyOptions { cost_form: CostForm::Split, ..Default::default() }).unwrap().problem;
    assert_eq!(count(&split, ConeKind::Psd), 13 + 2 + 2);
    let cost_block = p.blocks().iter().filter_map(|b| b.psd_order()).max().unwrap();
    assert_eq!(cost_block, 2 * 80 + 40);

    let b = build_baseline(&sc).unwrap().problem;
    assert_eq!(count(&b, ConeKind::SecondOrder), 20 + 26 + 1);
    assert_eq!(count(&b, ConeKind::Psd), 1);

    let p0 = build_drds(&sc.with_epsilon(0.0).unwrap(), AssemblyOptions::default()).unwrap().problem;
    assert_eq!(count(&p0, ConeKind::Psd), 1);
    assert_eq!(count(&p0, ConeKind::SecondOrder), 20 + 26 + 1);
}

#[test]
fn normal_quantile() {
    let z = Normal::standard().inverse_cdf(0.95);
    assert!((z - 1.64485).abs() < 1e-5);
}

/// One-dimensional integrator over two steps with no halfspaces. Only `L[1, 1]`
/// is free, so the optimum can be found by a line search over the dual evaluator.
#[test]
fn scalar_program_matches_line_search() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let model = LtiModel::time_invariant(one.clone(), one.clone(), one.clone(), 2).unwrap();
    let weights = CostWeights::uniform(one.clone() * 2.0, one.clone() * 0.5, 1.0, 2).unwrap();
    let terminal = TerminalTarget { mean: DVector::zeros(1), cov: one.clone() * 10.0, radius: 10.0 };
    let x0 = DVector::from_element(1, 0.7);
    let eps = 0.3;
    let sc = Scenario::new(model, x0, weights.clone(), vec![], DMatrix::identity(2, 2), eps, terminal).unwrap();
    let syn = solve_drds(&sc, &Settings::default()).unwrap();

    let aug = build_augmented(&sc.model);
    let value = |g: f64| {
        let mut l = DMatrix::zeros(2, 3);
        l[(1, 1)] = g;
        worstcase_quadratic_value(&cost_form(&l, &aug, &weights), sc.noise_cov(), eps).unwrap()
    };
    let (mut a, mut b) = (-5.0, 5.0);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if value(m1) < value(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    // The inputs must cancel x0 in mean, so the input term is at least 0.7.
    let oracle = 0.7 + value(0.5 * (a + b));
    assert!((syn.diagnostics.objective - oracle).abs() < 1e-4 * (1.0 + oracle), "{} vs {oracle}", syn.diagnostics.objective);
    assert!((syn.policy.l[(1, 1)] - 0.5 * (a + b)).abs() < 1e-3);
}

#[test]
fn objective_equals_policy_cost() {
    let sc = small_scenario(4, 0.5);
    let syn = solve_drds(&sc, &Settings::default()).unwrap();
    let aug = build_augmented(&sc.model);
    let direct = policy_cost(&syn.policy, &sc, &aug).unwrap();
    let obj = syn.diagnostics.objective;
    assert!((obj - direct).abs() < 1e-4 * (1.0 + obj.abs()), "{obj} vs {direct}");
    assert!(syn.diagnostics.max_violation < 1e-6);
}

#[test]
fn objective_grows_with_radius() {
    let sc = small_scenario(4, 0.0);
    let mut last = f64::NEG_INFINITY;
    for eps in [0.0, 0.5, 2.0] {
        let obj = solve_drds(&sc.with_epsilon(eps).unwrap(), &Settings::default()).unwrap().diagnostics.objective;
        assert!(obj >= last - 1e-6, "eps {eps}: {obj} < {last}");
        last = obj;
    }
}

#[test]
fn solved_policy_satisfies_constraints() {
    let sc = small_scenario(4, 0.5);
    let syn = solve_drds(&sc, &Settings::default()).unwrap();
    let aug = build_augmented(&sc.model);
    let p = &syn.policy;
    let xbar = nominal_trajectory(&p.v, &sc.x0, &aug).unwrap();
    let eps = sc.epsilon();
    for h in &sc.halfspaces {
        for (&k, &gamma) in h.steps.iter().zip(&h.risk) {
            let lk = error_map(k, &p.l, &aug).unwrap();
            let center = GaussianMoments { mean: xbar.rows(k * 4, 4).into_owned(), cov: &lk * sc.noise_cov() * lk.transpose() };
            let radius = pushforward_radius(&lk, eps, PushforwardMode::PaperExact);
            let value = drcvar_value(&h.normal, h.offset, &center, radius, gamma).unwrap();
            assert!(value <= 1e-6, "step {k}: {value}");
        }
    }
    let ln = error_map(4, &p.l, &aug).unwrap();
    assert!((xbar.rows(16, 4) - &sc.terminal.mean).amax() < 1e-6);
    let cov = &ln * sc.noise_cov() * ln.transpose();
    assert!(min_eig(&(&sc.terminal.cov - cov)) > -1e-7);
    assert!(eps * max_singular(&ln).powi(2) <= sc.terminal.radius + 1e-7);
}

#[test]
fn baseline_ignores_radius_and_meets_chance_constraints() {
    let sc = small_scenario(4, 0.5);
    let a = solve_baseline_cs(&sc, &Settings::default()).unwrap();
    let b = solve_baseline_cs(&sc.with_epsilon(5.0).unwrap(), &Settings::default()).unwrap();
    assert!((a.diagnostics.objective - b.diagnostics.objective).abs() < 1e-6 * (1.0 + a.diagnostics.objective.abs()));
    let aug = build_augmented(&sc.model);
    let xbar = nominal_trajectory(&a.policy.v, &sc.x0, &aug).unwrap();
    for h in &sc.halfspaces {
        for (&k, &gamma) in h.steps.iter().zip(&h.risk) {
            let lk = error_map(k, &a.policy.l, &aug).unwrap();
            let s = (h.normal.transpose() * &lk * sc.noise_cov() * lk.transpose() * &h.normal)[(0, 0)].sqrt();
            let z = Normal::standard().inverse_cdf(1.0 - gamma);
            assert!(h.normal.dot(&xbar.rows(k * 4, 4)) + h.offset + z * s <= 1e-6);
        }
    }
}

fn expect_infeasible(r: drds_core::Result<drds_core::drds::Synthesis>) {
    match r {
        Err(Error::Solver { status, .. }) => assert_ne!(status, Status::Optimal),
        Err(e) => panic!("unexpected error {e}"),
        Ok(s) => panic!("solved with objective {}", s.diagnostics.objective),
    }
}

#[test]
fn tiny_terminal_radius_is_infeasible() {
    let mut sc = small_scenario(3, 0.5);
    sc.terminal.radius = 1e-9;
    expect_infeasible(solve_drds(&sc, &Settings::default()));
}

#[test]
fn unreachable_terminal_mean_is_infeasible() {
    // One step cannot move the velocity and the position independently.
    let mut sc = small_scenario(1, 0.5);
    sc.terminal.mean = DVector::from_vec(vec![0.0, 0.0, 3.0, -3.0]);
    expect_infeasible(solve_drds(&sc, &Settings::default()));
}

#[test]
fn zero_radius_with_positive_noise_radius_is_rejected() {
    let mut sc = small_scenario(3, 0.5);
    sc.terminal.radius = 0.0;
    assert!(matches!(build_drds(&sc, AssemblyOptions::default()), Err(Error::Parameter { .. })));
}
