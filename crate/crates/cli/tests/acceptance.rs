//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use drds_cli::commands::{simulate, solve, Simulation};
use drds_cli::policy_file::PolicyFile;
use drds_cli::scenario_file::{load_scenario, LoadedScenario};
use drds_cli::Options;
use drds_core::ambiguity::{cvar_coeff, drcvar_value, gaussian_w2, gelbrich_distance, maximal_scale, GaussianMoments};
use drds_core::drds::{worstcase_quadratic_value, Synthesis};
use drds_core::linalg::{max_eig, max_singular};
use drds_core::noise_sim::{autocovariance, DrydenChannel, DrydenParams, Quadrature};
use drds_core::system::{build_augmented, error_map, gain_k_to_l, gain_l_to_k, nominal_trajectory, LtiModel};
use drds_oracles::{drcvar_polar, worstcase_2x2, worstcase_scalar};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn failed(detail: impl std::fmt::Display) -> Outcome {
    outcome(false, detail.to_string())
}

fn rand_mat(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

fn rand_psd(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let f = rand_mat(r, n, n);
    &f * f.transpose() + DMatrix::identity(n, n) * 0.05
}

fn rand_gaussian(r: &mut ChaCha8Rng, n: usize) -> GaussianMoments {
    GaussianMoments::new(DVector::from_fn(n, |_, _| r.random_range(-2.0..2.0)), rand_psd(r, n)).unwrap()
}

struct Solved {
    pf: PolicyFile,
    syn: Synthesis,
    seconds: f64,
}

fn solve_with(loaded: &LoadedScenario, controller: &str) -> Result<Solved, String> {
    let opts = Options { controller: controller.into(), ..Default::default() };
    let start = Instant::now();
    let (pf, syn) = solve(loaded, &opts, &mut std::io::sink()).map_err(|e| format!("{controller}: {e}"))?;
    Ok(Solved { pf, syn, seconds: start.elapsed().as_secs_f64() })
}

fn rollout(loaded: &LoadedScenario, pf: &PolicyFile, noise: &str) -> Result<Simulation, String> {
    let opts = Options { noise: Some(noise.into()), samples: Some(5000), ..Default::default() };
    simulate(loaded, pf, &opts, &mut std::io::sink()).map_err(|e| e.to_string())
}

fn terminal_steering(loaded: &LoadedScenario, dr: &Solved) -> Outcome {
    let sc = &loaded.scenario;
    let aug = build_augmented(&sc.model);
    let nh = aug.horizon;
    let n = aug.n;
    let p = &dr.syn.policy;
    let xbar = nominal_trajectory(&p.v, &sc.x0, &aug).unwrap();
    let mean_err = (xbar.rows(nh * n, n) - &sc.terminal.mean).amax();
    let ln = error_map(nh, &p.l, &aug).unwrap();
    let cov_excess = max_eig(&(&ln * sc.noise_cov() * ln.transpose() - &sc.terminal.cov));
    let radius = sc.epsilon() * max_singular(&ln).powi(2);
    let passed = dr.seconds < 120.0 && mean_err <= 1e-6 && cov_excess <= 1e-8 && radius <= sc.terminal.radius + 1e-8;
    outcome(
        passed,
        format!(
            "optimal in {:.1} s, mean error {mean_err:.2e}, covariance excess {cov_excess:.2e}, eps*smax^2 {radius:.6} vs delta {}",
            dr.seconds, sc.terminal.radius
        ),
    )
}

fn joint(sim: &Simulation) -> f64 {
    sim.report.violations.joint
}

fn maximal_robustness(dr: &Simulation, cs: &Simulation, seconds: f64) -> Outcome {
    let (a, b) = (joint(dr), joint(cs));
    outcome(
        a <= 0.02 && a < b && b >= 0.03 && seconds < 300.0,
        format!("DR-DS {:.2}%, CS {:.2}% over 5000 maximal samples ({seconds:.1} s)", 100.0 * a, 100.0 * b),
    )
}

fn containment(dr: &Simulation, cs: &Simulation) -> Outcome {
    let (Some(a), Some(b)) = (&dr.report.terminal, &cs.report.terminal) else {
        return failed("no terminal statistics");
    };
    outcome(
        a.contained && !b.contained,
        format!(
            "eta_f {:.4}; relative excess DR-DS {:+.4}, CS {:+.4} (limit 0.1)",
            a.eta, a.relative_excess, b.relative_excess
        ),
    )
}

fn heavy_tail(dr: &Simulation, cs: &Simulation) -> Outcome {
    let (a, b) = (joint(dr), joint(cs));
    outcome(a <= 0.02 && a < b, format!("DR-DS {:.2}%, CS {:.2}% over 5000 Student-t(3) samples", 100.0 * a, 100.0 * b))
}

fn worstcase_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let (mut rel, mut ident) = (0.0f64, 0.0f64);
    for _ in 0..25 {
        let xi = r.random_range(0.01..3.0);
        let sigma = r.random_range(0.05..2.0);
        let eps = r.random_range(0.0..2.0);
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let Ok(value) = worstcase_quadratic_value(&one(xi), &one(sigma * sigma), eps) else {
            return failed("scalar evaluation failed");
        };
        let grid = worstcase_scalar(xi, sigma, eps);
        rel = rel.max((value - grid).abs() / grid);
        let closed: f64 = (sigma + eps).powi(2) * xi;
        ident = ident.max((value - closed).abs() / closed.max(1.0));
    }
    for _ in 0..25 {
        let x = rand_psd(&mut r, 2);
        let s = rand_psd(&mut r, 2);
        let eps = r.random_range(0.05..1.5);
        let Ok(value) = worstcase_quadratic_value(&x, &s, eps) else {
            return failed("2x2 evaluation failed");
        };
        let grid = worstcase_2x2(&x, &s, eps);
        rel = rel.max((value - grid).abs() / grid);
    }
    let seconds = start.elapsed().as_secs_f64();
    outcome(
        rel <= 1e-3 && ident <= 1e-6 && seconds < 60.0,
        format!("50 instances, worst relative gap to grid {rel:.2e}, scalar identity error {ident:.2e} ({seconds:.1} s)"),
    )
}

fn drcvar_closed_form() -> Outcome {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let alpha = r.random_range(-2.0..2.0);
        let offset = r.random_range(-1.0..1.0);
        let mu = r.random_range(-1.0..1.0);
        let sigma = r.random_range(0.05..1.5);
        let eps = r.random_range(0.01..1.0);
        let gamma = r.random_range(0.02..0.5);
        let center = GaussianMoments::new(DVector::from_element(1, mu), DMatrix::from_element(1, 1, sigma * sigma)).unwrap();
        let (Ok(value), Ok(tau)) = (drcvar_value(&DVector::from_element(1, alpha), offset, &center, eps, gamma), cvar_coeff(gamma))
        else {
            return failed("evaluation failed");
        };
        worst = worst.max((value - drcvar_polar(alpha, offset, mu, sigma, eps, tau)).abs());
    }
    let seconds = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-3 && seconds < 60.0, format!("20 instances, worst absolute gap {worst:.2e} ({seconds:.1} s)"))
}

fn analytic_identities() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let coeff = (cvar_coeff(0.05).unwrap() - 19f64.sqrt()).abs();
    let mut gel = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 5;
        let (p, q) = (rand_gaussian(&mut r, n), rand_gaussian(&mut r, n));
        gel = gel.max((gelbrich_distance(&p, &q).unwrap() - gaussian_w2(&p, &q).unwrap()).abs());
    }
    let mut scale = 0.0f64;
    for n in 1..=5 {
        let s = rand_psd(&mut r, n);
        let radius = r.random_range(0.0..5.0);
        let eta = maximal_scale(&s, radius).unwrap();
        let a = GaussianMoments::zero_mean(s.clone()).unwrap();
        let b = GaussianMoments::zero_mean(&s * (eta * eta)).unwrap();
        scale = scale.max((gaussian_w2(&a, &b).unwrap() - radius).abs());
    }
    let mut trip = 0.0f64;
    for &(n, m, nh) in &[(2, 1, 4), (4, 2, 8), (3, 2, 12)] {
        let model = LtiModel::time_invariant(rand_mat(&mut r, n, n), rand_mat(&mut r, n, m), DMatrix::identity(n, n), nh).unwrap();
        let aug = build_augmented(&model);
        let mut l = DMatrix::zeros(m * nh, n * (nh + 1));
        for s in 0..nh {
            for j in 1..=s {
                l.view_mut((s * m, j * n), (m, n)).copy_from(&(rand_mat(&mut r, m, n) * 0.5));
            }
        }
        let back = gain_k_to_l(&gain_l_to_k(&l, &aug).unwrap(), &aug).unwrap();
        trip = trip.max((back - &l).amax() / (1.0 + l.amax()));
    }
    outcome(
        coeff <= 1e-12 && gel <= 1e-10 && scale <= 1e-10 && trip <= 1e-9,
        format!("sqrt(19) {coeff:.1e}, gelbrich/w2 {gel:.1e}, maximal scale {scale:.1e}, gain round trip {trip:.1e}"),
    )
}

fn dryden_normalization() -> Outcome {
    let mut worst = 0.0f64;
    for v0 in [1.0, 5.0, 20.0, 50.0] {
        let p = DrydenParams::new(v0, 10.0, 0.34, 0.5, DrydenChannel::ALL.to_vec()).unwrap();
        for ch in [DrydenChannel::Ug, DrydenChannel::Vg, DrydenChannel::Wg] {
            let c0 = autocovariance(ch, &[0.0], &p, Quadrature::default()).unwrap()[0];
            let exact = p.linear_variance(ch).unwrap();
            worst = worst.max((c0 - exact).abs() / exact);
        }
    }
    outcome(worst <= 0.02, format!("worst relative lag-0 error {worst:.2e} over 12 channel/speed pairs"))
}

fn pushforward_contraction() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..500 {
        let n = 1 + i % 5;
        let m = 1 + (i / 5) % n;
        let a = rand_mat(&mut r, m, n) * r.random_range(0.1..3.0);
        let (p, q) = (rand_gaussian(&mut r, n), rand_gaussian(&mut r, n));
        let push = |g: &GaussianMoments| GaussianMoments::new(&a * &g.mean, &a * &g.cov * a.transpose()).unwrap();
        let lhs = gaussian_w2(&push(&p), &push(&q)).unwrap();
        let rhs = max_singular(&a) * gaussian_w2(&p, &q).unwrap();
        worst = worst.max(lhs - rhs);
    }
    outcome(worst <= 1e-10, format!("500 triples, largest W2(A#P, A#Q) - smax(A) W2(P, Q) = {worst:.2e}"))
}

fn main() -> ExitCode {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/double_integrator.scenario");
    let mut results: Vec<Outcome> = Vec::new();

    let loaded = load_scenario(&path);
    let solved = loaded.as_ref().map_err(|e| e.to_string()).and_then(|l| Ok((solve_with(l, "drds")?, solve_with(l, "cs")?)));
    match (&loaded, &solved) {
        (Ok(l), Ok((dr, cs))) => {
            results.push(terminal_steering(l, dr));
            let start = Instant::now();
            let maximal = rollout(l, &dr.pf, "maximal").and_then(|a| Ok((a, rollout(l, &cs.pf, "maximal")?)));
            let seconds = start.elapsed().as_secs_f64() + dr.seconds + cs.seconds;
            match &maximal {
                Ok((a, b)) => {
                    results.push(maximal_robustness(a, b, seconds));
                    results.push(containment(a, b));
                }
                Err(e) => results.extend([failed(e), failed(e)]),
            }
            match rollout(l, &dr.pf, "student-t").and_then(|a| Ok((a, rollout(l, &cs.pf, "student-t")?))) {
                Ok((a, b)) => results.push(heavy_tail(&a, &b)),
                Err(e) => results.push(failed(e)),
            }
        }
        (Err(e), _) => results.extend((0..4).map(|_| failed(e))),
        (_, Err(e)) => results.extend((0..4).map(|_| failed(e))),
    }
    results.push(worstcase_oracle());
    results.push(drcvar_closed_form());
    results.push(analytic_identities());
    results.push(dryden_normalization());
    results.push(pushforward_contraction());

    let mut all = true;
    for (i, r) in results.iter().enumerate() {
        println!("criterion {}: {} {}", i + 1, if r.passed { "PASS" } else { "FAIL" }, r.detail);
        all &= r.passed;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
