use drds_cli::check::{run_oracles, OracleResult};
use drds_cli::commands::check_outcome;
use drds_cli::policy_file::PolicyFile;
use drds_cli::report::{MonteCarloSummary, RunReport, SolverSummary, StepConstraint, StepRow, TerminalSummary, Timing};
use drds_cli::scenario_file::{load_scenario, parse_scenario};
use drds_cli::{run, CliError, Command, Options};
use drds_core::system::{build_augmented, Policy};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

const SMALL: &str = r#"
initial_state = [-0.4, 0.3, 0.1, 0.0]

[model]
n = 4
m = 2
d = 4
N = 4
A = [[1.0, 0.0, 0.3, 0.0], [0.0, 1.0, 0.0, 0.3], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
B = [[0.045, 0.0], [0.0, 0.045], [0.3, 0.0], [0.0, 0.3]]
D = { identity = 0.05 }

[cost]
beta = 1.0
Q = { identity = 1.0 }
R = { identity = 1.0 }

[noise]
epsilon = 0.5
seed = 3
sigma_w = { identity = 1.0 }

[[constraints]]
alpha = [1.0, 0.0, 0.0, 0.0]
offset = -0.5
gamma = 0.05
steps = [1, 2, 3, 4]

[terminal]
mu_f = [0.0, 0.0, 0.0, 0.0]
Sigma_f = { identity = 0.01 }
delta = 0.05

[solver]
tol = 1e-8
max_iter = 100
mode = "paper"

[montecarlo]
T = 200
noise_kind = "nominal"
"#;

fn small_with(from: &str, to: &str) -> String {
    assert!(SMALL.contains(from), "{from}");
    SMALL.replacen(from, to, 1)
}

fn parse_err(text: &str) -> CliError {
    parse_scenario(text, Path::new(".")).unwrap_err()
}

#[test]
fn bundled_double_integrator_loads() {
    let loaded = load_scenario(&bundled("double_integrator.scenario")).unwrap();
    let sc = &loaded.scenario;
    assert_eq!(sc.x0.as_slice(), &[-1.0, 2.0, 0.1, -0.1]);
    assert_eq!(sc.model.horizon(), 20);
    assert_eq!(sc.halfspaces.len(), 2);
    assert_eq!(sc.halfspaces[0].steps, (8..=20).collect::<Vec<_>>());
    assert_eq!(sc.epsilon(), 15.0);
    assert_eq!(loaded.run.seed, 42);
}

#[test]
fn bundled_quadrotor_loads_matrix_files() {
    let loaded = load_scenario(&bundled("quadrotor_linearized.scenario")).unwrap();
    assert_eq!(loaded.scenario.model.state_dim(), 9);
    assert_eq!(loaded.scenario.noise_cov().nrows(), 60);
    // Matrix files are inlined in the canonical form, so it parses without the directory.
    let again = parse_scenario(&loaded.canonical_text().unwrap(), Path::new("/nonexistent")).unwrap();
    assert_eq!(again.scenario, loaded.scenario);
}

#[test]
fn singular_input_weight_is_rejected() {
    let e = parse_err(&small_with("R = { identity = 1.0 }", "R = { identity = 0.0 }"));
    assert!(e.to_string().contains("R must be positive definite"), "{e}");
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn risk_level_error_names_the_field() {
    let e = parse_err(&small_with("gamma = 0.05", "gamma = 1.5"));
    match &e {
        CliError::Invalid { path, .. } => assert_eq!(path, "constraints[0].gamma"),
        other => panic!("{other:?}"),
    }
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn unknown_keys_are_rejected() {
    let e = parse_err(&small_with("beta = 1.0", "beta = 1.0\nbogus = 2"));
    assert!(matches!(e, CliError::Parse { .. }), "{e:?}");
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let e = parse_err(&small_with("initial_state = [-0.4, 0.3, 0.1, 0.0]", "initial_state = [-0.4, 0.3]"));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn scenario_round_trip_and_stable_digest() {
    let a = parse_scenario(SMALL, Path::new(".")).unwrap();
    let text = a.canonical_text().unwrap();
    let b = parse_scenario(&text, Path::new(".")).unwrap();
    assert_eq!(a.scenario, b.scenario);
    assert_eq!(a.run, b.run);
    assert_eq!(b.canonical_text().unwrap(), text);
    assert_eq!(a.digest().unwrap(), b.digest().unwrap());
    assert_eq!(a.digest().unwrap().len(), 64);
    let c = parse_scenario(&small_with("seed = 3", "seed = 4"), Path::new(".")).unwrap();
    assert_ne!(a.digest().unwrap(), c.digest().unwrap());
}

#[test]
fn policy_file_round_trip() {
    let loaded = parse_scenario(SMALL, Path::new(".")).unwrap();
    let aug = build_augmented(&loaded.scenario.model);
    let (n, m, nh) = (aug.n, aug.m, aug.horizon);
    let mut l = DMatrix::zeros(m * nh, n * (nh + 1));
    for s in 1..nh {
        for j in 1..=s {
            l[(s * m, j * n)] = 0.1 * (s + j) as f64 - 1.0 / 3.0;
        }
    }
    let v = DVector::from_fn(m * nh, |i, _| (i as f64).sin());
    let policy = Policy::from_disturbance_feedback(v, l, &aug).unwrap();
    let mut pf = PolicyFile::new(&policy, &aug, "drds");
    pf.status = Some("optimal".into());
    pf.diagnostics.insert("objective".into(), std::f64::consts::PI);
    let back = PolicyFile::parse(&pf.to_text()).unwrap();
    assert_eq!(back, pf);
    let p2 = back.policy(&aug).unwrap();
    assert_eq!(p2.l, policy.l);
    assert_eq!(p2.v, policy.v);
}

#[test]
fn corrupted_policy_gain_is_rejected() {
    let loaded = parse_scenario(SMALL, Path::new(".")).unwrap();
    let aug = build_augmented(&loaded.scenario.model);
    let policy = Policy::from_disturbance_feedback(DVector::zeros(8), DMatrix::zeros(8, 20), &aug).unwrap();
    let mut pf = PolicyFile::new(&policy, &aug, "cs");
    pf.k[(2, 0)] = 1.0;
    assert!(pf.policy(&aug).is_err());
}

fn sample_report(steps: Vec<StepRow>) -> RunReport {
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("objective".into(), 6.761_9);
    diagnostics.insert("gap".into(), 1.0e-10);
    RunReport {
        tool_version: "0.1.0".into(),
        scenario_digest: "ab".repeat(32),
        controller: "drds".into(),
        mode: "paper".into(),
        noise: "maximal".into(),
        samples: 5000,
        seed: 42,
        state_dim: 2,
        halfspaces: 2,
        solver: Some(SolverSummary { status: "optimal".into(), diagnostics }),
        timing: Timing { solve_seconds: Some(58.25), simulate_seconds: Some(0.1) },
        montecarlo: Some(MonteCarloSummary {
            joint_violation: 0.0094,
            terminal: Some(TerminalSummary {
                mean: vec![1.0e-3, -2.0e-3],
                cov_eigenvalues: vec![1.0e-3, 5.0e-4],
                distance: 0.01,
                eta: 1.2,
                relative_excess: -0.096,
                contained: true,
            }),
        }),
        steps,
    }
}

#[test]
fn report_text_round_trip() {
    let steps = vec![
        StepRow { step: 0, mean: vec![-1.0, 2.0], cov_eigenvalues: vec![0.0, 0.0], constraints: vec![] },
        StepRow {
            step: 1,
            mean: vec![0.1 + 0.2, 1.0 / 3.0],
            cov_eigenvalues: vec![2.5e-5, 1.0e-7],
            constraints: vec![StepConstraint { halfspace: 1, risk: 0.05, frequency: 0.002, cvar: -0.15 }],
        },
    ];
    let r = sample_report(steps);
    assert_eq!(RunReport::parse(&r.to_text()).unwrap(), r);

    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,mean_0,mean_1,eig_0,eig_1,cvar_h0,freq_h0,cvar_h1,freq_h1");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",,,,"));
    assert_eq!(lines[2].split(',').count(), 9);
}

#[test]
fn empty_report_has_header_only_csv() {
    let mut r = sample_report(Vec::new());
    r.montecarlo = None;
    r.solver = None;
    assert_eq!(RunReport::parse(&r.to_text()).unwrap(), r);
    assert_eq!(r.to_csv().lines().count(), 1);
}

#[test]
fn oracle_suite_passes_and_failures_map_to_exit_three() {
    let results = run_oracles();
    for r in &results {
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
    assert!(check_outcome(&results).is_ok());
    let mut broken = results.clone();
    broken.push(OracleResult { name: "forced", passed: false, detail: "forced".into() });
    let e = check_outcome(&broken).unwrap_err();
    assert_eq!(e.exit_code(), 3);
}

fn write_small(dir: &Path) -> PathBuf {
    let path = dir.join("small.scenario");
    std::fs::write(&path, SMALL).unwrap();
    path
}

#[test]
fn solve_simulate_report_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_small(dir.path());
    let mut log = Vec::new();
    let opts = Options { scenario: Some(scenario.clone()), out: dir.path().join("a"), ..Default::default() };
    run(Command::Solve, &opts, &mut log).unwrap();
    let policy = opts.out.join("policy.txt");
    let pf = PolicyFile::read(&policy).unwrap();
    assert_eq!(pf.status.as_deref(), Some("optimal"));
    assert!(pf.diagnostics["max_violation"] < 1e-6);

    let sim = |out: &str, seed: u64| {
        let o = Options {
            scenario: Some(scenario.clone()),
            policy: Some(policy.clone()),
            noise: Some("student-t".into()),
            seed: Some(seed),
            samples: Some(300),
            out: dir.path().join(out),
            ..Default::default()
        };
        run(Command::Simulate, &o, &mut Vec::new()).unwrap();
        std::fs::read(o.out.join("trajectories.csv")).unwrap()
    };
    let first = sim("b", 9);
    assert_eq!(first, sim("c", 9));
    assert_ne!(first, sim("d", 10));
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1 + 300 * 5);

    let ro = Options { policy: Some(policy.clone()), out: dir.path().join("e"), ..opts.clone() };
    run(Command::Report, &ro, &mut log).unwrap();
    let report = RunReport::parse(&std::fs::read_to_string(ro.out.join("report.txt")).unwrap()).unwrap();
    assert_eq!(report.samples, 200);
    assert_eq!(report.steps.len(), 5);
    assert_eq!(report.controller, "drds");
    let splash = std::fs::read_to_string(ro.out.join("splash.csv")).unwrap();
    assert_eq!(splash.lines().count(), 201);
    let csv = std::fs::read_to_string(ro.out.join("report.csv")).unwrap();
    assert_eq!(csv, report.to_csv());
}

#[test]
fn simulate_without_policy_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let opts = Options { scenario: Some(write_small(dir.path())), out: dir.path().to_path_buf(), ..Default::default() };
    let e = run(Command::Simulate, &opts, &mut Vec::new()).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let bad = Options { noise: Some("cauchy".into()), policy: Some(dir.path().join("missing.txt")), ..opts };
    assert_eq!(run(Command::Simulate, &bad, &mut Vec::new()).unwrap_err().exit_code(), 1);
}

fn drds(args: &[&str]) -> (i32, String, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_drds")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_small(dir.path());
    let good = good.to_str().unwrap();

    let (code, stdout, _) = drds(&["check", good]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 6);

    let bad = dir.path().join("bad.scenario");
    std::fs::write(&bad, small_with("gamma = 0.05", "gamma = 1.5")).unwrap();
    let (code, _, stderr) = drds(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("constraints[0].gamma"), "{stderr}");

    let infeasible = dir.path().join("tight.scenario");
    std::fs::write(&infeasible, small_with("delta = 0.05", "delta = 1e-9")).unwrap();
    let out = dir.path().join("o");
    let (code, _, _) = drds(&["solve", infeasible.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(!out.join("policy.txt").exists());

    let (code, _, _) = drds(&["solve", dir.path().join("none.scenario").to_str().unwrap()]);
    assert_eq!(code, 1);
    let (code, _, _) = drds(&["solve", good, "--mode", "sideways"]);
    assert_eq!(code, 2);
}
