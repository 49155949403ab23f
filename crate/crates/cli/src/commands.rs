use crate::check::run_oracles;
use crate::error::{CliError, Result};
use crate::format::f17;
use crate::policy_file::PolicyFile;
use crate::report::{step_rows, summarize, RunReport, SolverSummary, Timing};
use crate::scenario_file::{load_scenario, LoadedScenario};
use drds_core::ambiguity::PushforwardMode;
use drds_core::drds::{solve_baseline_cs, solve_drds_with, AssemblyOptions, Synthesis};
use drds_core::noise_sim::{monte_carlo_report, sample_noise, simulate_closed_loop, MonteCarloReport, NoiseModel, Trajectories};
use drds_core::system::{build_augmented, Policy};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Simulate,
    Report,
    Check,
}

/// Command-line options after parsing; `None` falls back to the scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub scenario: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub noise: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub mode: Option<String>,
    /// `drds` or the chance-constrained baseline `cs`.
    pub controller: String,
    pub verbose: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            scenario: None,
            policy: None,
            noise: None,
            samples: None,
            seed: None,
            out: PathBuf::from("."),
            mode: None,
            controller: "drds".into(),
            verbose: false,
        }
    }
}

/// Runs one command, printing a short summary to `log`.
pub fn run(cmd: Command, opts: &Options, log: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Solve => {
            let loaded = load(opts)?;
            let (pf, _) = solve(&loaded, opts, log)?;
            let path = out_path(opts, "policy.txt")?;
            pf.write(&path)?;
            say(log, format!("policy written to {}", path.display()));
            Ok(())
        }
        Command::Simulate => {
            let loaded = load(opts)?;
            let pf = read_policy(opts)?;
            let sim = simulate(&loaded, &pf, opts, log)?;
            let path = out_path(opts, "trajectories.csv")?;
            write_file(&path, &trajectories_csv(&sim.traj))?;
            let report = build_report(&loaded, &pf, opts, &sim, false)?;
            let summary = out_path(opts, "simulate.txt")?;
            write_file(&summary, &report.to_text())?;
            say(log, format!("trajectories written to {}, summary to {}", path.display(), summary.display()));
            Ok(())
        }
        Command::Report => {
            let loaded = load(opts)?;
            let pf = match opts.policy {
                Some(_) => read_policy(opts)?,
                None => solve(&loaded, opts, log)?.0,
            };
            let sim = simulate(&loaded, &pf, opts, log)?;
            let report = build_report(&loaded, &pf, opts, &sim, true)?;
            let text = out_path(opts, "report.txt")?;
            write_file(&text, &report.to_text())?;
            write_file(&out_path(opts, "report.csv")?, &report.to_csv())?;
            write_file(&out_path(opts, "splash.csv")?, &splash_csv(&sim.traj))?;
            say(log, format!("report written to {}", text.display()));
            Ok(())
        }
        Command::Check => {
            if opts.scenario.is_some() {
                load(opts)?;
            }
            let results = run_oracles();
            for r in &results {
                say(log, format!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail));
            }
            check_outcome(&results)
        }
    }
}

/// `check` fails as soon as one oracle does.
pub fn check_outcome(results: &[crate::check::OracleResult]) -> Result<()> {
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        Err(CliError::OracleFailure(failed))
    } else {
        Ok(())
    }
}

fn say(log: &mut dyn Write, msg: String) {
    let _ = writeln!(log, "{msg}");
}

fn load(opts: &Options) -> Result<LoadedScenario> {
    let path = opts.scenario.as_ref().ok_or_else(|| CliError::invalid("scenario", "no scenario file given"))?;
    load_scenario(path)
}

fn read_policy(opts: &Options) -> Result<PolicyFile> {
    let path = opts.policy.as_ref().ok_or_else(|| CliError::invalid("--policy", "this command needs a policy file"))?;
    PolicyFile::read(path)
}

fn out_path(opts: &Options, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
    Ok(opts.out.join(name))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn mode(loaded: &LoadedScenario, opts: &Options) -> Result<PushforwardMode> {
    match &opts.mode {
        Some(m) => PushforwardMode::from_name(m).ok_or_else(|| CliError::invalid("--mode", format!("expected paper or opnorm, got {m:?}"))),
        None => Ok(loaded.run.mode),
    }
}

pub fn solve(loaded: &LoadedScenario, opts: &Options, log: &mut dyn Write) -> Result<(PolicyFile, Synthesis)> {
    let sc = &loaded.scenario;
    let mut settings = loaded.run.settings.clone();
    settings.verbose = opts.verbose;
    let mode = mode(loaded, opts)?;
    let start = Instant::now();
    let syn = match opts.controller.as_str() {
        "drds" => solve_drds_with(sc, &settings, AssemblyOptions { mode, ..Default::default() })?,
        "cs" => solve_baseline_cs(sc, &settings)?,
        other => return Err(CliError::invalid("--controller", format!("expected drds or cs, got {other:?}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let aug = build_augmented(&sc.model);
    let mut pf = PolicyFile::new(&syn.policy, &aug, &opts.controller);
    let d = &syn.diagnostics;
    pf.status = Some("optimal".into());
    let mut put = |k: &str, v: f64| {
        pf.diagnostics.insert(k.into(), v);
    };
    put("objective", d.objective);
    put("iterations", d.iterations as f64);
    put("primal_residual", d.primal_residual);
    put("dual_residual", d.dual_residual);
    put("gap", d.gap);
    put("max_violation", d.max_violation);
    put("terminal_radius", d.terminal_radius);
    put("solve_seconds", seconds);
    if let Some(l) = d.lambda {
        put("lambda", l);
    }
    if let Some(t) = d.trace_gamma {
        put("trace_gamma", t);
    }
    say(log, format!("{} optimal: objective {} in {} iterations, {seconds:.1} s", opts.controller, f17(d.objective), d.iterations));
    Ok((pf, syn))
}

pub struct Simulation {
    pub noise: String,
    pub samples: usize,
    pub seed: u64,
    pub seconds: f64,
    pub traj: Trajectories,
    pub report: MonteCarloReport,
}

pub fn simulate(loaded: &LoadedScenario, pf: &PolicyFile, opts: &Options, log: &mut dyn Write) -> Result<Simulation> {
    let sc = &loaded.scenario;
    let aug = build_augmented(&sc.model);
    let policy: Policy = pf.policy(&aug)?;
    let noise = opts.noise.clone().unwrap_or_else(|| loaded.run.noise_kind.clone());
    let kind = loaded.run.noise(&noise, sc)?;
    let samples = opts.samples.unwrap_or(loaded.run.samples);
    let seed = opts.seed.unwrap_or(loaded.run.seed);
    let start = Instant::now();
    let model = NoiseModel::new(kind, sc.noise_cov().clone(), seed)?;
    let w = sample_noise(&model, samples)?;
    let traj = simulate_closed_loop(&policy, sc, &w)?;
    let report = monte_carlo_report(&traj, sc)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut line = format!("{noise} x {samples}: joint violation {:.4}", report.violations.joint);
    if let Some(t) = &report.terminal {
        line.push_str(&format!(", terminal excess {:.4} ({})", t.relative_excess, if t.contained { "contained" } else { "escapes" }));
    }
    say(log, line);
    Ok(Simulation { noise, samples, seed, seconds, traj, report })
}

fn build_report(loaded: &LoadedScenario, pf: &PolicyFile, opts: &Options, sim: &Simulation, with_steps: bool) -> Result<RunReport> {
    let sc = &loaded.scenario;
    let mut diagnostics = pf.diagnostics.clone();
    let solve_seconds = diagnostics.remove("solve_seconds");
    Ok(RunReport {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        scenario_digest: loaded.digest()?,
        controller: pf.controller.clone(),
        mode: mode(loaded, opts)?.name().into(),
        noise: sim.noise.clone(),
        samples: sim.samples,
        seed: sim.seed,
        state_dim: sc.model.state_dim(),
        halfspaces: sc.halfspaces.len(),
        solver: pf.status.clone().map(|status| SolverSummary { status, diagnostics }),
        timing: Timing { solve_seconds, simulate_seconds: Some(sim.seconds) },
        montecarlo: Some(summarize(&sim.report)),
        steps: if with_steps { step_rows(&sim.traj, sc)? } else { Vec::new() },
    })
}

/// One row per sample and step: `sample, step, x_i, u_j`; inputs are empty at the last step.
pub fn trajectories_csv(traj: &Trajectories) -> String {
    let mut header = vec!["sample".to_string(), "step".to_string()];
    header.extend((0..traj.n).map(|i| format!("x_{i}")));
    header.extend((0..traj.m).map(|j| format!("u_{j}")));
    let mut s = header.join(",");
    s.push('\n');
    for t in 0..traj.count {
        for k in 0..=traj.horizon {
            let mut cells = vec![t.to_string(), k.to_string()];
            cells.extend(traj.state(t, k).iter().map(|&v| f17(v)));
            if k < traj.horizon {
                cells.extend(traj.control(t, k).iter().map(|&v| f17(v)));
            } else {
                cells.extend((0..traj.m).map(|_| String::new()));
            }
            s.push_str(&cells.join(","));
            s.push('\n');
        }
    }
    s
}

/// Terminal states, one sample per row.
pub fn splash_csv(traj: &Trajectories) -> String {
    let header: Vec<String> = (0..traj.n).map(|i| format!("x_{i}")).collect();
    let mut s = header.join(",");
    s.push('\n');
    for t in 0..traj.count {
        let cells: Vec<String> = traj.state(t, traj.horizon).iter().map(|&v| f17(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}
