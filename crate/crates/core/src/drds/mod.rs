//! The DR-DS semidefinite program, the chance-constrained baseline and a
//! worst-case cost evaluator.

mod assemble;
mod scenario;
mod worstcase;

pub use assemble::{Assembler, AssemblyOptions, CostForm, DrdsVars, ExprMatrix, GainVars};
pub use scenario::{uniform_risk_split, CostWeights, Halfspace, Scenario, TerminalTarget};
pub use worstcase::{cost_form, worstcase_quadratic_value};

use crate::ambiguity::pushforward_radius;
use crate::system::{error_map, AugmentedSystem, Policy};
use crate::{Error, Result, Stage};
use drds_conic::{solve, ConicProblem, Settings, Solution};
use nalgebra::DVector;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub objective: f64,
    pub lambda: Option<f64>,
    pub trace_gamma: Option<f64>,
    /// `(step, rho_k)` for each DR-CVaR step.
    pub rho: Vec<(usize, f64)>,
    /// Terminal pushforward radius of the noise ball under the chosen mode.
    pub terminal_radius: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    /// Worst cone violation of the assembled program at the returned point.
    pub max_violation: f64,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub policy: Policy,
    pub diagnostics: Diagnostics,
}

/// A fully assembled program with its variable map.
pub struct Program {
    pub problem: ConicProblem,
    pub vars: DrdsVars,
    pub aug: AugmentedSystem,
}

pub fn build_drds(scenario: &Scenario, opts: AssemblyOptions) -> Result<Program> {
    let asm = Assembler::new(scenario, opts)?;
    let mut problem = ConicProblem::new();
    let mut vars = asm.declare(&mut problem)?;
    let objective = asm.assemble_dr_cost(&mut problem, &mut vars)?;
    asm.assemble_drcvar(&mut problem, &mut vars)?;
    asm.assemble_terminal(&mut problem, &vars, true)?;
    problem.set_objective(objective)?;
    Ok(Program { problem, vars, aug: asm.aug })
}

pub fn build_baseline(scenario: &Scenario) -> Result<Program> {
    let asm = Assembler::new(scenario, AssemblyOptions::default())?;
    let mut problem = ConicProblem::new();
    let mut vars = asm.declare(&mut problem)?;
    let objective = asm.assemble_nominal_cost(&mut problem, &mut vars)?;
    asm.assemble_chance(&mut problem, &vars)?;
    asm.assemble_terminal(&mut problem, &vars, false)?;
    problem.set_objective(objective)?;
    Ok(Program { problem, vars, aug: asm.aug })
}

pub fn solve_drds(scenario: &Scenario, settings: &Settings) -> Result<Synthesis> {
    solve_drds_with(scenario, settings, AssemblyOptions::default())
}

pub fn solve_drds_with(scenario: &Scenario, settings: &Settings, opts: AssemblyOptions) -> Result<Synthesis> {
    let prog = build_drds(scenario, opts)?;
    let sol = solve(&prog.problem, settings);
    recover(scenario, &prog, &sol, opts)
}

/// Gaussian chance-constrained covariance steering with the nominal expected cost.
pub fn solve_baseline_cs(scenario: &Scenario, settings: &Settings) -> Result<Synthesis> {
    let prog = build_baseline(scenario)?;
    let sol = solve(&prog.problem, settings);
    recover(scenario, &prog, &sol, AssemblyOptions::default())
}

fn recover(scenario: &Scenario, prog: &Program, sol: &Solution, opts: AssemblyOptions) -> Result<Synthesis> {
    if !sol.is_optimal() {
        return Err(Error::Solver { stage: Stage::Solve, status: sol.status });
    }
    let x = &sol.primal;
    let vars = &prog.vars;
    let v = DVector::from_column_slice(vars.v.value(x));
    let l = vars.gain.value(x);
    let policy = Policy::from_disturbance_feedback(v, l, &prog.aug)?;
    let ln = error_map(prog.aug.horizon, &policy.l, &prog.aug)?;
    let trace_gamma = vars.gamma.map(|g| {
        let nd = prog.aug.noise_len();
        (0..nd).map(|i| g.entry(i, i).eval(x)).sum()
    });
    let max_violation = prog.problem.block_violations(x).into_iter().fold(0.0, f64::max);
    Ok(Synthesis {
        policy,
        diagnostics: Diagnostics {
            objective: sol.objective,
            lambda: vars.lambda.map(|h| x[h.index(0)]),
            trace_gamma,
            rho: vars.rho.iter().map(|&(k, h)| (k, x[h.index(0)])).collect(),
            terminal_radius: pushforward_radius(&ln, scenario.epsilon(), opts.mode),
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            gap: sol.gap,
            max_violation,
        },
    })
}

/// Worst-case cost of a fixed policy over the scenario's noise ball.
pub fn policy_cost(policy: &Policy, scenario: &Scenario, aug: &AugmentedSystem) -> Result<f64> {
    let xi = cost_form(&policy.l, aug, &scenario.weights);
    let wc = worstcase_quadratic_value(&xi, scenario.noise_cov(), scenario.epsilon())?;
    let m = aug.m;
    let inputs: f64 = (0..aug.horizon).map(|k| policy.v.rows(k * m, m).norm()).sum();
    Ok(scenario.weights.beta * inputs + wc)
}
