use crate::ConicProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Relative primal and dual residual tolerance.
    pub feas_tol: f64,
    /// Relative duality gap tolerance.
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self { feas_tol: 1e-8, gap_tol: 1e-8, max_iter: 100, verbose: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub primal: Vec<f64>,
    /// Objective at `primal`, constant included.
    pub objective: f64,
    pub iterations: usize,
    /// Dual ray (`Infeasible`) or primal ray (`Unbounded`).
    pub certificate: Option<Vec<f64>>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// A conic solver. Solves are one-shot; no warm starts.
pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &ConicProblem, settings: &Settings) -> Solution;
}

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling.
#[derive(Debug, Clone, Copy, Default)]
pub struct InteriorPoint;

impl Backend for InteriorPoint {
    fn name(&self) -> &'static str {
        "hsde-ipm"
    }

    fn solve(&self, problem: &ConicProblem, settings: &Settings) -> Solution {
        crate::ipm::solve(problem, settings)
    }
}

/// Backends compiled in, default first.
pub fn backends() -> Vec<Box<dyn Backend>> {
    vec![Box::new(InteriorPoint)]
}

/// Solves with the default backend.
pub fn solve(problem: &ConicProblem, settings: &Settings) -> Solution {
    InteriorPoint.solve(problem, settings)
}
