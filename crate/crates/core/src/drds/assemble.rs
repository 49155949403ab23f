//! Builds the DR-DS and baseline conic programs.

use super::scenario::Scenario;
use crate::ambiguity::{cvar_coeff, PushforwardMode};
use crate::linalg::{psd_sqrt, spd_inverse};
use crate::system::AugmentedSystem;
use crate::{Error, Result};
use drds_conic::{AffExpr, ConeKind, ConicProblem, Shape, SymExpr, VarHandle};
use nalgebra::{DMatrix, DVector};

/// Which semidefinite encoding of the worst-case quadratic cost to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostForm {
    /// One block `[[G, lam S, 0], [lam S, lam I - D'M D, D'L'], [0, L D, Rt^-1]]`, no `Psi`.
    #[default]
    Merged,
    /// Two blocks coupled through an explicit `Psi`.
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssemblyOptions {
    pub cost_form: CostForm,
    pub mode: PushforwardMode,
}

/// Decision variables of the causal disturbance-feedback gain.
///
/// Only blocks `(k, j)` with `1 <= j <= k <= N-1` are declared: block column 0
/// multiplies the zero first block row of `D`, and column `N` is pinned to zero.
#[derive(Debug, Clone)]
pub struct GainVars {
    handle: Option<VarHandle>,
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize)>,
}

impl GainVars {
    pub fn declare(problem: &mut ConicProblem, aug: &AugmentedSystem) -> Result<Self> {
        let (n, m) = (aug.n, aug.m);
        let mut entries = Vec::new();
        for k in 1..aug.horizon {
            for a in 0..m {
                for j in 1..=k {
                    for b in 0..n {
                        entries.push((k * m + a, j * n + b));
                    }
                }
            }
        }
        let handle = if entries.is_empty() { None } else { Some(problem.add_variable(Shape::Vector(entries.len()))?) };
        Ok(Self { handle, rows: aug.input_len(), cols: aug.state_len(), entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(row, col)` of each declared entry, in variable order.
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn handle(&self) -> Option<VarHandle> {
        self.handle
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.rows, self.cols);
        if let Some(h) = self.handle {
            for (&(r, s), &val) in self.entries.iter().zip(h.value(x)) {
                l[(r, s)] = val;
            }
        }
        l
    }

    /// `constant + left * L * right` entry-wise, row-major.
    pub fn sandwich(&self, constant: &DMatrix<f64>, left: &DMatrix<f64>, right: &DMatrix<f64>) -> ExprMatrix {
        let (p, q) = (left.nrows(), right.ncols());
        assert_eq!(constant.shape(), (p, q));
        assert_eq!(left.ncols(), self.rows);
        assert_eq!(right.nrows(), self.cols);
        let mut out: Vec<AffExpr> = (0..p * q).map(|i| AffExpr::constant(constant[(i / q, i % q)])).collect();
        let Some(h) = self.handle else {
            return ExprMatrix { rows: p, cols: q, data: out };
        };
        let left_nz: Vec<Vec<(usize, f64)>> = (0..self.rows)
            .map(|r| (0..p).filter_map(|a| (left[(a, r)] != 0.0).then(|| (a, left[(a, r)]))).collect())
            .collect();
        let right_nz: Vec<Vec<(usize, f64)>> = (0..self.cols)
            .map(|s| (0..q).filter_map(|b| (right[(s, b)] != 0.0).then(|| (b, right[(s, b)]))).collect())
            .collect();
        // Variables are visited in increasing index order, so every entry's terms stay sorted.
        for (i, &(r, s)) in self.entries.iter().enumerate() {
            let var = h.index(i);
            for &(a, la) in &left_nz[r] {
                for &(b, rb) in &right_nz[s] {
                    out[a * q + b].push(var, la * rb);
                }
            }
        }
        ExprMatrix { rows: p, cols: q, data: out }
    }
}

/// Dense row-major matrix of affine expressions.
#[derive(Debug, Clone)]
pub struct ExprMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<AffExpr>,
}

impl ExprMatrix {
    pub fn get(&self, r: usize, c: usize) -> &AffExpr {
        &self.data[r * self.cols + c]
    }

    pub fn into_vec(self) -> Vec<AffExpr> {
        self.data
    }
}

/// Handles to everything the DR-DS program declares.
#[derive(Debug, Clone)]
pub struct DrdsVars {
    pub v: VarHandle,
    pub gain: GainVars,
    /// Epigraphs of the nominal input norms, one per step.
    pub t: VarHandle,
    pub lambda: Option<VarHandle>,
    pub gamma: Option<VarHandle>,
    pub psi: Option<VarHandle>,
    /// Nominal expected cost epigraph, used when the cost has no ambiguity.
    pub nominal_cost: Option<VarHandle>,
    /// `(step, rho_k)` for each step with a DR-CVaR constraint and a positive radius.
    pub rho: Vec<(usize, VarHandle)>,
}

/// Shared pieces of the assembly for one scenario.
pub struct Assembler<'a> {
    pub scenario: &'a Scenario,
    pub aug: AugmentedSystem,
    pub opts: AssemblyOptions,
    /// Lower Cholesky factor of `Sigma_w`.
    noise_factor: DMatrix<f64>,
    /// `D * noise_factor`.
    dist_f: DMatrix<f64>,
    free: DVector<f64>,
}

impl<'a> Assembler<'a> {
    pub fn new(scenario: &'a Scenario, opts: AssemblyOptions) -> Result<Self> {
        let aug = crate::system::build_augmented(&scenario.model);
        let noise_factor = scenario
            .noise_cov()
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPd { what: "Sigma_w".into(), min_eig: crate::linalg::min_eig(scenario.noise_cov()) })?
            .l();
        let dist_f = &aug.dist * &noise_factor;
        let free = &aug.a * &scenario.x0;
        Ok(Self { scenario, aug, opts, noise_factor, dist_f, free })
    }

    pub fn declare(&self, problem: &mut ConicProblem) -> Result<DrdsVars> {
        let aug = &self.aug;
        let v = problem.add_variable(Shape::Vector(aug.input_len()))?;
        let gain = GainVars::declare(problem, aug)?;
        let t = problem.add_variable(Shape::Vector(aug.horizon))?;
        Ok(DrdsVars { v, gain, t, lambda: None, gamma: None, psi: None, nominal_cost: None, rho: Vec::new() })
    }

    /// `E_k (A x0 + B v)` as expressions.
    pub fn mean_at(&self, k: usize, vars: &DrdsVars) -> Vec<AffExpr> {
        let n = self.aug.n;
        let bk = self.aug.b_row(k);
        (0..n)
            .map(|i| {
                let terms = (0..bk.ncols()).filter(|&r| bk[(i, r)] != 0.0).map(|r| (vars.v.index(r), bk[(i, r)])).collect();
                AffExpr::from_terms(terms, self.free[k * n + i])
            })
            .collect()
    }

    /// `E_k (I + B L) D` restricted to its first `cols` columns.
    fn error_map_expr(&self, k: usize, vars: &DrdsVars, right: &DMatrix<f64>, cols: usize) -> ExprMatrix {
        let n = self.aug.n;
        let right = right.columns(0, cols).into_owned();
        let constant = right.rows(k * n, n).into_owned();
        vars.gain.sandwich(&constant, &self.aug.b_row(k), &right)
    }

    /// `beta * t_k` objective part and `t_k >= |v_k|` cones.
    fn input_epigraphs(&self, problem: &mut ConicProblem, vars: &DrdsVars, objective: &mut AffExpr) -> Result<()> {
        let m = self.aug.m;
        for k in 0..self.aug.horizon {
            let mut rows = vec![vars.t.expr(k)];
            rows.extend((0..m).map(|a| vars.v.expr(k * m + a)));
            problem.add_cone(ConeKind::SecondOrder, rows)?;
            objective.push(vars.t.index(k), self.scenario.weights.beta);
        }
        Ok(())
    }

    /// Epigraph `s >= E |Q^1/2 x_k|^2 + |R^1/2 u_k|^2` under the center distribution,
    /// as one rotated second-order cone.
    fn nominal_cost(&self, problem: &mut ConicProblem, vars: &mut DrdsVars, objective: &mut AffExpr) -> Result<()> {
        let (n, m, d) = (self.aug.n, self.aug.m, self.aug.d);
        let w = &self.scenario.weights;
        let mut ys: Vec<AffExpr> = Vec::new();
        for k in 1..self.aug.horizon {
            let cols = k * d;
            let right = self.dist_f.columns(0, cols).into_owned();
            let qh = psd_sqrt(&w.q[k]);
            if qh.amax() > 0.0 {
                let constant = &qh * right.rows(k * n, n);
                ys.extend(vars.gain.sandwich(&constant, &(&qh * self.aug.b_row(k)), &right).into_vec());
            }
            let rh = psd_sqrt(&w.r[k]);
            let mut left = DMatrix::zeros(m, self.aug.input_len());
            left.view_mut((0, k * m), (m, m)).copy_from(&rh);
            ys.extend(vars.gain.sandwich(&DMatrix::zeros(m, cols), &left, &right).into_vec());
        }
        let s = problem.add_variable(Shape::Scalar)?;
        let mut rows = vec![s.expr(0) + 1.0, s.expr(0) - 1.0];
        rows.extend(ys.into_iter().map(|y| y.scale(2.0)));
        problem.add_cone(ConeKind::SecondOrder, rows)?;
        objective.push(s.index(0), 1.0);
        vars.nominal_cost = Some(s);
        Ok(())
    }

    /// Worst-case quadratic cost over the noise ball plus the nominal input term.
    pub fn assemble_dr_cost(&self, problem: &mut ConicProblem, vars: &mut DrdsVars) -> Result<AffExpr> {
        let mut objective = AffExpr::zero();
        self.input_epigraphs(problem, vars, &mut objective)?;
        let eps = self.scenario.epsilon();
        if eps == 0.0 {
            // The ball is a single point; the cost is the nominal expectation.
            self.nominal_cost(problem, vars, &mut objective)?;
            return Ok(objective);
        }
        let aug = &self.aug;
        let nd = aug.noise_len();
        let nm = aug.input_len();
        let sigma = self.scenario.noise_cov();
        let sigma_half = psd_sqrt(sigma);
        let w = &self.scenario.weights;
        let q = w.stacked_q();
        let r = w.stacked_r();
        let rt = aug.b.transpose() * &q * &aug.b + &r;
        let rt_inv = spd_inverse(&rt, "B'QB + R")?;
        let dq = aug.dist.transpose() * &q;
        let c = &dq * &aug.dist;
        let g = &dq * &aug.b;
        // P = D'Q B L D; the middle block is lam I - C - P - P'.
        let p = vars.gain.sandwich(&DMatrix::zeros(nd, nd), &g, &aug.dist);
        let ld = vars.gain.sandwich(&DMatrix::zeros(nm, nd), &DMatrix::identity(nm, nm), &aug.dist);

        let lambda = problem.add_variable(Shape::Scalar)?;
        let gamma = problem.add_variable(Shape::SymMatrix(nd))?;
        vars.lambda = Some(lambda);
        vars.gamma = Some(gamma);
        objective.push(lambda.index(0), eps * eps - sigma.trace());
        for i in 0..nd {
            objective += gamma.entry(i, i);
        }

        let middle = |i: usize, j: usize| -> AffExpr {
            let mut e = AffExpr::constant(-c[(i, j)]);
            e -= p.get(i, j);
            e -= p.get(j, i);
            if i == j {
                e.push(lambda.index(0), 1.0);
            }
            e
        };
        let fill_gamma_block = |s: &mut SymExpr| {
            for j in 0..nd {
                for i in j..nd {
                    *s.get_mut(i, j) = gamma.entry(i, j);
                }
            }
            for i in 0..nd {
                for j in 0..nd {
                    if sigma_half[(i, j)] != 0.0 {
                        *s.get_mut(nd + i, j) = AffExpr::term(lambda.index(0), sigma_half[(i, j)]);
                    }
                }
            }
        };
        match self.opts.cost_form {
            CostForm::Merged => {
                let mut s = SymExpr::zeros(2 * nd + nm);
                fill_gamma_block(&mut s);
                for j in 0..nd {
                    for i in j..nd {
                        *s.get_mut(nd + i, nd + j) = middle(i, j);
                    }
                }
                for rr in 0..nm {
                    for cc in 0..nd {
                        *s.get_mut(2 * nd + rr, nd + cc) = ld.get(rr, cc).clone();
                    }
                }
                s.add_const(&rt_inv, 2 * nd, 2 * nd);
                problem.add_cone(ConeKind::Psd, s.into_svec_rows())?;
            }
            CostForm::Split => {
                let psi = problem.add_variable(Shape::SymMatrix(nd))?;
                vars.psi = Some(psi);
                let mut s1 = SymExpr::zeros(2 * nd);
                fill_gamma_block(&mut s1);
                for j in 0..nd {
                    for i in j..nd {
                        *s1.get_mut(nd + i, nd + j) = psi.entry(i, j);
                    }
                }
                problem.add_cone(ConeKind::Psd, s1.into_svec_rows())?;
                let mut s2 = SymExpr::zeros(nd + nm);
                for j in 0..nd {
                    for i in j..nd {
                        *s2.get_mut(i, j) = middle(i, j) - psi.entry(i, j);
                    }
                }
                for rr in 0..nm {
                    for cc in 0..nd {
                        *s2.get_mut(nd + rr, cc) = ld.get(rr, cc).clone();
                    }
                }
                s2.add_const(&rt_inv, nd, nd);
                problem.add_cone(ConeKind::Psd, s2.into_svec_rows())?;
            }
        }
        Ok(objective)
    }

    /// Nominal Gaussian expected cost, for the baseline.
    pub fn assemble_nominal_cost(&self, problem: &mut ConicProblem, vars: &mut DrdsVars) -> Result<AffExpr> {
        let mut objective = AffExpr::zero();
        self.input_epigraphs(problem, vars, &mut objective)?;
        self.nominal_cost(problem, vars, &mut objective)?;
        Ok(objective)
    }

    /// Per-halfspace, per-step DR-CVaR cones and the shared `rho_k` bounds.
    pub fn assemble_drcvar(&self, problem: &mut ConicProblem, vars: &mut DrdsVars) -> Result<()> {
        let sc = self.scenario;
        let (n, d) = (self.aug.n, self.aug.d);
        let eps = sc.epsilon();
        self.check_initial()?;
        for k in sc.constrained_steps().into_iter().filter(|&k| k > 0) {
            let cols = k * d;
            let rho = if eps > 0.0 {
                let rho = problem.add_variable(Shape::Scalar)?;
                let lk = self.error_map_expr(k, vars, &self.aug.dist, cols);
                let mut s = SymExpr::zeros(n + cols);
                for i in 0..n {
                    *s.get_mut(i, i) = match self.opts.mode {
                        PushforwardMode::PaperExact => AffExpr::constant(1.0),
                        PushforwardMode::OperatorNorm => rho.expr(0),
                    };
                }
                for c in 0..cols {
                    for i in 0..n {
                        *s.get_mut(n + c, i) = lk.get(i, c).clone();
                    }
                    *s.get_mut(n + c, n + c) = rho.expr(0);
                }
                problem.add_cone(ConeKind::Psd, s.into_svec_rows())?;
                vars.rho.push((k, rho));
                Some(rho)
            } else {
                None
            };
            let mean = self.mean_at(k, vars);
            for h in &sc.halfspaces {
                let Some(pos) = h.steps.iter().position(|&s| s == k) else { continue };
                let tau = cvar_coeff(h.risk[pos])?;
                let mut head = AffExpr::constant(-h.offset);
                for i in 0..n {
                    head.axpy(-h.normal[i], &mean[i]);
                }
                if let Some(rho) = rho {
                    head.push(rho.index(0), -eps * h.normal.norm() * (1.0 + tau * tau).sqrt());
                }
                let mut rows = vec![head];
                rows.extend(self.weighted_spread(k, vars, &h.normal, tau));
                problem.add_cone(ConeKind::SecondOrder, rows)?;
            }
        }
        Ok(())
    }

    /// `scale * F' Lk' alpha`; its norm is `scale * sqrt(alpha' Lk Sigma_w Lk' alpha)`.
    fn weighted_spread(&self, k: usize, vars: &DrdsVars, alpha: &DVector<f64>, scale: f64) -> Vec<AffExpr> {
        let n = self.aug.n;
        // The Cholesky factor is lower triangular, so only the first k*d entries can be nonzero.
        let cols = k * self.aug.d;
        let right = self.dist_f.columns(0, cols).into_owned();
        let at = DMatrix::from_row_slice(1, n, alpha.as_slice()) * scale;
        let constant = &at * right.rows(k * n, n);
        let left = &at * self.aug.b_row(k);
        vars.gain.sandwich(&constant, &left, &right).into_vec()
    }

    fn check_initial(&self) -> Result<()> {
        let sc = self.scenario;
        for (j, h) in sc.halfspaces.iter().enumerate() {
            if h.steps.first() == Some(&0) && h.margin(sc.x0.as_slice()) > 0.0 {
                return Err(Error::InitialViolation { halfspace: j });
            }
        }
        Ok(())
    }

    /// Gaussian chance constraints with the normal quantile in place of the CVaR coefficient.
    pub fn assemble_chance(&self, problem: &mut ConicProblem, vars: &DrdsVars) -> Result<()> {
        use statrs::distribution::{ContinuousCDF, Normal};
        let normal = Normal::standard();
        let sc = self.scenario;
        self.check_initial()?;
        for k in sc.constrained_steps().into_iter().filter(|&k| k > 0) {
            let mean = self.mean_at(k, vars);
            for h in &sc.halfspaces {
                let Some(pos) = h.steps.iter().position(|&s| s == k) else { continue };
                let z = normal.inverse_cdf(1.0 - h.risk[pos]);
                let mut head = AffExpr::constant(-h.offset);
                for i in 0..self.aug.n {
                    head.axpy(-h.normal[i], &mean[i]);
                }
                let mut rows = vec![head];
                rows.extend(self.weighted_spread(k, vars, &h.normal, z));
                problem.add_cone(ConeKind::SecondOrder, rows)?;
            }
        }
        Ok(())
    }

    /// Terminal mean equality and covariance bound; with `robust`, also the radius bound.
    pub fn assemble_terminal(&self, problem: &mut ConicProblem, vars: &DrdsVars, robust: bool) -> Result<()> {
        let sc = self.scenario;
        let (n, nh, nd) = (self.aug.n, self.aug.horizon, self.aug.noise_len());
        let eps = sc.epsilon();
        let delta = sc.terminal.radius;
        if robust && eps > 0.0 && delta == 0.0 {
            return Err(Error::param("delta", "terminal radius must be positive when epsilon is positive"));
        }
        let rows: Vec<AffExpr> =
            self.mean_at(nh, vars).into_iter().enumerate().map(|(i, e)| e - sc.terminal.mean[i]).collect();
        problem.add_cone(ConeKind::Zero, rows)?;

        let lf = self.error_map_expr(nh, vars, &self.dist_f, nd);
        let mut s = SymExpr::zeros(n + nd);
        s.add_const(&sc.terminal.cov, 0, 0);
        for c in 0..nd {
            for i in 0..n {
                *s.get_mut(n + c, i) = lf.get(i, c).clone();
            }
            *s.get_mut(n + c, n + c) = AffExpr::constant(1.0);
        }
        problem.add_cone(ConeKind::Psd, s.into_svec_rows())?;

        if robust && eps > 0.0 {
            let ratio = delta / eps;
            let lk = self.error_map_expr(nh, vars, &self.aug.dist, nd);
            let top = match self.opts.mode {
                PushforwardMode::PaperExact => 1.0,
                PushforwardMode::OperatorNorm => ratio,
            };
            let mut s = SymExpr::zeros(n + nd);
            for i in 0..n {
                *s.get_mut(i, i) = AffExpr::constant(top);
            }
            for c in 0..nd {
                for i in 0..n {
                    *s.get_mut(n + c, i) = lk.get(i, c).clone();
                }
                *s.get_mut(n + c, n + c) = AffExpr::constant(ratio);
            }
            problem.add_cone(ConeKind::Psd, s.into_svec_rows())?;
        }
        Ok(())
    }

    /// Lower Cholesky factor of the noise covariance used in the spread terms.
    pub fn noise_factor(&self) -> &DMatrix<f64> {
        &self.noise_factor
    }
}
