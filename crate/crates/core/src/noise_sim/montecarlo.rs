use crate::ambiguity::{gelbrich_distance, maximal_scale, GaussianMoments};
use crate::drds::{Halfspace, Scenario};
use crate::linalg::{max_eig, psd_project, symmetrize};
use crate::system::{build_augmented, nominal_trajectory, Policy};
use crate::{Error, Exec, Result};
use nalgebra::{DMatrix, DVector};

/// Closed-loop rollouts: `count` samples of `N+1` states and `N` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub count: usize,
    states: Vec<f64>,
    controls: Vec<f64>,
}

impl Trajectories {
    pub fn state(&self, sample: usize, k: usize) -> &[f64] {
        let base = (sample * (self.horizon + 1) + k) * self.n;
        &self.states[base..base + self.n]
    }

    pub fn control(&self, sample: usize, k: usize) -> &[f64] {
        let base = (sample * self.horizon + k) * self.m;
        &self.controls[base..base + self.m]
    }

    /// Sample mean and (unbiased) covariance of the step-`k` state.
    pub fn moments(&self, k: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if self.count < 2 {
            return Err(Error::param("samples", "at least two trajectories are needed for a covariance"));
        }
        let n = self.n;
        let mut mean = DVector::zeros(n);
        for t in 0..self.count {
            mean += DVector::from_column_slice(self.state(t, k));
        }
        mean /= self.count as f64;
        let mut cov = DMatrix::zeros(n, n);
        for t in 0..self.count {
            let e = DVector::from_column_slice(self.state(t, k)) - &mean;
            cov.ger(1.0, &e, &e, 1.0);
        }
        cov /= (self.count - 1) as f64;
        Ok((mean, symmetrize(&cov)))
    }
}

pub fn simulate_closed_loop(policy: &Policy, scenario: &Scenario, samples: &[DVector<f64>]) -> Result<Trajectories> {
    simulate_closed_loop_with(policy, scenario, samples, Exec::default())
}

/// Rolls out `x = xbar + (I + B L) D w`, `u = v + L D w` for each sample.
pub fn simulate_closed_loop_with(
    policy: &Policy,
    scenario: &Scenario,
    samples: &[DVector<f64>],
    exec: Exec,
) -> Result<Trajectories> {
    let aug = build_augmented(&scenario.model);
    if let Some(w) = samples.iter().find(|w| w.len() != aug.noise_len()) {
        return Err(Error::dim(format!("noise sample has {} entries, expected {}", w.len(), aug.noise_len())));
    }
    if policy.v.len() != aug.input_len() || policy.l.shape() != (aug.input_len(), aug.state_len()) {
        return Err(Error::dim("policy does not match the scenario"));
    }
    let xbar = nominal_trajectory(&policy.v, &scenario.x0, &aug)?;
    let ld = &policy.l * &aug.dist;
    let closed = &aug.dist + &aug.b * &ld;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = exec.map(samples.len(), |t| {
        let w = &samples[t];
        let x = &xbar + &closed * w;
        let u = &policy.v + &ld * w;
        (x.as_slice().to_vec(), u.as_slice().to_vec())
    });
    let mut states = Vec::with_capacity(samples.len() * aug.state_len());
    let mut controls = Vec::with_capacity(samples.len() * aug.input_len());
    for (x, u) in rows {
        states.extend(x);
        controls.extend(u);
    }
    Ok(Trajectories { n: aug.n, m: aug.m, horizon: aug.horizon, count: samples.len(), states, controls })
}

/// Mean of the `ceil(gamma T)` largest losses.
pub fn empirical_cvar(losses: &[f64], gamma: f64) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::param("losses", "empty sample"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param("gamma", format!("risk level must lie in (0, 1], got {gamma}")));
    }
    let t = losses.len();
    // Guard against 0.05 * 1000 landing a hair above 50.
    let tail = ((gamma * t as f64 - 1e-9).ceil() as usize).clamp(1, t);
    let mut sorted = losses.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(sorted[..tail].iter().sum::<f64>() / tail as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintStats {
    pub halfspace: usize,
    pub step: usize,
    pub risk: f64,
    pub frequency: f64,
    /// Empirical CVaR of `alpha' x_k + offset` at the halfspace's risk level.
    pub cvar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationStats {
    pub per_constraint: Vec<ConstraintStats>,
    /// Fraction of trajectories violating any active constraint at any step.
    pub joint: f64,
}

pub fn violation_risk(traj: &Trajectories, halfspaces: &[Halfspace]) -> Result<ViolationStats> {
    let mut per_constraint = Vec::new();
    let mut any = vec![false; traj.count];
    for (j, h) in halfspaces.iter().enumerate() {
        for (&k, &risk) in h.steps.iter().zip(&h.risk) {
            if k > traj.horizon {
                return Err(Error::StepOutOfRange { k, horizon: traj.horizon });
            }
            let losses: Vec<f64> = (0..traj.count).map(|t| h.margin(traj.state(t, k))).collect();
            let mut hits = 0usize;
            for (t, &l) in losses.iter().enumerate() {
                if l > 0.0 {
                    hits += 1;
                    any[t] = true;
                }
            }
            let (frequency, cvar) = if traj.count == 0 {
                (0.0, f64::NAN)
            } else {
                (hits as f64 / traj.count as f64, empirical_cvar(&losses, risk)?)
            };
            per_constraint.push(ConstraintStats { halfspace: j, step: k, risk, frequency, cvar });
        }
    }
    let joint = if traj.count == 0 { 0.0 } else { any.iter().filter(|&&a| a).count() as f64 / traj.count as f64 };
    Ok(ViolationStats { per_constraint, joint })
}

/// Relative eigenvalue excess allowed before the fitted terminal covariance
/// counts as escaping the maximal target.
pub const CONTAINMENT_TOL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Gelbrich distance of the fitted moments to the target center.
    pub distance: f64,
    /// Maximal scale of the target covariance for the terminal radius.
    pub eta: f64,
    /// `lambda_max(cov - eta^2 Sigma_f) / |eta^2 Sigma_f|`.
    pub relative_excess: f64,
    pub contained: bool,
}

pub fn terminal_report(traj: &Trajectories, scenario: &Scenario) -> Result<TerminalStats> {
    if traj.count < 2 {
        return Err(Error::param("samples", "terminal statistics need at least two trajectories"));
    }
    let (mean, cov) = traj.moments(traj.horizon)?;
    let cov = psd_project(&cov);
    let target = &scenario.terminal;
    let fitted = GaussianMoments { mean: mean.clone(), cov: cov.clone() };
    let center = GaussianMoments { mean: target.mean.clone(), cov: target.cov.clone() };
    let distance = gelbrich_distance(&fitted, &center)?;
    let eta = maximal_scale(&target.cov, target.radius)?;
    let bound = &target.cov * (eta * eta);
    let relative_excess = max_eig(&(&cov - &bound)) / max_eig(&bound);
    Ok(TerminalStats { mean, cov, distance, eta, relative_excess, contained: relative_excess <= CONTAINMENT_TOL })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub samples: usize,
    pub violations: ViolationStats,
    /// Absent with fewer than two samples.
    pub terminal: Option<TerminalStats>,
}

pub fn monte_carlo_report(traj: &Trajectories, scenario: &Scenario) -> Result<MonteCarloReport> {
    let violations = violation_risk(traj, &scenario.halfspaces)?;
    let terminal = if traj.count >= 2 { Some(terminal_report(traj, scenario)?) } else { None };
    Ok(MonteCarloReport { samples: traj.count, violations, terminal })
}
