use crate::ambiguity::{AmbiguitySpec, GaussianMoments};
use crate::linalg::{block_diag, check_pd, check_psd};
use crate::system::LtiModel;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Per-step quadratic weights on the error state and input, and the weight
/// on the nominal input norms.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub q: Vec<DMatrix<f64>>,
    pub r: Vec<DMatrix<f64>>,
    pub beta: f64,
}

impl CostWeights {
    pub fn new(q: Vec<DMatrix<f64>>, r: Vec<DMatrix<f64>>, beta: f64) -> Result<Self> {
        if q.len() != r.len() {
            return Err(Error::dim(format!("{} Q matrices but {} R matrices", q.len(), r.len())));
        }
        for qk in &q {
            check_psd(qk, "Q", 1e-10)?;
        }
        for rk in &r {
            check_pd(rk, "R")?;
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::param("beta", format!("must be positive, got {beta}")));
        }
        Ok(Self { q, r, beta })
    }

    pub fn uniform(q: DMatrix<f64>, r: DMatrix<f64>, beta: f64, horizon: usize) -> Result<Self> {
        Self::new(vec![q; horizon], vec![r; horizon], beta)
    }

    /// `blkdiag(Q_0, .., Q_{N-1}, 0)`, matching the stacked state.
    pub fn stacked_q(&self) -> DMatrix<f64> {
        let n = self.q[0].nrows();
        let mut blocks = self.q.clone();
        blocks.push(DMatrix::zeros(n, n));
        block_diag(&blocks)
    }

    pub fn stacked_r(&self) -> DMatrix<f64> {
        block_diag(&self.r)
    }
}

/// `normal^T x + offset <= 0`, required in DR-CVaR at each listed step.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
    /// Active steps, increasing.
    pub steps: Vec<usize>,
    /// Risk level for each active step.
    pub risk: Vec<f64>,
}

impl Halfspace {
    /// Same risk level at every active step.
    pub fn new(normal: DVector<f64>, offset: f64, risk: f64, steps: Vec<usize>) -> Result<Self> {
        let risk = vec![risk; steps.len()];
        Self::with_risks(normal, offset, steps, risk)
    }

    pub fn with_risks(normal: DVector<f64>, offset: f64, mut steps: Vec<usize>, risk: Vec<f64>) -> Result<Self> {
        if !(normal.norm() > 0.0) {
            return Err(Error::param("alpha", "normal must be nonzero"));
        }
        if !offset.is_finite() {
            return Err(Error::param("offset", "must be finite"));
        }
        if risk.len() != steps.len() {
            return Err(Error::dim(format!("{} steps but {} risk levels", steps.len(), risk.len())));
        }
        if let Some(g) = risk.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(Error::param("gamma", format!("risk level must lie in (0, 1), got {g}")));
        }
        let mut pairs: Vec<(usize, f64)> = steps.drain(..).zip(risk).collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::param("steps", "duplicate step"));
        }
        let (steps, risk) = pairs.into_iter().unzip();
        Ok(Self { normal, offset, steps, risk })
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offset
    }
}

/// Required terminal ball: center `N(mean, cov)` and radius.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalTarget {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: LtiModel,
    pub x0: DVector<f64>,
    pub weights: CostWeights,
    pub halfspaces: Vec<Halfspace>,
    /// Ball around `N(0, Sigma_w)` over the whole stacked disturbance.
    pub noise: AmbiguitySpec,
    pub terminal: TerminalTarget,
}

impl Scenario {
    pub fn new(
        model: LtiModel,
        x0: DVector<f64>,
        weights: CostWeights,
        halfspaces: Vec<Halfspace>,
        noise_cov: DMatrix<f64>,
        epsilon: f64,
        terminal: TerminalTarget,
    ) -> Result<Self> {
        let (n, m, nh) = (model.state_dim(), model.input_dim(), model.horizon());
        if x0.len() != n {
            return Err(Error::dim(format!("x0 has {} entries, expected {n}", x0.len())));
        }
        if weights.q.len() != nh {
            return Err(Error::dim(format!("{} cost steps for horizon {nh}", weights.q.len())));
        }
        for (k, (q, r)) in weights.q.iter().zip(&weights.r).enumerate() {
            if q.shape() != (n, n) || r.shape() != (m, m) {
                return Err(Error::dim(format!("cost weights at step {k} have the wrong size")));
            }
        }
        for (j, h) in halfspaces.iter().enumerate() {
            if h.normal.len() != n {
                return Err(Error::dim(format!("halfspace {j} normal has {} entries, expected {n}", h.normal.len())));
            }
            if let Some(&k) = h.steps.iter().find(|&&k| k > nh) {
                return Err(Error::StepOutOfRange { k, horizon: nh });
            }
        }
        let nd = nh * model.noise_dim();
        if noise_cov.shape() != (nd, nd) {
            return Err(Error::dim(format!("Sigma_w is {:?}, expected ({nd}, {nd})", noise_cov.shape())));
        }
        check_pd(&noise_cov, "Sigma_w")?;
        let noise = AmbiguitySpec::new(GaussianMoments::zero_mean(noise_cov)?, epsilon)?;
        if terminal.mean.len() != n || terminal.cov.shape() != (n, n) {
            return Err(Error::dim("terminal target has the wrong size"));
        }
        check_pd(&terminal.cov, "Sigma_f")?;
        if !(terminal.radius >= 0.0) || !terminal.radius.is_finite() {
            return Err(Error::param("delta", "terminal radius must be finite and nonnegative"));
        }
        Ok(Self { model, x0, weights, halfspaces, noise, terminal })
    }

    pub fn epsilon(&self) -> f64 {
        self.noise.radius
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise.center.cov
    }

    /// Copy with a different noise radius.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut s = self.clone();
        s.noise = AmbiguitySpec::new(self.noise.center.clone(), epsilon)?;
        Ok(s)
    }

    /// Steps carrying at least one halfspace, increasing.
    pub fn constrained_steps(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.halfspaces.iter().flat_map(|h| h.steps.iter().copied()).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// Even split `gamma / (J * steps)` of a joint risk budget. Never applied implicitly.
pub fn uniform_risk_split(total: f64, num_halfspaces: usize, num_steps: usize) -> Result<f64> {
    if !(total > 0.0 && total < 1.0) {
        return Err(Error::param("gamma", format!("risk budget must lie in (0, 1), got {total}")));
    }
    if num_halfspaces == 0 || num_steps == 0 {
        return Err(Error::param("gamma", "nothing to split over"));
    }
    Ok(total / (num_halfspaces * num_steps) as f64)
}
