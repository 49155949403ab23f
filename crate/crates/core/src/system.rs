//! Stacked finite-horizon dynamics and the disturbance-feedback change of variables.
//!
//! Stacked vectors run over steps `0..=N` for states and `0..N` for inputs and
//! disturbances, so `x = A x0 + B u + D w` with `A`, `B`, `D` the stacked maps.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Discrete-time linear model `x_{k+1} = A_k x_k + B_k u_k + D_k w_k` over `N` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiModel {
    a: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
    d: Vec<DMatrix<f64>>,
}

impl LtiModel {
    pub fn time_invariant(a: DMatrix<f64>, b: DMatrix<f64>, d: DMatrix<f64>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::param("N", "horizon must be at least 1"));
        }
        Self::time_varying(vec![a; horizon], vec![b; horizon], vec![d; horizon])
    }

    /// One matrix triple per step; the horizon is the list length.
    pub fn time_varying(a: Vec<DMatrix<f64>>, b: Vec<DMatrix<f64>>, d: Vec<DMatrix<f64>>) -> Result<Self> {
        let horizon = a.len();
        if horizon == 0 {
            return Err(Error::param("N", "horizon must be at least 1"));
        }
        if b.len() != horizon || d.len() != horizon {
            return Err(Error::dim(format!("{horizon} A matrices but {} B and {} D", b.len(), d.len())));
        }
        let n = a[0].nrows();
        let (m, nd) = (b[0].ncols(), d[0].ncols());
        if n == 0 || m == 0 || nd == 0 {
            return Err(Error::dim("n, m and d must be positive"));
        }
        for k in 0..horizon {
            if a[k].shape() != (n, n) {
                return Err(Error::dim(format!("A[{k}] is {:?}, expected ({n}, {n})", a[k].shape())));
            }
            if b[k].shape() != (n, m) {
                return Err(Error::dim(format!("B[{k}] is {:?}, expected ({n}, {m})", b[k].shape())));
            }
            if d[k].shape() != (n, nd) {
                return Err(Error::dim(format!("D[{k}] is {:?}, expected ({n}, {nd})", d[k].shape())));
            }
        }
        Ok(Self { a, b, d })
    }

    pub fn state_dim(&self) -> usize {
        self.a[0].nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b[0].ncols()
    }

    pub fn noise_dim(&self) -> usize {
        self.d[0].ncols()
    }

    pub fn horizon(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self, k: usize) -> &DMatrix<f64> {
        &self.a[k]
    }

    pub fn b(&self, k: usize) -> &DMatrix<f64> {
        &self.b[k]
    }

    pub fn d(&self, k: usize) -> &DMatrix<f64> {
        &self.d[k]
    }

    /// One step of the recursion.
    pub fn step(&self, k: usize, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        &self.a[k] * x + &self.b[k] * u + &self.d[k] * w
    }
}

/// Stacked maps: `A` is `(N+1)n x n`, `B` is `(N+1)n x Nm`, `D` is `(N+1)n x Nd`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub horizon: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub dist: DMatrix<f64>,
}

pub fn build_augmented(model: &LtiModel) -> AugmentedSystem {
    let (n, m, d, nh) = (model.state_dim(), model.input_dim(), model.noise_dim(), model.horizon());
    let mut a = DMatrix::zeros((nh + 1) * n, n);
    let mut b = DMatrix::zeros((nh + 1) * n, nh * m);
    let mut dist = DMatrix::zeros((nh + 1) * n, nh * d);
    a.view_mut((0, 0), (n, n)).fill_with_identity();
    for k in 0..nh {
        // Block row k+1 is A_k times block row k, plus the fresh input and noise.
        let prev_a = a.rows(k * n, n).into_owned();
        a.rows_mut((k + 1) * n, n).copy_from(&(model.a(k) * prev_a));
        let prev_b = b.rows(k * n, n).into_owned();
        let mut row_b = model.a(k) * prev_b;
        row_b.view_mut((0, k * m), (n, m)).copy_from(model.b(k));
        b.rows_mut((k + 1) * n, n).copy_from(&row_b);
        let prev_d = dist.rows(k * n, n).into_owned();
        let mut row_d = model.a(k) * prev_d;
        row_d.view_mut((0, k * d), (n, d)).copy_from(model.d(k));
        dist.rows_mut((k + 1) * n, n).copy_from(&row_d);
    }
    AugmentedSystem { n, m, d, horizon: nh, a, b, dist }
}

impl AugmentedSystem {
    /// Side of the square closed-loop maps, `(N+1)n`.
    pub fn state_len(&self) -> usize {
        (self.horizon + 1) * self.n
    }

    pub fn input_len(&self) -> usize {
        self.horizon * self.m
    }

    pub fn noise_len(&self) -> usize {
        self.horizon * self.d
    }

    fn check_step(&self, k: usize) -> Result<()> {
        if k > self.horizon {
            return Err(Error::StepOutOfRange { k, horizon: self.horizon });
        }
        Ok(())
    }

    /// Block row `k` of `B`, i.e. `E_k B`.
    pub fn b_row(&self, k: usize) -> DMatrix<f64> {
        self.b.rows(k * self.n, self.n).into_owned()
    }

    pub fn dist_row(&self, k: usize) -> DMatrix<f64> {
        self.dist.rows(k * self.n, self.n).into_owned()
    }

    fn check_gain(&self, g: &DMatrix<f64>, name: &str) -> Result<()> {
        if g.shape() != (self.input_len(), self.state_len()) {
            return Err(Error::dim(format!(
                "{name} is {:?}, expected ({}, {})",
                g.shape(),
                self.input_len(),
                self.state_len()
            )));
        }
        check_causal(g, self.m, self.n)
    }
}

/// Errors unless every block `(k, j)` with `j > k` is zero.
pub fn check_causal(g: &DMatrix<f64>, m: usize, n: usize) -> Result<()> {
    for row in 0..g.nrows() / m {
        for col in row + 1..g.ncols() / n {
            if g.view((row * m, col * n), (m, n)).iter().any(|&v| v != 0.0) {
                return Err(Error::NotCausal { row, col });
            }
        }
    }
    Ok(())
}

fn unit_lower(aug: &AugmentedSystem, g: &DMatrix<f64>, sign: f64) -> DMatrix<f64> {
    let mut t = &aug.b * g * sign;
    for i in 0..t.nrows() {
        t[(i, i)] += 1.0;
    }
    t
}

/// `K = L (I + B L)^{-1}`.
pub fn gain_l_to_k(l: &DMatrix<f64>, aug: &AugmentedSystem) -> Result<DMatrix<f64>> {
    aug.check_gain(l, "L")?;
    right_solve_unit_lower(&unit_lower(aug, l, 1.0), l)
}

/// `L = K (I - B K)^{-1}`.
pub fn gain_k_to_l(k: &DMatrix<f64>, aug: &AugmentedSystem) -> Result<DMatrix<f64>> {
    aug.check_gain(k, "K")?;
    right_solve_unit_lower(&unit_lower(aug, k, -1.0), k)
}

/// `g T^{-1}` for unit lower-triangular `T`.
fn right_solve_unit_lower(t: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let tt = t.transpose();
    let x = tt
        .solve_upper_triangular(&g.transpose())
        .ok_or_else(|| Error::dim("closed-loop map is singular; gain is malformed"))?;
    Ok(x.transpose())
}

/// `E_k (I + B L) D`, the map from the disturbance sequence to the step-`k` error state.
pub fn error_map(k: usize, l: &DMatrix<f64>, aug: &AugmentedSystem) -> Result<DMatrix<f64>> {
    aug.check_step(k)?;
    if l.shape() != (aug.input_len(), aug.state_len()) {
        return Err(Error::dim(format!("L is {:?}", l.shape())));
    }
    Ok(aug.dist_row(k) + aug.b_row(k) * (l * &aug.dist))
}

/// `A x0 + B v`.
pub fn nominal_trajectory(v: &DVector<f64>, x0: &DVector<f64>, aug: &AugmentedSystem) -> Result<DVector<f64>> {
    if v.len() != aug.input_len() || x0.len() != aug.n {
        return Err(Error::dim(format!("v has {} entries and x0 {}", v.len(), x0.len())));
    }
    Ok(&aug.a * x0 + &aug.b * v)
}

/// Feed-forward `v`, disturbance-feedback `L` and the equivalent state-feedback `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub v: DVector<f64>,
    pub l: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

impl Policy {
    /// Builds the policy and recovers `K` from `L`.
    pub fn from_disturbance_feedback(v: DVector<f64>, l: DMatrix<f64>, aug: &AugmentedSystem) -> Result<Self> {
        if v.len() != aug.input_len() {
            return Err(Error::dim(format!("v has {} entries, expected {}", v.len(), aug.input_len())));
        }
        let k = gain_l_to_k(&l, aug)?;
        Ok(Self { v, l, k })
    }

    pub fn open_loop(v: DVector<f64>, aug: &AugmentedSystem) -> Result<Self> {
        let l = DMatrix::zeros(aug.input_len(), aug.state_len());
        Self::from_disturbance_feedback(v, l, aug)
    }
}

/// Stacked closed-loop states and inputs for one disturbance sequence.
pub fn apply_policy(
    policy: &Policy,
    x0: &DVector<f64>,
    w: &DVector<f64>,
    aug: &AugmentedSystem,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if w.len() != aug.noise_len() {
        return Err(Error::dim(format!("w has {} entries, expected {}", w.len(), aug.noise_len())));
    }
    let xbar = nominal_trajectory(&policy.v, x0, aug)?;
    let dw = &aug.dist * w;
    let fb = &policy.l * &dw;
    let x = xbar + dw + &aug.b * &fb;
    let u = &policy.v + fb;
    Ok((x, u))
}
