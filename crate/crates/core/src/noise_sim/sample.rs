use crate::ambiguity::maximal_scale;
use crate::linalg::{check_psd, psd_factor};
use crate::{Error, Exec, Result};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    /// `N(0, S)`.
    Nominal,
    /// `N(0, eta^2 S)` with `eta` the maximal scale for `radius`.
    MaximalInBall { radius: f64 },
    /// Multivariate t with `dof` degrees of freedom and covariance `S`.
    StudentT { dof: f64 },
    /// `N(0, C)` for a supplied covariance.
    Custom(DMatrix<f64>),
}

impl NoiseKind {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Nominal => "nominal",
            NoiseKind::MaximalInBall { .. } => "maximal",
            NoiseKind::StudentT { .. } => "student-t",
            NoiseKind::Custom(_) => "custom",
        }
    }
}

/// A disturbance law over the stacked sequence plus the seed of its stream.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub base: DMatrix<f64>,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, base: DMatrix<f64>, seed: u64) -> Result<Self> {
        check_psd(&base, "Sigma_w", 1e-10)?;
        match &kind {
            NoiseKind::StudentT { dof } if !(*dof > 2.0) => {
                return Err(Error::param("dof", format!("Student-t needs more than 2 degrees of freedom, got {dof}")));
            }
            NoiseKind::MaximalInBall { radius } if !(*radius >= 0.0) => {
                return Err(Error::param("epsilon", "radius must be nonnegative"));
            }
            NoiseKind::Custom(c) => {
                if c.shape() != base.shape() {
                    return Err(Error::dim(format!("custom covariance is {:?}, expected {:?}", c.shape(), base.shape())));
                }
                check_psd(c, "custom covariance", 1e-10)?;
            }
            _ => {}
        }
        Ok(Self { kind, base, seed })
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    /// Covariance of the injected disturbance.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        Ok(match &self.kind {
            NoiseKind::Nominal | NoiseKind::StudentT { .. } => self.base.clone(),
            NoiseKind::MaximalInBall { radius } => {
                let eta = maximal_scale(&self.base, *radius)?;
                &self.base * (eta * eta)
            }
            NoiseKind::Custom(c) => c.clone(),
        })
    }

    pub fn sampler(&self) -> Result<Sampler> {
        let (factor, dof) = match &self.kind {
            NoiseKind::StudentT { dof } => (psd_factor(&(&self.base * ((dof - 2.0) / dof))), Some(*dof)),
            _ => (psd_factor(&self.covariance()?), None),
        };
        let chi = dof.map(|k| (k, ChiSquared::new(k).expect("dof checked positive")));
        Ok(Sampler { factor, chi, seed: self.seed })
    }
}

/// Precomputed draw rule. Sample `i` comes from its own ChaCha stream, so any
/// subset of indices can be drawn in any order with identical results.
#[derive(Debug, Clone)]
pub struct Sampler {
    factor: DMatrix<f64>,
    /// Degrees of freedom and the matching chi-squared law, for Student-t draws.
    chi: Option<(f64, ChiSquared<f64>)>,
    seed: u64,
}

impl Sampler {
    pub fn draw(&self, index: u64) -> DVector<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let n = self.factor.ncols();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let mut w = &self.factor * z;
        if let Some((dof, chi)) = &self.chi {
            w *= (dof / chi.sample(&mut rng)).sqrt();
        }
        w
    }
}

pub fn sample_noise(model: &NoiseModel, count: usize) -> Result<Vec<DVector<f64>>> {
    sample_noise_with(model, 0, count, Exec::default())
}

/// Samples `start..start + count` of the model's stream.
pub fn sample_noise_with(model: &NoiseModel, start: u64, count: usize, exec: Exec) -> Result<Vec<DVector<f64>>> {
    let s = model.sampler()?;
    Ok(exec.map(count, |i| s.draw(start + i as u64)))
}
