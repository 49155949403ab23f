//! Gelbrich/Wasserstein balls around Gaussian centers and how they move
//! through linear maps.

use crate::linalg::{check_psd, max_singular, psd_factor, psd_sqrt, symmetrize, CLIP};
use crate::system::{error_map, AugmentedSystem, Policy};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Mean and covariance; the covariance is symmetric psd.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianMoments {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.shape() != (mean.len(), mean.len()) {
            return Err(Error::dim(format!("mean has {} entries, covariance is {:?}", mean.len(), cov.shape())));
        }
        check_psd(&cov, "covariance", 1e-10)?;
        Ok(Self { mean, cov })
    }

    pub fn zero_mean(cov: DMatrix<f64>) -> Result<Self> {
        Self::new(DVector::zeros(cov.nrows()), cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Image under `x -> a x`.
    pub fn pushforward(&self, a: &DMatrix<f64>) -> Self {
        Self { mean: a * &self.mean, cov: symmetrize(&(a * &self.cov * a.transpose())) }
    }
}

/// Transport cost defining the ball.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    EuclideanW2,
    /// Euclidean cost composed with the pseudo-inverse of this map; carried as a tag only.
    PseudoInverseCost(DMatrix<f64>),
}

/// Structural prior on the ball members. Only the unstructured case is used:
/// every distribution with finite second moment is admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Structure {
    #[default]
    AllFiniteSecondMoment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySpec {
    pub center: GaussianMoments,
    pub radius: f64,
    pub metric: Metric,
    pub structure: Structure,
}

impl AmbiguitySpec {
    pub fn new(center: GaussianMoments, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::param("epsilon", format!("radius must be finite and nonnegative, got {radius}")));
        }
        Ok(Self { center, radius, metric: Metric::EuclideanW2, structure: Structure::default() })
    }
}

fn check_pair(p: &GaussianMoments, q: &GaussianMoments) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::dim(format!("comparing {}-d with {}-d moments", p.dim(), q.dim())));
    }
    check_psd(&p.cov, "first covariance", 1e-10)?;
    check_psd(&q.cov, "second covariance", 1e-10)
}

/// `sqrt(|m1 - m2|^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2))`.
pub fn gelbrich_distance(p: &GaussianMoments, q: &GaussianMoments) -> Result<f64> {
    check_pair(p, q)?;
    let r = psd_sqrt(&p.cov);
    let inner = symmetrize(&(&r * &q.cov * &r));
    let fidelity: f64 = inner.symmetric_eigenvalues().iter().map(|&l| if l > CLIP { l.sqrt() } else { 0.0 }).sum();
    let mean2 = (&p.mean - &q.mean).norm_squared();
    Ok((mean2 + p.cov.trace() + q.cov.trace() - 2.0 * fidelity).max(0.0).sqrt())
}

/// Type-2 Wasserstein distance between the Gaussians with these moments.
///
/// Evaluated through the nuclear norm of `F1^T F2` for factors `Fi Fi^T = Si`,
/// which avoids the nested square root.
pub fn gaussian_w2(p: &GaussianMoments, q: &GaussianMoments) -> Result<f64> {
    check_pair(p, q)?;
    let f1 = psd_factor(&p.cov);
    let f2 = psd_factor(&q.cov);
    let nuclear: f64 = (f1.transpose() * f2).svd(false, false).singular_values.sum();
    let mean2 = (&p.mean - &q.mean).norm_squared();
    Ok((mean2 + p.cov.trace() + q.cov.trace() - 2.0 * nuclear).max(0.0).sqrt())
}

/// Worst-case CVaR multiplier of a standardized linear loss at risk level `gamma`.
pub fn cvar_coeff(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("risk level must lie in (0, 1), got {gamma}")));
    }
    Ok(((1.0 - gamma) / gamma).sqrt())
}

/// Worst-case CVaR of `normal' x + offset` over all laws whose mean and
/// covariance lie within Gelbrich distance `radius` of `center`.
pub fn drcvar_value(normal: &DVector<f64>, offset: f64, center: &GaussianMoments, radius: f64, gamma: f64) -> Result<f64> {
    if normal.len() != center.dim() {
        return Err(Error::dim(format!("normal has {} entries, center is {}-d", normal.len(), center.dim())));
    }
    if !(radius >= 0.0) {
        return Err(Error::param("radius", "must be nonnegative"));
    }
    let tau = cvar_coeff(gamma)?;
    let spread = normal.dot(&(&center.cov * normal)).max(0.0).sqrt();
    Ok(offset + normal.dot(&center.mean) + tau * spread + radius * normal.norm() * (1.0 + tau * tau).sqrt())
}

/// Scale `eta` with `W2(N(0, S), N(0, eta^2 S)) = radius`.
pub fn maximal_scale(cov: &DMatrix<f64>, radius: f64) -> Result<f64> {
    let tr = cov.trace();
    if !(tr > 0.0) {
        return Err(Error::param("covariance", "trace must be positive"));
    }
    if !(radius >= 0.0) {
        return Err(Error::param("radius", "must be nonnegative"));
    }
    Ok(1.0 + radius / tr.sqrt())
}

/// How a noise-ball radius is carried to the image of a linear map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PushforwardMode {
    /// `eps * sigma_max^2`.
    #[default]
    PaperExact,
    /// `eps * sigma_max`, the operator-norm bound.
    OperatorNorm,
}

impl PushforwardMode {
    pub fn name(self) -> &'static str {
        match self {
            PushforwardMode::PaperExact => "paper",
            PushforwardMode::OperatorNorm => "opnorm",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(PushforwardMode::PaperExact),
            "opnorm" => Some(PushforwardMode::OperatorNorm),
            _ => None,
        }
    }
}

pub fn pushforward_radius(map: &DMatrix<f64>, radius: f64, mode: PushforwardMode) -> f64 {
    let s = max_singular(map);
    match mode {
        PushforwardMode::PaperExact => radius * s * s,
        PushforwardMode::OperatorNorm => radius * s,
    }
}

/// Radius covering a length-`steps` sequence of independent draws, each from a ball of `radius`.
pub fn iid_sequence_radius(radius: f64, steps: usize) -> f64 {
    radius * steps as f64
}

/// Ball of step-`k` states: center `(E_k(A x0 + B v), Lk S Lk^T)`, same radius,
/// cost tagged with the error map `Lk`.
pub fn state_ambiguity(
    k: usize,
    policy: &Policy,
    aug: &AugmentedSystem,
    noise: &AmbiguitySpec,
    x0: &DVector<f64>,
) -> Result<AmbiguitySpec> {
    if noise.center.dim() != aug.noise_len() {
        return Err(Error::dim(format!("noise center is {}-d, expected {}", noise.center.dim(), aug.noise_len())));
    }
    if noise.center.mean.amax() != 0.0 {
        return Err(Error::param("noise", "center must be zero-mean"));
    }
    let lk = error_map(k, &policy.l, aug)?;
    let xbar = crate::system::nominal_trajectory(&policy.v, x0, aug)?;
    let mean = xbar.rows(k * aug.n, aug.n).into_owned();
    let cov = symmetrize(&(&lk * &noise.center.cov * lk.transpose()));
    Ok(AmbiguitySpec {
        center: GaussianMoments { mean, cov },
        radius: noise.radius,
        metric: Metric::PseudoInverseCost(lk),
        structure: noise.structure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(mean: &[f64], cov: &[f64]) -> GaussianMoments {
        let n = mean.len();
        GaussianMoments::new(DVector::from_column_slice(mean), DMatrix::from_row_slice(n, n, cov)).unwrap()
    }

    #[test]
    fn scalar_gelbrich() {
        assert!((gelbrich_distance(&g(&[0.0], &[1.0]), &g(&[0.0], &[4.0])).unwrap() - 1.0).abs() < 1e-14);
        assert!((gaussian_w2(&g(&[0.0], &[1.0]), &g(&[3.0], &[1.0])).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn equal_covariance_is_mean_gap() {
        let c = [2.0, 0.3, 0.3, 1.0];
        let d = gelbrich_distance(&g(&[1.0, 2.0], &c), &g(&[4.0, -2.0], &c)).unwrap();
        assert!((d - 5.0).abs() < 1e-7);
    }

    #[test]
    fn coefficients() {
        assert_eq!(cvar_coeff(0.5).unwrap(), 1.0);
        assert!((cvar_coeff(0.2).unwrap() - 2.0).abs() < 1e-15);
        assert!(cvar_coeff(1.0).is_err());
        assert!(cvar_coeff(0.0).is_err());
    }

    #[test]
    fn maximal_scale_values() {
        let sf = DMatrix::identity(4, 4) * (0.1f64 / 3.0).powi(2);
        assert!((maximal_scale(&sf, 0.05).unwrap() - 1.75).abs() < 1e-12);
        let sw = DMatrix::<f64>::identity(80, 80);
        assert!((maximal_scale(&sw, 15.0).unwrap() - (1.0 + 15.0 / 80f64.sqrt())).abs() < 1e-15);
        assert_eq!(maximal_scale(&sw, 0.0).unwrap(), 1.0);
        assert!(maximal_scale(&DMatrix::zeros(2, 2), 1.0).is_err());
    }

    #[test]
    fn pushforward_modes() {
        let two = DMatrix::<f64>::identity(3, 3) * 2.0;
        assert!((pushforward_radius(&two, 1.0, PushforwardMode::PaperExact) - 4.0).abs() < 1e-12);
        assert!((pushforward_radius(&two, 1.0, PushforwardMode::OperatorNorm) - 2.0).abs() < 1e-12);
        let id = DMatrix::<f64>::identity(2, 2);
        assert!((pushforward_radius(&id, 0.7, PushforwardMode::PaperExact) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn iid_radius() {
        assert_eq!(iid_sequence_radius(0.5, 20), 10.0);
        assert_eq!(iid_sequence_radius(0.0, 7), 0.0);
        assert_eq!(iid_sequence_radius(1.25, 1), 1.25);
    }

    #[test]
    fn rejects_indefinite() {
        let bad = GaussianMoments { mean: DVector::zeros(2), cov: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]) };
        let ok = g(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        assert!(gelbrich_distance(&bad, &ok).is_err());
    }
}
