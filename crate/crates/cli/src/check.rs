//! Built-in self-checks. Each oracle compares a library routine with an
//! independent closed form or a round trip.

use drds_core::ambiguity::{cvar_coeff, gaussian_w2, gelbrich_distance, maximal_scale, GaussianMoments};
use drds_core::drds::worstcase_quadratic_value;
use drds_core::noise_sim::{autocovariance, DrydenChannel, DrydenParams, Quadrature};
use drds_core::system::{build_augmented, gain_k_to_l, gain_l_to_k, LtiModel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error, or the failure message.
    pub detail: String,
}

fn verdict(name: &'static str, worst: Result<f64, drds_core::Error>, tol: f64) -> OracleResult {
    match worst {
        Ok(w) => OracleResult { name, passed: w <= tol, detail: format!("worst error {w:.3e} (tolerance {tol:.0e})") },
        Err(e) => OracleResult { name, passed: false, detail: e.to_string() },
    }
}

fn random_psd(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let f = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    &f * f.transpose() + DMatrix::identity(n, n) * 0.01
}

/// `(sigma + eps)^2 xi` for scalar instances, relative error.
fn scalar_worst_case(r: &mut ChaCha8Rng) -> Result<f64, drds_core::Error> {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let xi = r.random_range(0.01..5.0);
        let sigma = r.random_range(0.05..3.0);
        let eps = r.random_range(0.0..3.0);
        let v = worstcase_quadratic_value(&DMatrix::from_element(1, 1, xi), &DMatrix::from_element(1, 1, sigma * sigma), eps)?;
        let exact: f64 = (sigma + eps).powi(2) * xi;
        worst = worst.max((v - exact).abs() / exact);
    }
    Ok(worst)
}

fn cvar_coefficient() -> Result<f64, drds_core::Error> {
    let cases = [(0.05, 19f64.sqrt()), (0.5, 1.0), (0.2, 2.0), (0.1, 3.0)];
    let mut worst: f64 = 0.0;
    for (g, exact) in cases {
        worst = worst.max((cvar_coeff(g)? - exact).abs());
    }
    Ok(worst)
}

/// Nuclear-norm and nested-root forms agree; diagonal covariances have
/// `sum (sqrt a_i - sqrt b_i)^2` for the covariance part.
fn gelbrich_identities(r: &mut ChaCha8Rng) -> Result<f64, drds_core::Error> {
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        for _ in 0..10 {
            let p = GaussianMoments::new(DVector::from_fn(n, |_, _| r.random_range(-2.0..2.0)), random_psd(r, n))?;
            let q = GaussianMoments::new(DVector::from_fn(n, |_, _| r.random_range(-2.0..2.0)), random_psd(r, n))?;
            worst = worst.max((gelbrich_distance(&p, &q)? - gaussian_w2(&p, &q)?).abs());
            let a: DVector<f64> = DVector::from_fn(n, |_, _| r.random_range(0.1..4.0));
            let b: DVector<f64> = DVector::from_fn(n, |_, _| r.random_range(0.1..4.0));
            let exact: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2)).sum::<f64>().sqrt();
            let pa = GaussianMoments::zero_mean(DMatrix::from_diagonal(&a))?;
            let pb = GaussianMoments::zero_mean(DMatrix::from_diagonal(&b))?;
            worst = worst.max((gelbrich_distance(&pa, &pb)? - exact).abs());
        }
    }
    Ok(worst)
}

fn maximal_scale_radius(r: &mut ChaCha8Rng) -> Result<f64, drds_core::Error> {
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let s = random_psd(r, n);
        let radius = r.random_range(0.0..10.0);
        let eta = maximal_scale(&s, radius)?;
        let a = GaussianMoments::zero_mean(s.clone())?;
        let b = GaussianMoments::zero_mean(&s * (eta * eta))?;
        worst = worst.max((gaussian_w2(&a, &b)? - radius).abs());
    }
    Ok(worst)
}

/// `K -> L -> K` on random causal gains, relative to `1 + |K|`.
fn gain_round_trip(r: &mut ChaCha8Rng) -> Result<f64, drds_core::Error> {
    let mut worst: f64 = 0.0;
    for &(n, m, nh) in &[(2, 1, 3), (4, 2, 6), (3, 2, 10)] {
        let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let b = DMatrix::from_fn(n, m, |_, _| r.random_range(-1.0..1.0));
        let model = LtiModel::time_invariant(a, b, DMatrix::identity(n, n), nh)?;
        let aug = build_augmented(&model);
        let mut k = DMatrix::zeros(m * nh, n * (nh + 1));
        for s in 0..nh {
            for j in 0..=s {
                k.view_mut((s * m, j * n), (m, n)).copy_from(&DMatrix::from_fn(m, n, |_, _| r.random_range(-0.5..0.5)));
            }
        }
        let back = gain_l_to_k(&gain_k_to_l(&k, &aug)?, &aug)?;
        worst = worst.max((back - &k).amax() / (1.0 + k.amax()));
    }
    Ok(worst)
}

/// Lag-0 autocovariance of each linear channel against its intensity squared, relative.
fn dryden_normalization() -> Result<f64, drds_core::Error> {
    let mut worst: f64 = 0.0;
    for v0 in [1.0, 5.0, 20.0, 50.0] {
        let p = DrydenParams::new(v0, 10.0, 0.34, 0.5, DrydenChannel::ALL.to_vec())?;
        for ch in [DrydenChannel::Ug, DrydenChannel::Vg, DrydenChannel::Wg] {
            let c0 = autocovariance(ch, &[0.0], &p, Quadrature::default())?[0];
            let exact = p.linear_variance(ch).unwrap_or(f64::NAN);
            worst = worst.max((c0 - exact).abs() / exact);
        }
    }
    Ok(worst)
}

pub fn run_oracles() -> Vec<OracleResult> {
    let mut r = ChaCha8Rng::seed_from_u64(0x5eed);
    vec![
        verdict("scalar worst-case cost", scalar_worst_case(&mut r), 1e-6),
        verdict("cvar coefficient", cvar_coefficient(), 1e-12),
        verdict("gelbrich identities", gelbrich_identities(&mut r), 1e-10),
        verdict("maximal scale radius", maximal_scale_radius(&mut r), 1e-10),
        verdict("gain round trip", gain_round_trip(&mut r), 1e-9),
        verdict("dryden normalization", dryden_normalization(), 0.02),
    ]
}
