//! Slow, direct reference computations. Each one evaluates a quantity by
//! searching over the set it is defined on, with no duality or closed forms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::f64::consts::{FRAC_PI_2, PI};

pub fn sqrt_sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let d = e.eigenvalues.map(|v| v.max(0.0).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()
}

/// `sup E[xi w^2]` over scalar laws with `(mean, std)` on the circle of radius
/// `eps` around `(0, sigma)`, sampled at 100k angles.
pub fn worstcase_scalar(xi: f64, sigma: f64, eps: f64) -> f64 {
    (0..100_000)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / 100_000.0;
            let (m, s) = (eps * th.cos(), sigma + eps * th.sin());
            xi * (m * m + s * s)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max (s + d)' X (s + d)` over `|d| = rho` in the plane, on a 720-angle grid.
fn column_best(x: &DMatrix<f64>, s: &DVector<f64>, rho: f64) -> f64 {
    let (a, b, c) = (x[(0, 0)], x[(0, 1)], x[(1, 1)]);
    (0..720)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / 720.0;
            let (u, v) = (s[0] + rho * th.cos(), s[1] + rho * th.sin());
            a * u * u + 2.0 * b * u * v + c * v * v
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `sup E[w' X w]` over the 2-d Gelbrich ball around `(0, S)`.
///
/// Members are `(mu, (S^1/2 + D)(S^1/2 + D)')` with `|mu|^2 + |D|_F^2 <= eps^2`.
/// The objective is convex in `(mu, D)`, so the search runs over the boundary:
/// the budget is split between the mean and the two columns of `D` on a
/// 121 x 121 angle grid.
pub fn worstcase_2x2(x: &DMatrix<f64>, s: &DMatrix<f64>, eps: f64) -> f64 {
    let root = sqrt_sym(s);
    let top = x.symmetric_eigenvalues().max();
    let cols = [root.column(0).into_owned(), root.column(1).into_owned()];
    let mut best = f64::NEG_INFINITY;
    let steps = 120;
    for i in 0..=steps {
        let a = FRAC_PI_2 * i as f64 / steps as f64;
        for j in 0..=steps {
            let b = FRAC_PI_2 * j as f64 / steps as f64;
            let (rm, r1, r2) = (eps * a.cos(), eps * a.sin() * b.cos(), eps * a.sin() * b.sin());
            let v = top * rm * rm + column_best(x, &cols[0], r1) + column_best(x, &cols[1], r2);
            best = best.max(v);
        }
    }
    best
}

/// Worst-case CVaR of `alpha x + offset` over scalar laws whose `(mean, std)`
/// lies in the disk of radius `eps` around `(mu, sigma)`. Each member is scored
/// by its moment-based CVaR bound `offset + alpha m + tau |alpha| s`; the disk
/// is covered by a 400 x 400 polar grid.
pub fn drcvar_polar(alpha: f64, offset: f64, mu: f64, sigma: f64, eps: f64, tau: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..400 {
        let rad = eps * (i as f64 + 1.0) / 400.0;
        for j in 0..400 {
            let th = 2.0 * PI * j as f64 / 400.0;
            let (m, s) = (mu + rad * th.cos(), sigma + rad * th.sin());
            if s < 0.0 {
                continue;
            }
            best = best.max(offset + alpha * m + tau * alpha.abs() * s);
        }
    }
    best
}

/// Rockafellar-Uryasev: `min_t t + E[(l - t)+] / gamma`, minimized over the sample points.
pub fn ru_cvar(losses: &[f64], gamma: f64) -> f64 {
    let t = losses.len() as f64;
    losses
        .iter()
        .map(|&s| s + losses.iter().map(|&l| (l - s).max(0.0)).sum::<f64>() / (gamma * t))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_circle() {
        assert!((worstcase_scalar(1.0, 1.0, 0.5) - 2.25).abs() < 1e-9);
    }

    #[test]
    fn tail_mean() {
        assert!((ru_cvar(&[1.0, 2.0, 3.0, 4.0], 0.5) - 3.5).abs() < 1e-15);
    }
}
