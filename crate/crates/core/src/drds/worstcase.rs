use super::scenario::CostWeights;
use crate::linalg::{check_psd, symmetrize};
use crate::system::AugmentedSystem;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// `D'((I + B L)' Q (I + B L) + L' R L) D`: the quadratic form of the stacked
/// disturbance giving the closed-loop stage cost.
pub fn cost_form(l: &DMatrix<f64>, aug: &AugmentedSystem, weights: &CostWeights) -> DMatrix<f64> {
    let closed = &aug.dist + &aug.b * (l * &aug.dist);
    let ld = l * &aug.dist;
    let q = weights.stacked_q();
    let r = weights.stacked_r();
    symmetrize(&(closed.transpose() * q * &closed + ld.transpose() * r * ld))
}

/// `sup E[w' Xi w]` over the Gelbrich ball of radius `eps` around `(0, sigma)`.
///
/// Minimizes the convex dual `lam (eps^2 - tr S) + lam^2 tr[S (lam I - Xi)^-1]`
/// over `lam > lambda_max(Xi)` by bracket growth and golden section.
pub fn worstcase_quadratic_value(xi: &DMatrix<f64>, sigma: &DMatrix<f64>, eps: f64) -> Result<f64> {
    if xi.shape() != sigma.shape() || !xi.is_square() {
        return Err(Error::dim(format!("Xi is {:?}, Sigma is {:?}", xi.shape(), sigma.shape())));
    }
    check_psd(xi, "Xi", 1e-10)?;
    check_psd(sigma, "Sigma_w", 1e-10)?;
    if !(eps >= 0.0) {
        return Err(Error::param("epsilon", "must be nonnegative"));
    }
    let nominal = (xi * sigma).trace();
    if eps == 0.0 {
        return Ok(nominal);
    }
    let e = SymmetricEigen::new(symmetrize(xi));
    let top = e.eigenvalues.max().max(0.0);
    if top == 0.0 {
        return Ok(0.0);
    }
    // Diagonal of V' S V in the eigenbasis of Xi.
    let rotated = e.eigenvectors.transpose() * sigma * &e.eigenvectors;
    let weights: Vec<(f64, f64)> = e.eigenvalues.iter().enumerate().map(|(i, &x)| (x, rotated[(i, i)])).collect();
    let tr = sigma.trace();
    let f = |t: f64| {
        let lam = top + t;
        let s: f64 = weights.iter().map(|&(x, w)| w / (lam - x)).sum();
        lam * (eps * eps - tr) + lam * lam * s
    };
    // f is convex in t > 0 and blows up at both ends; grow until it turns upward.
    let mut hi = top.max(1.0);
    while f(2.0 * hi) < f(hi) {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::param("epsilon", "dual did not bracket a minimum"));
        }
    }
    let (mut a, mut b) = (0.0, 2.0 * hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if (b - a) <= 1e-15 * (top + b) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    Ok(fc.min(fd))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn zero_radius_is_nominal() {
        let xi = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let sg = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 3.0]);
        let v = worstcase_quadratic_value(&xi, &sg, 0.0).unwrap();
        assert!((v - (&xi * &sg).trace()).abs() < 1e-14);
    }

    #[test]
    fn scalar_value() {
        let v = worstcase_quadratic_value(&s(1.0), &s(1.0), 0.5).unwrap();
        assert!((v - 2.25).abs() < 1e-9, "{v}");
    }

    #[test]
    fn zero_form_is_zero() {
        assert_eq!(worstcase_quadratic_value(&s(0.0), &s(2.0), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_indefinite_form() {
        assert!(worstcase_quadratic_value(&s(-1.0), &s(1.0), 1.0).is_err());
    }
}
