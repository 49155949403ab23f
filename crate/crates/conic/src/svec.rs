//! Scaled vectorization of symmetric matrices.
//!
//! Lower triangle, column-major, off-diagonals times sqrt(2), so that
//! `svec(A) . svec(B) = tr(AB)`.

use crate::ConicError;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::SQRT_2;

/// Length of the svec of an `n x n` matrix.
pub fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Inverse of [`tri_len`]; `None` when `len` is not triangular.
pub fn tri_order(len: usize) -> Option<usize> {
    let n = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    (tri_len(n) == len).then_some(n)
}

/// Position of entry `(i, j)` (either triangle) inside the svec of an `n x n` matrix.
#[inline]
pub fn tri_index(n: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    c * (2 * n - c + 1) / 2 + (r - c)
}

/// Matrix position of every svec slot, in svec order.
pub fn tri_positions(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(tri_len(n));
    for c in 0..n {
        for r in c..n {
            out.push((r, c));
        }
    }
    out
}

pub fn svec(m: &DMatrix<f64>) -> Result<DVector<f64>, ConicError> {
    if !m.is_square() {
        return Err(ConicError::Dimension(format!(
            "svec of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(ConicError::NotSymmetric(asym));
    }
    Ok(svec_unchecked(m))
}

/// svec without the symmetry check; reads the lower triangle only.
pub fn svec_unchecked(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut v = DVector::zeros(tri_len(n));
    let mut k = 0;
    for c in 0..n {
        v[k] = m[(c, c)];
        k += 1;
        for r in c + 1..n {
            v[k] = SQRT_2 * m[(r, c)];
            k += 1;
        }
    }
    v
}

pub fn smat(v: &[f64]) -> Result<DMatrix<f64>, ConicError> {
    let n = tri_order(v.len()).ok_or(ConicError::NotTriangular(v.len()))?;
    Ok(smat_n(v, n))
}

pub(crate) fn smat_n(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for c in 0..n {
        m[(c, c)] = v[k];
        k += 1;
        for r in c + 1..n {
            let x = v[k] / SQRT_2;
            m[(r, c)] = x;
            m[(c, r)] = x;
            k += 1;
        }
    }
    m
}

/// Writes `svec(m)` into `out` without allocating.
pub(crate) fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for c in 0..n {
        out[k] = m[(c, c)];
        k += 1;
        for r in c + 1..n {
            out[k] = SQRT_2 * 0.5 * (m[(r, c)] + m[(c, r)]);
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_offdiag() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(svec(&i2).unwrap().as_slice(), &[1.0, 0.0, 1.0]);
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let v = svec(&x).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - SQRT_2).abs() < 1e-15);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn rejects_asymmetric() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(svec(&x), Err(ConicError::NotSymmetric(_))));
    }

    #[test]
    fn index_matches_layout() {
        for n in 1..6 {
            for (k, &(r, c)) in tri_positions(n).iter().enumerate() {
                assert_eq!(tri_index(n, r, c), k);
                assert_eq!(tri_index(n, c, r), k);
            }
            assert_eq!(tri_order(tri_len(n)), Some(n));
        }
        assert_eq!(tri_order(5), None);
    }
}
