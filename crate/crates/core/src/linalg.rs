//! Small symmetric-matrix helpers shared by the modules.

use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues below this are treated as zero when taking roots.
pub const CLIP: f64 = 1e-12;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m).symmetric_eigenvalues().min()
}

pub fn max_eig(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m).symmetric_eigenvalues().max()
}

/// Checks symmetry (to `tol`, relative to the largest entry) and `lambda_min >= -tol`.
pub fn check_psd(m: &DMatrix<f64>, what: &str, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::dim(format!("{what} is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(1.0);
    if asymmetry(m) > tol * scale {
        return Err(Error::NotSymmetric(what.to_string()));
    }
    let l = min_eig(m);
    if l < -tol * scale {
        return Err(Error::NotPsd { what: what.to_string(), min_eig: l });
    }
    Ok(())
}

pub fn check_pd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    check_psd(m, what, 1e-10)?;
    let l = min_eig(m);
    if l <= 0.0 {
        return Err(Error::NotPd { what: what.to_string(), min_eig: l });
    }
    Ok(())
}

/// Symmetric PSD square root with eigenvalues clipped at [`CLIP`].
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    let e = SymmetricEigen::new(symmetrize(m));
    let d = e.eigenvalues.map(|l| if l > CLIP { l.sqrt() } else { 0.0 });
    &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()
}

/// A factor `F` with `F F^T = m` (eigenvectors times root eigenvalues), clipped.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    let e = SymmetricEigen::new(symmetrize(m));
    let d = e.eigenvalues.map(|l| if l > CLIP { l.sqrt() } else { 0.0 });
    e.eigenvectors * DMatrix::from_diagonal(&d)
}

/// Projects onto the psd cone by clipping negative eigenvalues to zero.
pub fn psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(symmetrize(m));
    let d = e.eigenvalues.map(|l| l.max(0.0));
    symmetrize(&(&e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()))
}

pub fn max_singular(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Inverse of a symmetric positive definite matrix by Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let c = symmetrize(m).cholesky().ok_or_else(|| Error::NotPd { what: what.to_string(), min_eig: min_eig(m) })?;
    Ok(symmetrize(&c.inverse()))
}

/// Block diagonal matrix from square blocks.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}
