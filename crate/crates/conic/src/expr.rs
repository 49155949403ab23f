//! Sparse affine expressions over the flat variable vector.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// `sum coef * x[var] + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffExpr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl AffExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(index: usize) -> Self {
        Self::term(index, 1.0)
    }

    pub fn term(index: usize, coef: f64) -> Self {
        Self { terms: vec![(index, coef)], constant: 0.0 }
    }

    /// Builds from raw terms; duplicates are merged.
    pub fn from_terms(terms: Vec<(usize, f64)>, constant: f64) -> Self {
        let mut e = Self { terms, constant };
        e.normalize();
        e
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn push(&mut self, index: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((index, coef));
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// `self += a * other` without normalizing.
    pub fn axpy(&mut self, a: f64, other: &AffExpr) {
        if a == 0.0 {
            return;
        }
        self.terms.extend(other.terms.iter().map(|&(i, c)| (i, a * c)));
        self.constant += a * other.constant;
    }

    /// Sorts terms by variable and merges duplicates, dropping exact zeros.
    pub fn normalize(&mut self) {
        if self.terms.windows(2).all(|w| w[0].0 < w[1].0) && self.terms.iter().all(|t| t.1 != 0.0) {
            return;
        }
        self.terms.sort_unstable_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(i, c) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    pub fn scale(mut self, a: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= a;
        }
        self.constant *= a;
        self
    }
}

impl From<f64> for AffExpr {
    fn from(c: f64) -> Self {
        AffExpr::constant(c)
    }
}

impl AddAssign<&AffExpr> for AffExpr {
    fn add_assign(&mut self, rhs: &AffExpr) {
        self.axpy(1.0, rhs);
    }
}

impl AddAssign for AffExpr {
    fn add_assign(&mut self, rhs: AffExpr) {
        self.axpy(1.0, &rhs);
    }
}

impl SubAssign<&AffExpr> for AffExpr {
    fn sub_assign(&mut self, rhs: &AffExpr) {
        self.axpy(-1.0, rhs);
    }
}

impl AddAssign<f64> for AffExpr {
    fn add_assign(&mut self, rhs: f64) {
        self.constant += rhs;
    }
}

impl Add for AffExpr {
    type Output = AffExpr;
    fn add(mut self, rhs: AffExpr) -> AffExpr {
        self += &rhs;
        self.normalize();
        self
    }
}

impl Add<f64> for AffExpr {
    type Output = AffExpr;
    fn add(mut self, rhs: f64) -> AffExpr {
        self.constant += rhs;
        self
    }
}

impl Sub for AffExpr {
    type Output = AffExpr;
    fn sub(mut self, rhs: AffExpr) -> AffExpr {
        self -= &rhs;
        self.normalize();
        self
    }
}

impl Sub<f64> for AffExpr {
    type Output = AffExpr;
    fn sub(mut self, rhs: f64) -> AffExpr {
        self.constant -= rhs;
        self
    }
}

impl Sub<AffExpr> for f64 {
    type Output = AffExpr;
    fn sub(self, rhs: AffExpr) -> AffExpr {
        rhs.scale(-1.0) + self
    }
}

impl Add<AffExpr> for f64 {
    type Output = AffExpr;
    fn add(self, rhs: AffExpr) -> AffExpr {
        rhs + self
    }
}

impl Mul<f64> for AffExpr {
    type Output = AffExpr;
    fn mul(self, rhs: f64) -> AffExpr {
        self.scale(rhs)
    }
}

impl Mul<AffExpr> for f64 {
    type Output = AffExpr;
    fn mul(self, rhs: AffExpr) -> AffExpr {
        rhs.scale(self)
    }
}

impl Neg for AffExpr {
    type Output = AffExpr;
    fn neg(self) -> AffExpr {
        self.scale(-1.0)
    }
}

/// Symmetric matrix of affine expressions, lower triangle stored column-major.
#[derive(Debug, Clone)]
pub struct SymExpr {
    n: usize,
    entries: Vec<AffExpr>,
}

impl SymExpr {
    pub fn zeros(n: usize) -> Self {
        Self { n, entries: vec![AffExpr::zero(); crate::svec::tri_len(n)] }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &AffExpr {
        &self.entries[crate::svec::tri_index(self.n, i, j)]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut AffExpr {
        &mut self.entries[crate::svec::tri_index(self.n, i, j)]
    }

    /// Adds a constant symmetric matrix; only the lower triangle is read.
    pub fn add_const(&mut self, m: &nalgebra::DMatrix<f64>, row0: usize, col0: usize) {
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let (i, j) = (row0 + r, col0 + c);
                if i >= j && m[(r, c)] != 0.0 {
                    self.get_mut(i, j).add_constant(m[(r, c)]);
                }
            }
        }
    }

    /// Rows for a psd cone: svec of this matrix, expression-wise.
    pub fn into_svec_rows(self) -> Vec<AffExpr> {
        let pos = crate::svec::tri_positions(self.n);
        let mut out = Vec::with_capacity(self.entries.len());
        for (mut e, (r, c)) in self.entries.into_iter().zip(pos) {
            e.normalize();
            out.push(if r == c { e } else { e.scale(std::f64::consts::SQRT_2) });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_merges_and_drops() {
        let e = AffExpr::from_terms(vec![(3, 1.0), (1, 2.0), (3, -1.0), (1, 0.5)], 4.0);
        assert_eq!(e.terms(), &[(1, 2.5)]);
        assert_eq!(e.eval(&[0.0, 2.0, 0.0, 7.0]), 9.0);
    }

    #[test]
    fn sym_rows_scale_offdiag() {
        let mut s = SymExpr::zeros(2);
        *s.get_mut(0, 1) = AffExpr::var(0);
        *s.get_mut(1, 1) = AffExpr::constant(1.0);
        let rows = s.into_svec_rows();
        assert_eq!(rows.len(), 3);
        assert!((rows[1].terms()[0].1 - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(rows[2].constant_term(), 1.0);
    }
}
