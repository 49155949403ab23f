//! Per-cone algebra: Nesterov-Todd scaling, Jordan products, step lengths.

use crate::svec::{smat_n, svec_into, tri_len};
use nalgebra::DMatrix;
#[cfg(test)]
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cone {
    Zero(usize),
    NonNeg(usize),
    Soc(usize),
    /// Matrix order.
    Psd(usize),
}

impl Cone {
    pub fn dim(self) -> usize {
        match self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::Soc(d) => d,
            Cone::Psd(n) => tri_len(n),
        }
    }

    pub fn degree(self) -> usize {
        match self {
            Cone::Zero(_) => 0,
            Cone::NonNeg(d) => d,
            Cone::Soc(_) => 1,
            Cone::Psd(n) => n,
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Cone::Zero(_))
    }

    /// Identity element `e`.
    pub fn unit(self, out: &mut [f64]) {
        out.fill(0.0);
        match self {
            Cone::Zero(_) => {}
            Cone::NonNeg(_) => out.fill(1.0),
            Cone::Soc(_) => out[0] = 1.0,
            Cone::Psd(n) => {
                let mut k = 0;
                for c in 0..n {
                    out[k] = 1.0;
                    k += n - c;
                }
            }
        }
    }

    /// Smallest "eigenvalue" of `u` with respect to the cone.
    pub fn min_eig(self, u: &[f64]) -> f64 {
        match self {
            Cone::Zero(_) => f64::INFINITY,
            Cone::NonNeg(_) => u.iter().copied().fold(f64::INFINITY, f64::min),
            Cone::Soc(_) => u[0] - norm(&u[1..]),
            Cone::Psd(n) => smat_n(u, n).symmetric_eigenvalues().min(),
        }
    }

    /// Jordan product `u o v`.
    pub fn jordan(self, u: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            Cone::Zero(_) => out.fill(0.0),
            Cone::NonNeg(_) => {
                for i in 0..u.len() {
                    out[i] = u[i] * v[i];
                }
            }
            Cone::Soc(_) => {
                out[0] = dot(u, v);
                for i in 1..u.len() {
                    out[i] = u[0] * v[i] + v[0] * u[i];
                }
            }
            Cone::Psd(n) => {
                let a = smat_n(u, n);
                let b = smat_n(v, n);
                let ab = &a * &b;
                let sym = (&ab + ab.transpose()) * 0.5;
                svec_into(&sym, out);
            }
        }
    }

    /// Solves `lambda o q = d` for `q`. For psd cones `lambda` is diagonal.
    pub fn jordan_div(self, lambda: &[f64], d: &[f64], out: &mut [f64]) {
        match self {
            Cone::Zero(_) => out.fill(0.0),
            Cone::NonNeg(_) => {
                for i in 0..d.len() {
                    out[i] = d[i] / lambda[i];
                }
            }
            Cone::Soc(_) => {
                let l0 = lambda[0];
                let det = l0 * l0 - dot(&lambda[1..], &lambda[1..]);
                let q0 = (l0 * d[0] - dot(&lambda[1..], &d[1..])) / det;
                out[0] = q0;
                for i in 1..d.len() {
                    out[i] = (d[i] - q0 * lambda[i]) / l0;
                }
            }
            Cone::Psd(n) => {
                let diag = psd_diag(lambda, n);
                let mut k = 0;
                for c in 0..n {
                    for r in c..n {
                        out[k] = 2.0 * d[k] / (diag[r] + diag[c]);
                        k += 1;
                    }
                }
            }
        }
    }

    /// Largest `a` with `lambda + a * d` in the cone (`lambda` interior, psd diagonal).
    pub fn max_step_scaled(self, lambda: &[f64], d: &[f64]) -> f64 {
        match self {
            Cone::Zero(_) => f64::INFINITY,
            Cone::NonNeg(_) => {
                let mut a = f64::INFINITY;
                for i in 0..d.len() {
                    if d[i] < 0.0 {
                        a = a.min(-lambda[i] / d[i]);
                    }
                }
                a
            }
            Cone::Soc(_) => soc_max_step(lambda, d),
            Cone::Psd(n) => {
                let diag = psd_diag(lambda, n);
                let inv: Vec<f64> = diag.iter().map(|x| 1.0 / x.sqrt()).collect();
                let mut m = smat_n(d, n);
                for c in 0..n {
                    for r in 0..n {
                        m[(r, c)] *= inv[r] * inv[c];
                    }
                }
                let lmin = m.symmetric_eigenvalues().min();
                if lmin < 0.0 { -1.0 / lmin } else { f64::INFINITY }
            }
        }
    }
}

fn psd_diag(u: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for c in 0..n {
        out.push(u[k]);
        k += n - c;
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// First positive root of `|u + a d|_J^2 = 0`, i.e. where the ray leaves the cone.
fn soc_max_step(u: &[f64], d: &[f64]) -> f64 {
    let qa = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let qb = 2.0 * (u[0] * d[0] - dot(&u[1..], &d[1..]));
    let qc = u[0] * u[0] - dot(&u[1..], &u[1..]);
    let mut best = f64::INFINITY;
    let mut consider = |r: f64| {
        if r > 0.0 && r < best {
            best = r;
        }
    };
    if qa.abs() <= 1e-14 * (qb.abs() + qc.abs()) {
        if qb < 0.0 {
            consider(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -0.5 * (qb + qb.signum() * sq);
            if q != 0.0 {
                consider(q / qa);
                consider(qc / q);
            }
        }
    }
    // Also respect the head staying positive (guards round-off in the quadratic).
    if d[0] < 0.0 {
        consider(-u[0] / d[0]);
    }
    best
}

/// Nesterov-Todd scaling `W`, with `W z = W^{-T} s = lambda`.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    Zero,
    /// `W = diag(d)`, `d = sqrt(s / z)`.
    NonNeg(Vec<f64>),
    /// `W = beta (2 w w^T - J)` with `w^T J w = 1`.
    Soc { beta: f64, w: Vec<f64> },
    /// `W(U) = R^T U R`.
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64> },
}

impl Scaling {
    pub fn identity(cone: Cone) -> Scaling {
        match cone {
            Cone::Zero(_) => Scaling::Zero,
            Cone::NonNeg(d) => Scaling::NonNeg(vec![1.0; d]),
            Cone::Soc(d) => {
                let mut w = vec![0.0; d];
                w[0] = 1.0;
                Scaling::Soc { beta: 1.0, w }
            }
            Cone::Psd(n) => Scaling::Psd { r: DMatrix::identity(n, n), rinv: DMatrix::identity(n, n) },
        }
    }

    /// Returns `None` if `s` or `z` is not strictly interior.
    pub fn nt(cone: Cone, s: &[f64], z: &[f64]) -> Option<Scaling> {
        match cone {
            Cone::Zero(_) => Some(Scaling::Zero),
            Cone::NonNeg(_) => {
                let mut d = Vec::with_capacity(s.len());
                for i in 0..s.len() {
                    if !(s[i] > 0.0 && z[i] > 0.0) {
                        return None;
                    }
                    d.push((s[i] / z[i]).sqrt());
                }
                Some(Scaling::NonNeg(d))
            }
            Cone::Soc(_) => {
                let sj = s[0] * s[0] - dot(&s[1..], &s[1..]);
                let zj = z[0] * z[0] - dot(&z[1..], &z[1..]);
                if !(sj > 0.0 && zj > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                    return None;
                }
                let (sn, zn) = (sj.sqrt(), zj.sqrt());
                let beta = (sn / zn).sqrt();
                let sb: Vec<f64> = s.iter().map(|x| x / sn).collect();
                let zb: Vec<f64> = z.iter().map(|x| x / zn).collect();
                let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
                // Midpoint wb = (sb + J zb) / (2 gamma); W uses its "half-angle" point.
                let wb0 = (sb[0] + zb[0]) / (2.0 * gamma);
                let f = 1.0 / (2.0 * (wb0 + 1.0)).sqrt();
                let mut w = vec![0.0; s.len()];
                w[0] = (wb0 + 1.0) * f;
                for i in 1..s.len() {
                    w[i] = (sb[i] - zb[i]) / (2.0 * gamma) * f;
                }
                Some(Scaling::Soc { beta, w })
            }
            Cone::Psd(n) => {
                let ls = smat_n(s, n).cholesky()?.l();
                let lz = smat_n(z, n).cholesky()?.l();
                let svd = (lz.transpose() * &ls).svd(false, true);
                let v = svd.v_t?.transpose();
                let lam = svd.singular_values;
                if lam.iter().any(|&x| !(x > 0.0)) {
                    return None;
                }
                // R = Ls V diag(lam)^{-1/2}, R^{-1} = diag(lam)^{1/2} V^T Ls^{-1}.
                let mut r = &ls * &v;
                for c in 0..n {
                    let f = 1.0 / lam[c].sqrt();
                    r.column_mut(c).scale_mut(f);
                }
                let lsinv = ls.solve_lower_triangular(&DMatrix::identity(n, n))?;
                let mut rinv = v.transpose() * lsinv;
                for rr in 0..n {
                    let f = lam[rr].sqrt();
                    rinv.row_mut(rr).scale_mut(f);
                }
                Some(Scaling::Psd { r, rinv })
            }
        }
    }

    /// `out = W v`.
    pub fn w(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Zero => out.fill(0.0),
            Scaling::NonNeg(d) => {
                for i in 0..v.len() {
                    out[i] = d[i] * v[i];
                }
            }
            Scaling::Soc { beta, w } => {
                // beta (2 w (w^T v) - J v)
                let wv = dot(w, v);
                out[0] = beta * (2.0 * w[0] * wv - v[0]);
                for i in 1..v.len() {
                    out[i] = beta * (2.0 * w[i] * wv + v[i]);
                }
            }
            Scaling::Psd { r, .. } => congruence(r, v, true, out),
        }
    }

    /// `out = W^T v`.
    pub fn wt(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { r, .. } => congruence(r, v, false, out),
            _ => self.w(v, out),
        }
    }

    /// `out = W^{-T} v`.
    pub fn winv_t(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Zero => out.fill(0.0),
            Scaling::NonNeg(d) => {
                for i in 0..v.len() {
                    out[i] = v[i] / d[i];
                }
            }
            Scaling::Soc { beta, w } => {
                // (1/beta) (2 J w (w^T J v) - J v)
                let wjv = w[0] * v[0] - dot(&w[1..], &v[1..]);
                out[0] = (2.0 * w[0] * wjv - v[0]) / beta;
                for i in 1..v.len() {
                    out[i] = (-2.0 * w[i] * wjv + v[i]) / beta;
                }
            }
            Scaling::Psd { rinv, .. } => congruence(rinv, v, false, out),
        }
    }

    /// `out = W^{-1} v`.
    pub fn winv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { rinv, .. } => congruence(rinv, v, true, out),
            _ => self.winv_t(v, out),
        }
    }

    /// `out = W^T W v`.
    pub fn h(&self, v: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; v.len()];
        self.w(v, &mut tmp);
        self.wt(&tmp, out);
    }

    /// `out = (W^T W)^{-1} v`.
    pub fn hinv(&self, v: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; v.len()];
        self.winv_t(v, &mut tmp);
        self.winv(&tmp, out);
    }

    /// Matrix `T` with `H^{-1}(svec X) = svec(T X T)` for psd scalings.
    /// `G` with `H^{-1}(U) = svec(G^T G U G^T G)` on a psd block.
    pub fn psd_factor(&self) -> Option<&DMatrix<f64>> {
        match self {
            Scaling::Psd { rinv, .. } => Some(rinv),
            _ => None,
        }
    }
}

/// `out = svec(M^T U M)` if `left_t`, else `svec(M U M^T)`.
fn congruence(m: &DMatrix<f64>, v: &[f64], left_t: bool, out: &mut [f64]) {
    let n = m.nrows();
    let u = smat_n(v, n);
    let res = if left_t { m.transpose() * (u * m) } else { m * u * m.transpose() };
    svec_into(&res, out);
}

/// Dense `n x n` identity's svec, used by tests.
#[cfg(test)]
pub(crate) fn svec_identity(n: usize) -> DVector<f64> {
    crate::svec::svec_unchecked(&DMatrix::identity(n, n))
}
