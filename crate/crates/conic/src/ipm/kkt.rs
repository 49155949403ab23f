//! Search-direction solves on `[[0, A^T], [A, -H]] [dx; dz] = [rx; rz]`.
//!
//! The normal-equation factorization is only an approximate inverse once the
//! iterates approach the boundary, so it serves as the preconditioner of a
//! flexible GMRES on the full system.

use super::cones::{dot, norm, Scaling};
use super::data::Data;
use super::normal::NormalSystem;

const RESTART: usize = 20;
const MAX_MATVECS: usize = 60;
const REL_TOL: f64 = 1e-14;

pub(crate) struct Kkt<'a> {
    pub data: &'a Data,
    pub ns: NormalSystem,
    pub scal: Vec<Scaling>,
}

impl Kkt<'_> {
    pub fn factor(&mut self, scal: Vec<Scaling>) -> bool {
        self.scal = scal;
        self.ns.factor(&self.scal)
    }

    fn apply_hinv(&self, v: &[f64], out: &mut [f64]) {
        for (k, cone) in self.data.cones.iter().enumerate() {
            let r = self.data.range(k);
            if cone.is_zero() {
                out[r].fill(0.0);
            } else {
                self.scal[k].hinv(&v[r.clone()], &mut out[r]);
            }
        }
    }

    fn apply_h(&self, v: &[f64], out: &mut [f64]) {
        for (k, cone) in self.data.cones.iter().enumerate() {
            let r = self.data.range(k);
            if cone.is_zero() {
                out[r].fill(0.0);
            } else {
                self.scal[k].h(&v[r.clone()], &mut out[r]);
            }
        }
    }

    /// One pass through the normal equations; `v` and `out` are stacked `[x; z]`.
    fn precondition(&self, v: &[f64], out: &mut [f64]) {
        let d = self.data;
        let (rx, rz) = v.split_at(d.n);
        let (dx, dz) = out.split_at_mut(d.n);
        let mut hr = vec![0.0; d.m];
        self.apply_hinv(rz, &mut hr);
        let mut g = vec![0.0; d.n];
        d.at.mul(&hr, &mut g);
        for j in 0..d.n {
            g[j] += rx[j];
        }
        let req: Vec<f64> = self.ns.eq_rows.iter().map(|&r| rz[r]).collect();
        let mut zeq = vec![0.0; req.len()];
        self.ns.solve(&g, &req, dx, &mut zeq);
        let mut ad = vec![0.0; d.m];
        d.a.mul(dx, &mut ad);
        for i in 0..d.m {
            ad[i] -= rz[i];
        }
        self.apply_hinv(&ad, dz);
        for (k, &r) in self.ns.eq_rows.iter().enumerate() {
            dz[r] = zeq[k];
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let d = self.data;
        let (vx, vz) = v.split_at(d.n);
        let (ox, oz) = out.split_at_mut(d.n);
        d.at.mul(vz, ox);
        d.a.mul(vx, oz);
        let mut hz = vec![0.0; d.m];
        self.apply_h(vz, &mut hz);
        for i in 0..d.m {
            oz[i] -= hz[i];
        }
    }

    pub fn solve(&self, rx: &[f64], rz: &[f64], dx: &mut [f64], dz: &mut [f64]) {
        let n = self.data.n;
        let rhs: Vec<f64> = rx.iter().chain(rz).copied().collect();
        let mut sol = vec![0.0; rhs.len()];
        self.precondition(&rhs, &mut sol);
        fgmres(self, &rhs, &mut sol);
        dx.copy_from_slice(&sol[..n]);
        dz.copy_from_slice(&sol[n..]);
    }
}

fn residual(kkt: &Kkt, rhs: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; rhs.len()];
    kkt.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    r
}

/// Restarted flexible GMRES from the initial guess in `x`.
fn fgmres(kkt: &Kkt, rhs: &[f64], x: &mut [f64]) {
    let tol = REL_TOL * norm(rhs).max(1e-300);
    let len = rhs.len();
    let mut matvecs = 0;
    while matvecs < MAX_MATVECS {
        let r = residual(kkt, rhs, x);
        let beta = norm(&r);
        if beta <= tol {
            return;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; RESTART]; RESTART + 1];
        let (mut cs, mut sn) = (vec![0.0; RESTART], vec![0.0; RESTART]);
        let mut g = vec![0.0; RESTART + 1];
        g[0] = beta;
        let mut k = 0;
        while k < RESTART && matvecs < MAX_MATVECS {
            let mut zk = vec![0.0; len];
            kkt.precondition(&v[k], &mut zk);
            let mut w = vec![0.0; len];
            kkt.apply(&zk, &mut w);
            matvecs += 1;
            z.push(zk);
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let den = h[k][k].hypot(h[k + 1][k]);
            if den == 0.0 {
                break;
            }
            cs[k] = h[k][k] / den;
            sn[k] = h[k + 1][k] / den;
            h[k][k] = den;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            if g[k].abs() <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wj| wj / hn).collect());
        }
        if k == 0 {
            return;
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let before = x.to_vec();
        for (j, zj) in z.iter().enumerate().take(k) {
            for (xi, zi) in x.iter_mut().zip(zj) {
                *xi += y[j] * zi;
            }
        }
        // The Arnoldi estimate can drift from the true residual; never accept a worse point.
        if norm(&residual(kkt, rhs, x)) >= beta {
            x.copy_from_slice(&before);
            return;
        }
    }
}
