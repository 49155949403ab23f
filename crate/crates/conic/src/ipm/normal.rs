//! Normal equations `A^T H^{-1} A` for the interior-point search direction.
//!
//! Psd coefficient matrices are kept as low-rank factors where possible, so a
//! block's contribution is `tr(A_i T A_j T) = sum sigma sigma' (f^T T f')^2`.
//! Matrix variables that only occur once, as a full principal submatrix of a
//! single psd block, are eliminated: their part of the normal matrix is the
//! Kronecker product `T_II (x) T_II`, which inverts in closed form.

use super::cones::{dot, Cone, Scaling};
use super::data::Data;
use crate::svec::tri_positions;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;
use std::f64::consts::SQRT_2;

const GRAM_BUDGET_BYTES: usize = 1 << 30;
const SKETCH: usize = 10;

/// Sparse column of a block: (row within the block, value).
type LocalCol = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy)]
enum VarKind {
    LowRank { start: usize, len: usize },
    Dense(usize),
}

#[derive(Debug)]
struct Group {
    coef: f64,
    /// Matrix indices spanned, sorted.
    idx: Vec<usize>,
    /// Global variable indices.
    vars: Vec<usize>,
    /// Position of each variable inside the `idx x idx` submatrix.
    pos: Vec<(usize, usize)>,
}

#[derive(Debug)]
struct PsdBlock {
    cone: usize,
    order: usize,
    /// y-indices of the non-eliminated variables in this block.
    yvars: Vec<usize>,
    cols: Vec<LocalCol>,
    kinds: Vec<VarKind>,
    factors: DMatrix<f64>,
    sigma: Vec<f64>,
    dense: Vec<DMatrix<f64>>,
    group: Option<Group>,
}

#[derive(Debug)]
struct SocBlock {
    cone: usize,
    yvars: Vec<usize>,
    a: DMatrix<f64>,
    gram: Option<DMatrix<f64>>,
}

#[derive(Debug)]
struct NonNegBlock {
    cone: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

/// Per-iteration state of a psd block.
#[derive(Debug, Clone)]
struct PsdIter {
    g: DMatrix<f64>,
    t: DMatrix<f64>,
    /// Orthonormal basis of the group columns of `g`, when the block has an eliminated group.
    q: Option<DMatrix<f64>>,
    /// `(T_II)^{-1}` for the same group.
    zinv: Option<DMatrix<f64>>,
}

#[derive(Debug)]
pub(crate) struct NormalSystem {
    n: usize,
    ny: usize,
    yof: Vec<Option<usize>>,
    nonneg: Vec<NonNegBlock>,
    soc: Vec<SocBlock>,
    psd: Vec<PsdBlock>,
    /// Equality rows over y-indices.
    eq: Vec<Vec<(usize, f64)>>,
    pub eq_rows: Vec<usize>,
    chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    xeq: DMatrix<f64>,
    seq: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    iters: Vec<Option<PsdIter>>,
    pub eliminated: usize,
}

impl NormalSystem {
    pub fn new(data: &Data) -> NormalSystem {
        let n = data.n;
        // How many rows each variable touches.
        let count: Vec<usize> = (0..n).map(|j| data.at.ptr[j + 1] - data.at.ptr[j]).collect();
        let mut grouped = vec![false; n];
        let mut groups: HashMap<usize, Group> = HashMap::new();
        for (k, cone) in data.cones.iter().enumerate() {
            if let Cone::Psd(order) = *cone {
                if let Some(g) = detect_group(data, k, order, &count) {
                    for &v in &g.vars {
                        grouped[v] = true;
                    }
                    groups.insert(k, g);
                }
            }
        }
        let mut yof = vec![None; n];
        let mut ny = 0;
        for j in 0..n {
            if !grouped[j] {
                yof[j] = Some(ny);
                ny += 1;
            }
        }
        let eliminated = n - ny;

        let mut nonneg = Vec::new();
        let mut soc = Vec::new();
        let mut psd = Vec::new();
        let mut eq = Vec::new();
        let mut eq_rows = Vec::new();
        let mut gram_bytes = 0usize;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for (k, cone) in data.cones.iter().enumerate() {
            let range = data.range(k);
            let row_y = |r: usize| -> Vec<(usize, f64)> {
                let (ii, vv) = data.a.row(r);
                ii.iter().zip(vv).map(|(&j, &v)| (yof[j].expect("grouped vars live in one psd block"), v)).collect()
            };
            match *cone {
                Cone::Zero(_) => {
                    for r in range {
                        eq.push(row_y(r));
                        eq_rows.push(r);
                    }
                }
                Cone::NonNeg(_) => {
                    nonneg.push(NonNegBlock { cone: k, rows: range.map(row_y).collect() });
                }
                Cone::Soc(d) => {
                    let (yvars, cols) = local_columns(data, range, &yof);
                    let mut a = DMatrix::zeros(d, yvars.len());
                    for (q, col) in cols.iter().enumerate() {
                        for &(r, v) in col {
                            a[(r, q)] = v;
                        }
                    }
                    let bytes = 8 * yvars.len() * yvars.len();
                    let gram = if gram_bytes + bytes <= GRAM_BUDGET_BYTES {
                        gram_bytes += bytes;
                        Some(a.transpose() * &a)
                    } else {
                        None
                    };
                    soc.push(SocBlock { cone: k, yvars, a, gram });
                }
                Cone::Psd(order) => {
                    let (yvars, cols) = local_columns(data, range, &yof);
                    let positions = tri_positions(order);
                    let mut kinds = Vec::with_capacity(yvars.len());
                    let mut fcols: Vec<DVector<f64>> = Vec::new();
                    let mut sigma = Vec::new();
                    let mut dense = Vec::new();
                    for col in &cols {
                        match low_rank(order, col, &positions, &mut rng) {
                            Some((f, s)) => {
                                kinds.push(VarKind::LowRank { start: fcols.len(), len: f.len() });
                                fcols.extend(f);
                                sigma.extend(s);
                            }
                            None => {
                                kinds.push(VarKind::Dense(dense.len()));
                                dense.push(col_matrix(order, col, &positions));
                            }
                        }
                    }
                    let factors = if fcols.is_empty() {
                        DMatrix::zeros(order, 0)
                    } else {
                        DMatrix::from_columns(&fcols)
                    };
                    psd.push(PsdBlock {
                        cone: k,
                        order,
                        yvars,
                        cols,
                        kinds,
                        factors,
                        sigma,
                        dense,
                        group: groups.remove(&k),
                    });
                }
            }
        }
        let iters = vec![None; psd.len()];
        NormalSystem {
            n,
            ny,
            yof,
            nonneg,
            soc,
            psd,
            eq,
            eq_rows,
            chol: None,
            xeq: DMatrix::zeros(0, 0),
            seq: None,
            iters,
            eliminated,
        }
    }

    /// Builds and factors the reduced normal matrix for the given scalings.
    pub fn factor(&mut self, scalings: &[Scaling]) -> bool {
        let mut m = DMatrix::<f64>::zeros(self.ny, self.ny);
        for blk in &self.nonneg {
            let Scaling::NonNeg(d) = &scalings[blk.cone] else { unreachable!() };
            for (r, row) in blk.rows.iter().enumerate() {
                let h = 1.0 / (d[r] * d[r]);
                for &(i, a) in row {
                    for &(j, b) in row {
                        m[(i, j)] += h * a * b;
                    }
                }
            }
        }
        for blk in &self.soc {
            let Scaling::Soc { beta, w } = &scalings[blk.cone] else { unreachable!() };
            let local = soc_normal(blk, *beta, w);
            scatter(&mut m, &blk.yvars, &local);
        }
        for (bi, blk) in self.psd.iter().enumerate() {
            let g = scalings[blk.cone].psd_factor().expect("psd scaling").clone();
            let t = g.transpose() * &g;
            let (q, zinv) = match &blk.group {
                Some(grp) => {
                    let s = grp.idx.len();
                    let qr = g.select_columns(&grp.idx).qr();
                    let Some(ri) = qr.r().solve_upper_triangular(&DMatrix::identity(s, s)) else {
                        return false;
                    };
                    (Some(qr.q()), Some(&ri * ri.transpose()))
                }
                None => (None, None),
            };
            let it = PsdIter { g, t, q, zinv };
            let local = psd_normal(blk, &it);
            scatter(&mut m, &blk.yvars, &local);
            self.iters[bi] = Some(it);
        }

        for row in &self.eq {
            for &(i, a) in row {
                for &(j, b) in row {
                    m[(i, j)] += a * b;
                }
            }
        }
        // Regularize relative to each diagonal entry, so weakly coupled
        // variables are not swamped by the scale of the strongly coupled ones.
        let scale = (0..self.ny).map(|i| m[(i, i)]).fold(1.0f64, f64::max);
        let floor = 1e-15 * scale;
        let mut delta = 1e-14;
        let chol = loop {
            let mut mm = m.clone();
            for i in 0..self.ny {
                mm[(i, i)] += delta * m[(i, i)].max(floor) + f64::MIN_POSITIVE;
            }
            if let Some(c) = mm.cholesky() {
                break c;
            }
            delta *= 10.0;
            if delta > 1e-2 {
                return false;
            }
        };
        let p = self.eq.len();
        let mut at = DMatrix::zeros(self.ny, p);
        for (r, row) in self.eq.iter().enumerate() {
            for &(i, a) in row {
                at[(i, r)] += a;
            }
        }
        let xeq = chol.solve(&at);
        let mut s = at.transpose() * &xeq;
        let sscale = (0..p).map(|i| s[(i, i)]).fold(1.0f64, f64::max);
        for i in 0..p {
            s[(i, i)] += 1e-12 * sscale;
        }
        self.seq = (p > 0).then(|| s.lu());
        self.xeq = xeq;
        self.chol = Some(chol);
        true
    }

    /// Solves `[[M, Aeq^T], [Aeq, 0]] [dx; zeq] = [g; req]`, with `M = A_in^T H^{-1} A_in`.
    pub fn solve(&self, g: &[f64], req: &[f64], dx: &mut [f64], zeq: &mut [f64]) {
        let chol = self.chol.as_ref().expect("factor() before solve()");
        let mut gy = DVector::zeros(self.ny);
        for j in 0..self.n {
            if let Some(y) = self.yof[j] {
                gy[y] = g[j];
            }
        }
        for (blk, it) in self.psd.iter().zip(&self.iters) {
            if let Some(grp) = &blk.group {
                let it = it.as_ref().unwrap();
                let gz: Vec<f64> = grp.vars.iter().map(|&v| g[v]).collect();
                let corr = group_coupling_rhs(blk, grp, it, &gz);
                for (q, &y) in blk.yvars.iter().enumerate() {
                    gy[y] -= corr[q];
                }
            }
        }
        for (r, row) in self.eq.iter().enumerate() {
            for &(i, a) in row {
                gy[i] += a * req[r];
            }
        }
        let mut u = chol.solve(&gy);
        if let Some(seq) = &self.seq {
            let mut au = DVector::zeros(self.eq.len());
            for (r, row) in self.eq.iter().enumerate() {
                au[r] = row.iter().map(|&(i, a)| a * u[i]).sum::<f64>() - req[r];
            }
            let w = seq.solve(&au).unwrap_or_else(|| DVector::zeros(self.eq.len()));
            u -= &self.xeq * &w;
            zeq.copy_from_slice(w.as_slice());
        }
        for j in 0..self.n {
            if let Some(y) = self.yof[j] {
                dx[j] = u[y];
            }
        }
        for (blk, it) in self.psd.iter().zip(&self.iters) {
            if let Some(grp) = &blk.group {
                let it = it.as_ref().unwrap();
                let gz: Vec<f64> = grp.vars.iter().map(|&v| g[v]).collect();
                let local: Vec<f64> = blk.yvars.iter().map(|&y| u[y]).collect();
                let dz = group_backsolve(blk, grp, it, &gz, &local);
                for (k, &v) in grp.vars.iter().enumerate() {
                    dx[v] = dz[k];
                }
            }
        }
    }
}

fn scatter(m: &mut DMatrix<f64>, yvars: &[usize], local: &DMatrix<f64>) {
    for (b, &yb) in yvars.iter().enumerate() {
        for (a, &ya) in yvars.iter().enumerate() {
            m[(ya, yb)] += local[(a, b)];
        }
    }
}

/// Variables (as y-indices) touching rows `range`, with their local columns.
fn local_columns(data: &Data, range: std::ops::Range<usize>, yof: &[Option<usize>]) -> (Vec<usize>, Vec<LocalCol>) {
    let mut map: HashMap<usize, usize> = HashMap::new();
    let mut yvars = Vec::new();
    let mut cols: Vec<LocalCol> = Vec::new();
    let r0 = range.start;
    for r in range {
        let (ii, vv) = data.a.row(r);
        for (&j, &v) in ii.iter().zip(vv) {
            let Some(y) = yof[j] else { continue };
            let q = *map.entry(y).or_insert_with(|| {
                yvars.push(y);
                cols.push(Vec::new());
                yvars.len() - 1
            });
            cols[q].push((r - r0, v));
        }
    }
    (yvars, cols)
}

/// Finds variables that occur exactly once, all inside block `k`, all with the same
/// coefficient, jointly covering a full principal submatrix.
fn detect_group(data: &Data, k: usize, order: usize, count: &[usize]) -> Option<Group> {
    let range = data.range(k);
    let positions = tri_positions(order);
    // Keyed on 12 significant digits: svec scaling leaves off-diagonal
    // coefficients a rounding error away from the diagonal ones.
    let mut by_coef: HashMap<String, (f64, Vec<(usize, usize)>)> = HashMap::new();
    for r in range.clone() {
        let (ii, vv) = data.a.row(r);
        for (&j, &v) in ii.iter().zip(vv) {
            if count[j] == 1 {
                by_coef.entry(format!("{v:.11e}")).or_insert((v, Vec::new())).1.push((j, r - range.start));
            }
        }
    }
    let mut best: Option<Group> = None;
    for (_, (coef, members)) in by_coef {
        let mut idx: Vec<usize> = members.iter().flat_map(|&(_, r)| [positions[r].0, positions[r].1]).collect();
        idx.sort_unstable();
        idx.dedup();
        let s = idx.len();
        if members.len() != s * (s + 1) / 2 || s < 2 {
            continue;
        }
        let local: HashMap<usize, usize> = idx.iter().enumerate().map(|(a, &i)| (i, a)).collect();
        let mut seen = vec![false; s * s];
        let mut pos = Vec::with_capacity(members.len());
        let mut ok = true;
        for &(_, r) in &members {
            let (i, j) = positions[r];
            let (a, b) = (local[&i], local[&j]);
            if seen[a * s + b] {
                ok = false;
                break;
            }
            seen[a * s + b] = true;
            pos.push((a, b));
        }
        if ok && best.as_ref().is_none_or(|g| g.vars.len() < members.len()) {
            best = Some(Group { coef, idx, vars: members.iter().map(|m| m.0).collect(), pos });
        }
    }
    best
}

/// Symmetric matrix whose svec is the given sparse column.
fn col_matrix(order: usize, col: &LocalCol, positions: &[(usize, usize)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(order, order);
    for &(r, v) in col {
        let (i, j) = positions[r];
        if i == j {
            m[(i, i)] += v;
        } else {
            m[(i, j)] += v / SQRT_2;
            m[(j, i)] += v / SQRT_2;
        }
    }
    m
}

/// `A = sum sigma f f^T` with few terms, or `None` if the matrix is not low rank.
fn low_rank(
    order: usize,
    col: &LocalCol,
    positions: &[(usize, usize)],
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<DVector<f64>>, Vec<f64>)> {
    let mut support: Vec<usize> = col.iter().flat_map(|&(r, _)| [positions[r].0, positions[r].1]).collect();
    support.sort_unstable();
    support.dedup();
    let s = support.len();
    let max_rank = (order / 3).max(1).min(SKETCH - 2);
    let local: HashMap<usize, usize> = support.iter().enumerate().map(|(a, &i)| (i, a)).collect();
    let mut sub = DMatrix::zeros(s, s);
    for &(r, v) in col {
        let (i, j) = positions[r];
        let (a, b) = (local[&i], local[&j]);
        if a == b {
            sub[(a, a)] += v;
        } else {
            sub[(a, b)] += v / SQRT_2;
            sub[(b, a)] += v / SQRT_2;
        }
    }
    let norm = sub.norm();
    if norm == 0.0 {
        return Some((Vec::new(), Vec::new()));
    }
    let (basis, small) = if s <= SKETCH {
        (DMatrix::identity(s, s), sub.clone())
    } else {
        let omega = DMatrix::from_fn(s, SKETCH, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &sub * omega;
        let q = orthonormal_columns(y)?;
        if q.ncols() > max_rank {
            return None;
        }
        let small = q.tr_mul(&(&sub * &q));
        (q, small)
    };
    let eig = small.symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i].abs() > 1e-13 * top).collect();
    if keep.len() > max_rank {
        return None;
    }
    let mut recon = DMatrix::zeros(s, s);
    let mut factors = Vec::with_capacity(keep.len());
    let mut sigma = Vec::with_capacity(keep.len());
    for &i in &keep {
        let fl = &basis * eig.eigenvectors.column(i);
        recon += eig.eigenvalues[i] * &fl * fl.transpose();
        let mut f = DVector::zeros(order);
        for (a, &idx) in support.iter().enumerate() {
            f[idx] = fl[a];
        }
        factors.push(f);
        sigma.push(eig.eigenvalues[i]);
    }
    if (recon - sub).norm() > 1e-11 * norm {
        return None;
    }
    Some((factors, sigma))
}

/// Modified Gram-Schmidt with one reorthogonalization; drops dependent columns.
/// `None` if the sketch is numerically full rank.
fn orthonormal_columns(y: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let top = (0..y.ncols()).map(|c| y.column(c).norm()).fold(0.0f64, f64::max);
    let mut q: Vec<DVector<f64>> = Vec::new();
    for c in 0..y.ncols() {
        let mut v = y.column(c).into_owned();
        for _ in 0..2 {
            for u in &q {
                let p = u.dot(&v);
                v.axpy(-p, u, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 1e-9 * top {
            q.push(v / nv);
        }
    }
    if q.len() == y.ncols() {
        return None;
    }
    if q.is_empty() {
        return Some(DMatrix::zeros(y.nrows(), 0));
    }
    Some(DMatrix::from_columns(&q))
}

/// `A^T H^{-1} A` for a second-order cone block, local indexing.
fn soc_normal(blk: &SocBlock, beta: f64, w: &[f64]) -> DMatrix<f64> {
    // H^{-1} = (I + 4|w|^2 u u^T - 2 (u w^T + w u^T)) / beta^2 with u = J w.
    let mut u = w.to_vec();
    for x in &mut u[1..] {
        *x = -*x;
    }
    let au = blk.a.tr_mul(&DVector::from_column_slice(&u));
    let aw = blk.a.tr_mul(&DVector::from_column_slice(w));
    let mut m = match &blk.gram {
        Some(g) => g.clone(),
        None => blk.a.transpose() * &blk.a,
    };
    let ww = dot(w, w);
    m.ger(4.0 * ww, &au, &au, 1.0);
    m.ger(-2.0, &au, &aw, 1.0);
    m.ger(-2.0, &aw, &au, 1.0);
    m /= beta * beta;
    m
}

/// Psd block contribution, with the eliminated group already folded in.
///
/// In coordinates scaled by `G` the group turns the block operator into
/// `U -> P U (I + QQ^T)` with `P = I - QQ^T`, so every entry is formed as a
/// product of Gram matrices and the local matrix stays psd in floating point.
fn psd_normal(blk: &PsdBlock, it: &PsdIter) -> DMatrix<f64> {
    let nv = blk.yvars.len();
    let mut out = DMatrix::zeros(nv, nv);
    let g = &it.g;
    let f = &blk.factors;
    let nf = f.ncols();
    let q = it.q.as_ref();
    let project = |m: &DMatrix<f64>| match q {
        Some(q) => m - q * (q.transpose() * m),
        None => m.clone(),
    };
    let lift = |m: &DMatrix<f64>| match q {
        Some(q) => m + q * (q.transpose() * m),
        None => m.clone(),
    };

    let b = g * f;
    let (x, mut p1) = match q {
        Some(q) => {
            let c = q.transpose() * &b;
            let x = &b - q * &c;
            let mut right = b.transpose() * &b;
            right += c.transpose() * &c;
            let mut left = x.transpose() * &x;
            left.component_mul_assign(&right);
            (x, left)
        }
        None => {
            let mut p = b.transpose() * &b;
            p.apply(|a| *a = *a * *a);
            (b.clone(), p)
        }
    };
    for c in 0..nf {
        for r in 0..nf {
            p1[(r, c)] *= blk.sigma[r] * blk.sigma[c];
        }
    }
    // Sum factor blocks per variable.
    let lr: Vec<(usize, usize, usize)> = blk
        .kinds
        .iter()
        .enumerate()
        .filter_map(|(a, k)| match *k {
            VarKind::LowRank { start, len } => Some((a, start, len)),
            _ => None,
        })
        .collect();
    let mut colsum = DMatrix::<f64>::zeros(nf, lr.len());
    for (bi, &(_, start, len)) in lr.iter().enumerate() {
        for r in 0..nf {
            colsum[(r, bi)] = (start..start + len).map(|c| p1[(r, c)]).sum();
        }
    }
    for (bi, &(bv, _, _)) in lr.iter().enumerate() {
        for &(a, start, len) in &lr {
            out[(a, bv)] = (start..start + len).map(|r| colsum[(r, bi)]).sum();
        }
    }

    // Dense variables.
    let dense_vars: Vec<(usize, usize)> = blk
        .kinds
        .iter()
        .enumerate()
        .filter_map(|(a, k)| match *k {
            VarKind::Dense(d) => Some((a, d)),
            _ => None,
        })
        .collect();
    if dense_vars.is_empty() {
        return out;
    }
    let scaled: Vec<DMatrix<f64>> = dense_vars.iter().map(|&(_, d)| g * &blk.dense[d] * g.transpose()).collect();
    let lifted_b = (nf > 0).then(|| lift(&b));
    for (jj, &(j, _)) in dense_vars.iter().enumerate() {
        let dj = &scaled[jj];
        // Against low-rank variables.
        if let Some(lb) = &lifted_b {
            let dl = dj * lb;
            let per_factor: Vec<f64> = (0..nf).map(|r| blk.sigma[r] * x.column(r).dot(&dl.column(r))).collect();
            for &(a, start, len) in &lr {
                let v: f64 = per_factor[start..start + len].iter().sum();
                out[(a, j)] = v;
                out[(j, a)] = v;
            }
        }
        // Against dense variables.
        let pj = lift(&project(dj).transpose()).transpose();
        for (ii, &(i, _)) in dense_vars.iter().enumerate().take(jj + 1) {
            let v = scaled[ii].dot(&pj.transpose());
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `X[a,b]` with svec scaling for group variable `k` at submatrix position `(a,b)`.
fn sub_svec(x: &DMatrix<f64>, pos: &[(usize, usize)]) -> Vec<f64> {
    pos.iter().map(|&(a, b)| if a == b { x[(a, a)] } else { SQRT_2 * x[(a, b)] }).collect()
}

fn sub_smat(u: &[f64], pos: &[(usize, usize)], s: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(s, s);
    for (k, &(a, b)) in pos.iter().enumerate() {
        if a == b {
            m[(a, a)] = u[k];
        } else {
            m[(a, b)] = u[k] / SQRT_2;
            m[(b, a)] = u[k] / SQRT_2;
        }
    }
    m
}

/// `M_yZ M_ZZ^{-1} g_z`, per local y-variable.
fn group_coupling_rhs(blk: &PsdBlock, grp: &Group, it: &PsdIter, gz: &[f64]) -> Vec<f64> {
    let s = grp.idx.len();
    let zinv = it.zinv.as_ref().unwrap();
    let x = zinv * sub_smat(gz, &grp.pos, s) * zinv / (grp.coef * grp.coef);
    let tci = it.t.select_columns(&grp.idx);
    let that = &tci * x * tci.transpose();
    let sv = crate::svec::svec_unchecked(&that);
    blk.cols.iter().map(|col| grp.coef * col.iter().map(|&(r, v)| v * sv[r]).sum::<f64>()).collect()
}

/// `M_ZZ^{-1} (g_z - M_Zy dy)`.
fn group_backsolve(blk: &PsdBlock, grp: &Group, it: &PsdIter, gz: &[f64], dy: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; crate::svec::tri_len(blk.order)];
    for (col, &d) in blk.cols.iter().zip(dy) {
        for &(r, v) in col {
            acc[r] += v * d;
        }
    }
    let g = crate::svec::smat_n(&acc, blk.order);
    let tci = it.t.select_columns(&grp.idx);
    let x = tci.transpose() * (g * &tci);
    let mzy = sub_svec(&x, &grp.pos);
    let r: Vec<f64> = gz.iter().zip(&mzy).map(|(a, b)| a - grp.coef * b).collect();
    let s = grp.idx.len();
    let zinv = it.zinv.as_ref().unwrap();
    let out = zinv * sub_smat(&r, &grp.pos, s) * zinv;
    sub_svec(&out, &grp.pos).into_iter().map(|v| v / (grp.coef * grp.coef)).collect()
}

