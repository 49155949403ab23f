use super::cones::Cone;
use crate::{ConeKind, ConicProblem};

/// Compressed sparse rows.
#[derive(Debug, Clone, Default)]
pub(crate) struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub ptr: Vec<usize>,
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.ptr[r], self.ptr[r + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }

    /// `out = self * x`.
    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.nrows {
            let (i, v) = self.row(r);
            out[r] = i.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut count = vec![0usize; self.ncols + 1];
        for &j in &self.idx {
            count[j + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let ptr = count.clone();
        let mut fill = count;
        let mut idx = vec![0; self.idx.len()];
        let mut val = vec![0.0; self.idx.len()];
        for r in 0..self.nrows {
            let (ii, vv) = self.row(r);
            for (&j, &a) in ii.iter().zip(vv) {
                idx[fill[j]] = r;
                val[fill[j]] = a;
                fill[j] += 1;
            }
        }
        Csr { nrows: self.ncols, ncols: self.nrows, ptr, idx, val }
    }
}

/// `min c^T x  s.t.  A x + s = b,  s in K`, the standard form the solver works in.
#[derive(Debug, Clone)]
pub(crate) struct Data {
    pub n: usize,
    pub m: usize,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub a: Csr,
    pub at: Csr,
    pub cones: Vec<Cone>,
    pub offsets: Vec<usize>,
}

impl Data {
    pub fn from_problem(p: &ConicProblem) -> Data {
        let n = p.num_vars();
        let mut c = vec![0.0; n];
        for &(i, v) in p.objective().terms() {
            c[i] += v;
        }
        let mut a = Csr { nrows: 0, ncols: n, ptr: vec![0], ..Default::default() };
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let mut offsets = Vec::new();
        for blk in p.blocks() {
            offsets.push(b.len());
            let d = blk.rows.len();
            cones.push(match blk.kind {
                ConeKind::Zero => Cone::Zero(d),
                ConeKind::NonNeg => Cone::NonNeg(d),
                ConeKind::SecondOrder => Cone::Soc(d),
                ConeKind::Psd => Cone::Psd(blk.psd_order().expect("validated on insert")),
            });
            for r in &blk.rows {
                for &(j, v) in r.terms() {
                    a.idx.push(j);
                    a.val.push(-v);
                }
                a.ptr.push(a.idx.len());
                b.push(r.constant_term());
            }
        }
        a.nrows = b.len();
        let at = a.transpose();
        Data { n, m: b.len(), c, b, a, at, cones, offsets }
    }

    pub fn degree(&self) -> usize {
        self.cones.iter().map(|c| c.degree()).sum()
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k] + self.cones[k].dim()
    }
}
