use crate::svec::{tri_index, tri_len, tri_order};
use crate::{AffExpr, ConicError};
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector(usize),
    /// Symmetric `n x n`, stored as its svec.
    SymMatrix(usize),
}

impl Shape {
    pub fn flat_len(self) -> usize {
        match self {
            Shape::Scalar => 1,
            Shape::Vector(n) => n,
            Shape::SymMatrix(n) => tri_len(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarHandle {
    pub offset: usize,
    pub shape: Shape,
}

impl VarHandle {
    pub fn len(&self) -> usize {
        self.shape.flat_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of element `i` (vector) or svec slot `i` (matrix).
    pub fn index(&self, i: usize) -> usize {
        assert!(i < self.len(), "element {i} outside variable of length {}", self.len());
        self.offset + i
    }

    pub fn expr(&self, i: usize) -> AffExpr {
        AffExpr::var(self.index(i))
    }

    /// Matrix entry `(i, j)` of a symmetric-matrix variable as an expression.
    pub fn entry(&self, i: usize, j: usize) -> AffExpr {
        let Shape::SymMatrix(n) = self.shape else {
            panic!("entry() on a non-matrix variable");
        };
        let k = self.offset + tri_index(n, i, j);
        if i == j {
            AffExpr::var(k)
        } else {
            AffExpr::term(k, FRAC_1_SQRT_2)
        }
    }

    /// Reads this variable out of a flat primal vector.
    pub fn value<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.offset..self.offset + self.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeKind {
    Zero,
    NonNeg,
    SecondOrder,
    Psd,
}

impl ConeKind {
    pub fn name(self) -> &'static str {
        match self {
            ConeKind::Zero => "zero",
            ConeKind::NonNeg => "nonneg",
            ConeKind::SecondOrder => "soc",
            ConeKind::Psd => "psd",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "zero" => ConeKind::Zero,
            "nonneg" => ConeKind::NonNeg,
            "soc" => ConeKind::SecondOrder,
            "psd" => ConeKind::Psd,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub rows: Vec<AffExpr>,
}

impl ConeBlock {
    /// Matrix order of a psd block.
    pub fn psd_order(&self) -> Option<usize> {
        match self.kind {
            ConeKind::Psd => tri_order(self.rows.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    num_vars: usize,
    objective: AffExpr,
    blocks: Vec<ConeBlock>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &AffExpr {
        &self.objective
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn num_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.rows.len()).sum()
    }

    pub fn add_variable(&mut self, shape: Shape) -> Result<VarHandle, ConicError> {
        let len = shape.flat_len();
        if len == 0 {
            return Err(ConicError::EmptyShape);
        }
        let h = VarHandle { offset: self.num_vars, shape };
        self.num_vars += len;
        Ok(h)
    }

    pub fn add_cone(&mut self, kind: ConeKind, mut rows: Vec<AffExpr>) -> Result<BlockId, ConicError> {
        if rows.is_empty() {
            return Err(ConicError::EmptyBlock);
        }
        match kind {
            ConeKind::Psd if tri_order(rows.len()).is_none() => {
                return Err(ConicError::NotTriangular(rows.len()));
            }
            ConeKind::SecondOrder if rows.len() < 2 => {
                return Err(ConicError::ShortSecondOrder(rows.len()));
            }
            _ => {}
        }
        for r in &mut rows {
            self.check_expr(r)?;
            r.normalize();
        }
        self.blocks.push(ConeBlock { kind, rows });
        Ok(BlockId(self.blocks.len() - 1))
    }

    /// Replaces the objective; `solve` minimizes it.
    pub fn set_objective(&mut self, mut objective: AffExpr) -> Result<(), ConicError> {
        self.check_expr(&objective)?;
        objective.normalize();
        self.objective = objective;
        Ok(())
    }

    /// Replaces the objective from dense coefficients.
    pub fn set_objective_dense(&mut self, coeffs: &[f64], constant: f64) -> Result<(), ConicError> {
        if coeffs.len() > self.num_vars {
            return Err(ConicError::UndeclaredVariable { index: coeffs.len() - 1, declared: self.num_vars });
        }
        let terms = coeffs.iter().copied().enumerate().filter(|t| t.1 != 0.0).collect();
        self.set_objective(AffExpr::from_terms(terms, constant))
    }

    fn check_expr(&self, e: &AffExpr) -> Result<(), ConicError> {
        match e.max_var() {
            Some(i) if i >= self.num_vars => {
                Err(ConicError::UndeclaredVariable { index: i, declared: self.num_vars })
            }
            _ => Ok(()),
        }
    }

    /// Worst cone violation of each block at `x`, in the block's own units:
    /// |row| for zero, -min row for nonneg, ||tail|| - head for soc, -lambda_min for psd.
    pub fn block_violations(&self, x: &[f64]) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| {
                let v: Vec<f64> = b.rows.iter().map(|r| r.eval(x)).collect();
                match b.kind {
                    ConeKind::Zero => v.iter().fold(0.0f64, |m, a| m.max(a.abs())),
                    ConeKind::NonNeg => v.iter().fold(0.0f64, |m, a| m.max(-a)),
                    ConeKind::SecondOrder => {
                        let tail = v[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
                        (tail - v[0]).max(0.0)
                    }
                    ConeKind::Psd => {
                        let m = crate::svec::smat(&v).expect("psd rows are triangular");
                        let lmin = m.symmetric_eigenvalues().min();
                        (-lmin).max(0.0)
                    }
                }
            })
            .collect()
    }

    /// Objective value at `x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }
}
