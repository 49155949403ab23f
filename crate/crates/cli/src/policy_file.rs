//! Policy files: a dimension header, optional solver diagnostics, then the
//! dense matrices `v`, `L` and `K`, one row per line.
//!
//! ```text
//! drds-policy 1
//! dims n=4 m=2 N=20
//! controller drds
//! objective 1.2345678901234567e1
//! matrix v 40 1
//! ...
//! ```

use crate::error::{CliError, Result};
use crate::format::f17;
use drds_core::system::{AugmentedSystem, Policy};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "drds-policy 1";

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFile {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    /// Which synthesis produced it, `drds` or `cs`.
    pub controller: String,
    /// Solver diagnostics by name, written in key order.
    pub diagnostics: BTreeMap<String, f64>,
    pub status: Option<String>,
    pub v: DVector<f64>,
    pub l: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

impl PolicyFile {
    pub fn new(policy: &Policy, aug: &AugmentedSystem, controller: &str) -> Self {
        Self {
            n: aug.n,
            m: aug.m,
            horizon: aug.horizon,
            controller: controller.into(),
            diagnostics: BTreeMap::new(),
            status: None,
            v: policy.v.clone(),
            l: policy.l.clone(),
            k: policy.k.clone(),
        }
    }

    /// Rebuilds the policy; `K` is recomputed from `L` and must agree with the stored one.
    pub fn policy(&self, aug: &AugmentedSystem) -> Result<Policy> {
        if (self.n, self.m, self.horizon) != (aug.n, aug.m, aug.horizon) {
            return Err(CliError::invalid(
                "policy",
                format!(
                    "policy is for n={} m={} N={}, scenario has n={} m={} N={}",
                    self.n, self.m, self.horizon, aug.n, aug.m, aug.horizon
                ),
            ));
        }
        let p = Policy::from_disturbance_feedback(self.v.clone(), self.l.clone(), aug)
            .map_err(|e| CliError::invalid("policy", e.to_string()))?;
        let gap = (&p.k - &self.k).amax();
        if gap > 1e-6 * (1.0 + self.k.amax()) {
            return Err(CliError::invalid("policy.K", format!("stored K disagrees with the one implied by L (max gap {gap:e})")));
        }
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "dims n={} m={} N={}", self.n, self.m, self.horizon);
        let _ = writeln!(s, "controller {}", self.controller);
        if let Some(st) = &self.status {
            let _ = writeln!(s, "status {st}");
        }
        for (k, v) in &self.diagnostics {
            let _ = writeln!(s, "{k} {}", f17(*v));
        }
        write_matrix(&mut s, "v", &DMatrix::from_column_slice(self.v.len(), 1, self.v.as_slice()));
        write_matrix(&mut s, "L", &self.l);
        write_matrix(&mut s, "K", &self.k);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| CliError::Parse { file: "<policy>".into(), msg: format!("line {line}: {msg}") };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, MAGIC)) => {}
            _ => return Err(err(1, format!("expected {MAGIC:?}"))),
        }
        let (ln, dims) = lines.next().ok_or_else(|| err(2, "missing dims".into()))?;
        let mut n = None;
        let mut m = None;
        let mut horizon = None;
        for tok in dims.strip_prefix("dims").ok_or_else(|| err(ln, "expected dims".into()))?.split_whitespace() {
            let (key, val) = tok.split_once('=').ok_or_else(|| err(ln, format!("bad token {tok:?}")))?;
            let val: usize = val.parse().map_err(|e| err(ln, format!("{key}: {e}")))?;
            match key {
                "n" => n = Some(val),
                "m" => m = Some(val),
                "N" => horizon = Some(val),
                _ => return Err(err(ln, format!("unknown dimension {key:?}"))),
            }
        }
        let (n, m, horizon) = match (n, m, horizon) {
            (Some(n), Some(m), Some(h)) => (n, m, h),
            _ => return Err(err(ln, "dims needs n, m and N".into())),
        };
        let mut controller = String::from("drds");
        let mut status = None;
        let mut diagnostics = BTreeMap::new();
        let mut mats: BTreeMap<String, DMatrix<f64>> = BTreeMap::new();
        let mut pending = lines.peekable();
        while let Some((ln, line)) = pending.next() {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "controller" => controller = rest.trim().to_string(),
                "status" => status = Some(rest.trim().to_string()),
                "matrix" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(err(ln, "expected `matrix NAME ROWS COLS`".into()));
                    }
                    let rows: usize = parts[1].parse().map_err(|e| err(ln, format!("rows: {e}")))?;
                    let cols: usize = parts[2].parse().map_err(|e| err(ln, format!("cols: {e}")))?;
                    let mut data = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        let (rl, row) = pending.next().ok_or_else(|| err(ln, format!("matrix {} is truncated", parts[0])))?;
                        let vals: std::result::Result<Vec<f64>, _> = row.split_whitespace().map(str::parse).collect();
                        let vals = vals.map_err(|e| err(rl, e.to_string()))?;
                        if vals.len() != cols {
                            return Err(err(rl, format!("{} values, expected {cols}", vals.len())));
                        }
                        data.extend(vals);
                    }
                    mats.insert(parts[0].to_string(), DMatrix::from_row_slice(rows, cols, &data));
                }
                _ => {
                    let v: f64 = rest.trim().parse().map_err(|e| err(ln, format!("{key}: {e}")))?;
                    diagnostics.insert(key.to_string(), v);
                }
            }
        }
        let mut take = |name: &str, rows: usize, cols: usize| -> Result<DMatrix<f64>> {
            let mat = mats.remove(name).ok_or_else(|| err(0, format!("matrix {name} is missing")))?;
            if mat.shape() != (rows, cols) {
                return Err(err(0, format!("matrix {name} is {:?}, expected ({rows}, {cols})", mat.shape())));
            }
            Ok(mat)
        };
        let v = take("v", m * horizon, 1)?;
        let l = take("L", m * horizon, n * (horizon + 1))?;
        let k = take("K", m * horizon, n * (horizon + 1))?;
        Ok(Self { n, m, horizon, controller, diagnostics, status, v: DVector::from_column_slice(v.as_slice()), l, k })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse { msg, .. } => CliError::Parse { file: path.display().to_string(), msg },
            other => other,
        })
    }
}

fn write_matrix(s: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(s, "matrix {name} {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| f17(m[(i, j)])).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
}
