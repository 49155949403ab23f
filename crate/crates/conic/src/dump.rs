//! Plain-text dump of a problem, dense rows, for cross-checking elsewhere.
//!
//! ```text
//! vars 2
//! objective 1 0 0
//! nonneg 1
//! 1 0 -1
//! ```
//! Each row lists the `vars` coefficients followed by the constant.

use crate::{AffExpr, ConeKind, ConicError, ConicProblem};
use std::fmt::Write as _;

fn dense_line(e: &AffExpr, n: usize, out: &mut String) {
    let mut dense = vec![0.0; n];
    for &(i, c) in e.terms() {
        dense[i] += c;
    }
    for c in dense {
        let _ = write!(out, "{c:e} ");
    }
    let _ = writeln!(out, "{:e}", e.constant_term());
}

pub fn write_dump(problem: &ConicProblem) -> String {
    let n = problem.num_vars();
    let mut out = String::new();
    let _ = writeln!(out, "vars {n}");
    out.push_str("objective ");
    dense_line(problem.objective(), n, &mut out);
    for b in problem.blocks() {
        let _ = writeln!(out, "{} {}", b.kind.name(), b.rows.len());
        for r in &b.rows {
            dense_line(r, n, &mut out);
        }
    }
    out
}

fn parse_row(line: &str, n: usize, lineno: usize) -> Result<AffExpr, ConicError> {
    let err = |msg: String| ConicError::Dump { line: lineno, msg };
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| err(format!("{t}: {e}"))))
        .collect::<Result<_, _>>()?;
    if vals.len() != n + 1 {
        return Err(err(format!("expected {} numbers, got {}", n + 1, vals.len())));
    }
    let terms = vals[..n].iter().copied().enumerate().filter(|t| t.1 != 0.0).collect();
    Ok(AffExpr::from_terms(terms, vals[n]))
}

pub fn read_dump(text: &str) -> Result<ConicProblem, ConicError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, msg: &str| ConicError::Dump { line, msg: msg.to_string() };
    let (ln, head) = lines.next().ok_or_else(|| bad(1, "empty dump"))?;
    let n: usize = head
        .strip_prefix("vars ")
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| bad(ln, "expected `vars N`"))?;
    let mut p = ConicProblem::new();
    if n > 0 {
        p.add_variable(crate::Shape::Vector(n))?;
    }
    let (ln, obj) = lines.next().ok_or_else(|| bad(ln + 1, "missing objective"))?;
    let obj = obj.strip_prefix("objective").ok_or_else(|| bad(ln, "expected `objective ...`"))?;
    p.set_objective(parse_row(obj, n, ln)?)?;
    while let Some((ln, header)) = lines.next() {
        let mut it = header.split_whitespace();
        let kind = it.next().and_then(ConeKind::from_name).ok_or_else(|| bad(ln, "unknown cone kind"))?;
        let count: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad(ln, "bad row count"))?;
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, row) = lines.next().ok_or_else(|| bad(ln, "truncated block"))?;
            rows.push(parse_row(row, n, ln)?);
        }
        p.add_cone(kind, rows)?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Shape;

    #[test]
    fn round_trip() {
        let mut p = ConicProblem::new();
        let x = p.add_variable(Shape::Vector(2)).unwrap();
        p.set_objective(x.expr(0) + 0.5 * x.expr(1)).unwrap();
        p.add_cone(ConeKind::SecondOrder, vec![x.expr(0), AffExpr::constant(3.0), x.expr(1) - 4.0]).unwrap();
        let text = write_dump(&p);
        assert!(text.starts_with("vars 2\n"));
        let q = read_dump(&text).unwrap();
        assert_eq!(write_dump(&q), text);
    }

    #[test]
    fn reports_line_of_error() {
        let err = read_dump("vars 1\nobjective 1 0\nsoc 2\n1 0 0\n1 0\n").unwrap_err();
        assert!(matches!(err, ConicError::Dump { line: 4, .. }));
    }
}
