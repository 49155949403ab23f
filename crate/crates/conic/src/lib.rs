//! Conic programs over zero, nonnegative, second-order and psd cones, and a
//! homogeneous self-dual interior-point solver for them.
//!
//! ```
//! use drds_conic::{AffExpr, ConeKind, ConicProblem, Settings, Shape, solve};
//! let mut p = ConicProblem::new();
//! let t = p.add_variable(Shape::Scalar).unwrap();
//! p.add_cone(ConeKind::SecondOrder, vec![t.expr(0), AffExpr::constant(3.0), AffExpr::constant(4.0)]).unwrap();
//! p.set_objective(t.expr(0)).unwrap();
//! let sol = solve(&p, &Settings::default());
//! assert!((sol.objective - 5.0).abs() < 1e-6);
//! ```

mod dump;
mod error;
mod expr;
mod ipm;
mod problem;
mod solver;
pub mod svec;

pub use dump::{read_dump, write_dump};
pub use error::ConicError;
pub use expr::{AffExpr, SymExpr};
pub use problem::{BlockId, ConeBlock, ConeKind, ConicProblem, Shape, VarHandle};
pub use solver::{backends, solve, Backend, InteriorPoint, Settings, Solution, Status};
