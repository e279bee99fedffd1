//! Solver-agnostic conic programs over zero, nonnegative, second-order and PSD cones.

mod expr;
mod program;
mod solve;

pub use expr::{vec as exprs, AffineExpr};
pub use program::{
    packed_index, packed_len, Cone, ConicProgram, ConstraintBlock, ConstraintHandle, NormIndex,
    VarId, Variable,
};
pub use solve::{
    solve, ClarabelBackend, ConicBackend, Residuals, Solution, SolveStatus, SolverSettings,
};
