//! Pieces shared by the reformulation builders.

use nalgebra::DVector;

use crate::conic::{exprs, AffineExpr, ConicProgram, Solution, VarId};
use crate::error::{Error, Result};
use crate::model::{AffinePiece, MgdroProblem};

/// Registers the decision vector `x` and its feasible-set rows.
pub(crate) fn add_decision(
    program: &mut ConicProgram,
    problem: &MgdroProblem,
) -> (VarId, Vec<AffineExpr>) {
    let x = program.add_variable("x", problem.decision_dim());
    let x_e = program.expr(x);
    let f = &problem.feasible_set;
    if f.matrix.nrows() > 0 {
        program.begin_section("feasible_set");
        let lhs = exprs::mat_mul(&f.matrix, &x_e);
        let rows = lhs
            .into_iter()
            .zip(f.rhs.iter())
            .map(|(l, r)| AffineExpr::constant(*r) - l)
            .collect();
        program.add_nonneg(rows);
    }
    (x, x_e)
}

/// `a_k(x)` as affine expressions.
pub(crate) fn slope_expr(piece: &AffinePiece, x: &[AffineExpr]) -> Vec<AffineExpr> {
    exprs::add(
        &exprs::mat_mul(&piece.slope_matrix, x),
        &exprs::constant(&piece.slope_offset),
    )
}

/// `b_k(x)` as an affine expression.
pub(crate) fn intercept_expr(piece: &AffinePiece, x: &[AffineExpr]) -> AffineExpr {
    exprs::dot(&piece.intercept_coef, x) + piece.intercept_offset
}

/// `outer_linear.x + outer_scale * inner`.
pub(crate) fn wrap_objective(
    problem: &MgdroProblem,
    x: &[AffineExpr],
    inner: AffineExpr,
) -> AffineExpr {
    let obj = &problem.objective;
    exprs::dot(&obj.outer_linear, x) + inner * obj.outer_scale
}

pub(crate) fn require_optimal(solution: &Solution) -> Result<f64> {
    match (solution.status, solution.objective) {
        (crate::conic::SolveStatus::Optimal, Some(v)) => Ok(v),
        (s, _) => Err(Error::Solver(s)),
    }
}

pub(crate) fn named_vec(
    program: &ConicProgram,
    solution: &Solution,
    name: &str,
) -> Result<DVector<f64>> {
    solution
        .var_named(program, name)
        .map(DVector::from_vec)
        .ok_or_else(|| Error::Invalid(format!("program has no variable named {name}")))
}

pub(crate) fn named_scalar(program: &ConicProgram, solution: &Solution, name: &str) -> Result<f64> {
    Ok(named_vec(program, solution, name)?[0])
}

/// Optional variables default to zero vectors.
pub(crate) fn named_vec_or_zero(
    program: &ConicProgram,
    solution: &Solution,
    name: &str,
    len: usize,
) -> DVector<f64> {
    solution
        .var_named(program, name)
        .map(DVector::from_vec)
        .unwrap_or_else(|| DVector::zeros(len))
}
