//! Support functions of the primitive sets and conjugates of the penalty distances,
//! both as numeric evaluators and as conic epigraph emitters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::{
    exprs, solve, AffineExpr, ConicProgram, ConstraintHandle, NormIndex, SolveStatus,
    SolverSettings,
};
use crate::error::{dim_check, Error, Result};
use crate::linalg;
use crate::model::DistanceSpec;

/// Relative slack used when deciding whether a norm cap holds numerically.
const CAP_TOL: f64 = 1e-12;

pub fn dual_norm_index(q: NormIndex) -> NormIndex {
    q.dual()
}

/// Extended real value: finite or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(*v),
            Extended::Infinite => None,
        }
    }

    pub fn scale(self, alpha: f64) -> Extended {
        match self {
            Extended::Finite(v) => Extended::Finite(alpha * v),
            Extended::Infinite => Extended::Infinite,
        }
    }
}

impl std::ops::Add for Extended {
    type Output = Extended;
    fn add(self, rhs: Extended) -> Extended {
        match (self, rhs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::Infinite,
        }
    }
}

/// The set `Z` in the decomposition `xi = center + A zeta, zeta ∈ Z`.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimitiveSet {
    /// `{ ||zeta||_norm <= sqrt(radius_sq) }`
    Ball {
        norm: NormIndex,
        radius_sq: f64,
        dim: usize,
    },
    /// `{ matrix zeta <= rhs }`
    Polyhedron {
        matrix: DMatrix<f64>,
        rhs: DVector<f64>,
    },
    FullSpace {
        dim: usize,
    },
}

impl PrimitiveSet {
    pub fn dim(&self) -> usize {
        match self {
            PrimitiveSet::Ball { dim, .. } | PrimitiveSet::FullSpace { dim } => *dim,
            PrimitiveSet::Polyhedron { matrix, .. } => matrix.ncols(),
        }
    }
}

/// `sup { u.zeta : zeta in set }`.
pub fn support_value(set: &PrimitiveSet, u: &DVector<f64>) -> Result<Extended> {
    dim_check("support argument", set.dim(), u.len())?;
    match set {
        PrimitiveSet::Ball {
            norm, radius_sq, ..
        } => Ok(Extended::Finite(
            radius_sq.sqrt() * linalg::norm(u.as_slice(), norm.dual()),
        )),
        PrimitiveSet::FullSpace { .. } => Ok(if u.iter().all(|v| *v == 0.0) {
            Extended::Finite(0.0)
        } else {
            Extended::Infinite
        }),
        PrimitiveSet::Polyhedron { matrix, rhs } => {
            if u.iter().all(|v| *v == 0.0) {
                return Ok(Extended::Finite(0.0));
            }
            // min d.y  s.t.  C^T y = u, y >= 0
            let mut prog = ConicProgram::new();
            let y = prog.add_variable("y", matrix.nrows());
            let y_e = prog.expr(y);
            prog.add_nonneg(y_e.clone());
            let ct_y = exprs::mat_mul(&matrix.transpose(), &y_e);
            prog.add_zero(exprs::sub(&ct_y, &exprs::constant(u)));
            prog.set_objective(exprs::dot(rhs, &y_e));
            let sol = solve(&prog, &SolverSettings::tight());
            match sol.status {
                SolveStatus::Optimal => Ok(Extended::Finite(sol.objective.unwrap_or(0.0))),
                SolveStatus::Infeasible => Ok(Extended::Infinite),
                SolveStatus::Unbounded => {
                    Err(Error::Invalid("support of an empty polyhedron".into()))
                }
                s => Err(Error::Solver(s)),
            }
        }
    }
}

/// `theta * phi**(v/theta, -v/theta)` for a norm-based distance.
pub fn distance_conjugate_value(
    spec: &DistanceSpec,
    theta: f64,
    v: &DVector<f64>,
) -> Result<Extended> {
    spec.validate()?;
    if !(theta > 0.0) {
        return Err(Error::Invalid(format!("theta must be > 0, got {theta}")));
    }
    let nv = linalg::norm(v.as_slice(), spec.norm.dual());
    Ok(match spec.power {
        1 => {
            if nv <= theta * (1.0 + CAP_TOL) {
                Extended::Finite(0.0)
            } else {
                Extended::Infinite
            }
        }
        _ => Extended::Finite(nv * nv / (4.0 * theta)),
    })
}

/// `support(argument | set) <= bound`.
pub struct SupportTermRequest<'a> {
    pub set: &'a PrimitiveSet,
    pub argument: Vec<AffineExpr>,
    pub bound: AffineExpr,
}

/// `theta * phi**(argument) <= bound`. Power 1 ignores `bound` (the term is zero on its domain).
pub struct DistanceConjugateRequest {
    pub distance: DistanceSpec,
    pub theta: f64,
    pub argument: Vec<AffineExpr>,
    pub bound: Option<AffineExpr>,
}

pub enum EpigraphRequest<'a> {
    Support(SupportTermRequest<'a>),
    DistanceConjugate(DistanceConjugateRequest),
}

impl<'a> From<SupportTermRequest<'a>> for EpigraphRequest<'a> {
    fn from(r: SupportTermRequest<'a>) -> Self {
        EpigraphRequest::Support(r)
    }
}

impl From<DistanceConjugateRequest> for EpigraphRequest<'_> {
    fn from(r: DistanceConjugateRequest) -> Self {
        EpigraphRequest::DistanceConjugate(r)
    }
}

pub fn emit_epigraph_constraints<'a>(
    program: &mut ConicProgram,
    request: impl Into<EpigraphRequest<'a>>,
) -> Result<Vec<ConstraintHandle>> {
    match request.into() {
        EpigraphRequest::Support(r) => emit_support(program, r),
        EpigraphRequest::DistanceConjugate(r) => emit_distance_conjugate(program, r),
    }
}

fn emit_support(
    program: &mut ConicProgram,
    r: SupportTermRequest<'_>,
) -> Result<Vec<ConstraintHandle>> {
    dim_check("support argument", r.set.dim(), r.argument.len())?;
    match r.set {
        PrimitiveSet::Ball {
            norm, radius_sq, ..
        } => {
            if *radius_sq == 0.0 {
                return Ok(vec![program.add_nonneg(vec![r.bound])]);
            }
            let scaled = exprs::scale(&r.argument, radius_sq.sqrt());
            Ok(program.add_norm_epigraph(&scaled, norm.dual(), r.bound))
        }
        PrimitiveSet::Polyhedron { matrix, rhs } => {
            let name = format!("supp_dual#{}", program.variables().len());
            let y = program.add_variable(name, matrix.nrows());
            let y_e = program.expr(y);
            let ct_y = exprs::mat_mul(&matrix.transpose(), &y_e);
            Ok(vec![
                program.add_nonneg(y_e.clone()),
                program.add_zero(exprs::sub(&ct_y, &r.argument)),
                program.add_nonneg(vec![r.bound - exprs::dot(rhs, &y_e)]),
            ])
        }
        PrimitiveSet::FullSpace { .. } => Ok(vec![
            program.add_zero(r.argument),
            program.add_nonneg(vec![r.bound]),
        ]),
    }
}

fn emit_distance_conjugate(
    program: &mut ConicProgram,
    r: DistanceConjugateRequest,
) -> Result<Vec<ConstraintHandle>> {
    r.distance.validate()?;
    if !(r.theta > 0.0) {
        return Err(Error::Invalid(format!(
            "theta must be > 0, got {}",
            r.theta
        )));
    }
    let q2 = r.distance.norm.dual();
    match r.distance.power {
        1 => Ok(program.add_norm_epigraph(&r.argument, q2, AffineExpr::constant(r.theta))),
        _ => {
            let bound = r.bound.ok_or_else(|| {
                Error::Invalid("quadratic distance conjugate needs a bound".into())
            })?;
            let two_theta = AffineExpr::constant(2.0 * r.theta);
            if q2 == NormIndex::Two {
                // ||v||^2 <= 2 (2 theta) bound
                return Ok(vec![program.add_rotated_soc(two_theta, bound, r.argument)]);
            }
            let name = format!("dist_norm#{}", program.variables().len());
            let s = program.add_variable(name, 1);
            let s_e = program.scalar(s);
            let mut handles = program.add_norm_epigraph(&r.argument, q2, s_e.clone());
            handles.push(program.add_rotated_soc(two_theta, bound, vec![s_e]));
            Ok(handles)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::Cone;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn dual_norms() {
        assert_eq!(dual_norm_index(NormIndex::One), NormIndex::Inf);
        assert_eq!(dual_norm_index(NormIndex::Two), NormIndex::Two);
        assert_eq!(dual_norm_index(NormIndex::Inf), NormIndex::One);
    }

    #[test]
    fn support_examples() {
        let ball = PrimitiveSet::Ball {
            norm: NormIndex::Two,
            radius_sq: 4.0,
            dim: 2,
        };
        assert_eq!(
            support_value(&ball, &dv(&[3.0, 4.0])).unwrap(),
            Extended::Finite(10.0)
        );
        assert_eq!(
            support_value(&ball, &dv(&[0.0, 0.0])).unwrap(),
            Extended::Finite(0.0)
        );
        let full = PrimitiveSet::FullSpace { dim: 2 };
        assert_eq!(
            support_value(&full, &dv(&[1.0, 0.0])).unwrap(),
            Extended::Infinite
        );
        assert_eq!(
            support_value(&full, &dv(&[0.0, 0.0])).unwrap(),
            Extended::Finite(0.0)
        );
        // box [-1,1]^2 as C zeta <= d
        let c = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let bx = PrimitiveSet::Polyhedron {
            matrix: c,
            rhs: dv(&[1.0; 4]),
        };
        let v = support_value(&bx, &dv(&[2.0, -3.0]))
            .unwrap()
            .finite()
            .unwrap();
        assert!((v - 5.0).abs() < 1e-7);
        // half-space is unbounded in most directions
        let half = PrimitiveSet::Polyhedron {
            matrix: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            rhs: dv(&[1.0]),
        };
        assert_eq!(
            support_value(&half, &dv(&[0.0, 1.0])).unwrap(),
            Extended::Infinite
        );
    }

    #[test]
    fn conjugate_examples() {
        let l1 = DistanceSpec::euclidean();
        let l2 = DistanceSpec::new(NormIndex::Two, 2).unwrap();
        assert_eq!(
            distance_conjugate_value(&l1, 2.0, &dv(&[1.0, 1.0])).unwrap(),
            Extended::Finite(0.0)
        );
        assert_eq!(
            distance_conjugate_value(&l1, 2.0, &dv(&[3.0, 0.0])).unwrap(),
            Extended::Infinite
        );
        assert_eq!(
            distance_conjugate_value(&l2, 1.0, &dv(&[2.0, 0.0])).unwrap(),
            Extended::Finite(1.0)
        );
    }

    #[test]
    fn emitter_shapes() {
        let mut prog = ConicProgram::new();
        let v = prog.add_variable("v", 3);
        let z = prog.add_variable("z", 1);
        let ball = PrimitiveSet::Ball {
            norm: NormIndex::Two,
            radius_sq: 1.0,
            dim: 3,
        };
        let req = SupportTermRequest {
            set: &ball,
            argument: prog.expr(v),
            bound: prog.scalar(z),
        };
        emit_epigraph_constraints(&mut prog, req).unwrap();
        assert_eq!(prog.count_blocks(None, |c| *c == Cone::SecondOrder(4)), 1);

        let req = DistanceConjugateRequest {
            distance: DistanceSpec::euclidean(),
            theta: 2.0,
            argument: prog.expr(v),
            bound: None,
        };
        emit_epigraph_constraints(&mut prog, req).unwrap();
        assert_eq!(prog.count_blocks(None, |c| *c == Cone::SecondOrder(4)), 2);

        let full = PrimitiveSet::FullSpace { dim: 3 };
        let req = SupportTermRequest {
            set: &full,
            argument: prog.expr(v),
            bound: prog.scalar(z),
        };
        emit_epigraph_constraints(&mut prog, req).unwrap();
        assert_eq!(prog.count_rows(None, |c| *c == Cone::Zero), 3);
    }
}
