//! Semidefinite programs for moment-based ambiguity sets: plain DRO, GDRO and MGDRO.

use nalgebra::{DMatrix, DVector};

use crate::common::{
    add_decision, intercept_expr, named_scalar, named_vec, named_vec_or_zero, require_optimal,
    slope_expr, wrap_objective,
};
use crate::conic::{exprs, packed_index, packed_len, AffineExpr, ConicProgram, Solution};
use crate::conjugate::{emit_epigraph_constraints, DistanceConjugateRequest, SupportTermRequest};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{AmbiguitySpec, MgdroProblem};

/// Allowed negative eigenvalue of the extracted `Lambda`, relative to its scale.
const PSD_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CoreMode {
    /// No core sets: worst case over all of the sample space.
    Plain,
    /// Penalized distance to the core sets.
    Penalized,
    /// Infinite penalty: worst case over the union of the core sets.
    Union,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentCertificate {
    pub lambda: DMatrix<f64>,
    pub q: DVector<f64>,
    pub t: f64,
    /// Indexed `[i][k]`; a plain DRO certificate has a single row `i = 0` with zero `v`.
    pub v: Vec<Vec<DVector<f64>>>,
    pub w: Vec<Vec<DVector<f64>>>,
    pub z1: Vec<Vec<f64>>,
    pub z2: Vec<Vec<f64>>,
    pub objective: f64,
}

pub fn build_dro_moment(problem: &MgdroProblem) -> Result<ConicProgram> {
    if !problem.core_sets.is_empty() {
        return Err(Error::Invalid(
            "plain DRO builder expects no core sets".into(),
        ));
    }
    build(problem, CoreMode::Plain)
}

pub fn build_mgdro_moment(problem: &MgdroProblem) -> Result<ConicProgram> {
    if problem.core_sets.is_empty() {
        return Err(Error::Invalid(
            "MGDRO builder needs at least one core set".into(),
        ));
    }
    if let AmbiguitySpec::Moment { gamma1, .. } = &problem.ambiguity {
        if !(*gamma1 > 0.0) {
            return Err(Error::Invalid(
                "MGDRO with moment ambiguity requires gamma1 > 0".into(),
            ));
        }
    }
    build(problem, CoreMode::Penalized)
}

/// Worst case over distributions supported on the union of the core sets.
pub fn build_union_moment(problem: &MgdroProblem) -> Result<ConicProgram> {
    if problem.core_sets.is_empty() {
        return Err(Error::Invalid(
            "union builder needs at least one core set".into(),
        ));
    }
    build(problem, CoreMode::Union)
}

fn build(problem: &MgdroProblem, mode: CoreMode) -> Result<ConicProgram> {
    problem.validate()?;
    let (mu0, sigma0, gamma1, gamma2) = match &problem.ambiguity {
        AmbiguitySpec::Moment {
            mu0,
            sigma0,
            gamma1,
            gamma2,
        } => (mu0, sigma0, *gamma1, *gamma2),
        _ => {
            return Err(Error::Invalid(
                "moment builder needs a moment ambiguity set".into(),
            ))
        }
    };
    let p = problem.uncertainty_dim();

    let mut prog = ConicProgram::new();
    let (_, x) = add_decision(&mut prog, problem);
    let t_id = prog.add_variable("t", 1);
    let q_id = prog.add_variable("q", p);
    let lam_id = prog.add_variable("Lambda", packed_len(p));
    let t = prog.scalar(t_id);
    let q = prog.expr(q_id);
    let lam = prog.sym_matrix(lam_id, p);

    // Objective: t + Lambda.(gamma2 Sigma0 + mu0 mu0^T) + sqrt(gamma1) ||Sigma0^{1/2}(q + 2 Lambda mu0)|| + q.mu0
    let omega = sigma0 * gamma2 + mu0 * mu0.transpose();
    let mut inner = t.clone() + exprs::dot(mu0, &q);
    let lam_var = prog.variable(lam_id).start;
    for i in 0..p {
        for j in 0..=i {
            let w = if i == j {
                omega[(i, j)]
            } else {
                omega[(i, j)] + omega[(j, i)]
            };
            inner.add_term(lam_var + packed_index(i, j), w);
        }
    }
    if gamma1 > 0.0 {
        prog.begin_section("mean_norm");
        let eta = prog.add_variable("eta", 1);
        let eta_e = prog.scalar(eta);
        let lam_mu: Vec<AffineExpr> = (0..p)
            .map(|i| {
                let mut e = AffineExpr::zero();
                for j in 0..p {
                    e.add_scaled(&lam[i][j], 2.0 * mu0[j]);
                }
                e
            })
            .collect();
        let arg = exprs::mat_mul(&linalg::sym_sqrt(sigma0), &exprs::add(&q, &lam_mu));
        prog.add_soc(eta_e.clone(), arg);
        inner += &(eta_e * gamma1.sqrt());
    }
    let objective = wrap_objective(problem, &x, inner);
    prog.set_objective(objective);

    let (xi0, a0, z0) = problem.sample_space.primitive();
    let sample_full = problem.sample_space.is_full_space();
    let rows: Vec<Option<usize>> = match mode {
        CoreMode::Plain => vec![None],
        _ => (0..problem.core_sets.len()).map(Some).collect(),
    };

    for (i_idx, core_idx) in rows.iter().enumerate() {
        let core = core_idx.map(|c| &problem.core_sets[c]);
        let core_prim = core.map(|c| c.region.primitive());
        for (k, piece) in problem.objective.pieces.iter().enumerate() {
            let a_k = slope_expr(piece, &x);
            let b_k = intercept_expr(piece, &x);
            let mut offdiag = exprs::sub(&q, &a_k);
            let mut corner = t.clone() - b_k;

            if let (Some(c), Some((xi_i, a_i, z_i))) = (core, &core_prim) {
                let v_id = prog.add_variable(format!("v[{i_idx},{k}]"), p);
                let v = prog.expr(v_id);
                offdiag = exprs::add(&offdiag, &v);
                corner -= &exprs::dot(xi_i, &v);
                prog.begin_section("support_core");
                let z1 = prog.add_variable(format!("z1[{i_idx},{k}]"), 1);
                let z1_e = prog.scalar(z1);
                emit_epigraph_constraints(
                    &mut prog,
                    SupportTermRequest {
                        set: z_i,
                        argument: exprs::mat_mul(&a_i.transpose(), &v),
                        bound: z1_e.clone(),
                    },
                )?;
                corner -= &z1_e;
                if mode == CoreMode::Penalized {
                    prog.begin_section("distance_conjugate");
                    let bound = if c.distance.power == 2 {
                        let z3 = prog.add_variable(format!("z3[{i_idx},{k}]"), 1);
                        let z3_e = prog.scalar(z3);
                        corner -= &z3_e;
                        Some(z3_e)
                    } else {
                        None
                    };
                    emit_epigraph_constraints(
                        &mut prog,
                        DistanceConjugateRequest {
                            distance: c.distance,
                            theta: c.theta,
                            argument: v,
                            bound,
                        },
                    )?;
                }
            }

            // The union mode restricts the support to the core sets, which already lie in the sample space.
            if !sample_full && mode != CoreMode::Union {
                let w_id = prog.add_variable(format!("w[{i_idx},{k}]"), p);
                let w = prog.expr(w_id);
                offdiag = exprs::add(&offdiag, &w);
                corner -= &exprs::dot(&xi0, &w);
                prog.begin_section("support_sample");
                let z2 = prog.add_variable(format!("z2[{i_idx},{k}]"), 1);
                let z2_e = prog.scalar(z2);
                emit_epigraph_constraints(
                    &mut prog,
                    SupportTermRequest {
                        set: &z0,
                        argument: exprs::mat_mul(&a0.transpose(), &w),
                        bound: z2_e.clone(),
                    },
                )?;
                corner -= &z2_e;
            }

            prog.begin_section("lmi");
            let half = exprs::scale(&offdiag, 0.5);
            let mut m = vec![vec![AffineExpr::zero(); p + 1]; p + 1];
            for r in 0..p {
                for s in 0..p {
                    m[r][s] = lam[r][s].clone();
                }
                m[r][p] = half[r].clone();
                m[p][r] = half[r].clone();
            }
            m[p][p] = corner;
            prog.add_psd_block(&m)?;
        }
    }
    Ok(prog)
}

/// Reads the decision and dual certificate back by variable name.
pub fn extract_moment_certificate(
    program: &ConicProgram,
    solution: &Solution,
) -> Result<(DVector<f64>, MomentCertificate)> {
    let objective = require_optimal(solution)?;
    let x = named_vec(program, solution, "x")?;
    let q = named_vec(program, solution, "q")?;
    let t = named_scalar(program, solution, "t")?;
    let p = q.len();
    let packed = named_vec(program, solution, "Lambda")?;
    let lambda = DMatrix::from_fn(p, p, |i, j| packed[packed_index(i, j)]);
    if p > 0 {
        let scale = 1.0 + lambda.amax();
        if linalg::min_eigenvalue(&lambda) < -PSD_TOL * scale {
            return Err(Error::Invalid(
                "extracted Lambda is not positive semidefinite".into(),
            ));
        }
    }

    let mut v = Vec::new();
    let mut w = Vec::new();
    let mut z1 = Vec::new();
    let mut z2 = Vec::new();
    let mut i = 0;
    loop {
        let has_row = program.var_by_name(&format!("v[{i},0]")).is_some()
            || program.var_by_name(&format!("w[{i},0]")).is_some();
        if !has_row && i > 0 {
            break;
        }
        let (mut vr, mut wr, mut z1r, mut z2r) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut k = 0;
        loop {
            let vn = format!("v[{i},{k}]");
            let wn = format!("w[{i},{k}]");
            if program.var_by_name(&vn).is_none() && program.var_by_name(&wn).is_none() {
                break;
            }
            vr.push(named_vec_or_zero(program, solution, &vn, p));
            wr.push(named_vec_or_zero(program, solution, &wn, p));
            z1r.push(named_vec_or_zero(program, solution, &format!("z1[{i},{k}]"), 1)[0]);
            z2r.push(named_vec_or_zero(program, solution, &format!("z2[{i},{k}]"), 1)[0]);
            k += 1;
        }
        v.push(vr);
        w.push(wr);
        z1.push(z1r);
        z2.push(z2r);
        if !has_row {
            break;
        }
        i += 1;
    }
    Ok((
        x,
        MomentCertificate {
            lambda,
            q,
            t,
            v,
            w,
            z1,
            z2,
            objective,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve, Cone, SolverSettings};
    use crate::model::{
        AffinePiece, LinearConstraints, PiecewiseLinearObjective, UncertaintyRegion,
    };

    fn abs_problem() -> MgdroProblem {
        let pieces = vec![
            AffinePiece::with_constant_slope(DVector::from_element(1, 1.0), DVector::zeros(0), 0.0),
            AffinePiece::with_constant_slope(
                DVector::from_element(1, -1.0),
                DVector::zeros(0),
                0.0,
            ),
        ];
        MgdroProblem {
            objective: PiecewiseLinearObjective::plain(0, 1, pieces).unwrap(),
            feasible_set: LinearConstraints::unconstrained(0),
            sample_space: UncertaintyRegion::FullSpace { dim: 1 },
            core_sets: vec![],
            ambiguity: AmbiguitySpec::Moment {
                mu0: DVector::zeros(1),
                sigma0: DMatrix::identity(1, 1),
                gamma1: 0.0,
                gamma2: 1.0,
            },
        }
    }

    #[test]
    fn absolute_value_bound() {
        let prog = build_dro_moment(&abs_problem()).unwrap();
        let sol = solve(&prog, &SolverSettings::default());
        assert!(
            (sol.objective.unwrap() - 1.0).abs() < 1e-6,
            "{:?}",
            sol.objective
        );
        assert_eq!(prog.count_blocks(None, |c| *c == Cone::Psd(2)), 2);
    }

    #[test]
    fn constant_piece_certificate() {
        let mut pr = abs_problem();
        pr.objective.pieces = vec![AffinePiece::with_constant_slope(
            DVector::zeros(1),
            DVector::zeros(0),
            7.0,
        )];
        pr.objective.outer_scale = 2.0;
        let prog = build_dro_moment(&pr).unwrap();
        let sol = solve(&prog, &SolverSettings::default());
        let (_, cert) = extract_moment_certificate(&prog, &sol).unwrap();
        assert!((cert.objective - 14.0).abs() < 1e-6);
        assert!((cert.t - 7.0).abs() < 1e-5);
        assert!(cert.lambda.amax() < 1e-5 && cert.q.amax() < 1e-5);
    }
}
