//! Conic programs for type-1 Wasserstein ambiguity sets: plain DRO and MGDRO.

use nalgebra::DVector;

use crate::common::{
    add_decision, intercept_expr, named_scalar, named_vec, named_vec_or_zero, require_optimal,
    slope_expr, wrap_objective,
};
use crate::conic::{exprs, AffineExpr, ConicProgram, Solution};
use crate::conjugate::{
    dual_norm_index, emit_epigraph_constraints, DistanceConjugateRequest, SupportTermRequest,
};
use crate::error::{Error, Result};
use crate::model::{AmbiguitySpec, MgdroProblem};

#[derive(Clone, Debug, PartialEq)]
pub struct WassersteinCertificate {
    pub lambda: f64,
    pub s: DVector<f64>,
    /// Indexed `[i][j][k]`; a plain DRO certificate has one row `i = 0` with zero `v`.
    pub v: Vec<Vec<Vec<DVector<f64>>>>,
    pub w: Vec<Vec<Vec<DVector<f64>>>>,
    pub objective: f64,
}

pub fn build_dro_wasserstein(problem: &MgdroProblem) -> Result<ConicProgram> {
    if !problem.core_sets.is_empty() {
        return Err(Error::Invalid(
            "plain DRO builder expects no core sets".into(),
        ));
    }
    build(problem)
}

pub fn build_mgdro_wasserstein(problem: &MgdroProblem) -> Result<ConicProgram> {
    if problem.core_sets.is_empty() {
        return Err(Error::Invalid(
            "MGDRO builder needs at least one core set".into(),
        ));
    }
    build(problem)
}

fn build(problem: &MgdroProblem) -> Result<ConicProgram> {
    problem.validate()?;
    let (samples, radius, norm) = match &problem.ambiguity {
        AmbiguitySpec::Wasserstein {
            samples,
            radius,
            norm,
        } => (samples, *radius, *norm),
        _ => {
            return Err(Error::Invalid(
                "Wasserstein builder needs a Wasserstein ambiguity set".into(),
            ))
        }
    };
    let p = problem.uncertainty_dim();
    let n_samples = samples.nrows();
    let dual = dual_norm_index(norm);

    let mut prog = ConicProgram::new();
    let (_, x) = add_decision(&mut prog, problem);
    let lam_id = prog.add_variable("lambda", 1);
    let s_id = prog.add_variable("s", n_samples);
    let lam = prog.scalar(lam_id);
    let s = prog.expr(s_id);

    let mut inner = lam.clone() * radius;
    for sj in &s {
        inner.add_scaled(sj, 1.0 / n_samples as f64);
    }
    prog.set_objective(wrap_objective(problem, &x, inner));
    prog.begin_section("lambda_sign");
    prog.add_nonneg(vec![lam.clone()]);

    let slopes: Vec<Vec<AffineExpr>> = problem
        .objective
        .pieces
        .iter()
        .map(|pc| slope_expr(pc, &x))
        .collect();
    let intercepts: Vec<AffineExpr> = problem
        .objective
        .pieces
        .iter()
        .map(|pc| intercept_expr(pc, &x))
        .collect();
    let sample_full = problem.sample_space.is_full_space();
    let (xi0, a0, z0) = problem.sample_space.primitive();
    let mut main_rows = Vec::new();

    if problem.core_sets.is_empty() && sample_full {
        // sup_xi a.xi + b - lambda ||xi - xhat|| is finite iff ||a||_* <= lambda.
        prog.begin_section("lambda_cap");
        for a_k in &slopes {
            prog.add_norm_epigraph(a_k, dual, lam.clone());
        }
        for j in 0..n_samples {
            let xhat = samples.row(j).transpose();
            for (a_k, b_k) in slopes.iter().zip(&intercepts) {
                main_rows.push(s[j].clone() - exprs::dot(&xhat, a_k) - b_k);
            }
        }
    } else {
        let rows: Vec<Option<usize>> = if problem.core_sets.is_empty() {
            vec![None]
        } else {
            (0..problem.core_sets.len()).map(Some).collect()
        };
        for (i_idx, core_idx) in rows.iter().enumerate() {
            let core = core_idx.map(|c| &problem.core_sets[c]);
            let core_prim = core.map(|c| c.region.primitive());
            for j in 0..n_samples {
                let xhat = samples.row(j).transpose();
                for (k, (a_k, b_k)) in slopes.iter().zip(&intercepts).enumerate() {
                    // dir = v + w - a_k; row: s_j - [xi_i.v + z1 + xi0.w + z2 - xhat.dir + b_k + z3] >= 0
                    let mut dir = exprs::scale(a_k, -1.0);
                    let mut rhs = b_k.clone();

                    if let (Some(c), Some((xi_i, a_i, z_i))) = (core, &core_prim) {
                        let v_id = prog.add_variable(format!("v[{i_idx},{j},{k}]"), p);
                        let v = prog.expr(v_id);
                        dir = exprs::add(&dir, &v);
                        rhs += &exprs::dot(xi_i, &v);
                        prog.begin_section("support_core");
                        let z1 = prog.add_variable(format!("z1[{i_idx},{j},{k}]"), 1);
                        let z1_e = prog.scalar(z1);
                        emit_epigraph_constraints(
                            &mut prog,
                            SupportTermRequest {
                                set: z_i,
                                argument: exprs::mat_mul(&a_i.transpose(), &v),
                                bound: z1_e.clone(),
                            },
                        )?;
                        rhs += &z1_e;
                        prog.begin_section("distance_conjugate");
                        let bound = if c.distance.power == 2 {
                            let z3 = prog.add_variable(format!("z3[{i_idx},{j},{k}]"), 1);
                            let z3_e = prog.scalar(z3);
                            rhs += &z3_e;
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

                    if !sample_full {
                        let w_id = prog.add_variable(format!("w[{i_idx},{j},{k}]"), p);
                        let w = prog.expr(w_id);
                        dir = exprs::add(&dir, &w);
                        rhs += &exprs::dot(&xi0, &w);
                        prog.begin_section("support_sample");
                        let z2 = prog.add_variable(format!("z2[{i_idx},{j},{k}]"), 1);
                        let z2_e = prog.scalar(z2);
                        emit_epigraph_constraints(
                            &mut prog,
                            SupportTermRequest {
                                set: &z0,
                                argument: exprs::mat_mul(&a0.transpose(), &w),
                                bound: z2_e.clone(),
                            },
                        )?;
                        rhs += &z2_e;
                    }

                    rhs -= &exprs::dot(&xhat, &dir);
                    prog.begin_section("lambda_cap");
                    prog.add_norm_epigraph(&dir, dual, lam.clone());
                    main_rows.push(s[j].clone() - rhs);
                }
            }
        }
    }
    prog.begin_section("main");
    prog.add_nonneg(main_rows);
    Ok(prog)
}

pub fn extract_wasserstein_certificate(
    program: &ConicProgram,
    solution: &Solution,
) -> Result<(DVector<f64>, WassersteinCertificate)> {
    let objective = require_optimal(solution)?;
    let x = named_vec(program, solution, "x")?;
    let lambda = named_scalar(program, solution, "lambda")?;
    let s = named_vec(program, solution, "s")?;
    let n = s.len();
    let p = program
        .variables()
        .iter()
        .find(|v| v.name.starts_with("v[") || v.name.starts_with("w["))
        .map(|v| v.len)
        .unwrap_or(0);

    let mut v = Vec::new();
    let mut w = Vec::new();
    for i in 0.. {
        let present = |j: usize, k: usize| {
            program.var_by_name(&format!("v[{i},{j},{k}]")).is_some()
                || program.var_by_name(&format!("w[{i},{j},{k}]")).is_some()
        };
        if !present(0, 0) {
            break;
        }
        let (mut vi, mut wi) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for j in 0..n {
            let (mut vj, mut wj) = (Vec::new(), Vec::new());
            let mut k = 0;
            while present(j, k) {
                vj.push(named_vec_or_zero(
                    program,
                    solution,
                    &format!("v[{i},{j},{k}]"),
                    p,
                ));
                wj.push(named_vec_or_zero(
                    program,
                    solution,
                    &format!("w[{i},{j},{k}]"),
                    p,
                ));
                k += 1;
            }
            vi.push(vj);
            wi.push(wj);
        }
        v.push(vi);
        w.push(wi);
    }
    Ok((
        x,
        WassersteinCertificate {
            lambda,
            s,
            v,
            w,
            objective,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::NormIndex;
    use crate::conic::{solve, Cone, SolverSettings};
    use crate::model::{
        AffinePiece, LinearConstraints, PiecewiseLinearObjective, UncertaintyRegion,
    };
    use nalgebra::DMatrix;

    fn constant_problem(radius: f64) -> MgdroProblem {
        MgdroProblem {
            objective: PiecewiseLinearObjective::plain(
                0,
                2,
                vec![AffinePiece::with_constant_slope(
                    DVector::zeros(2),
                    DVector::zeros(0),
                    7.0,
                )],
            )
            .unwrap(),
            feasible_set: LinearConstraints::unconstrained(0),
            sample_space: UncertaintyRegion::FullSpace { dim: 2 },
            core_sets: vec![],
            ambiguity: AmbiguitySpec::Wasserstein {
                samples: DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, 0.5, -1.0, 0.0]),
                radius,
                norm: NormIndex::Two,
            },
        }
    }

    #[test]
    fn constant_value() {
        for r in [0.0, 0.5, 3.0] {
            let prog = build_dro_wasserstein(&constant_problem(r)).unwrap();
            let sol = solve(&prog, &SolverSettings::default());
            let (_, cert) = extract_wasserstein_certificate(&prog, &sol).unwrap();
            assert!((cert.objective - 7.0).abs() < 1e-6);
            let total = cert.lambda * r + cert.s.mean();
            assert!((total - cert.objective).abs() < 1e-6);
        }
    }

    #[test]
    fn full_space_counts() {
        let prog = build_dro_wasserstein(&constant_problem(0.1)).unwrap();
        assert_eq!(prog.count_rows(Some("main"), |c| *c == Cone::Nonneg), 3);
        assert_eq!(
            prog.count_blocks(Some("lambda_cap"), |c| matches!(c, Cone::SecondOrder(_))),
            1
        );
    }
}
