use nalgebra::DVector;

use super::{CoreSetSpec, UncertaintyRegion};
use crate::conic::{exprs, solve, ConicProgram, NormIndex, SolverSettings};
use crate::error::{dim_check, Error, Result};
use crate::linalg;

/// `min { ||xi - y||_q : y in region }`.
pub fn distance_to_region(
    region: &UncertaintyRegion,
    xi: &DVector<f64>,
    q: NormIndex,
) -> Result<f64> {
    dim_check("penalty point", region.dim(), xi.len())?;
    match region {
        UncertaintyRegion::FullSpace { .. } => return Ok(0.0),
        UncertaintyRegion::Ellipsoid(e) if q == NormIndex::Two => {
            return Ok((xi - e.project(xi)).norm());
        }
        _ => {}
    }
    if region.contains(xi, 0.0) {
        return Ok(0.0);
    }
    let mut prog = ConicProgram::new();
    let y = prog.add_variable("y", xi.len());
    let t = prog.add_variable("t", 1);
    let y_e = prog.expr(y);
    region.emit_membership(&mut prog, &y_e)?;
    let diff = exprs::sub(&exprs::constant(xi), &y_e);
    let t_e = prog.scalar(t);
    prog.add_norm_epigraph(&diff, q, t_e.clone());
    prog.set_objective(t_e);
    let sol = solve(&prog, &SolverSettings::tight());
    if !sol.is_optimal() {
        return Err(Error::Solver(sol.status));
    }
    // Re-evaluate at the returned point to get a true (feasible-side) distance.
    let yv = DVector::from_vec(sol.var(&prog, y));
    let direct = linalg::norm((xi - yv).as_slice(), q);
    Ok(direct.min(sol.objective.unwrap_or(direct)).max(0.0))
}

/// `min_i theta_i * dist_i(xi, Y_i)^power_i`.
pub fn evaluate_penalty(core_sets: &[CoreSetSpec], xi: &DVector<f64>) -> Result<f64> {
    if core_sets.is_empty() {
        return Err(Error::Invalid("penalty needs at least one core set".into()));
    }
    let mut best = f64::INFINITY;
    for c in core_sets {
        let d = distance_to_region(&c.region, xi, c.distance.norm)?;
        let v = c.theta * if c.distance.power == 2 { d * d } else { d };
        best = best.min(v);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DistanceSpec, Ellipsoid, Polyhedron};
    use nalgebra::DMatrix;

    fn ball_at(c: &[f64], r: f64) -> UncertaintyRegion {
        UncertaintyRegion::Ellipsoid(
            Ellipsoid::new(
                DVector::from_row_slice(c),
                DMatrix::identity(c.len(), c.len()),
                r * r,
            )
            .unwrap(),
        )
    }

    #[test]
    fn penalty_examples() {
        let d = DistanceSpec::euclidean();
        let y1 = CoreSetSpec::new(ball_at(&[0.0, 0.0], 1.0), 1.0, d).unwrap();
        let y2 = CoreSetSpec::new(ball_at(&[4.1, 0.0], 1.0), 10.0, d).unwrap();
        let sets = vec![y1.clone(), y2];
        assert_eq!(
            evaluate_penalty(&sets, &DVector::from_vec(vec![0.2, 0.1])).unwrap(),
            0.0
        );
        // distances 2 and 0.1
        let v = evaluate_penalty(&sets, &DVector::from_vec(vec![3.0, 0.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");

        let sq = CoreSetSpec::new(
            ball_at(&[0.0, 0.0], 1.0),
            3.0,
            DistanceSpec::new(NormIndex::Two, 2).unwrap(),
        )
        .unwrap();
        let v = evaluate_penalty(&[sq], &DVector::from_vec(vec![3.0, 0.0])).unwrap();
        assert!((v - 12.0).abs() < 1e-9);
        assert!(evaluate_penalty(&[], &DVector::zeros(2)).is_err());
        let _ = y1;
    }

    #[test]
    fn conic_distances() {
        let bx = UncertaintyRegion::Polyhedron(
            Polyhedron::boxed(
                &DVector::from_vec(vec![0.0, 0.0]),
                &DVector::from_vec(vec![1.0, 1.0]),
            )
            .unwrap(),
        );
        let p = DVector::from_vec(vec![2.0, 3.0]);
        let d2 = distance_to_region(&bx, &p, NormIndex::Two).unwrap();
        assert!((d2 - 5f64.sqrt()).abs() < 1e-6);
        let d1 = distance_to_region(&bx, &p, NormIndex::One).unwrap();
        assert!((d1 - 3.0).abs() < 1e-6);
        let dinf = distance_to_region(&bx, &p, NormIndex::Inf).unwrap();
        assert!((dinf - 2.0).abs() < 1e-6);
        let ball = ball_at(&[0.0, 0.0], 1.0);
        let d1 =
            distance_to_region(&ball, &DVector::from_vec(vec![2.0, 0.0]), NormIndex::One).unwrap();
        assert!((d1 - 1.0).abs() < 1e-6);
    }
}
