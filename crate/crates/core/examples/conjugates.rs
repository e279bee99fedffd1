// Support functions and distance conjugates: numeric values next to their conic epigraphs.

use nalgebra::{DMatrix, DVector};

use mgdro::conic::{solve, AffineExpr, ConicProgram, NormIndex, SolverSettings};
use mgdro::conjugate::{
    distance_conjugate_value, emit_epigraph_constraints, support_value, DistanceConjugateRequest,
    PrimitiveSet, SupportTermRequest,
};
use mgdro::model::DistanceSpec;

fn emitted(set: &PrimitiveSet, u: &DVector<f64>) -> Option<f64> {
    let mut prog = ConicProgram::new();
    let b = prog.add_variable("b", 1);
    let arg = u.iter().map(|v| AffineExpr::constant(*v)).collect();
    let bound = prog.scalar(b);
    emit_epigraph_constraints(
        &mut prog,
        SupportTermRequest {
            set,
            argument: arg,
            bound,
        },
    )
    .ok()?;
    prog.set_objective(prog.scalar(b));
    solve(&prog, &SolverSettings::tight()).objective
}

pub fn run_example() -> mgdro::Result<()> {
    let u = DVector::from_row_slice(&[3.0, 4.0]);
    let sets = [
        (
            "2-norm ball, radius 2",
            PrimitiveSet::Ball {
                norm: NormIndex::Two,
                radius_sq: 4.0,
                dim: 2,
            },
        ),
        (
            "inf-norm ball, radius 1",
            PrimitiveSet::Ball {
                norm: NormIndex::Inf,
                radius_sq: 1.0,
                dim: 2,
            },
        ),
        (
            "box [-1,1]^2",
            PrimitiveSet::Polyhedron {
                matrix: DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
                rhs: DVector::from_element(4, 1.0),
            },
        ),
        ("whole plane", PrimitiveSet::FullSpace { dim: 2 }),
    ];
    for (label, set) in &sets {
        println!(
            "support of {label} at u=(3,4): value {:?}, epigraph {:?}",
            support_value(set, &u)?,
            emitted(set, &u)
        );
    }

    for power in [1u8, 2] {
        let spec = DistanceSpec::new(NormIndex::Two, power)?;
        for theta in [4.0, 6.0] {
            println!(
                "theta {theta}, power {power}: conjugate {:?}",
                distance_conjugate_value(&spec, theta, &u)?
            );
        }
    }

    // The power-2 conjugate as a rotated cone: ||u||^2 / (4 theta) <= b.
    let mut prog = ConicProgram::new();
    let b = prog.add_variable("b", 1);
    let arg = u.iter().map(|v| AffineExpr::constant(*v)).collect();
    let bound = Some(prog.scalar(b));
    emit_epigraph_constraints(
        &mut prog,
        DistanceConjugateRequest {
            distance: DistanceSpec::new(NormIndex::Two, 2)?,
            theta: 2.0,
            argument: arg,
            bound,
        },
    )?;
    prog.set_objective(prog.scalar(b));
    println!(
        "quadratic conjugate via cone: {:?}",
        solve(&prog, &SolverSettings::tight()).objective
    );
    Ok(())
}

fn main() -> mgdro::Result<()> {
    run_example()
}
