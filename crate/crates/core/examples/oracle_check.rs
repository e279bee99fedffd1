// Compares a reformulated worst case with the grid oracle and checks its certificate.

use mgdro::moment::extract_moment_certificate;
use mgdro::oracle::max_constraint_violation;
use mgdro::verify::{
    covering_grid, oracle_value, random_instance, solve_instance, Builder, Family, InstanceSpec,
    SpaceKind,
};

/// `(reformulated value, oracle value, certificate violation)`.
pub fn run_example() -> mgdro::Result<(f64, f64, f64)> {
    let spec = InstanceSpec {
        dim: 2,
        family: Family::Moment,
        cores: 2,
        space: SpaceKind::Ellipsoid,
        samples: 0,
    };
    let problem = random_instance(&spec, 7)?;
    let solved = solve_instance(&problem, Builder::Mgdro)?;
    let points = covering_grid(&problem.sample_space, 60)?.points(&problem.sample_space)?;
    let oracle = oracle_value(&problem, &solved.x, &points)?;
    let (x, cert) = extract_moment_certificate(&solved.program, &solved.solution)?;
    let violation = max_constraint_violation(&cert, &problem, &x, &points)?;
    println!(
        "worst-case expectation {:.6}, grid oracle ({} points) {:.6}, certificate violation {:.1e}",
        solved.inner,
        points.len(),
        oracle,
        violation
    );
    Ok((solved.inner, oracle, violation))
}

fn main() -> mgdro::Result<()> {
    run_example().map(|_| ())
}
