// Builds a tiny conic program by hand and solves it.

use mgdro::conic::{exprs, solve, AffineExpr, ConicProgram, NormIndex, SolverSettings};

pub fn run_example() -> mgdro::Result<f64> {
    // minimize t  s.t.  ||(x - 3, y + 1)||_2 <= t,  x + y >= 4
    let mut prog = ConicProgram::new();
    let xy = prog.add_variable("xy", 2);
    let t = prog.add_variable("t", 1);
    let v = prog.expr(xy);
    prog.add_nonneg(vec![v[0].clone() + &v[1] - 4.0]);
    let shifted = exprs::sub(&v, &[AffineExpr::constant(3.0), AffineExpr::constant(-1.0)]);
    prog.add_norm_epigraph(&shifted, NormIndex::Two, prog.scalar(t));
    prog.set_objective(prog.scalar(t));
    prog.validate()?;

    let sol = solve(&prog, &SolverSettings::default());
    let value = sol.objective.ok_or(mgdro::Error::Solver(sol.status))?;
    println!(
        "status {:?}, distance {value:.6} at {:?}",
        sol.status,
        sol.var(&prog, xy)
    );
    Ok(value)
}

fn main() -> mgdro::Result<()> {
    run_example().map(|_| ())
}
