// Moment-based DRO with and without core sets on a small two-mode problem.

#[allow(dead_code)]
mod problem_model {
    include!("problem_model.rs");
}

use mgdro::conic::{solve, SolverSettings};
use mgdro::model::MgdroProblem;
use mgdro::moment::{
    build_dro_moment, build_mgdro_moment, build_union_moment, extract_moment_certificate,
};

/// Optimal values of the union, penalized and plain reformulations.
pub fn run_example() -> mgdro::Result<[f64; 3]> {
    let mg = problem_model::two_mode_problem()?;
    let plain = MgdroProblem {
        core_sets: vec![],
        ..mg.clone()
    };
    let settings = SolverSettings::default();

    let mut out = [0.0; 3];
    for (slot, (label, prog)) in [
        ("union of core sets", build_union_moment(&mg)?),
        ("MGDRO", build_mgdro_moment(&mg)?),
        ("DRO over the sample space", build_dro_moment(&plain)?),
    ]
    .into_iter()
    .enumerate()
    {
        let sol = solve(&prog, &settings);
        let (x, cert) = extract_moment_certificate(&prog, &sol)?;
        println!(
            "{label:28} value {:9.5}  x = {:.4}  t = {:.4}  ({} columns)",
            cert.objective,
            x[0],
            cert.t,
            prog.num_columns()
        );
        out[slot] = cert.objective;
    }
    Ok(out)
}

fn main() -> mgdro::Result<()> {
    run_example().map(|_| ())
}
