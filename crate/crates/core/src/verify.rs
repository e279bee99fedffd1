//! Randomized cross-checks of the reformulations against the brute-force oracles.
//!
//! Each `check_*` function returns a [`Check`] with a pass flag and a short summary;
//! the `verify` subcommand and the acceptance tests both run them.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conic::{
    solve, AffineExpr, ConicProgram, NormIndex, Solution, SolveStatus, SolverSettings,
};
use crate::conjugate::{
    distance_conjugate_value, emit_epigraph_constraints, support_value, DistanceConjugateRequest,
    Extended, PrimitiveSet, SupportTermRequest,
};
use crate::datagen::{sample_mixture, MixtureSpec};
use crate::error::{Error, Result};
use crate::model::{
    AffinePiece, AmbiguitySpec, CoreSetSpec, DistanceSpec, Ellipsoid, LinearConstraints,
    MgdroProblem, PiecewiseLinearObjective, Polyhedron, UncertaintyRegion, CONTAINMENT_TOL,
};
use crate::moment::{
    build_dro_moment, build_mgdro_moment, build_union_moment, extract_moment_certificate,
};
use crate::newsvendor::{
    cvar_lp, empirical_cvar, loss_value, newsvendor_feasible_set, newsvendor_objective, solve_sp,
    PriceVector,
};
use crate::oracle::{
    finite_sup_wasserstein, grid_sup_moment, integrand_values, max_constraint_violation, GridSpec,
};
use crate::wasserstein::{
    build_dro_wasserstein, build_mgdro_wasserstein, extract_wasserstein_certificate,
};

/// Outcome of one verification.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Moment,
    Wasserstein,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    Full,
    Ellipsoid,
    Box,
}

/// Shape of a random test instance.
#[derive(Clone, Copy, Debug)]
pub struct InstanceSpec {
    pub dim: usize,
    pub family: Family,
    pub cores: usize,
    pub space: SpaceKind,
    pub samples: usize,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| uniform(rng, lo, hi))
}

/// Random SPD matrix with eigenvalues in `[lo, hi)`.
fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| uniform(rng, -1.0, 1.0));
    let q = g.qr().q();
    let d = DMatrix::from_diagonal(&random_vec(rng, n, lo, hi));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// A random instance with one scalar decision `0 <= x <= 2` and two or three pieces.
pub fn random_instance(spec: &InstanceSpec, seed: u64) -> Result<MgdroProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dim;
    let k = rng.random_range(2..=3);
    let pieces = (0..k)
        .map(|_| AffinePiece {
            slope_matrix: DMatrix::from_fn(d, 1, |_, _| uniform(&mut rng, -1.0, 1.0)),
            slope_offset: random_vec(&mut rng, d, -1.0, 1.0),
            intercept_coef: random_vec(&mut rng, 1, -1.0, 1.0),
            intercept_offset: uniform(&mut rng, -1.0, 1.0),
        })
        .collect();
    let mut objective = PiecewiseLinearObjective::plain(1, d, pieces)?;
    objective.outer_linear = random_vec(&mut rng, 1, -0.5, 0.5);
    let feasible_set = LinearConstraints {
        matrix: DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
        rhs: DVector::from_row_slice(&[2.0, 0.0]),
    };

    let sample_space = match spec.space {
        SpaceKind::Full => UncertaintyRegion::FullSpace { dim: d },
        SpaceKind::Ellipsoid => UncertaintyRegion::Ellipsoid(Ellipsoid::new(
            DVector::zeros(d),
            random_spd(&mut rng, d, 0.6, 1.4),
            4.0,
        )?),
        SpaceKind::Box => UncertaintyRegion::Polyhedron(Polyhedron::boxed(
            &DVector::from_element(d, -2.0),
            &DVector::from_element(d, 2.0),
        )?),
    };

    let mut core_sets = Vec::with_capacity(spec.cores);
    while core_sets.len() < spec.cores {
        let e = Ellipsoid::new(
            random_vec(&mut rng, d, -1.0, 1.0),
            random_spd(&mut rng, d, 0.1, 0.3),
            uniform(&mut rng, 0.3, 1.0),
        )?;
        let region = UncertaintyRegion::Ellipsoid(e);
        if !region.contained_in(&sample_space, CONTAINMENT_TOL)? {
            continue;
        }
        let power = if rng.random_bool(0.25) { 2 } else { 1 };
        let theta = uniform(&mut rng, 0.5, 3.0);
        core_sets.push(CoreSetSpec::new(
            region,
            theta,
            DistanceSpec::new(NormIndex::Two, power)?,
        )?);
    }

    let ambiguity = match spec.family {
        Family::Moment => AmbiguitySpec::Moment {
            mu0: random_vec(&mut rng, d, -0.3, 0.3),
            sigma0: random_spd(&mut rng, d, 0.2, 0.6),
            gamma1: uniform(&mut rng, 0.05, 0.3),
            gamma2: uniform(&mut rng, 1.0, 2.0),
        },
        Family::Wasserstein => {
            let mut rows = Vec::new();
            while rows.len() < spec.samples {
                let p = random_vec(&mut rng, d, -1.5, 1.5);
                if sample_space.contains(&p, 0.0) {
                    rows.push(p.transpose());
                }
            }
            AmbiguitySpec::Wasserstein {
                samples: DMatrix::from_rows(&rows),
                radius: uniform(&mut rng, 0.05, 0.5),
                norm: NormIndex::Two,
            }
        }
    };
    let problem = MgdroProblem {
        objective,
        feasible_set,
        sample_space,
        core_sets,
        ambiguity,
    };
    problem.validate()?;
    Ok(problem)
}

/// Which reformulation to solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builder {
    Dro,
    Mgdro,
    Union,
}

/// A solved reformulation with its decision and worst-case expectation.
#[derive(Clone, Debug)]
pub struct Solved {
    pub program: ConicProgram,
    pub solution: Solution,
    pub x: DVector<f64>,
    pub inner: f64,
}

pub fn build_program(problem: &MgdroProblem, builder: Builder) -> Result<ConicProgram> {
    match (&problem.ambiguity, builder) {
        (AmbiguitySpec::Moment { .. }, Builder::Dro) => build_dro_moment(problem),
        (AmbiguitySpec::Moment { .. }, Builder::Mgdro) => build_mgdro_moment(problem),
        (AmbiguitySpec::Moment { .. }, Builder::Union) => build_union_moment(problem),
        (AmbiguitySpec::Wasserstein { .. }, Builder::Dro) => build_dro_wasserstein(problem),
        (AmbiguitySpec::Wasserstein { .. }, Builder::Mgdro) => build_mgdro_wasserstein(problem),
        (AmbiguitySpec::Wasserstein { .. }, Builder::Union) => Err(Error::Unsupported(
            "union reformulation of a Wasserstein set".into(),
        )),
    }
}

pub fn solve_instance(problem: &MgdroProblem, builder: Builder) -> Result<Solved> {
    let program = build_program(problem, builder)?;
    let solution = solve(&program, &SolverSettings::default());
    if !solution.is_optimal() {
        return Err(Error::Solver(solution.status));
    }
    let x_id = program
        .var_by_name("x")
        .ok_or_else(|| Error::Invalid("program has no decision".into()))?;
    let x = DVector::from_vec(solution.var(&program, x_id));
    let inner = problem.inner_value(solution.objective.unwrap_or(f64::NAN), &x);
    Ok(Solved {
        program,
        solution,
        x,
        inner,
    })
}

/// Same instance without core sets.
pub fn without_cores(problem: &MgdroProblem) -> MgdroProblem {
    MgdroProblem {
        core_sets: vec![],
        ..problem.clone()
    }
}

/// A grid covering the bounding box of the sample space (or `[-4, 4]^d` when unbounded).
pub fn covering_grid(space: &UncertaintyRegion, per_dim: usize) -> Result<GridSpec> {
    let d = space.dim();
    let (lo, hi) = match space {
        UncertaintyRegion::Ellipsoid(e) => {
            let half: Vec<f64> = (0..d)
                .map(|i| (e.radius_sq() * e.shape()[(i, i)]).sqrt())
                .collect();
            (
                (0..d).map(|i| e.center()[i] - half[i]).collect(),
                (0..d).map(|i| e.center()[i] + half[i]).collect(),
            )
        }
        UncertaintyRegion::Polyhedron(p) => {
            let verts = p.vertices(1e-9);
            if verts.is_empty() {
                return Err(Error::Invalid("grid over an unbounded polyhedron".into()));
            }
            (
                (0..d)
                    .map(|i| verts.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min))
                    .collect(),
                (0..d)
                    .map(|i| verts.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max))
                    .collect(),
            )
        }
        UncertaintyRegion::FullSpace { .. } => (vec![-4.0; d], vec![4.0; d]),
    };
    GridSpec::new(lo, hi, vec![per_dim; d])
}

/// Points per dimension giving roughly `total` grid points.
pub fn per_dim_for(dim: usize, total: usize) -> usize {
    ((total as f64).powf(1.0 / dim as f64).round() as usize).max(2)
}

/// Oracle value of the worst-case expectation at `x` on `points`.
pub fn oracle_value(
    problem: &MgdroProblem,
    x: &DVector<f64>,
    points: &[DVector<f64>],
) -> Result<f64> {
    match &problem.ambiguity {
        AmbiguitySpec::Moment { .. } => {
            let values = integrand_values(problem, x, points)?;
            grid_sup_moment(&values, points, &problem.ambiguity)
        }
        AmbiguitySpec::Wasserstein {
            samples,
            radius,
            norm,
        } => {
            let mut support = points.to_vec();
            support.extend((0..samples.nrows()).map(|j| samples.row(j).transpose()));
            let values = integrand_values(problem, x, &support)?;
            finite_sup_wasserstein(&values, &support, samples, *radius, *norm)
        }
    }
}

fn instance_specs(family: Family, count: usize) -> Vec<InstanceSpec> {
    (0..count)
        .map(|s| InstanceSpec {
            dim: 1 + s % 2,
            family,
            cores: 1 + s % 3,
            space: if s % 4 < 2 {
                SpaceKind::Ellipsoid
            } else {
                SpaceKind::Box
            },
            samples: 3 + s % 2,
        })
        .collect()
}

/// Oracle equivalence on `count` random instances for one ambiguity family.
///
/// For both the plain and the penalized reformulation the oracle value at the solved
/// decision must not exceed the reformulated value on a coarse and a fine grid, and
/// must come within `1e-2 (1 + |value|)` on the fine grid of about `grid_points` points.
pub fn check_oracle_equivalence(
    family: Family,
    count: usize,
    grid_points: usize,
    seed: u64,
) -> Check {
    let name = match family {
        Family::Moment => "oracle equivalence (moment)",
        Family::Wasserstein => "oracle equivalence (Wasserstein)",
    };
    let start = Instant::now();
    let mut worst_gap = 0.0f64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut coarse_skipped = 0usize;
    let mut compared = 0usize;
    for (s, spec) in instance_specs(family, count).iter().enumerate() {
        let res: Result<()> = (|| {
            let mg = random_instance(spec, seed.wrapping_add(s as u64))?;
            let fine = covering_grid(&mg.sample_space, per_dim_for(spec.dim, grid_points))?
                .points(&mg.sample_space)?;
            let coarse = covering_grid(&mg.sample_space, per_dim_for(spec.dim, 50))?
                .points(&mg.sample_space)?;
            for (problem, builder) in [
                (without_cores(&mg), Builder::Dro),
                (mg.clone(), Builder::Mgdro),
            ] {
                let solved = solve_instance(&problem, builder)?;
                let tol_dom = 1e-6 * (1.0 + solved.inner.abs());
                match oracle_value(&problem, &solved.x, &coarse) {
                    Ok(v) => worst_excess = worst_excess.max(v - solved.inner - tol_dom),
                    Err(Error::Solver(SolveStatus::Infeasible)) => coarse_skipped += 1,
                    Err(e) => return Err(e),
                }
                let v = oracle_value(&problem, &solved.x, &fine)?;
                worst_excess = worst_excess.max(v - solved.inner - tol_dom);
                worst_gap = worst_gap.max((solved.inner - v) / (1.0 + solved.inner.abs()));
                compared += 1;
            }
            Ok(())
        })();
        if let Err(e) = res {
            failures.push(format!("instance {s}: {e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = failures.is_empty() && worst_excess <= 0.0 && worst_gap <= 1e-2;
    let mut detail = format!(
        "{compared} solves, max relative gap {worst_gap:.2e} (limit 1e-2), max oracle excess {:.2e}, \
         {coarse_skipped} coarse grids infeasible, {secs:.1}s",
        worst_excess.max(0.0)
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; errors: {}", failures.join("; ")));
    }
    Check::new(name, passed, detail)
}

/// Zero-radius Wasserstein model over the whole space equals the sample-average program.
pub fn check_sp_equivalence(seed: u64) -> Check {
    let name = "zero-radius Wasserstein equals SP";
    let res: Result<(f64, f64)> = (|| {
        let mut worst = (0.0f64, 0.0f64);
        for (t, n) in [(0u64, 2usize), (1, 3), (2, 3)] {
            let prices = PriceVector::benchmark(n);
            let mix = if n == 3 {
                MixtureSpec::bimodal()
            } else {
                two_product_mixture()?
            };
            let samples = sample_mixture(&mix, 15, seed.wrapping_add(t))?;
            let sp = solve_sp(&samples, &prices, 0.05)?;
            let problem = MgdroProblem {
                objective: newsvendor_objective(&prices, n, 0.05)?,
                feasible_set: newsvendor_feasible_set(n),
                sample_space: UncertaintyRegion::FullSpace { dim: n },
                core_sets: vec![],
                ambiguity: AmbiguitySpec::Wasserstein {
                    samples,
                    radius: 0.0,
                    norm: NormIndex::Two,
                },
            };
            let prog = build_dro_wasserstein(&problem)?;
            let sol = solve(&prog, &SolverSettings::tight());
            let (_, cert) = extract_wasserstein_certificate(&prog, &sol)?;
            let diff = (cert.objective - sp.objective).abs();
            worst = (
                worst.0.max(diff),
                worst.1.max(diff / sp.objective.abs().max(1.0)),
            );
        }
        Ok(worst)
    })();
    match res {
        Ok((abs, rel)) => Check::new(
            name,
            rel <= 1e-6,
            format!("max |difference| {abs:.2e}, relative {rel:.2e} (limit 1e-6)"),
        ),
        Err(e) => Check::new(name, false, e.to_string()),
    }
}

fn two_product_mixture() -> Result<MixtureSpec> {
    let base = MixtureSpec::bimodal();
    let comps = base
        .components
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.mean = c.mean.rows(0, 2).into_owned();
            c.covariance = c.covariance.view((0, 0), (2, 2)).into_owned();
            c
        })
        .collect();
    MixtureSpec::new(comps)
}

/// Certificates of every reformulation hold on a fine grid, and lowering `t` or `s` by one is caught.
pub fn check_certificates(count: usize, grid_points: usize, seed: u64) -> Check {
    let name = "certificate soundness";
    let mut worst = 0.0f64;
    let mut weakest_flag = f64::INFINITY;
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for family in [Family::Moment, Family::Wasserstein] {
        for (s, spec) in instance_specs(family, count).iter().enumerate() {
            let res: Result<()> = (|| {
                let mg = random_instance(spec, seed.wrapping_add(1000 + s as u64))?;
                let pts = covering_grid(&mg.sample_space, per_dim_for(spec.dim, grid_points))?
                    .points(&mg.sample_space)?;
                for (problem, builder) in [
                    (without_cores(&mg), Builder::Dro),
                    (mg.clone(), Builder::Mgdro),
                ] {
                    let solved = solve_instance(&problem, builder)?;
                    let (v, flagged) = match family {
                        Family::Moment => {
                            let (x, mut cert) =
                                extract_moment_certificate(&solved.program, &solved.solution)?;
                            let v = max_constraint_violation(&cert, &problem, &x, &pts)?;
                            cert.t -= 1.0;
                            (v, max_constraint_violation(&cert, &problem, &x, &pts)?)
                        }
                        Family::Wasserstein => {
                            let (x, mut cert) =
                                extract_wasserstein_certificate(&solved.program, &solved.solution)?;
                            let AmbiguitySpec::Wasserstein { samples, .. } = &problem.ambiguity
                            else {
                                unreachable!()
                            };
                            // The samples are the points where each s_j is typically tight.
                            let mut support = pts.clone();
                            support
                                .extend((0..samples.nrows()).map(|j| samples.row(j).transpose()));
                            let v = max_constraint_violation(&cert, &problem, &x, &support)?;
                            cert.s.add_scalar_mut(-1.0);
                            (v, max_constraint_violation(&cert, &problem, &x, &support)?)
                        }
                    };
                    worst = worst.max(v);
                    weakest_flag = weakest_flag.min(flagged);
                    checked += 1;
                }
                Ok(())
            })();
            if let Err(e) = res {
                failures.push(format!("{family:?} instance {s}: {e}"));
            }
        }
    }
    let passed = failures.is_empty() && worst <= 1e-5 && weakest_flag >= 0.99;
    let mut detail = format!(
        "{checked} certificates, max violation {worst:.2e} (limit 1e-5), smallest perturbed violation {weakest_flag:.4} (limit 0.99)"
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; errors: {}", failures.join("; ")));
    }
    Check::new(name, passed, detail)
}

fn objective_of(problem: &MgdroProblem, builder: Builder) -> Result<f64> {
    let prog = build_program(problem, builder)?;
    let sol = solve(&prog, &SolverSettings::tight());
    match sol.status {
        SolveStatus::Optimal => Ok(sol.objective.unwrap_or(f64::NAN)),
        // The union reformulation is unbounded below when no distribution on the core sets fits the moments.
        SolveStatus::Unbounded if builder == Builder::Union => Ok(f64::NEG_INFINITY),
        s => Err(Error::Solver(s)),
    }
}

/// A single core set equal to a compact sample space reproduces the plain model.
pub fn check_core_equals_space(count: usize, seed: u64) -> Check {
    let name = "core set equal to sample space";
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for family in [Family::Moment, Family::Wasserstein] {
        for s in 0..count {
            let spec = InstanceSpec {
                dim: 1 + s % 2,
                family,
                cores: 0,
                space: SpaceKind::Ellipsoid,
                samples: 3,
            };
            let res: Result<()> = (|| {
                let plain = random_instance(&spec, seed.wrapping_add(2000 + s as u64))?;
                let mut mg = plain.clone();
                mg.core_sets = vec![CoreSetSpec::new(
                    plain.sample_space.clone(),
                    1.0,
                    DistanceSpec::euclidean(),
                )?];
                let a = objective_of(&plain, Builder::Dro)?;
                let b = objective_of(&mg, Builder::Mgdro)?;
                worst = worst.max((a - b).abs() / (1.0 + a.abs()));
                Ok(())
            })();
            if let Err(e) = res {
                failures.push(format!("{family:?} instance {s}: {e}"));
            }
        }
    }
    let passed = failures.is_empty() && worst <= 1e-6;
    Check::new(
        name,
        passed,
        format!(
            "max relative difference {worst:.2e} (limit 1e-6) {}",
            failures.join("; ")
        ),
    )
}

/// The optimal value does not increase with the penalty coefficient.
pub fn check_theta_monotone(count: usize, seed: u64) -> Check {
    let name = "theta sweep monotone";
    let thetas = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0];
    let mut worst_rise = 0.0f64;
    let mut failures = Vec::new();
    for family in [Family::Moment, Family::Wasserstein] {
        for (s, spec) in instance_specs(family, count).iter().enumerate() {
            let res: Result<()> = (|| {
                let base = random_instance(spec, seed.wrapping_add(3000 + s as u64))?;
                let mut prev = f64::INFINITY;
                for th in thetas {
                    let mut p = base.clone();
                    for c in &mut p.core_sets {
                        c.theta = th;
                    }
                    let v = objective_of(&p, Builder::Mgdro)?;
                    if prev.is_finite() {
                        worst_rise = worst_rise.max((v - prev) / (1.0 + prev.abs()));
                    }
                    prev = v;
                }
                Ok(())
            })();
            if let Err(e) = res {
                failures.push(format!("{family:?} instance {s}: {e}"));
            }
        }
    }
    let passed = failures.is_empty() && worst_rise <= 1e-6;
    Check::new(
        name,
        passed,
        format!(
            "max relative increase {worst_rise:.2e} (limit 1e-6) {}",
            failures.join("; ")
        ),
    )
}

/// `DRO(union of cores) <= MGDRO <= DRO(sample space)` for moment instances, and the upper
/// bound for Wasserstein instances.
pub fn check_sandwich(count: usize, seed: u64) -> Check {
    let name = "sandwich bounds";
    let mut worst = f64::NEG_INFINITY;
    let mut unbounded_unions = 0usize;
    let mut failures = Vec::new();
    for family in [Family::Moment, Family::Wasserstein] {
        for (s, spec) in instance_specs(family, count).iter().enumerate() {
            let res: Result<()> = (|| {
                let mg = random_instance(spec, seed.wrapping_add(4000 + s as u64))?;
                let mid = objective_of(&mg, Builder::Mgdro)?;
                let hi = objective_of(&without_cores(&mg), Builder::Dro)?;
                let slack = 1e-5 * (1.0 + mid.abs());
                worst = worst.max(mid - hi - slack);
                if family == Family::Moment {
                    let lo = objective_of(&mg, Builder::Union)?;
                    if lo.is_infinite() {
                        unbounded_unions += 1;
                    } else {
                        worst = worst.max(lo - mid - slack);
                    }
                }
                Ok(())
            })();
            if let Err(e) = res {
                failures.push(format!("{family:?} instance {s}: {e}"));
            }
        }
    }
    let passed = failures.is_empty() && worst <= 0.0;
    Check::new(
        name,
        passed,
        format!(
            "max bound excess {:.2e} (limit 0 after 1e-5 relative slack), {unbounded_unions} union models unbounded {}",
            worst.max(0.0),
            failures.join("; ")
        ),
    )
}

fn random_norm(rng: &mut ChaCha8Rng) -> NormIndex {
    [NormIndex::One, NormIndex::Two, NormIndex::Inf][rng.random_range(0..3)]
}

/// Emits the epigraph of a constant argument, minimizes the bound, and maps the status to a value.
fn emitted_value(
    build: impl FnOnce(&mut ConicProgram, AffineExpr) -> Result<()>,
) -> Result<Extended> {
    let mut prog = ConicProgram::new();
    let b = prog.add_variable("bound", 1);
    let b_e = prog.scalar(b);
    build(&mut prog, b_e.clone())?;
    prog.set_objective(b_e);
    let sol = solve(&prog, &SolverSettings::tight());
    match sol.status {
        SolveStatus::Optimal => Ok(Extended::Finite(sol.objective.unwrap_or(f64::NAN))),
        SolveStatus::Infeasible => Ok(Extended::Infinite),
        s => Err(Error::Solver(s)),
    }
}

fn agree(a: Extended, b: Extended, tol: f64) -> bool {
    match (a, b) {
        (Extended::Finite(x), Extended::Finite(y)) => (x - y).abs() <= tol * (1.0 + x.abs()),
        (Extended::Infinite, Extended::Infinite) => true,
        _ => false,
    }
}

/// Emitter and evaluator agree on random (set, vector) pairs for every support and conjugate kind.
pub fn check_conjugates(pairs: usize, seed: u64) -> Check {
    let name = "conjugate calculus";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches: Vec<String> = Vec::new();
    let mut infinite = 0usize;
    let mut total = 0usize;
    let kinds = [
        "ball",
        "polyhedron",
        "full space",
        "distance power 1",
        "distance power 2",
    ];
    for kind in kinds {
        for trial in 0..pairs {
            let dim = rng.random_range(1..=3);
            let mut u = random_vec(&mut rng, dim, -2.0, 2.0);
            let res: Result<(Extended, Extended)> = match kind {
                "ball" => {
                    let set = PrimitiveSet::Ball {
                        norm: random_norm(&mut rng),
                        radius_sq: uniform(&mut rng, 0.0, 4.0),
                        dim,
                    };
                    emitted_value(|p, b| {
                        let arg = u.iter().map(|v| AffineExpr::constant(*v)).collect();
                        emit_epigraph_constraints(
                            p,
                            SupportTermRequest {
                                set: &set,
                                argument: arg,
                                bound: b,
                            },
                        )?;
                        Ok(())
                    })
                    .and_then(|e| Ok((e, support_value(&set, &u)?)))
                }
                "polyhedron" => {
                    let rows = rng.random_range(1..=2 * dim + 1);
                    let matrix = DMatrix::from_fn(rows, dim, |_, _| uniform(&mut rng, -1.0, 1.0));
                    // Keep the origin strictly inside so the polyhedron is nonempty.
                    let rhs = random_vec(&mut rng, rows, 0.2, 2.0);
                    if trial % 2 == 0 {
                        // Directions in the cone spanned by the rows give finite support.
                        let w = random_vec(&mut rng, rows, 0.0, 1.0);
                        u = matrix.transpose() * w;
                    }
                    let set = PrimitiveSet::Polyhedron { matrix, rhs };
                    emitted_value(|p, b| {
                        let arg = u.iter().map(|v| AffineExpr::constant(*v)).collect();
                        emit_epigraph_constraints(
                            p,
                            SupportTermRequest {
                                set: &set,
                                argument: arg,
                                bound: b,
                            },
                        )?;
                        Ok(())
                    })
                    .and_then(|e| Ok((e, support_value(&set, &u)?)))
                }
                "full space" => {
                    if trial % 2 == 0 {
                        u.fill(0.0);
                    }
                    let set = PrimitiveSet::FullSpace { dim };
                    emitted_value(|p, b| {
                        let arg = u.iter().map(|v| AffineExpr::constant(*v)).collect();
                        emit_epigraph_constraints(
                            p,
                            SupportTermRequest {
                                set: &set,
                                argument: arg,
                                bound: b,
                            },
                        )?;
                        Ok(())
                    })
                    .and_then(|e| Ok((e, support_value(&set, &u)?)))
                }
                _ => {
                    let power = if kind == "distance power 1" { 1 } else { 2 };
                    let spec = DistanceSpec {
                        norm: random_norm(&mut rng),
                        power,
                    };
                    let mut theta = uniform(&mut rng, 0.2, 3.0);
                    // Stay clear of the cap boundary, where feasibility is decided by solver tolerance.
                    let nv = crate::linalg::norm(u.as_slice(), spec.norm.dual());
                    if power == 1 && (nv - theta).abs() < 1e-3 * (1.0 + theta) {
                        theta *= 1.1;
                    }
                    emitted_value(|p, b| {
                        let arg = u.iter().map(|v| AffineExpr::constant(*v)).collect();
                        let bound = (power == 2).then(|| b.clone());
                        emit_epigraph_constraints(
                            p,
                            DistanceConjugateRequest {
                                distance: spec,
                                theta,
                                argument: arg,
                                bound,
                            },
                        )?;
                        if power == 1 {
                            p.add_nonneg(vec![b]);
                        }
                        Ok(())
                    })
                    .and_then(|e| Ok((e, distance_conjugate_value(&spec, theta, &u)?)))
                }
            };
            total += 1;
            match res {
                Ok((emitted, evaluated)) => {
                    if evaluated.is_infinite() {
                        infinite += 1;
                    }
                    if !agree(emitted, evaluated, 1e-6) {
                        mismatches.push(format!(
                            "{kind} #{trial}: emitted {emitted:?}, evaluated {evaluated:?}"
                        ));
                    }
                }
                Err(e) => mismatches.push(format!("{kind} #{trial}: {e}")),
            }
        }
    }
    let shown: Vec<_> = mismatches.iter().take(3).cloned().collect();
    Check::new(
        name,
        mismatches.is_empty(),
        format!(
            "{total} pairs over {} kinds ({infinite} infinite), {} mismatches {}",
            kinds.len(),
            mismatches.len(),
            shown.join("; ")
        ),
    )
}

/// Piece expansion equals `beta + max(loss - beta, 0) / eps`, and the two CVaR forms agree.
pub fn check_newsvendor(points: usize, seed: u64) -> Check {
    let name = "newsvendor identities";
    let res: Result<(f64, f64, f64)> = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prices = PriceVector::benchmark(3);
        let eps = 0.05;
        let obj = newsvendor_objective(&prices, 3, eps)?;
        let mut worst = 0.0f64;
        for _ in 0..points {
            let order = random_vec(&mut rng, 3, 0.0, 20.0);
            let beta = uniform(&mut rng, -100.0, 100.0);
            let xi = random_vec(&mut rng, 3, 0.0, 20.0);
            let mut ext = DVector::zeros(4);
            ext.rows_mut(0, 3).copy_from(&order);
            ext[3] = beta;
            let expanded =
                obj.outer_linear.dot(&ext) + obj.outer_scale * obj.evaluate(&ext, &xi)?;
            let direct = beta + (loss_value(&prices, &order, &xi)? - beta).max(0.0) / eps;
            worst = worst.max((expanded - direct).abs() / direct.abs().max(1.0));
        }
        let mut cvar_gap = 0.0f64;
        for m in [7usize, 20, 100, 333] {
            let losses: Vec<f64> = (0..m).map(|_| uniform(&mut rng, -50.0, 50.0)).collect();
            cvar_gap = cvar_gap.max((empirical_cvar(&losses, eps)? - cvar_lp(&losses, eps)?).abs());
        }
        let example = empirical_cvar(&(0..100).map(f64::from).collect::<Vec<_>>(), eps)?;
        Ok((worst, cvar_gap, example))
    })();
    match res {
        Ok((worst, gap, example)) => Check::new(
            name,
            worst <= 1e-12 && gap <= 1e-8 && (example - 97.0).abs() <= 1e-12,
            format!(
                "expansion max error {worst:.2e} (limit 1e-12), sort vs LP {gap:.2e} (limit 1e-8), CVaR of 0..99 = {example}"
            ),
        ),
        Err(e) => Check::new(name, false, e.to_string()),
    }
}

/// Every check at its default size.
pub fn run_all(seed: u64) -> Vec<Check> {
    vec![
        check_oracle_equivalence(Family::Moment, 20, 10_000, seed),
        check_oracle_equivalence(Family::Wasserstein, 20, 10_000, seed),
        check_sp_equivalence(seed),
        check_certificates(6, 10_000, seed),
        check_core_equals_space(4, seed),
        check_theta_monotone(4, seed),
        check_sandwich(10, seed),
        check_conjugates(100, seed),
        check_newsvendor(10_000, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_valid_and_reproducible() {
        for family in [Family::Moment, Family::Wasserstein] {
            for spec in instance_specs(family, 6) {
                let a = random_instance(&spec, 9).unwrap();
                let b = random_instance(&spec, 9).unwrap();
                assert_eq!(a, b);
                assert_eq!(a.core_sets.len(), spec.cores);
            }
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(per_dim_for(1, 10_000), 10_000);
        assert_eq!(per_dim_for(2, 10_000), 100);
        let e = UncertaintyRegion::Ellipsoid(Ellipsoid::unit_ball(2));
        let g = covering_grid(&e, 5).unwrap();
        assert_eq!(g.lower, vec![-1.0, -1.0]);
    }

    #[test]
    fn small_checks_pass() {
        let c = check_newsvendor(200, 1);
        assert!(c.passed, "{c}");
        let c = check_oracle_equivalence(Family::Moment, 2, 10_000, 3);
        assert!(c.passed, "{c}");
    }
}
