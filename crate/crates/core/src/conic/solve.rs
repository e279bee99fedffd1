use std::panic::{catch_unwind, AssertUnwindSafe};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use super::expr::AffineExpr;
use super::program::{Cone, ConicProgram, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    /// Primal values for every column of the program.
    pub values: Vec<f64>,
    /// Present iff `status == Optimal`.
    pub objective: Option<f64>,
    pub residuals: Residuals,
    pub iterations: u32,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn var(&self, program: &ConicProgram, id: VarId) -> Vec<f64> {
        let v = program.variable(id);
        self.values[v.start..v.start + v.len].to_vec()
    }

    pub fn var_named(&self, program: &ConicProgram, name: &str) -> Option<Vec<f64>> {
        program.var_by_name(name).map(|id| self.var(program, id))
    }

    pub fn eval(&self, e: &AffineExpr) -> f64 {
        e.eval(&self.values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iter: u32,
    pub tol_feas: f64,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    /// Residual level below which a reduced-accuracy termination still counts as optimal.
    pub accept_tol: f64,
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_feas: 1e-8,
            tol_gap_abs: 1e-8,
            tol_gap_rel: 1e-8,
            accept_tol: 1e-7,
            verbose: false,
        }
    }
}

impl SolverSettings {
    pub fn tight() -> Self {
        Self {
            tol_feas: 1e-10,
            tol_gap_abs: 1e-10,
            tol_gap_rel: 1e-10,
            ..Self::default()
        }
    }
}

/// A conic interior-point backend supporting zero, nonnegative, second-order and PSD cones.
pub trait ConicBackend {
    fn solve(&self, program: &ConicProgram, settings: &SolverSettings) -> Solution;
}

/// Backend delegating to the Clarabel interior-point solver.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClarabelBackend;

/// Solves with the default backend.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Solution {
    ClarabelBackend.solve(program, settings)
}

fn failed(program: &ConicProgram, status: SolveStatus) -> Solution {
    Solution {
        status,
        values: vec![0.0; program.num_columns()],
        objective: None,
        residuals: Residuals::default(),
        iterations: 0,
    }
}

struct Assembled {
    a: CscMatrix<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

/// Maps `e ∈ K` onto Clarabel's `A x + s = b, s ∈ K`: `A = -coef(e)`, `b = const(e)`.
/// Rows are grouped by cone kind (zero, nonnegative, SOC, PSD); within a kind the
/// program order is kept, so assembly is deterministic.
fn assemble(program: &ConicProgram) -> Assembled {
    let mut ii = Vec::new();
    let mut jj = Vec::new();
    let mut vv = Vec::new();
    let mut b = Vec::new();
    let mut cones = Vec::new();
    let mut row = 0usize;

    let mut push_rows = |rows: &[AffineExpr],
                         ii: &mut Vec<usize>,
                         jj: &mut Vec<usize>,
                         vv: &mut Vec<f64>,
                         b: &mut Vec<f64>| {
        for e in rows {
            for &(c, v) in &e.normalized().terms {
                ii.push(row);
                jj.push(c);
                vv.push(-v);
            }
            b.push(e.constant);
            row += 1;
        }
    };

    for kind in 0..2 {
        let want = if kind == 0 { Cone::Zero } else { Cone::Nonneg };
        let mut total = 0;
        for blk in program.blocks().iter().filter(|blk| blk.cone == want) {
            push_rows(&blk.rows, &mut ii, &mut jj, &mut vv, &mut b);
            total += blk.rows.len();
        }
        if total > 0 {
            cones.push(if kind == 0 {
                SupportedConeT::ZeroConeT(total)
            } else {
                SupportedConeT::NonnegativeConeT(total)
            });
        }
    }
    for blk in program.blocks() {
        if let Cone::SecondOrder(d) = blk.cone {
            push_rows(&blk.rows, &mut ii, &mut jj, &mut vv, &mut b);
            cones.push(SupportedConeT::SecondOrderConeT(d));
        }
    }
    for blk in program.blocks() {
        if let Cone::Psd(n) = blk.cone {
            push_rows(&blk.rows, &mut ii, &mut jj, &mut vv, &mut b);
            cones.push(SupportedConeT::PSDTriangleConeT(n));
        }
    }
    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, program.num_columns(), ii, jj, vv);
    Assembled { a, b, cones }
}

impl ConicBackend for ClarabelBackend {
    fn solve(&self, program: &ConicProgram, settings: &SolverSettings) -> Solution {
        if program.validate().is_err() {
            return failed(program, SolveStatus::NumericalTrouble);
        }
        let n = program.num_columns();
        if n == 0 {
            // Nothing to optimize: feasibility of constant rows decides.
            return solve_constant(program);
        }
        let Assembled { a, b, cones } = assemble(program);
        let mut q = vec![0.0; n];
        for &(c, v) in &program.objective().normalized().terms {
            q[c] += v;
        }
        let p = CscMatrix::<f64>::zeros((n, n));
        let clarabel_settings = match DefaultSettingsBuilder::default()
            .verbose(settings.verbose)
            .max_iter(settings.max_iter)
            .tol_feas(settings.tol_feas)
            .tol_gap_abs(settings.tol_gap_abs)
            .tol_gap_rel(settings.tol_gap_rel)
            .build()
        {
            Ok(s) => s,
            Err(_) => return failed(program, SolveStatus::NumericalTrouble),
        };

        let run = catch_unwind(AssertUnwindSafe(|| {
            let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, clarabel_settings).ok()?;
            solver.solve();
            Some((
                solver.solution.status,
                solver.solution.x.clone(),
                solver.info.res_primal,
                solver.info.res_dual,
                solver.info.gap_rel.min(solver.info.gap_abs),
                solver.solution.iterations,
            ))
        }));
        let Ok(Some((status, x, res_p, res_d, gap, iterations))) = run else {
            return failed(program, SolveStatus::NumericalTrouble);
        };
        let residuals = Residuals {
            primal: res_p,
            dual: res_d,
            gap,
        };
        let accepted = |r: &Residuals| {
            r.primal <= settings.accept_tol
                && r.dual <= settings.accept_tol
                && r.gap <= settings.accept_tol
        };
        let status = match status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved if accepted(&residuals) => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            _ => SolveStatus::NumericalTrouble,
        };
        let objective = (status == SolveStatus::Optimal).then(|| program.objective().eval(&x));
        Solution {
            status,
            values: x,
            objective,
            residuals,
            iterations,
        }
    }
}

fn solve_constant(program: &ConicProgram) -> Solution {
    let tol = 1e-12;
    let feasible = program.blocks().iter().all(|blk| {
        let v: Vec<f64> = blk.rows.iter().map(|r| r.constant).collect();
        match blk.cone {
            Cone::Zero => v.iter().all(|x| x.abs() <= tol),
            Cone::Nonneg => v.iter().all(|x| *x >= -tol),
            Cone::SecondOrder(_) => v[0] + tol >= v[1..].iter().map(|x| x * x).sum::<f64>().sqrt(),
            Cone::Psd(n) => {
                let mut m = nalgebra::DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..=i {
                        let s = if i == j { 1.0 } else { super::program::SQRT2 };
                        let x = v[super::program::packed_index(i, j)] / s;
                        m[(i, j)] = x;
                        m[(j, i)] = x;
                    }
                }
                crate::linalg::min_eigenvalue(&m) >= -tol
            }
        }
    });
    if feasible {
        Solution {
            status: SolveStatus::Optimal,
            values: Vec::new(),
            objective: Some(program.objective().constant),
            residuals: Residuals::default(),
            iterations: 0,
        }
    } else {
        failed(program, SolveStatus::Infeasible)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_lower_bound() {
        let mut p = ConicProgram::new();
        let x = p.add_variable("x", 1);
        p.add_nonneg(vec![p.scalar(x) - 3.0]);
        p.set_objective(p.scalar(x));
        let s = solve(&p, &SolverSettings::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective.unwrap() - 3.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = ConicProgram::new();
        let x = p.add_variable("x", 1);
        p.add_nonneg(vec![p.scalar(x) - 3.0]);
        p.add_nonneg(vec![-p.scalar(x) + 1.0]);
        p.set_objective(p.scalar(x));
        assert_eq!(
            solve(&p, &SolverSettings::default()).status,
            SolveStatus::Infeasible
        );

        let mut p = ConicProgram::new();
        let x = p.add_variable("x", 1);
        p.add_nonneg(vec![-p.scalar(x) + 1.0]);
        p.set_objective(p.scalar(x));
        let s = solve(&p, &SolverSettings::default());
        assert_eq!(s.status, SolveStatus::Unbounded);
        assert!(s.objective.is_none());
    }
}
