//! Brute-force lower bounds and certificate checks on finite grids.
//!
//! The oracles optimize over distributions on a finite point set (the primal side),
//! so they bound the reformulated values from below without sharing their algebra.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::{exprs, solve, AffineExpr, ConicProgram, NormIndex, SolverSettings};
use crate::error::{dim_check, Error, Result};
use crate::linalg;
use crate::model::{
    evaluate_penalty, AmbiguitySpec, MgdroProblem, UncertaintyRegion, CONTAINMENT_TOL,
};
use crate::moment::MomentCertificate;
use crate::wasserstein::WassersteinCertificate;

/// Tensor grid on a box; points outside the sample space are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let g = Self {
            lower,
            upper,
            counts,
        };
        g.validate()?;
        Ok(g)
    }

    /// Same box and count in every dimension.
    pub fn cube(dim: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![count; dim])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn validate(&self) -> Result<()> {
        dim_check("grid lower bounds", self.counts.len(), self.lower.len())?;
        dim_check("grid upper bounds", self.counts.len(), self.upper.len())?;
        if self.counts.iter().any(|&c| c < 2) {
            return Err(Error::Invalid(
                "grid needs at least 2 points per dimension".into(),
            ));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Invalid(
                "grid bounds must satisfy lower < upper".into(),
            ));
        }
        Ok(())
    }

    /// Every tensor point, last coordinate fastest.
    pub fn all_points(&self) -> Vec<DVector<f64>> {
        let total: usize = self.counts.iter().product();
        let d = self.dim();
        (0..total)
            .map(|mut idx| {
                let mut p = DVector::zeros(d);
                for k in (0..d).rev() {
                    let c = self.counts[k];
                    let step = (self.upper[k] - self.lower[k]) / (c - 1) as f64;
                    p[k] = self.lower[k] + step * (idx % c) as f64;
                    idx /= c;
                }
                p
            })
            .collect()
    }

    /// Grid points inside `space`.
    pub fn points(&self, space: &UncertaintyRegion) -> Result<Vec<DVector<f64>>> {
        self.validate()?;
        dim_check("grid dimension", space.dim(), self.dim())?;
        Ok(self
            .all_points()
            .into_iter()
            .filter(|p| space.contains(p, CONTAINMENT_TOL))
            .collect())
    }
}

/// `h(x, xi) - penalty(xi)` at every point; no penalty when there are no core sets.
pub fn integrand_values(
    problem: &MgdroProblem,
    x: &DVector<f64>,
    points: &[DVector<f64>],
) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            let h = problem.objective.evaluate(x, p)?;
            let pen = if problem.core_sets.is_empty() {
                0.0
            } else {
                evaluate_penalty(&problem.core_sets, p)?
            };
            Ok(h - pen)
        })
        .collect()
}

/// Largest expectation of `values` over weights on `points` meeting the moment constraints.
pub fn grid_sup_moment(
    values: &[f64],
    points: &[DVector<f64>],
    ambiguity: &AmbiguitySpec,
) -> Result<f64> {
    let AmbiguitySpec::Moment {
        mu0,
        sigma0,
        gamma1,
        gamma2,
    } = ambiguity
    else {
        return Err(Error::Invalid(
            "grid_sup_moment needs a moment ambiguity set".into(),
        ));
    };
    dim_check("values", points.len(), values.len())?;
    if points.is_empty() {
        return Err(Error::Invalid("empty grid".into()));
    }
    let d = mu0.len();
    let mut prog = ConicProgram::new();
    let pid = prog.add_variable("p", points.len());
    let pw = prog.expr(pid);
    prog.add_nonneg(pw.clone());
    let total = pw
        .iter()
        .fold(AffineExpr::constant(-1.0), |acc, e| acc + e.clone());
    prog.add_zero(vec![total]);

    let centered: Vec<DVector<f64>> = points.iter().map(|p| p - mu0).collect();
    let mut mean = vec![AffineExpr::zero(); d];
    for (e, c) in pw.iter().zip(&centered) {
        for r in 0..d {
            mean[r].add_scaled(e, c[r]);
        }
    }
    let whitened = exprs::mat_mul(&linalg::sym_inv_sqrt(sigma0), &mean);
    prog.add_soc(AffineExpr::constant(gamma1.sqrt()), whitened);

    let mut second: Vec<Vec<AffineExpr>> = (0..d)
        .map(|r| {
            (0..d)
                .map(|s| AffineExpr::constant(gamma2 * sigma0[(r, s)]))
                .collect()
        })
        .collect();
    for (e, c) in pw.iter().zip(&centered) {
        for r in 0..d {
            for s in 0..d {
                second[r][s].add_scaled(e, -c[r] * c[s]);
            }
        }
    }
    prog.add_psd_block(&second)?;

    let mut obj = AffineExpr::zero();
    for (e, v) in pw.iter().zip(values) {
        obj.add_scaled(e, -v);
    }
    prog.set_objective(obj);
    finish(&prog)
}

/// Largest expectation of `values` over transport plans from `samples` onto `support` with budget `radius`.
pub fn finite_sup_wasserstein(
    values: &[f64],
    support: &[DVector<f64>],
    samples: &DMatrix<f64>,
    radius: f64,
    norm: NormIndex,
) -> Result<f64> {
    dim_check("values", support.len(), values.len())?;
    let n = samples.nrows();
    if n == 0 || support.is_empty() {
        return Err(Error::Invalid("need samples and support points".into()));
    }
    let l = support.len();
    let mut prog = ConicProgram::new();
    let pid = prog.add_variable("pi", n * l);
    let pi = prog.expr(pid);
    prog.add_nonneg(pi.clone());
    let mut rows = Vec::with_capacity(n);
    let mut budget = AffineExpr::constant(radius);
    let mut obj = AffineExpr::zero();
    for j in 0..n {
        let xi_hat = samples.row(j).transpose();
        let mut mass = AffineExpr::constant(-1.0 / n as f64);
        for (ell, pt) in support.iter().enumerate() {
            let e = &pi[j * l + ell];
            mass += e;
            budget.add_scaled(e, -linalg::norm((pt - &xi_hat).as_slice(), norm));
            obj.add_scaled(e, -values[ell]);
        }
        rows.push(mass);
    }
    prog.add_zero(rows);
    prog.add_nonneg(vec![budget]);
    prog.set_objective(obj);
    finish(&prog)
}

fn finish(prog: &ConicProgram) -> Result<f64> {
    let sol = solve(prog, &SolverSettings::default());
    if !sol.is_optimal() {
        return Err(Error::Solver(sol.status));
    }
    Ok(-sol.objective.unwrap_or(f64::NAN))
}

/// Dual certificate of either ambiguity family.
#[derive(Clone, Copy, Debug)]
pub enum CertificateRef<'a> {
    Moment(&'a MomentCertificate),
    Wasserstein(&'a WassersteinCertificate),
}

impl<'a> From<&'a MomentCertificate> for CertificateRef<'a> {
    fn from(c: &'a MomentCertificate) -> Self {
        CertificateRef::Moment(c)
    }
}

impl<'a> From<&'a WassersteinCertificate> for CertificateRef<'a> {
    fn from(c: &'a WassersteinCertificate) -> Self {
        CertificateRef::Wasserstein(c)
    }
}

/// Largest positive violation of the certificate's semi-infinite inequality over `points`.
///
/// Moment: `h(x, xi) - penalty(xi) <= xi'Lambda xi + q.xi + t`.
/// Wasserstein: `h(x, xi) - penalty(xi) - lambda ||xi - xi_j|| <= s_j` for every sample `j`.
pub fn max_constraint_violation<'a>(
    certificate: impl Into<CertificateRef<'a>>,
    problem: &MgdroProblem,
    x: &DVector<f64>,
    points: &[DVector<f64>],
) -> Result<f64> {
    if let Some(bad) = points
        .iter()
        .position(|p| !problem.sample_space.contains(p, CONTAINMENT_TOL))
    {
        return Err(Error::Invalid(format!(
            "grid point {bad} lies outside the sample space"
        )));
    }
    let values = integrand_values(problem, x, points)?;
    let mut worst = 0.0f64;
    match certificate.into() {
        CertificateRef::Moment(c) => {
            for (p, v) in points.iter().zip(&values) {
                let rhs = (p.transpose() * &c.lambda * p)[(0, 0)] + c.q.dot(p) + c.t;
                worst = worst.max(v - rhs);
            }
        }
        CertificateRef::Wasserstein(c) => {
            let AmbiguitySpec::Wasserstein { samples, norm, .. } = &problem.ambiguity else {
                return Err(Error::Invalid(
                    "Wasserstein certificate needs a Wasserstein problem".into(),
                ));
            };
            dim_check("certificate s", samples.nrows(), c.s.len())?;
            for j in 0..samples.nrows() {
                let xi_hat = samples.row(j).transpose();
                for (p, v) in points.iter().zip(&values) {
                    let cost = linalg::norm((p - &xi_hat).as_slice(), *norm);
                    worst = worst.max(v - c.lambda * cost - c.s[j]);
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment_1d(gamma1: f64, gamma2: f64) -> AmbiguitySpec {
        AmbiguitySpec::Moment {
            mu0: DVector::from_element(1, 0.0),
            sigma0: DMatrix::from_element(1, 1, 1.0),
            gamma1,
            gamma2,
        }
    }

    #[test]
    fn grid_drops_points_outside_space() {
        let g = GridSpec::cube(2, -1.0, 1.0, 3).unwrap();
        assert_eq!(g.all_points().len(), 9);
        let ball = UncertaintyRegion::Ellipsoid(crate::model::Ellipsoid::unit_ball(2));
        assert_eq!(g.points(&ball).unwrap().len(), 5);
        assert!(GridSpec::cube(2, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn forced_point_mass() {
        let pts = vec![DVector::from_element(1, 0.0)];
        let v = grid_sup_moment(&[3.5], &pts, &moment_1d(0.1, 2.0)).unwrap();
        assert!((v - 3.5).abs() < 1e-6);
    }

    #[test]
    fn symmetric_pair_gives_abs_bound() {
        let pts = vec![
            DVector::from_element(1, -1.0),
            DVector::from_element(1, 1.0),
        ];
        let v = grid_sup_moment(&[1.0, 1.0], &pts, &moment_1d(0.0, 1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coarse_grid_can_be_infeasible() {
        let pts = vec![DVector::from_element(1, 5.0)];
        assert!(grid_sup_moment(&[1.0], &pts, &moment_1d(0.0, 1.0)).is_err());
    }

    #[test]
    fn wasserstein_limits() {
        let samples = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let support: Vec<_> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&s| DVector::from_element(1, s))
            .collect();
        let vals = [1.0, 3.0, 10.0];
        let zero = finite_sup_wasserstein(&vals, &support, &samples, 0.0, NormIndex::Two).unwrap();
        assert!((zero - 2.0).abs() < 1e-6);
        let huge = finite_sup_wasserstein(&vals, &support, &samples, 1e3, NormIndex::Two).unwrap();
        assert!((huge - 10.0).abs() < 1e-5);
        // Budget 0.5 carries the second sample's whole mass from 1 to 2.
        let half = finite_sup_wasserstein(&vals, &support, &samples, 0.5, NormIndex::Two).unwrap();
        assert!((half - 5.5).abs() < 1e-6);
    }
}
