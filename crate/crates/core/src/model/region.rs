use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::serde_mat;
use crate::conic::NormIndex;
use crate::conic::{exprs, solve, AffineExpr, ConicProgram, SolverSettings};
use crate::conjugate::{support_value, Extended, PrimitiveSet};
use crate::error::{dim_check, Error, Result};
use crate::linalg;

/// Absolute tolerance on the constraint residual of an ellipsoid projection.
pub const PROJECTION_TOL: f64 = 1e-10;

#[derive(Serialize, Deserialize)]
struct EllipsoidRaw {
    #[serde(with = "serde_mat::vector")]
    center: DVector<f64>,
    #[serde(with = "serde_mat::matrix")]
    shape: DMatrix<f64>,
    radius_sq: f64,
}

/// `{ xi : (xi - center)^T shape^{-1} (xi - center) <= radius_sq }`
/// `= { center + shape^{1/2} zeta : ||zeta||_2 <= sqrt(radius_sq) }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EllipsoidRaw", into = "EllipsoidRaw")]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    radius_sq: f64,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    sqrt_shape: DMatrix<f64>,
    inv_sqrt_shape: DMatrix<f64>,
}

impl TryFrom<EllipsoidRaw> for Ellipsoid {
    type Error = Error;
    fn try_from(r: EllipsoidRaw) -> Result<Self> {
        Ellipsoid::new(r.center, r.shape, r.radius_sq)
    }
}

impl From<Ellipsoid> for EllipsoidRaw {
    fn from(e: Ellipsoid) -> Self {
        EllipsoidRaw {
            center: e.center,
            shape: e.shape,
            radius_sq: e.radius_sq,
        }
    }
}

impl Ellipsoid {
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>, radius_sq: f64) -> Result<Self> {
        dim_check("ellipsoid shape rows", center.len(), shape.nrows())?;
        dim_check("ellipsoid shape cols", center.len(), shape.ncols())?;
        if !(radius_sq >= 0.0) || !radius_sq.is_finite() {
            return Err(Error::Invalid(format!(
                "ellipsoid radius^2 must be >= 0, got {radius_sq}"
            )));
        }
        linalg::require_spd(&shape, "ellipsoid shape")?;
        let shape = (&shape + shape.transpose()) * 0.5;
        let eig = SymmetricEigen::new(shape.clone());
        Ok(Self {
            sqrt_shape: linalg::sym_sqrt(&shape),
            inv_sqrt_shape: linalg::sym_inv_sqrt(&shape),
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            center,
            shape,
            radius_sq,
        })
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::new(DVector::zeros(dim), DMatrix::identity(dim, dim), 1.0).expect("valid ball")
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }
    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }
    pub fn radius_sq(&self) -> f64 {
        self.radius_sq
    }
    pub fn sqrt_shape(&self) -> &DMatrix<f64> {
        &self.sqrt_shape
    }
    pub fn inv_sqrt_shape(&self) -> &DMatrix<f64> {
        &self.inv_sqrt_shape
    }

    /// Squared Mahalanobis distance of `x` from the center.
    pub fn level(&self, x: &DVector<f64>) -> f64 {
        let z = self.eigenvectors.transpose() * (x - &self.center);
        z.iter()
            .zip(self.eigenvalues.iter())
            .map(|(zi, di)| zi * zi / di)
            .sum()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.level(x) <= self.radius_sq + tol * (1.0 + self.radius_sq)
    }

    /// Largest value of `self.level` over another ellipsoid (an S-lemma semidefinite program).
    pub fn max_level_over(&self, inner: &Ellipsoid) -> Result<f64> {
        dim_check("ellipsoid dimension", self.dim(), inner.dim())?;
        max_level_over_ellipsoid(self, inner)
    }

    /// Euclidean projection of `point` onto the ellipsoid.
    ///
    /// In the eigenbasis of the shape matrix the minimizer is
    /// `w_i = z_i d_i / (d_i + lambda)` where `lambda >= 0` solves the secular
    /// equation `sum d_i z_i^2 / (d_i + lambda)^2 = radius_sq`. The root is
    /// bracketed and refined by safeguarded Newton steps, always returning
    /// a point on the feasible side.
    pub fn project(&self, point: &DVector<f64>) -> DVector<f64> {
        if self.level(point) <= self.radius_sq {
            return point.clone();
        }
        if self.radius_sq == 0.0 {
            return self.center.clone();
        }
        let z = self.eigenvectors.transpose() * (point - &self.center);
        let d = &self.eigenvalues;
        let gamma = self.radius_sq;
        let secular = |lam: f64| -> (f64, f64) {
            let mut f = -gamma;
            let mut df = 0.0;
            for (zi, di) in z.iter().zip(d.iter()) {
                let den = di + lam;
                f += di * zi * zi / (den * den);
                df -= 2.0 * di * zi * zi / (den * den * den);
            }
            (f, df)
        };
        let weighted: f64 = z.iter().zip(d.iter()).map(|(zi, di)| di * zi * zi).sum();
        let mut lo = 0.0_f64;
        let mut hi = (weighted / gamma).sqrt().max(f64::MIN_POSITIVE);
        while secular(hi).0 > 0.0 {
            hi *= 2.0;
        }
        let mut lam = hi;
        for _ in 0..200 {
            let (f, df) = secular(lam);
            if f > 0.0 {
                lo = lam;
            } else {
                hi = lam;
                if -f <= PROJECTION_TOL * 0.5 {
                    break;
                }
            }
            let newton = lam - f / df;
            lam = if newton > lo && newton < hi && df < 0.0 {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        // hi is always on the feasible side.
        let w = DVector::from_iterator(
            z.len(),
            z.iter().zip(d.iter()).map(|(zi, di)| zi * di / (di + hi)),
        );
        &self.center + &self.eigenvectors * w
    }
}

/// `{ xi : C (xi - anchor) <= d }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    #[serde(with = "serde_mat::matrix")]
    pub matrix: DMatrix<f64>,
    #[serde(with = "serde_mat::vector")]
    pub rhs: DVector<f64>,
    #[serde(with = "serde_mat::vector")]
    pub anchor: DVector<f64>,
}

impl Polyhedron {
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>, anchor: DVector<f64>) -> Result<Self> {
        dim_check("polyhedron rhs", matrix.nrows(), rhs.len())?;
        dim_check("polyhedron anchor", matrix.ncols(), anchor.len())?;
        Ok(Self {
            matrix,
            rhs,
            anchor,
        })
    }

    /// Axis-aligned box `lower <= xi <= upper`.
    pub fn boxed(lower: &DVector<f64>, upper: &DVector<f64>) -> Result<Self> {
        dim_check("box bounds", lower.len(), upper.len())?;
        let p = lower.len();
        let mut c = DMatrix::zeros(2 * p, p);
        let mut d = DVector::zeros(2 * p);
        for i in 0..p {
            c[(2 * i, i)] = 1.0;
            d[2 * i] = upper[i];
            c[(2 * i + 1, i)] = -1.0;
            d[2 * i + 1] = -lower[i];
        }
        Self::new(c, d, DVector::zeros(p))
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let r = &self.matrix * (x - &self.anchor) - &self.rhs;
        r.iter()
            .zip(self.rhs.iter())
            .all(|(ri, di)| *ri <= tol * (1.0 + di.abs()))
    }

    /// Enumerates vertices by solving every square row subsystem.
    pub fn vertices(&self, tol: f64) -> Vec<DVector<f64>> {
        let p = self.dim();
        let r = self.matrix.nrows();
        let mut out: Vec<DVector<f64>> = Vec::new();
        let mut idx: Vec<usize> = (0..p).collect();
        if p == 0 || r < p {
            return out;
        }
        loop {
            let sub = DMatrix::from_fn(p, p, |i, j| self.matrix[(idx[i], j)]);
            let rhs = DVector::from_fn(p, |i, _| self.rhs[idx[i]]);
            if let Some(y) = sub.lu().solve(&rhs) {
                let x = &y + &self.anchor;
                if y.iter().all(|v| v.is_finite())
                    && self.contains(&x, tol)
                    && !out
                        .iter()
                        .any(|o| (o - &x).amax() <= tol * (1.0 + x.amax()))
                {
                    out.push(x);
                }
            }
            // next combination
            let mut k = p;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if idx[k] < r - p + k {
                    idx[k] += 1;
                    for l in k + 1..p {
                        idx[l] = idx[l - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

/// A sample space or core set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum UncertaintyRegion {
    Ellipsoid(Ellipsoid),
    Polyhedron(Polyhedron),
    FullSpace { dim: usize },
}

impl UncertaintyRegion {
    pub fn dim(&self) -> usize {
        match self {
            UncertaintyRegion::Ellipsoid(e) => e.dim(),
            UncertaintyRegion::Polyhedron(p) => p.dim(),
            UncertaintyRegion::FullSpace { dim } => *dim,
        }
    }

    pub fn is_full_space(&self) -> bool {
        matches!(self, UncertaintyRegion::FullSpace { .. })
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        match self {
            UncertaintyRegion::Ellipsoid(e) => e.contains(x, tol),
            UncertaintyRegion::Polyhedron(p) => p.contains(x, tol),
            UncertaintyRegion::FullSpace { .. } => true,
        }
    }

    /// Decomposition `center + A zeta, zeta ∈ Z` of the region.
    pub fn primitive(&self) -> (DVector<f64>, DMatrix<f64>, PrimitiveSet) {
        match self {
            UncertaintyRegion::Ellipsoid(e) => (
                e.center.clone(),
                e.sqrt_shape.clone(),
                PrimitiveSet::Ball {
                    norm: NormIndex::Two,
                    radius_sq: e.radius_sq,
                    dim: e.dim(),
                },
            ),
            UncertaintyRegion::Polyhedron(p) => (
                p.anchor.clone(),
                DMatrix::identity(p.dim(), p.dim()),
                PrimitiveSet::Polyhedron {
                    matrix: p.matrix.clone(),
                    rhs: p.rhs.clone(),
                },
            ),
            UncertaintyRegion::FullSpace { dim } => (
                DVector::zeros(*dim),
                DMatrix::identity(*dim, *dim),
                PrimitiveSet::FullSpace { dim: *dim },
            ),
        }
    }

    /// Support function `sup { u . xi : xi in region }`.
    pub fn support(&self, u: &DVector<f64>) -> Result<Extended> {
        dim_check("support direction", self.dim(), u.len())?;
        if let UncertaintyRegion::Ellipsoid(e) = self {
            let au = e.sqrt_shape.transpose() * u;
            return Ok(Extended::Finite(
                e.center.dot(u) + e.radius_sq.sqrt() * au.norm(),
            ));
        }
        let (center, a, set) = self.primitive();
        Ok(match support_value(&set, &(a.transpose() * u))? {
            Extended::Finite(v) => Extended::Finite(v + center.dot(u)),
            Extended::Infinite => Extended::Infinite,
        })
    }

    /// Appends constraints forcing `point` (affine expressions) into the region.
    pub fn emit_membership(&self, program: &mut ConicProgram, point: &[AffineExpr]) -> Result<()> {
        dim_check("membership point", self.dim(), point.len())?;
        match self {
            UncertaintyRegion::Ellipsoid(e) => {
                let shifted = exprs::sub(point, &exprs::constant(&e.center));
                let tail = exprs::mat_mul(&e.inv_sqrt_shape, &shifted);
                program.add_soc(AffineExpr::constant(e.radius_sq.sqrt()), tail);
            }
            UncertaintyRegion::Polyhedron(p) => {
                let shifted = exprs::sub(point, &exprs::constant(&p.anchor));
                let lhs = exprs::mat_mul(&p.matrix, &shifted);
                let rows = lhs
                    .into_iter()
                    .zip(p.rhs.iter())
                    .map(|(l, d)| AffineExpr::constant(*d) - l)
                    .collect();
                program.add_nonneg(rows);
            }
            UncertaintyRegion::FullSpace { .. } => {}
        }
        Ok(())
    }

    /// True when the region is compact.
    pub fn is_bounded(&self) -> Result<bool> {
        match self {
            UncertaintyRegion::Ellipsoid(_) => Ok(true),
            UncertaintyRegion::FullSpace { dim } => Ok(*dim == 0),
            UncertaintyRegion::Polyhedron(p) => {
                for i in 0..p.dim() {
                    for s in [1.0, -1.0] {
                        let mut u = DVector::zeros(p.dim());
                        u[i] = s;
                        if self.support(&u)?.is_infinite() {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
        }
    }

    /// Tests `self ⊆ outer` by maximizing the defining forms of `outer` over `self`.
    pub fn contained_in(&self, outer: &UncertaintyRegion, tol: f64) -> Result<bool> {
        dim_check("containment dimension", outer.dim(), self.dim())?;
        match outer {
            UncertaintyRegion::FullSpace { .. } => Ok(true),
            UncertaintyRegion::Polyhedron(op) => {
                for r in 0..op.matrix.nrows() {
                    let row = op.matrix.row(r).transpose();
                    let limit = op.rhs[r] + row.dot(&op.anchor);
                    match self.support(&row)? {
                        Extended::Infinite => return Ok(false),
                        Extended::Finite(v) => {
                            if v > limit + tol * (1.0 + limit.abs()) {
                                return Ok(false);
                            }
                        }
                    }
                }
                Ok(true)
            }
            UncertaintyRegion::Ellipsoid(oe) => match self {
                UncertaintyRegion::FullSpace { .. } => Ok(self.dim() == 0),
                UncertaintyRegion::Polyhedron(ip) => {
                    if !self.is_bounded()? {
                        return Ok(false);
                    }
                    Ok(ip.vertices(1e-9).iter().all(|v| oe.contains(v, tol)))
                }
                UncertaintyRegion::Ellipsoid(ie) => {
                    let worst = max_level_over_ellipsoid(oe, ie)?;
                    Ok(worst <= oe.radius_sq + tol * (1.0 + oe.radius_sq))
                }
            },
        }
    }
}

/// `max { level_outer(xi) : xi in inner }` through its exact S-lemma semidefinite program.
fn max_level_over_ellipsoid(outer: &Ellipsoid, inner: &Ellipsoid) -> Result<f64> {
    let p = outer.dim();
    let b = &inner.sqrt_shape * inner.radius_sq.sqrt();
    let g = &outer.inv_sqrt_shape * b;
    let e = &outer.inv_sqrt_shape * (&inner.center - &outer.center);
    let gtg = g.transpose() * &g;
    let gte = g.transpose() * &e;
    let ete = e.norm_squared();

    let mut prog = ConicProgram::new();
    let s = prog.add_variable("s", 1);
    let tau = prog.add_variable("tau", 1);
    let s_e = prog.scalar(s);
    let tau_e = prog.scalar(tau);
    prog.add_nonneg(vec![tau_e.clone()]);
    let mut m = vec![vec![AffineExpr::zero(); p + 1]; p + 1];
    for i in 0..p {
        for j in 0..p {
            let mut entry = AffineExpr::constant(-gtg[(i, j)]);
            if i == j {
                entry += &tau_e;
            }
            m[i][j] = entry;
        }
        m[i][p] = AffineExpr::constant(-gte[i]);
        m[p][i] = AffineExpr::constant(-gte[i]);
    }
    m[p][p] = s_e.clone() - &tau_e - ete;
    prog.add_psd_block(&m)?;
    prog.set_objective(s_e);
    let sol = solve(&prog, &SolverSettings::default());
    sol.objective.ok_or(Error::Solver(sol.status))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn projection_cases() {
        let ball = Ellipsoid::unit_ball(2);
        let inside = dv(&[0.3, -0.2]);
        assert_eq!(ball.project(&inside), inside);
        let p = ball.project(&dv(&[2.0, 0.0]));
        assert!((p - dv(&[1.0, 0.0])).amax() < 1e-9);

        let e = Ellipsoid::new(
            DVector::zeros(2),
            DMatrix::from_diagonal(&dv(&[4.0, 1.0])),
            1.0,
        )
        .unwrap();
        let p = e.project(&dv(&[4.0, 0.0]));
        assert!((&p - dv(&[2.0, 0.0])).amax() < 1e-9);
        assert!(e.level(&p) <= 1.0 + PROJECTION_TOL);
    }

    #[test]
    fn box_vertices() {
        let b = Polyhedron::boxed(&dv(&[0.0, 0.0]), &dv(&[1.0, 2.0])).unwrap();
        assert_eq!(b.vertices(1e-9).len(), 4);
    }

    #[test]
    fn ellipsoid_containment() {
        let outer = UncertaintyRegion::Ellipsoid(
            Ellipsoid::new(DVector::zeros(2), DMatrix::identity(2, 2), 4.0).unwrap(),
        );
        let small = UncertaintyRegion::Ellipsoid(
            Ellipsoid::new(dv(&[0.5, 0.0]), DMatrix::identity(2, 2), 1.0).unwrap(),
        );
        let shifted = UncertaintyRegion::Ellipsoid(
            Ellipsoid::new(dv(&[1.5, 0.0]), DMatrix::identity(2, 2), 1.0).unwrap(),
        );
        assert!(small.contained_in(&outer, 1e-7).unwrap());
        assert!(!shifted.contained_in(&outer, 1e-7).unwrap());
        assert!(outer.contained_in(&outer, 1e-7).unwrap());
    }

    #[test]
    fn polyhedron_in_ellipsoid() {
        let outer = UncertaintyRegion::Ellipsoid(Ellipsoid::unit_ball(2));
        let inner = UncertaintyRegion::Polyhedron(
            Polyhedron::boxed(&dv(&[-0.7, -0.7]), &dv(&[0.7, 0.7])).unwrap(),
        );
        assert!(inner.contained_in(&outer, 1e-7).unwrap());
        let big = UncertaintyRegion::Polyhedron(
            Polyhedron::boxed(&dv(&[-0.8, -0.8]), &dv(&[0.8, 0.8])).unwrap(),
        );
        assert!(!big.contained_in(&outer, 1e-7).unwrap());
    }
}
