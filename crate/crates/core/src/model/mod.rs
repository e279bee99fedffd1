//! Problem data model: objective pieces, regions, core sets, ambiguity sets.

mod penalty;
mod region;
pub(crate) mod serde_mat;

pub use penalty::{distance_to_region, evaluate_penalty};
pub use region::{Ellipsoid, Polyhedron, UncertaintyRegion, PROJECTION_TOL};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::NormIndex;
use crate::error::{dim_check, Error, Result};

/// Tolerance used when checking that core sets and samples lie in the sample space.
pub const CONTAINMENT_TOL: f64 = 1e-7;

pub fn project_onto_ellipsoid(point: &DVector<f64>, e: &Ellipsoid) -> DVector<f64> {
    e.project(point)
}

/// One affine piece `a(x) = G x + g`, `b(x) = c.x + d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    #[serde(with = "serde_mat::matrix")]
    pub slope_matrix: DMatrix<f64>,
    #[serde(with = "serde_mat::vector")]
    pub slope_offset: DVector<f64>,
    #[serde(with = "serde_mat::vector")]
    pub intercept_coef: DVector<f64>,
    pub intercept_offset: f64,
}

impl AffinePiece {
    /// A piece whose slope in xi does not depend on x.
    pub fn with_constant_slope(
        slope: DVector<f64>,
        intercept_coef: DVector<f64>,
        intercept_offset: f64,
    ) -> Self {
        Self {
            slope_matrix: DMatrix::zeros(slope.len(), intercept_coef.len()),
            slope_offset: slope,
            intercept_coef,
            intercept_offset,
        }
    }

    pub fn slope(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.slope_matrix * x + &self.slope_offset
    }

    pub fn intercept(&self, x: &DVector<f64>) -> f64 {
        self.intercept_coef.dot(x) + self.intercept_offset
    }
}

/// `h(x, xi) = max_k a_k(x).xi + b_k(x)`, with the overall objective
/// `outer_linear.x + outer_scale * sup_P E_P[h - penalty]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearObjective {
    pub decision_dim: usize,
    pub uncertainty_dim: usize,
    pub pieces: Vec<AffinePiece>,
    #[serde(with = "serde_mat::vector")]
    pub outer_linear: DVector<f64>,
    pub outer_scale: f64,
}

impl PiecewiseLinearObjective {
    /// Objective with no outer term and unit scale.
    pub fn plain(
        decision_dim: usize,
        uncertainty_dim: usize,
        pieces: Vec<AffinePiece>,
    ) -> Result<Self> {
        let obj = Self {
            decision_dim,
            uncertainty_dim,
            pieces,
            outer_linear: DVector::zeros(decision_dim),
            outer_scale: 1.0,
        };
        obj.validate()?;
        Ok(obj)
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.pieces.is_empty() {
            return Err(Error::Invalid("objective needs at least one piece".into()));
        }
        if !(self.outer_scale > 0.0) || !self.outer_scale.is_finite() {
            return Err(Error::Invalid(format!(
                "outer_scale must be > 0, got {}",
                self.outer_scale
            )));
        }
        dim_check("outer_linear", self.decision_dim, self.outer_linear.len())?;
        for (k, pc) in self.pieces.iter().enumerate() {
            let ctx = |s: &str| format!("piece {k} {s}");
            dim_check(
                &ctx("slope rows"),
                self.uncertainty_dim,
                pc.slope_matrix.nrows(),
            )?;
            dim_check(
                &ctx("slope cols"),
                self.decision_dim,
                pc.slope_matrix.ncols(),
            )?;
            dim_check(
                &ctx("slope offset"),
                self.uncertainty_dim,
                pc.slope_offset.len(),
            )?;
            dim_check(
                &ctx("intercept coef"),
                self.decision_dim,
                pc.intercept_coef.len(),
            )?;
        }
        Ok(())
    }

    /// The inner function `h(x, xi)` (no outer term, no scaling).
    pub fn evaluate(&self, x: &DVector<f64>, xi: &DVector<f64>) -> Result<f64> {
        dim_check("decision", self.decision_dim, x.len())?;
        dim_check("uncertainty", self.uncertainty_dim, xi.len())?;
        Ok(self
            .pieces
            .iter()
            .map(|pc| pc.slope(x).dot(xi) + pc.intercept(x))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

pub fn evaluate_piecewise(
    obj: &PiecewiseLinearObjective,
    x: &DVector<f64>,
    xi: &DVector<f64>,
) -> Result<f64> {
    obj.evaluate(x, xi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub norm: NormIndex,
    pub power: u8,
}

impl DistanceSpec {
    pub fn new(norm: NormIndex, power: u8) -> Result<Self> {
        let d = Self { norm, power };
        d.validate()?;
        Ok(d)
    }

    pub fn euclidean() -> Self {
        Self {
            norm: NormIndex::Two,
            power: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.power {
            1 | 2 => Ok(()),
            p => Err(Error::Unsupported(format!(
                "distance power {p} (only 1 or 2)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreSetSpec {
    pub region: UncertaintyRegion,
    pub theta: f64,
    pub distance: DistanceSpec,
}

impl CoreSetSpec {
    pub fn new(region: UncertaintyRegion, theta: f64, distance: DistanceSpec) -> Result<Self> {
        let c = Self {
            region,
            theta,
            distance,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::Invalid(format!(
                "core set theta must be > 0, got {}",
                self.theta
            )));
        }
        self.distance.validate()?;
        if !self.region.is_bounded()? {
            return Err(Error::Invalid("core set region must be compact".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AmbiguitySpec {
    Moment {
        #[serde(with = "serde_mat::vector")]
        mu0: DVector<f64>,
        #[serde(with = "serde_mat::matrix")]
        sigma0: DMatrix<f64>,
        gamma1: f64,
        gamma2: f64,
    },
    Wasserstein {
        /// One sample per row.
        #[serde(with = "serde_mat::matrix")]
        samples: DMatrix<f64>,
        radius: f64,
        norm: NormIndex,
    },
}

impl AmbiguitySpec {
    pub fn dim(&self) -> usize {
        match self {
            AmbiguitySpec::Moment { mu0, .. } => mu0.len(),
            AmbiguitySpec::Wasserstein { samples, .. } => samples.ncols(),
        }
    }
}

/// Linear constraints `matrix * x <= rhs` on the extended decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraints {
    #[serde(with = "serde_mat::matrix")]
    pub matrix: DMatrix<f64>,
    #[serde(with = "serde_mat::vector")]
    pub rhs: DVector<f64>,
}

impl LinearConstraints {
    pub fn unconstrained(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(0, dim),
            rhs: DVector::zeros(0),
        }
    }

    /// `x_i >= 0` for every listed coordinate.
    pub fn nonnegative(dim: usize, coords: &[usize]) -> Self {
        let mut m = DMatrix::zeros(coords.len(), dim);
        for (r, &c) in coords.iter().enumerate() {
            m[(r, c)] = -1.0;
        }
        Self {
            matrix: m,
            rhs: DVector::zeros(coords.len()),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (&self.matrix * x - &self.rhs).iter().all(|v| *v <= tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgdroProblem {
    pub objective: PiecewiseLinearObjective,
    pub feasible_set: LinearConstraints,
    pub sample_space: UncertaintyRegion,
    pub core_sets: Vec<CoreSetSpec>,
    pub ambiguity: AmbiguitySpec,
}

impl MgdroProblem {
    pub fn decision_dim(&self) -> usize {
        self.objective.decision_dim
    }

    pub fn uncertainty_dim(&self) -> usize {
        self.objective.uncertainty_dim
    }

    /// Dimension and parameter checks that need no optimization.
    pub fn validate_structure(&self) -> Result<()> {
        self.objective.validate()?;
        let n = self.decision_dim();
        let p = self.uncertainty_dim();
        dim_check("feasible set columns", n, self.feasible_set.matrix.ncols())?;
        dim_check(
            "feasible set rhs",
            self.feasible_set.matrix.nrows(),
            self.feasible_set.rhs.len(),
        )?;
        dim_check("sample space", p, self.sample_space.dim())?;
        dim_check("ambiguity", p, self.ambiguity.dim())?;
        for c in &self.core_sets {
            dim_check("core set", p, c.region.dim())?;
            if !(c.theta > 0.0) || !c.theta.is_finite() {
                return Err(Error::Invalid(format!(
                    "core set theta must be > 0, got {}",
                    c.theta
                )));
            }
            c.distance.validate()?;
        }
        match &self.ambiguity {
            AmbiguitySpec::Moment {
                sigma0,
                gamma1,
                gamma2,
                ..
            } => {
                dim_check("sigma0 rows", p, sigma0.nrows())?;
                dim_check("sigma0 cols", p, sigma0.ncols())?;
                if !(*gamma1 >= 0.0) {
                    return Err(Error::Invalid(format!("gamma1 must be >= 0, got {gamma1}")));
                }
                if !(*gamma2 >= 1.0) {
                    return Err(Error::Invalid(format!("gamma2 must be >= 1, got {gamma2}")));
                }
                crate::linalg::require_spd(sigma0, "sigma0")?;
            }
            AmbiguitySpec::Wasserstein {
                samples, radius, ..
            } => {
                if samples.nrows() == 0 {
                    return Err(Error::Invalid("Wasserstein ambiguity needs samples".into()));
                }
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::Invalid(format!("radius must be >= 0, got {radius}")));
                }
            }
        }
        Ok(())
    }

    /// Full validation, including compactness and containment tests.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        for (i, c) in self.core_sets.iter().enumerate() {
            c.validate()?;
            if !c.region.contained_in(&self.sample_space, CONTAINMENT_TOL)? {
                return Err(Error::NotContained { index: i });
            }
        }
        if let AmbiguitySpec::Wasserstein { samples, .. } = &self.ambiguity {
            for j in 0..samples.nrows() {
                let s = samples.row(j).transpose();
                if !self.sample_space.contains(&s, CONTAINMENT_TOL) {
                    return Err(Error::Invalid(format!(
                        "sample {j} lies outside the sample space"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Recovers the worst-case expectation from a full objective value.
    pub fn inner_value(&self, objective: f64, x: &DVector<f64>) -> f64 {
        (objective - self.objective.outer_linear.dot(x)) / self.objective.outer_scale
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate_structure()?;
        Ok(p)
    }
}
