//! Scalar affine expressions over the columns of a [`ConicProgram`](super::ConicProgram).

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// `sum_j coef_j * x[col_j] + constant`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn column(col: usize) -> Self {
        Self {
            terms: vec![(col, 1.0)],
            constant: 0.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn add_term(&mut self, col: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((col, coef));
        }
    }

    /// Adds `scale * other` in place.
    pub fn add_scaled(&mut self, other: &AffineExpr, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.terms
            .extend(other.terms.iter().map(|&(c, v)| (c, v * scale)));
        self.constant += scale * other.constant;
    }

    /// Merges duplicate columns, drops zero coefficients and sorts by column.
    pub fn normalized(&self) -> AffineExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (c, v) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        AffineExpr {
            terms: merged,
            constant: self.constant,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, v)| v * x[c]).sum::<f64>() + self.constant
    }

    pub fn max_column(&self) -> Option<usize> {
        self.terms.iter().map(|&(c, _)| c).max()
    }
}

impl From<f64> for AffineExpr {
    fn from(c: f64) -> Self {
        AffineExpr::constant(c)
    }
}

impl AddAssign<&AffineExpr> for AffineExpr {
    fn add_assign(&mut self, rhs: &AffineExpr) {
        self.add_scaled(rhs, 1.0);
    }
}

impl SubAssign<&AffineExpr> for AffineExpr {
    fn sub_assign(&mut self, rhs: &AffineExpr) {
        self.add_scaled(rhs, -1.0);
    }
}

impl Add<&AffineExpr> for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: &AffineExpr) -> AffineExpr {
        self += rhs;
        self
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: AffineExpr) -> AffineExpr {
        self + &rhs
    }
}

impl Sub<&AffineExpr> for AffineExpr {
    type Output = AffineExpr;
    fn sub(mut self, rhs: &AffineExpr) -> AffineExpr {
        self -= rhs;
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self - &rhs
    }
}

impl Add<f64> for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: f64) -> AffineExpr {
        self.constant += rhs;
        self
    }
}

impl Sub<f64> for AffineExpr {
    type Output = AffineExpr;
    fn sub(mut self, rhs: f64) -> AffineExpr {
        self.constant -= rhs;
        self
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(mut self, rhs: f64) -> AffineExpr {
        for t in &mut self.terms {
            t.1 *= rhs;
        }
        self.constant *= rhs;
        self
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self * -1.0
    }
}

/// Helpers on vectors of affine expressions.
pub mod vec {
    use super::AffineExpr;
    use nalgebra::{DMatrix, DVector};

    pub fn constant(v: &DVector<f64>) -> Vec<AffineExpr> {
        v.iter().map(|&c| AffineExpr::constant(c)).collect()
    }

    pub fn zeros(n: usize) -> Vec<AffineExpr> {
        vec![AffineExpr::zero(); n]
    }

    /// `M * v` for a constant matrix.
    pub fn mat_mul(m: &DMatrix<f64>, v: &[AffineExpr]) -> Vec<AffineExpr> {
        assert_eq!(m.ncols(), v.len());
        (0..m.nrows())
            .map(|i| {
                let mut e = AffineExpr::zero();
                for (j, vj) in v.iter().enumerate() {
                    e.add_scaled(vj, m[(i, j)]);
                }
                e
            })
            .collect()
    }

    /// `c . v` for a constant vector.
    pub fn dot(c: &DVector<f64>, v: &[AffineExpr]) -> AffineExpr {
        assert_eq!(c.len(), v.len());
        let mut e = AffineExpr::zero();
        for (ci, vi) in c.iter().zip(v) {
            e.add_scaled(vi, *ci);
        }
        e
    }

    pub fn add(a: &[AffineExpr], b: &[AffineExpr]) -> Vec<AffineExpr> {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x.clone() + y).collect()
    }

    pub fn sub(a: &[AffineExpr], b: &[AffineExpr]) -> Vec<AffineExpr> {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x.clone() - y).collect()
    }

    pub fn scale(a: &[AffineExpr], s: f64) -> Vec<AffineExpr> {
        a.iter().map(|x| x.clone() * s).collect()
    }
}
