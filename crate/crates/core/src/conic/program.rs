use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::AffineExpr;
use crate::error::{Error, Result};

/// Norm index `q` of an `l_q` norm. Only the SDP-representable indices exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormIndex {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl NormIndex {
    /// Hölder conjugate: `1/q1 + 1/q2 = 1`.
    pub fn dual(self) -> NormIndex {
        match self {
            NormIndex::One => NormIndex::Inf,
            NormIndex::Two => NormIndex::Two,
            NormIndex::Inf => NormIndex::One,
        }
    }

    /// Parses `1`, `2`, `inf`/`infinity`.
    pub fn parse(s: &str) -> Result<NormIndex> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(NormIndex::One),
            "2" => Ok(NormIndex::Two),
            "inf" | "infinity" | "∞" => Ok(NormIndex::Inf),
            other => Err(Error::Unsupported(format!("norm index {other}"))),
        }
    }
}

impl fmt::Display for NormIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormIndex::One => "1",
            NormIndex::Two => "2",
            NormIndex::Inf => "inf",
        })
    }
}

/// Cone tag of a constraint block. A block with rows `e` means `e ∈ K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    /// `e = 0`
    Zero,
    /// `e >= 0`
    Nonneg,
    /// `e[0] >= ||e[1..]||_2`, total dimension stored.
    SecondOrder(usize),
    /// Symmetric matrix of the given order, packed lower-triangular row-major
    /// with off-diagonal entries scaled by `sqrt(2)` (inner-product preserving).
    Psd(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintHandle(pub usize);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBlock {
    pub cone: Cone,
    pub rows: Vec<AffineExpr>,
    /// Free-form section tag, used by dumps and structural audits.
    #[serde(default)]
    pub section: String,
}

/// Solver-agnostic conic program: minimize `objective` subject to blocks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    variables: Vec<Variable>,
    num_columns: usize,
    objective: AffineExpr,
    blocks: Vec<ConstraintBlock>,
    #[serde(skip)]
    section: String,
    #[serde(skip)]
    by_name: HashMap<String, VarId>,
}

pub(crate) const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Number of packed entries of a symmetric matrix of order `n`.
pub fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Index of `(i, j)` with `i >= j` in the packed lower-triangular row-major layout.
pub fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tags every block added from now on.
    pub fn begin_section(&mut self, name: &str) {
        self.section = name.to_string();
    }

    pub fn add_variable(&mut self, name: impl Into<String>, len: usize) -> VarId {
        let name = name.into();
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            name: name.clone(),
            start: self.num_columns,
            len,
        });
        self.num_columns += len;
        self.by_name.insert(name, id);
        id
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        if let Some(id) = self.by_name.get(name) {
            return Some(*id);
        }
        // Deserialized programs have no index.
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(VarId)
    }

    pub fn num_columns(&self) -> usize {
        self.num_columns
    }

    /// All entries of a variable as expressions.
    pub fn expr(&self, id: VarId) -> Vec<AffineExpr> {
        let v = &self.variables[id.0];
        (v.start..v.start + v.len).map(AffineExpr::column).collect()
    }

    /// First entry of a variable.
    pub fn scalar(&self, id: VarId) -> AffineExpr {
        AffineExpr::column(self.variables[id.0].start)
    }

    /// Full symmetric matrix view of a variable holding packed lower-triangular entries.
    pub fn sym_matrix(&self, id: VarId, order: usize) -> Vec<Vec<AffineExpr>> {
        let v = &self.variables[id.0];
        assert_eq!(
            v.len,
            packed_len(order),
            "variable is not a packed symmetric matrix"
        );
        (0..order)
            .map(|i| {
                (0..order)
                    .map(|j| AffineExpr::column(v.start + packed_index(i, j)))
                    .collect()
            })
            .collect()
    }

    pub fn objective(&self) -> &AffineExpr {
        &self.objective
    }

    pub fn set_objective(&mut self, objective: AffineExpr) {
        self.objective = objective;
    }

    pub fn blocks(&self) -> &[ConstraintBlock] {
        &self.blocks
    }

    fn push(&mut self, cone: Cone, rows: Vec<AffineExpr>) -> ConstraintHandle {
        self.blocks.push(ConstraintBlock {
            cone,
            rows,
            section: self.section.clone(),
        });
        ConstraintHandle(self.blocks.len() - 1)
    }

    pub fn add_zero(&mut self, rows: Vec<AffineExpr>) -> ConstraintHandle {
        self.push(Cone::Zero, rows)
    }

    pub fn add_nonneg(&mut self, rows: Vec<AffineExpr>) -> ConstraintHandle {
        self.push(Cone::Nonneg, rows)
    }

    /// `head >= ||tail||_2`.
    pub fn add_soc(&mut self, head: AffineExpr, tail: Vec<AffineExpr>) -> ConstraintHandle {
        let mut rows = Vec::with_capacity(tail.len() + 1);
        rows.push(head);
        rows.extend(tail);
        let dim = rows.len();
        self.push(Cone::SecondOrder(dim), rows)
    }

    /// `||x||_2^2 <= 2 y z`, `y, z >= 0`, as a standard second-order cone.
    pub fn add_rotated_soc(
        &mut self,
        y: AffineExpr,
        z: AffineExpr,
        x: Vec<AffineExpr>,
    ) -> ConstraintHandle {
        let head = (y.clone() + &z) * (1.0 / SQRT2);
        let mut tail = vec![(y - z) * (1.0 / SQRT2)];
        tail.extend(x);
        self.add_soc(head, tail)
    }

    /// Appends `M ⪰ 0` for a symmetric matrix of affine expressions.
    pub fn add_psd_block(&mut self, m: &[Vec<AffineExpr>]) -> Result<ConstraintHandle> {
        let n = m.len();
        if n == 0 || m.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(
                "PSD block must be a nonempty square matrix".into(),
            ));
        }
        let mut rows = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in 0..=i {
                let lower = m[i][j].normalized();
                if i != j {
                    if lower != m[j][i].normalized() {
                        return Err(Error::Invalid(format!(
                            "PSD block is not symmetric at ({i}, {j})"
                        )));
                    }
                    rows.push(lower * SQRT2);
                } else {
                    rows.push(lower);
                }
            }
        }
        Ok(self.push(Cone::Psd(n), rows))
    }

    /// Appends constraints encoding `||expr||_q <= bound`.
    ///
    /// `q = 2` is one second-order cone, `q = inf` is `2 dim` nonnegative rows and
    /// `q = 1` introduces one auxiliary bound per coordinate.
    pub fn add_norm_epigraph(
        &mut self,
        expr: &[AffineExpr],
        q: NormIndex,
        bound: AffineExpr,
    ) -> Vec<ConstraintHandle> {
        match q {
            NormIndex::Two => vec![self.add_soc(bound, expr.to_vec())],
            NormIndex::Inf => {
                let mut rows = Vec::with_capacity(2 * expr.len());
                for e in expr {
                    rows.push(bound.clone() - e);
                    rows.push(bound.clone() + e);
                }
                vec![self.add_nonneg(rows)]
            }
            NormIndex::One => {
                let aux =
                    self.add_variable(format!("norm1_aux#{}", self.variables.len()), expr.len());
                let t = self.expr(aux);
                let mut rows = Vec::with_capacity(2 * expr.len() + 1);
                for (e, ti) in expr.iter().zip(&t) {
                    rows.push(ti.clone() - e);
                    rows.push(ti.clone() + e);
                }
                let mut total = bound;
                for ti in &t {
                    total -= ti;
                }
                rows.push(total);
                vec![self.add_nonneg(rows)]
            }
        }
    }

    /// Checks that every referenced column exists and cone dimensions are consistent.
    pub fn validate(&self) -> Result<()> {
        let check = |e: &AffineExpr| -> Result<()> {
            match e.max_column() {
                Some(c) if c >= self.num_columns => Err(Error::Invalid(format!(
                    "expression references unknown column {c}"
                ))),
                _ => Ok(()),
            }
        };
        check(&self.objective)?;
        for (b, block) in self.blocks.iter().enumerate() {
            for row in &block.rows {
                check(row)?;
            }
            let ok = match block.cone {
                Cone::Zero | Cone::Nonneg => true,
                Cone::SecondOrder(d) => d >= 1 && d == block.rows.len(),
                Cone::Psd(n) => n >= 1 && packed_len(n) == block.rows.len(),
            };
            if !ok {
                return Err(Error::Invalid(format!(
                    "block {b} has inconsistent cone dimension"
                )));
            }
        }
        Ok(())
    }

    /// Number of blocks matching a predicate, optionally restricted to a section.
    pub fn count_blocks(&self, section: Option<&str>, pred: impl Fn(&Cone) -> bool) -> usize {
        self.blocks
            .iter()
            .filter(|b| section.is_none_or(|s| b.section == s))
            .filter(|b| pred(&b.cone))
            .count()
    }

    /// Number of scalar rows in blocks matching a predicate.
    pub fn count_rows(&self, section: Option<&str>, pred: impl Fn(&Cone) -> bool) -> usize {
        self.blocks
            .iter()
            .filter(|b| section.is_none_or(|s| b.section == s))
            .filter(|b| pred(&b.cone))
            .map(|b| b.rows.len())
            .sum()
    }

    /// Structured JSON dump, used for debugging and golden tests.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut p: ConicProgram = serde_json::from_str(s)?;
        p.by_name = p
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), VarId(i)))
            .collect();
        p.validate()?;
        Ok(p)
    }

    /// Multiplies the objective by `alpha`.
    pub fn scale_objective(&mut self, alpha: f64) {
        self.objective = self.objective.clone() * alpha;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_layout() {
        assert_eq!(packed_index(0, 0), 0);
        assert_eq!(packed_index(1, 0), 1);
        assert_eq!(packed_index(0, 1), 1);
        assert_eq!(packed_index(2, 1), 4);
        assert_eq!(packed_len(3), 6);
    }

    #[test]
    fn norm_epigraph_counts() {
        let mut p = ConicProgram::new();
        let x = p.add_variable("x", 2);
        let t = p.add_variable("t", 1);
        let e = p.expr(x);
        let h = p.add_norm_epigraph(&e, NormIndex::Inf, p.scalar(t));
        assert_eq!(h.len(), 1);
        assert_eq!(p.count_rows(None, |c| *c == Cone::Nonneg), 4);

        let mut p = ConicProgram::new();
        let x = p.add_variable("x", 3);
        let t = p.add_variable("t", 1);
        let e = p.expr(x);
        p.add_norm_epigraph(&e, NormIndex::Two, p.scalar(t));
        assert_eq!(p.blocks()[0].cone, Cone::SecondOrder(4));

        let mut p = ConicProgram::new();
        let x = p.add_variable("x", 2);
        let t = p.add_variable("t", 1);
        let e = p.expr(x);
        let before = p.num_columns();
        p.add_norm_epigraph(&e, NormIndex::One, p.scalar(t));
        assert_eq!(p.num_columns() - before, 2);
        assert_eq!(p.count_rows(None, |c| *c == Cone::Nonneg), 5);
    }

    #[test]
    fn asymmetric_psd_rejected() {
        let mut p = ConicProgram::new();
        let x = p.add_variable("x", 1);
        let m = vec![
            vec![p.scalar(x), AffineExpr::constant(1.0)],
            vec![AffineExpr::constant(2.0), p.scalar(x)],
        ];
        assert!(p.add_psd_block(&m).is_err());
    }

    #[test]
    fn dual_norms() {
        assert_eq!(NormIndex::One.dual(), NormIndex::Inf);
        assert_eq!(NormIndex::Two.dual(), NormIndex::Two);
        assert_eq!(NormIndex::Inf.dual(), NormIndex::One);
    }
}
