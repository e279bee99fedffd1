//! Multi-product newsvendor: loss, its piecewise-linear expansion, CVaR and the sample-average model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::{solve, AffineExpr, ConicProgram, SolverSettings};
use crate::error::{dim_check, Error, Result};
use crate::model::{AffinePiece, LinearConstraints, PiecewiseLinearObjective};

/// Largest product count accepted by the `2^n` piece expansion.
pub const MAX_PRODUCTS: usize = 12;

/// Per-product prices: wholesale `c`, retail `v`, salvage `g`, stockout `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceVector {
    pub c: Vec<f64>,
    pub v: Vec<f64>,
    pub g: Vec<f64>,
    pub b: Vec<f64>,
}

impl PriceVector {
    pub fn new(c: Vec<f64>, v: Vec<f64>, g: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let p = Self { c, v, g, b };
        p.validate()?;
        Ok(p)
    }

    /// Same prices for every product.
    pub fn uniform(n: usize, c: f64, v: f64, g: f64, b: f64) -> Result<Self> {
        Self::new(vec![c; n], vec![v; n], vec![g; n], vec![b; n])
    }

    /// `c = 5, v = 10, g = 1, b = 2.5` for every product.
    pub fn benchmark(n: usize) -> Self {
        Self::uniform(n, 5.0, 10.0, 1.0, 2.5).expect("valid prices")
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        dim_check("retail prices", n, self.v.len())?;
        dim_check("salvage prices", n, self.g.len())?;
        dim_check("stockout prices", n, self.b.len())?;
        for i in 0..n {
            if !(self.c[i] < self.v[i] && self.g[i] < self.v[i]) {
                return Err(Error::Invalid(format!("product {i}: need c < v and g < v")));
            }
            if !(self.v[i] + self.b[i] - self.g[i] > 0.0) {
                return Err(Error::Invalid(format!(
                    "product {i}: overage coefficient must be > 0"
                )));
            }
        }
        Ok(())
    }

    /// `d = c - v - b`.
    pub fn d(&self) -> DVector<f64> {
        DVector::from_fn(self.len(), |i, _| self.c[i] - self.v[i] - self.b[i])
    }

    /// `h = v + b - g`.
    pub fn h(&self) -> DVector<f64> {
        DVector::from_fn(self.len(), |i, _| self.v[i] + self.b[i] - self.g[i])
    }

    pub fn stockout(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.b)
    }
}

/// `d.x + b.xi + h.max(x - xi, 0)`.
pub fn loss_value(prices: &PriceVector, x: &DVector<f64>, xi: &DVector<f64>) -> Result<f64> {
    dim_check("order quantity", prices.len(), x.len())?;
    dim_check("demand", prices.len(), xi.len())?;
    let (d, h) = (prices.d(), prices.h());
    let mut total = 0.0;
    for i in 0..prices.len() {
        total += d[i] * x[i] + prices.b[i] * xi[i] + h[i] * (x[i] - xi[i]).max(0.0);
    }
    Ok(total)
}

/// Subset `k` contains product `i` iff bit `i` of `k` is set.
pub fn subset_contains(k: usize, i: usize) -> bool {
    (k >> i) & 1 == 1
}

/// Piecewise expansion of `max(loss - beta, 0)` over the decision `(x, beta)`.
///
/// Piece `k < 2^n` is `(b - I_k h).xi + (d + I_k h).x - beta`; the final piece is zero.
/// The outer term is `beta` and the expectation is scaled by `1 / epsilon`.
pub fn newsvendor_objective(
    prices: &PriceVector,
    n: usize,
    epsilon: f64,
) -> Result<PiecewiseLinearObjective> {
    dim_check("price vector", n, prices.len())?;
    prices.validate()?;
    if n == 0 || n > MAX_PRODUCTS {
        return Err(Error::Unsupported(format!(
            "newsvendor with {n} products (1..={MAX_PRODUCTS})"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Invalid(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    let (d, h, b) = (prices.d(), prices.h(), prices.stockout());
    let mut pieces = Vec::with_capacity((1 << n) + 1);
    for k in 0..(1usize << n) {
        let ih = DVector::from_fn(n, |i, _| if subset_contains(k, i) { h[i] } else { 0.0 });
        let mut coef = DVector::zeros(n + 1);
        coef.rows_mut(0, n).copy_from(&(&d + &ih));
        coef[n] = -1.0;
        pieces.push(AffinePiece::with_constant_slope(&b - &ih, coef, 0.0));
    }
    pieces.push(AffinePiece::with_constant_slope(
        DVector::zeros(n),
        DVector::zeros(n + 1),
        0.0,
    ));
    let mut outer = DVector::zeros(n + 1);
    outer[n] = 1.0;
    let obj = PiecewiseLinearObjective {
        decision_dim: n + 1,
        uncertainty_dim: n,
        pieces,
        outer_linear: outer,
        outer_scale: 1.0 / epsilon,
    };
    obj.validate()?;
    Ok(obj)
}

/// `x >= 0`, `beta` free.
pub fn newsvendor_feasible_set(n: usize) -> LinearConstraints {
    LinearConstraints::nonnegative(n + 1, &(0..n).collect::<Vec<_>>())
}

fn tail_count(m: usize, epsilon: f64) -> usize {
    ((epsilon * m as f64) - 1e-9).ceil().clamp(1.0, m as f64) as usize
}

/// Empirical CVaR by sorting: `beta* + sum (L - beta*)^+ / (epsilon M)` with
/// `beta*` the `ceil(epsilon M)`-th largest loss.
pub fn empirical_cvar(losses: &[f64], epsilon: f64) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::Invalid("empirical CVaR of an empty sample".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Invalid(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    let m = losses.len();
    let mut sorted = losses.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let beta = sorted[tail_count(m, epsilon) - 1];
    let excess: f64 = sorted
        .iter()
        .take_while(|l| **l > beta)
        .map(|l| l - beta)
        .sum();
    Ok(beta + excess / (epsilon * m as f64))
}

/// The same CVaR as the optimum of `min beta + sum u_j / (epsilon M)`, `u_j >= L_j - beta`, `u >= 0`.
pub fn cvar_lp(losses: &[f64], epsilon: f64) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::Invalid("empirical CVaR of an empty sample".into()));
    }
    let m = losses.len();
    let mut prog = ConicProgram::new();
    let beta = prog.add_variable("beta", 1);
    let u = prog.add_variable("u", m);
    let beta_e = prog.scalar(beta);
    let u_e = prog.expr(u);
    let mut rows = u_e.clone();
    let mut obj = beta_e.clone();
    for (uj, lj) in u_e.iter().zip(losses) {
        rows.push(uj.clone() + &beta_e - *lj);
        obj.add_scaled(uj, 1.0 / (epsilon * m as f64));
    }
    prog.add_nonneg(rows);
    prog.set_objective(obj);
    let sol = solve(&prog, &SolverSettings::tight());
    if sol.objective.is_none() {
        return Err(Error::Solver(sol.status));
    }
    // Crossover: an optimal vertex has beta at a kink, so polish the interior point onto the nearest ones.
    let b = sol.eval(&beta_e);
    let value =
        |b: f64| b + losses.iter().map(|l| (l - b).max(0.0)).sum::<f64>() / (epsilon * m as f64);
    let below = losses
        .iter()
        .cloned()
        .filter(|l| *l <= b)
        .fold(f64::NEG_INFINITY, f64::max);
    let above = losses
        .iter()
        .cloned()
        .filter(|l| *l >= b)
        .fold(f64::INFINITY, f64::min);
    Ok([b, below, above]
        .into_iter()
        .filter(|v| v.is_finite())
        .map(value)
        .fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpSolution {
    pub order: DVector<f64>,
    pub beta: f64,
    pub objective: f64,
}

/// Sample-average CVaR minimization as a linear program.
pub fn solve_sp(samples: &DMatrix<f64>, prices: &PriceVector, epsilon: f64) -> Result<SpSolution> {
    let n = prices.len();
    let big_n = samples.nrows();
    if big_n == 0 {
        return Err(Error::Invalid("sample-average model needs samples".into()));
    }
    dim_check("sample columns", n, samples.ncols())?;
    let obj = newsvendor_objective(prices, n, epsilon)?;
    let mut prog = ConicProgram::new();
    let x = prog.add_variable("x", n);
    let beta = prog.add_variable("beta", 1);
    let u = prog.add_variable("u", big_n);
    let x_e = prog.expr(x);
    let beta_e = prog.scalar(beta);
    let u_e = prog.expr(u);
    let mut rows: Vec<AffineExpr> = x_e.clone();
    rows.extend(u_e.iter().cloned());
    for j in 0..big_n {
        let xi = samples.row(j).transpose();
        for pc in obj.pieces.iter().take(obj.pieces.len() - 1) {
            // u_j >= a.xi + (d + I h).x - beta
            let mut e = u_e[j].clone() + &beta_e - pc.slope_offset.dot(&xi);
            for i in 0..n {
                e.add_scaled(&x_e[i], -pc.intercept_coef[i]);
            }
            rows.push(e);
        }
    }
    prog.add_nonneg(rows);
    let mut objective = beta_e;
    for uj in &u_e {
        objective.add_scaled(uj, 1.0 / (epsilon * big_n as f64));
    }
    prog.set_objective(objective);
    let sol = solve(&prog, &SolverSettings::default());
    let value = sol.objective.ok_or(Error::Solver(sol.status))?;
    Ok(SpSolution {
        order: DVector::from_vec(sol.var(&prog, x)),
        beta: sol.var(&prog, beta)[0],
        objective: value,
    })
}

/// Out-of-sample CVaR of a fixed order on evaluation samples (one per row).
pub fn out_of_sample_cvar(
    prices: &PriceVector,
    order: &DVector<f64>,
    samples: &DMatrix<f64>,
    epsilon: f64,
) -> Result<f64> {
    let losses = (0..samples.nrows())
        .map(|j| loss_value(prices, order, &samples.row(j).transpose()))
        .collect::<Result<Vec<_>>>()?;
    empirical_cvar(&losses, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn loss_examples() {
        let p = PriceVector::benchmark(1);
        assert_eq!(loss_value(&p, &dv(&[10.0]), &dv(&[10.0])).unwrap(), -50.0);
        assert_eq!(loss_value(&p, &dv(&[0.0]), &dv(&[10.0])).unwrap(), 25.0);
        assert_eq!(loss_value(&p, &dv(&[10.0]), &dv(&[0.0])).unwrap(), 40.0);
    }

    #[test]
    fn piece_layout() {
        let p = PriceVector::benchmark(3);
        let obj = newsvendor_objective(&p, 3, 0.05).unwrap();
        assert_eq!(obj.num_pieces(), 9);
        assert_eq!(obj.pieces[7].slope_offset, dv(&[-9.0, -9.0, -9.0]));
        assert!((obj.outer_scale - 20.0).abs() < 1e-12);

        let one = newsvendor_objective(&PriceVector::benchmark(1), 1, 0.5).unwrap();
        assert_eq!(one.pieces[0].slope_offset, dv(&[2.5]));
        assert_eq!(one.pieces[0].intercept_coef, dv(&[-7.5, -1.0]));
        assert_eq!(one.pieces[1].slope_offset, dv(&[-9.0]));
        assert_eq!(one.pieces[1].intercept_coef, dv(&[4.0, -1.0]));
        assert!(newsvendor_objective(&PriceVector::benchmark(13), 13, 0.5).is_err());
    }

    #[test]
    fn piecewise_matches_loss() {
        let p = PriceVector::benchmark(2);
        let obj = newsvendor_objective(&p, 2, 0.1).unwrap();
        let x = dv(&[12.0, 3.0]);
        let xi = dv(&[5.0, 9.0]);
        for beta in [-100.0, 0.0, 40.0] {
            let ext = dv(&[12.0, 3.0, beta]);
            let h = obj.evaluate(&ext, &xi).unwrap();
            let l = loss_value(&p, &x, &xi).unwrap();
            assert!((h - (l - beta).max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn cvar_examples() {
        let l: Vec<f64> = (0..100).map(f64::from).collect();
        assert!((empirical_cvar(&l, 0.05).unwrap() - 97.0).abs() < 1e-12);
        assert!((empirical_cvar(&l, 1.0).unwrap() - 49.5).abs() < 1e-12);
        assert_eq!(empirical_cvar(&[3.5], 0.2).unwrap(), 3.5);
        assert!((cvar_lp(&l, 0.05).unwrap() - 97.0).abs() < 1e-7);
        assert!(empirical_cvar(&[], 0.5).is_err());
    }

    #[test]
    fn single_sample_orders_demand() {
        let p = PriceVector::benchmark(2);
        let s = DMatrix::from_row_slice(1, 2, &[20.0, 35.0]);
        let sol = solve_sp(&s, &p, 0.05).unwrap();
        assert!((sol.order - dv(&[20.0, 35.0])).amax() < 1e-5);
        assert!(
            (sol.objective - loss_value(&p, &dv(&[20.0, 35.0]), &dv(&[20.0, 35.0])).unwrap()).abs()
                < 1e-5
        );
    }
}
