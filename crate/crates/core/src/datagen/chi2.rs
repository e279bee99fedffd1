//! Chi-square distribution function and its inverse.

use statrs::function::gamma::{gamma_lr, ln_gamma};

/// `P(X <= x)` for `X ~ chi2(k)`.
pub fn chi2_cdf(x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(k as f64 / 2.0, x / 2.0)
}

fn chi2_pdf(x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = k as f64 / 2.0;
    ((a - 1.0) * x.ln() - x / 2.0 - a * std::f64::consts::LN_2 - ln_gamma(a)).exp()
}

/// Quantile of `chi2(k)` by bracketed Newton iteration.
pub fn chi2_inv(p: f64, k: usize) -> f64 {
    assert!(
        k > 0 && p > 0.0 && p < 1.0,
        "chi2_inv needs k > 0 and 0 < p < 1"
    );
    let (mut lo, mut hi) = (0.0_f64, k as f64 + 10.0);
    while chi2_cdf(hi, k) < p {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = chi2_cdf(x, k) - p;
        if f.abs() <= 1e-15 {
            break;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = chi2_pdf(x, k);
        let newton = if d > 0.0 { x - f / d } else { f64::NAN };
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_quantiles() {
        // Reference values from standard chi-square tables.
        assert!((chi2_inv(0.95, 1) - 3.841458820694124).abs() < 1e-9);
        assert!((chi2_inv(0.99, 3) - 11.344866730144373).abs() < 1e-9);
        assert!((chi2_cdf(2.0, 2) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        for k in 1..6 {
            for p in [0.01, 0.5, 0.99] {
                assert!((chi2_cdf(chi2_inv(p, k), k) - p).abs() < 1e-12);
            }
        }
    }
}
