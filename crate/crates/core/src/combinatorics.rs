//! Log-space factorials and binomials.

use std::sync::OnceLock;

const TABLE_LEN: usize = 2048;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Neumaier-compensated running sum of ln(i).
        let mut table = Vec::with_capacity(TABLE_LEN);
        let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
        table.push(0.0);
        for i in 1..TABLE_LEN {
            let term = (i as f64).ln();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            table.push(sum + comp);
        }
        table
    })
}

/// `ln(n!)`. Tabulated below 2048, Stirling series above.
pub fn ln_factorial(n: usize) -> f64 {
    if n < TABLE_LEN {
        return ln_factorial_table()[n];
    }
    let x = n as f64 + 1.0;
    // ln Γ(x) asymptotic series; at x > 2048 the truncation error is far below f64 resolution.
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// `ln C(n, k)`; `None` when `k > n` (the coefficient vanishes).
pub fn ln_binomial(n: usize, k: usize) -> Option<f64> {
    (k <= n).then(|| ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_factorials_match_exact_values() {
        let mut exact = 1.0_f64;
        for n in 0..=25 {
            if n > 0 {
                exact *= n as f64;
            }
            assert!((ln_factorial(n) - exact.ln()).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn table_and_series_agree_at_the_seam() {
        let n = TABLE_LEN - 1;
        let via_step = ln_factorial(n) + ((n + 1) as f64).ln();
        assert!((ln_factorial(n + 1) - via_step).abs() / via_step < 1e-14);
    }

    #[test]
    fn binomial_edge_cases() {
        assert_eq!(ln_binomial(3, 4), None);
        assert_eq!(ln_binomial(0, 0), Some(0.0));
        assert!((ln_binomial(10, 3).unwrap().exp() - 120.0).abs() < 1e-10);
        assert!((ln_binomial(200, 100).unwrap() - 135.753_236_081_278_5).abs() < 1e-9);
    }
}
