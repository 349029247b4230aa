//! Logarithmic negativity of pure bipartite states.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::fock::{SchmidtSpectrum, DEFAULT_SCHMIDT_DROP};

/// Entanglement of a heralded state relative to the squeezed-vacuum input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport {
    /// Logarithmic negativity in bits.
    pub e_n: f64,
    /// `2 r log2(e)`, the negativity of the unmodified source.
    pub baseline: f64,
    pub delta: f64,
}

impl EntanglementReport {
    pub fn new(e_n: f64, r: f64) -> Self {
        let baseline = baseline_tmsvs(r);
        Self {
            e_n,
            baseline,
            delta: e_n - baseline,
        }
    }
}

/// `log2[(Σ s_k)²]` for a normalized Schmidt spectrum.
pub fn log_negativity_pure(spectrum: &SchmidtSpectrum) -> Result<f64> {
    log_negativity_pure_with(spectrum, DEFAULT_SCHMIDT_DROP)
}

/// As [`log_negativity_pure`], ignoring Schmidt values at or below `drop`.
pub fn log_negativity_pure_with(spectrum: &SchmidtSpectrum, drop: f64) -> Result<f64> {
    let norm = spectrum.sum_of_squares();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "Schmidt spectrum not normalized (sum s^2 = {norm})"
        )));
    }
    let sum: f64 = spectrum.values.iter().filter(|s| **s > drop).sum();
    Ok(2.0 * sum.log2())
}

/// Negativity of a Schmidt-form state given its unnormalized coefficients `C_k`:
/// `log2[(Σ|C_k|)² / Σ C_k²]`.
pub fn log_negativity_from_coefficients(coeffs: &[f64]) -> Result<f64> {
    let norm: f64 = coeffs.iter().map(|c| c * c).sum();
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::ZeroState { norm_squared: norm });
    }
    let sum: f64 = coeffs.iter().map(|c| c.abs()).sum();
    Ok((sum * sum / norm).log2())
}

/// `2 r log2(e)`.
pub fn baseline_tmsvs(r: f64) -> f64 {
    2.0 * r / LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn product_state_has_zero_negativity() {
        let s = SchmidtSpectrum::from_values(vec![1.0]);
        assert_eq!(log_negativity_pure(&s).unwrap(), 0.0);
    }

    #[test]
    fn bell_pair_is_one_bit() {
        let s = SchmidtSpectrum::from_values(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert!((log_negativity_pure(&s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn squeezed_vacuum_spectrum() {
        for &r in &[0.1, 0.5, 1.0, 1.5] {
            let lambda = f64::tanh(r);
            let sech = 1.0 / f64::cosh(r);
            let values: Vec<f64> = (0..400).map(|k| sech * lambda.powi(k)).collect();
            let s = SchmidtSpectrum::from_values(values);
            assert!((log_negativity_pure(&s).unwrap() - baseline_tmsvs(r)).abs() < 1e-9);
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn baseline_values() {
        assert_eq!(baseline_tmsvs(0.0), 0.0);
        assert!((baseline_tmsvs(1.0) - 2.885_390).abs() < 1e-6);
        assert!((baseline_tmsvs(0.5) - 1.442_695).abs() < 1e-6);
    }

    #[test]
    fn rejects_unnormalized_spectrum() {
        let s = SchmidtSpectrum::from_values(vec![0.5, 0.5]);
        assert!(matches!(log_negativity_pure(&s), Err(Error::Domain(_))));
    }

    #[test]
    fn tiny_values_are_dropped() {
        let s = SchmidtSpectrum::from_values(vec![1.0, 1e-15]);
        assert_eq!(log_negativity_pure(&s).unwrap(), 0.0);
        assert!(log_negativity_pure_with(&s, 0.0).unwrap() > 0.0);
    }

    #[test]
    fn coefficient_route_matches_spectrum_route() {
        let c = [0.3, -0.2, 0.05, 0.01];
        let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = SchmidtSpectrum::from_values(c.iter().map(|x| x / norm).collect());
        let a = log_negativity_from_coefficients(&c).unwrap();
        let b = log_negativity_pure(&s).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn report_delta_is_exact_difference() {
        let rep = EntanglementReport::new(2.0, 0.3);
        assert_eq!(rep.delta, rep.e_n - rep.baseline);
    }
}
