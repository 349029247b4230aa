//! Slow reference for the beam-splitter matrix elements.
//!
//! Builds the generator `θ(a† a_A − a_A† a)` as a dense matrix on a
//! `dim × dim` truncated two-mode space and exponentiates it by scaling and
//! squaring with a Taylor series. The generator conserves total photon
//! number, so every block with `p + q < dim` is exact. Used by the test
//! suites and by `verify`; it shares no code with [`crate::beamsplitter`].

use nalgebra::DMatrix;

use crate::beamsplitter::BsAngle;

/// Dense `exp{θ(a† a_A − a_A† a)}` on `dim × dim` two-mode basis states.
#[derive(Debug, Clone)]
pub struct DenseBeamSplitter {
    dim: usize,
    unitary: DMatrix<f64>,
}

impl DenseBeamSplitter {
    pub fn new(angle: BsAngle, dim: usize) -> Self {
        let n = dim * dim;
        let idx = |sys: usize, anc: usize| sys * dim + anc;
        let theta = angle.theta();
        let mut gen = DMatrix::<f64>::zeros(n, n);
        for p in 0..dim {
            for q in 0..dim {
                // a† a_A |p, q> = √q √(p+1) |p+1, q−1>
                if q > 0 && p + 1 < dim {
                    gen[(idx(p + 1, q - 1), idx(p, q))] += theta * ((q * (p + 1)) as f64).sqrt();
                }
                // a_A† a |p, q> = √p √(q+1) |p−1, q+1>
                if p > 0 && q + 1 < dim {
                    gen[(idx(p - 1, q + 1), idx(p, q))] -= theta * ((p * (q + 1)) as f64).sqrt();
                }
            }
        }
        Self {
            dim,
            unitary: expm(&gen),
        }
    }

    /// `<k_out, m'| B |k, m>` (system index first, ancilla second).
    pub fn element(&self, m: usize, m_prime: usize, k: usize, k_out: usize) -> f64 {
        let d = self.dim;
        assert!(
            m < d && m_prime < d && k < d && k_out < d,
            "index outside dense space"
        );
        self.unitary[(k_out * d + m_prime, k * d + m)]
    }

    pub fn unitary(&self) -> &DMatrix<f64> {
        &self.unitary
    }
}

/// One matrix element by brute force. `dim` should leave a few photons of
/// headroom above `k + m`.
pub fn brute_force_bs_element(
    m: usize,
    m_prime: usize,
    k: usize,
    k_out: usize,
    angle: BsAngle,
    dim: usize,
) -> f64 {
    DenseBeamSplitter::new(angle, dim).element(m, m_prime, k, k_out)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);

    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for order in 1..=60 {
        term = &term * &scaled / order as f64;
        result += &term;
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.9;
        let g = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let u = expm(&g);
        assert!((u[(0, 0)] - t.cos()).abs() < 1e-15);
        assert!((u[(1, 0)] - t.sin()).abs() < 1e-15);
    }

    #[test]
    fn dense_splitter_is_orthogonal() {
        let bs = DenseBeamSplitter::new(BsAngle::new(0.7).unwrap(), 6);
        let u = bs.unitary();
        let err = (u.transpose() * u - DMatrix::identity(36, 36)).abs().max();
        assert!(err < 1e-13);
    }

    #[test]
    fn single_photon_rotation_matches_mode_transform() {
        let a = BsAngle::new(0.3).unwrap();
        let bs = DenseBeamSplitter::new(a, 4);
        // |0, 1> -> cos θ |0, 1> + sin θ |1, 0>
        assert!((bs.element(1, 1, 0, 0) - a.cos()).abs() < 1e-14);
        assert!((bs.element(1, 0, 0, 1) - a.sin()).abs() < 1e-14);
    }
}
