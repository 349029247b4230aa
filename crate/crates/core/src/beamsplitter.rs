//! Beam-splitter matrix elements in the photon-number basis.
//!
//! The splitter `B(θ) = exp{θ(a† a_A − a_A† a)}` maps the creation operators as
//!
//! ```text
//! a_A† -> cos θ a_A† + sin θ a†
//! a†   -> cos θ a†   − sin θ a_A†
//! ```
//!
//! Injecting `|m>` into the ancilla port and detecting `|m'>` there leaves the
//! operator `Σ_k B[m, m', k] |k + m − m'><k|` on the other mode, with
//!
//! ```text
//! B[m, m', k] = Σ_i (−1)^(m'−i) C(m, i) C(k, m'−i) cos^(k+2i−m') θ sin^(m+m'−2i) θ
//!               · sqrt(m'! / m!) · sqrt((k+m−m')! / k!)
//! ```
//!
//! where binomials with a lower index above the upper one vanish.

use std::f64::consts::FRAC_PI_2;

use crate::combinatorics::{ln_binomial, ln_factorial};
use crate::error::{Error, Result};
use crate::fock::{Cutoff, FockState, FourMode, FourModeState, TwoModeState};

/// Beam-splitter mixing angle, `T = cos²θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsAngle {
    theta: f64,
    cos: f64,
    sin: f64,
}

impl BsAngle {
    /// Angle in radians; must lie in `[0, π/2]`.
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::Domain(format!(
                "beam-splitter angle {theta} outside [0, pi/2]"
            )));
        }
        let (sin, cos) = if theta == FRAC_PI_2 {
            (1.0, 0.0)
        } else {
            theta.sin_cos()
        };
        Ok(Self { theta, cos, sin })
    }

    /// From transmittance `T ∈ [0, 1]`; cosine and sine are taken as `√T` and `√(1−T)`.
    pub fn from_transmittance(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("transmittance {t} outside [0, 1]")));
        }
        let cos = t.sqrt();
        Ok(Self {
            theta: cos.acos(),
            cos,
            sin: (1.0 - t).sqrt(),
        })
    }

    pub const IDENTITY: BsAngle = BsAngle {
        theta: 0.0,
        cos: 1.0,
        sin: 0.0,
    };

    pub fn balanced() -> Self {
        Self::from_transmittance(0.5).expect("0.5 is a valid transmittance")
    }

    pub fn theta(self) -> f64 {
        self.theta
    }

    pub fn cos(self) -> f64 {
        self.cos
    }

    pub fn sin(self) -> f64 {
        self.sin
    }

    pub fn transmittance(self) -> f64 {
        self.cos * self.cos
    }

    pub fn reflectance(self) -> f64 {
        self.sin * self.sin
    }
}

/// `B[m, m', k]` at angle `angle`; exactly zero when `k + m < m'`.
///
/// Each term of the alternating sum is formed in log space and the terms are
/// added in ascending `i`.
pub fn bs_coefficient(m: usize, m_prime: usize, k: usize, angle: BsAngle) -> f64 {
    if k + m < m_prime {
        return 0.0;
    }
    let out = k + m - m_prime;
    let (cos, sin) = (angle.cos(), angle.sin());
    let ln_cos = cos.ln();
    let ln_sin = sin.ln();
    let ln_norm =
        0.5 * (ln_factorial(m_prime) - ln_factorial(m) + ln_factorial(out) - ln_factorial(k));

    let i_lo = m_prime.saturating_sub(k);
    let i_hi = m.min(m_prime);
    let mut sum = 0.0;
    for i in i_lo..=i_hi {
        let j = m_prime - i;
        let cos_pow = k + 2 * i - m_prime;
        let sin_pow = m + m_prime - 2 * i;
        if (cos_pow > 0 && cos == 0.0) || (sin_pow > 0 && sin == 0.0) {
            continue;
        }
        let (Some(ln_c1), Some(ln_c2)) = (ln_binomial(m, i), ln_binomial(k, j)) else {
            continue;
        };
        let mut ln_mag = ln_c1 + ln_c2 + ln_norm;
        if cos_pow > 0 {
            ln_mag += cos_pow as f64 * ln_cos;
        }
        if sin_pow > 0 {
            ln_mag += sin_pow as f64 * ln_sin;
        }
        let term = ln_mag.exp();
        sum += if j.is_multiple_of(2) { term } else { -term };
    }
    sum
}

/// The heralded single-mode operator `<m'|_A B(θ) |m>_A` on a truncated mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalOp {
    pub m: usize,
    pub m_prime: usize,
    pub angle: BsAngle,
    /// `b[k] = B[m, m', k]` for `k = 0..=k_max`.
    pub b: Vec<f64>,
    pub cutoff: Cutoff,
}

impl ConditionalOp {
    /// Output index offset `m − m'`.
    pub fn shift(&self) -> isize {
        self.m as isize - self.m_prime as isize
    }
}

pub fn make_conditional_op(
    m: usize,
    m_prime: usize,
    angle: BsAngle,
    cutoff: Cutoff,
) -> ConditionalOp {
    let b = (0..cutoff.dim())
        .map(|k| bs_coefficient(m, m_prime, k, angle))
        .collect();
    ConditionalOp {
        m,
        m_prime,
        angle,
        b,
        cutoff,
    }
}

/// Which mode of a [`TwoModeState`] an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Applies a heralded operator to one mode. The result is not normalized; its
/// norm squared is the herald probability. Amplitude shifted past `k_max` is
/// added to the state's spill.
///
/// # Panics
/// If the operator and state cutoffs differ.
pub fn apply_conditional(op: &ConditionalOp, side: Side, state: &TwoModeState) -> TwoModeState {
    assert_eq!(
        op.cutoff,
        state.cutoff(),
        "operator and state cutoffs differ"
    );
    let dim = state.cutoff().dim();
    let shift = op.shift();
    let mut out = TwoModeState::zeros(state.cutoff());
    let mut spill = state.spill();
    for k in 0..dim {
        for j in 0..dim {
            let c = state.get(j, k);
            if c == 0.0 {
                continue;
            }
            let idx = match side {
                Side::First => j,
                Side::Second => k,
            };
            let amp = op.b[idx] * c;
            if amp == 0.0 {
                continue;
            }
            let target = idx as isize + shift;
            // b vanishes for negative targets, so only overflow remains.
            if target as usize >= dim {
                spill += amp * amp;
                continue;
            }
            let target = target as usize;
            match side {
                Side::First => out.set(target, k, amp),
                Side::Second => out.set(j, target, amp),
            }
        }
    }
    out.with_spill(spill)
}

/// Applies the full two-mode splitter to `pair` of a four-mode state.
///
/// The second member of the pair plays the ancilla role `a_A`, so
/// `<p', q'| B |p, q> = B[q, q', p]` with `p' = p + q − q'`. Output falling
/// outside the stored range is dropped and its mass added to the spill.
///
/// # Panics
/// If the two modes of `pair` coincide.
pub fn apply_full_bs(
    state: &FourModeState,
    pair: (FourMode, FourMode),
    angle: BsAngle,
) -> FourModeState {
    let (a, b) = (
        FourModeState::axis_of(pair.0),
        FourModeState::axis_of(pair.1),
    );
    assert_ne!(a, b, "beam splitter needs two distinct modes");
    let dims = state.dims();
    let strides = state.strides();
    let others: Vec<usize> = (0..4).filter(|ax| *ax != a && *ax != b).collect();
    let (o1, o2) = (others[0], others[1]);

    let input = state.amplitudes();
    let mut out = FourModeState::zeros(state.cutoff(), state.ancilla_cap());
    let mut column = Vec::new();
    for p in 0..dims[a] {
        for q in 0..dims[b] {
            let base_in = p * strides[a] + q * strides[b];
            let occupied = (0..dims[o1]).any(|x| {
                (0..dims[o2]).any(|y| input[base_in + x * strides[o1] + y * strides[o2]] != 0.0)
            });
            if !occupied {
                continue;
            }
            let total = p + q;
            let q_lo = total.saturating_sub(dims[a] - 1);
            let q_hi = total.min(dims[b] - 1);
            column.clear();
            column.extend((q_lo..=q_hi).map(|qp| (qp, bs_coefficient(q, qp, p, angle))));
            let coeffs = out.coeffs_mut();
            for x in 0..dims[o1] {
                for y in 0..dims[o2] {
                    let offset = x * strides[o1] + y * strides[o2];
                    let amp = input[base_in + offset];
                    if amp == 0.0 {
                        continue;
                    }
                    for &(qp, elem) in &column {
                        let pp = total - qp;
                        coeffs[pp * strides[a] + qp * strides[b] + offset] += amp * elem;
                    }
                }
            }
        }
    }
    let lost = (state.norm_squared() - out.norm_squared()).max(0.0);
    out.add_spill(state.spill() + lost);
    out
}
