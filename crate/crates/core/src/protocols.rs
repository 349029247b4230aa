//! Heralded operations on a two-mode squeezed vacuum.
//!
//! Two circuit layouts are supported:
//!
//! * **Independent arms** ([`run_setup1`]): each squeezed mode meets its own
//!   Fock ancilla on a beam splitter and the ancilla is photon-counted.
//! * **Premixed ancillas** ([`run_setup2`]): the two Fock ancillas are first
//!   mixed on `BS_A`, then each meets one squeezed mode; both ancilla outputs
//!   are counted.
//!
//! Port assignment for the premixed layout, as used by [`apply_full_bs`]
//! (second mode of each pair is the ancilla-role port):
//!
//! | splitter | pair      | angle     |
//! |----------|-----------|-----------|
//! | `BS_A`   | (LA, UA)  | `theta_a` |
//! | `BS_U`   | (U, UA)   | `theta_u` |
//! | `BS_L`   | (L, LA)   | `theta_l` |
//!
//! With `|1>_UA |0>_LA` and a balanced `BS_A` this produces
//! `(a_UA† + a_LA†)/√2`, and `|1, 1>` goes to `(|0, 2> − |2, 0>)/√2`.

use crate::beamsplitter::{
    apply_conditional, apply_full_bs, bs_coefficient, make_conditional_op, BsAngle, Side,
};
use crate::entanglement::{
    log_negativity_from_coefficients, log_negativity_pure_with, EntanglementReport,
};
use crate::error::{Error, Result};
use crate::fock::{
    normalize, schmidt, Cutoff, FockState, FourMode, FourModeState, Numerics, TwoModeState,
};

/// Real squeezing parameter `r >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParam(f64);

impl SqueezeParam {
    pub fn new(r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!(
                "squeezing r = {r} must be finite and >= 0"
            )));
        }
        Ok(Self(r))
    }

    pub fn r(self) -> f64 {
        self.0
    }

    /// `tanh r`
    pub fn lambda(self) -> f64 {
        self.0.tanh()
    }

    /// `sech r`
    pub fn prefactor(self) -> f64 {
        1.0 / self.0.cosh()
    }
}

/// Ancilla inputs, detected counts and splitter angles of a heralding circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldSpec {
    /// Photons injected into the upper / lower ancilla.
    pub m: usize,
    pub n: usize,
    /// Photons detected in the upper / lower ancilla.
    pub m_prime: usize,
    pub n_prime: usize,
    pub theta_u: BsAngle,
    pub theta_l: BsAngle,
    /// Ancilla premix angle; only used by the premixed layout.
    pub theta_a: BsAngle,
}

impl HeraldSpec {
    /// Both arms inactive: identity splitters, vacuum in and out.
    pub fn noop() -> Self {
        Self {
            m: 0,
            n: 0,
            m_prime: 0,
            n_prime: 0,
            theta_u: BsAngle::IDENTITY,
            theta_l: BsAngle::IDENTITY,
            theta_a: BsAngle::IDENTITY,
        }
    }

    pub fn with_upper(mut self, m: usize, m_prime: usize, angle: BsAngle) -> Self {
        self.m = m;
        self.m_prime = m_prime;
        self.theta_u = angle;
        self
    }

    pub fn with_lower(mut self, n: usize, n_prime: usize, angle: BsAngle) -> Self {
        self.n = n;
        self.n_prime = n_prime;
        self.theta_l = angle;
        self
    }

    pub fn with_premix(mut self, angle: BsAngle) -> Self {
        self.theta_a = angle;
        self
    }

    /// Single photon into the upper ancilla, balanced premix, both detectors
    /// dark, both arms at `angle`.
    pub fn premixed_addition(angle: BsAngle) -> Self {
        Self::noop()
            .with_upper(1, 0, angle)
            .with_lower(0, 0, angle)
            .with_premix(BsAngle::balanced())
    }

    /// No ancilla photons in or out of the upper arm.
    pub fn upper_idle(&self) -> bool {
        self.m == 0 && self.m_prime == 0
    }

    pub fn lower_idle(&self) -> bool {
        self.n == 0 && self.n_prime == 0
    }
}

/// Result of one heralded evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    /// Normalized heralded state; `None` when the branch is annihilated.
    pub state: Option<TwoModeState>,
    pub success_prob: f64,
    /// Logarithmic negativity in bits; `None` when the branch is annihilated.
    pub e_n: Option<f64>,
    pub delta_e_n: Option<f64>,
    pub baseline: f64,
    /// Probability mass lost to the Fock cutoff (input tail plus operator overflow).
    pub truncation_spill: f64,
}

impl ProtocolOutcome {
    fn annihilated(success_prob: f64, r: f64, spill: f64) -> Self {
        Self {
            state: None,
            success_prob,
            e_n: None,
            delta_e_n: None,
            baseline: crate::entanglement::baseline_tmsvs(r),
            truncation_spill: spill,
        }
    }

    fn defined(state: TwoModeState, success_prob: f64, e_n: f64, r: f64, spill: f64) -> Self {
        let report = EntanglementReport::new(e_n, r);
        Self {
            state: Some(state.canonicalized()),
            success_prob,
            e_n: Some(report.e_n),
            delta_e_n: Some(report.delta),
            baseline: report.baseline,
            truncation_spill: spill,
        }
    }

    pub fn is_annihilated(&self) -> bool {
        self.state.is_none()
    }
}

/// `sech r Σ tanh^k r |k, k>` on the configured cutoff. The mass beyond the
/// cutoff, `tanh^(2(k_max+1)) r`, is recorded as the state's spill; the
/// retained amplitudes are left unrenormalized.
pub fn tmsvs(r: SqueezeParam, numerics: &Numerics) -> Result<TwoModeState> {
    let cutoff = numerics.cutoff_for(r.r());
    let lambda = r.lambda();
    let mut state = TwoModeState::zeros(cutoff);
    let mut amp = r.prefactor();
    for k in 0..cutoff.dim() {
        state.set(k, k, amp);
        amp *= lambda;
    }
    let outside = lambda.powi(2 * cutoff.dim() as i32);
    let state = TwoModeState::from_matrix(state.coeffs().clone())?.with_spill(outside);
    numerics.check_tail(&state)?;
    Ok(state)
}

/// Schmidt coefficients `C_k = sech r λ^k B[m,m',k](θ_U) B[n,n',k](θ_L)` of the
/// independent-arm circuit. An arm at zero angle with no ancilla photons
/// contributes a factor of one.
pub fn setup1_coefficients(r: SqueezeParam, spec: &HeraldSpec, cutoff: Cutoff) -> Vec<f64> {
    let lambda = r.lambda();
    let mut amp = r.prefactor();
    (0..cutoff.dim())
        .map(|k| {
            let upper = bs_coefficient(spec.m, spec.m_prime, k, spec.theta_u);
            let lower = bs_coefficient(spec.n, spec.n_prime, k, spec.theta_l);
            let c = amp * upper * lower;
            amp *= lambda;
            c
        })
        .collect()
}

fn shift(input: usize, detected: usize) -> isize {
    input as isize - detected as isize
}

/// Independent-arm circuit on a squeezed vacuum.
///
/// The heralded state `Σ C_k |k+m−m', k+n−n'>` is already in Schmidt form, so
/// the negativity comes straight from the coefficients. An arm without a
/// splitter is expressed as `(0, 0, BsAngle::IDENTITY)`.
pub fn run_setup1(
    r: SqueezeParam,
    spec: &HeraldSpec,
    numerics: &Numerics,
) -> Result<ProtocolOutcome> {
    let source = tmsvs(r, numerics)?;
    let cutoff = source.cutoff();
    let coeffs = setup1_coefficients(r, spec, cutoff);
    let (su, sl) = (shift(spec.m, spec.m_prime), shift(spec.n, spec.n_prime));
    let out_cutoff = cutoff.extended(su.max(sl).max(0) as usize);

    let mut state = TwoModeState::zeros(out_cutoff);
    for (k, &c) in coeffs.iter().enumerate() {
        let (ju, jl) = (k as isize + su, k as isize + sl);
        if c != 0.0 && ju >= 0 && jl >= 0 {
            state.set(ju as usize, jl as usize, c);
        }
    }
    let spill = source.spill();
    let state = state.with_spill(spill);
    let (state, success) = match normalize(state, numerics.zero_threshold) {
        Ok(ok) => ok,
        Err(Error::ZeroState { norm_squared }) => {
            return Ok(ProtocolOutcome::annihilated(norm_squared, r.r(), spill));
        }
        Err(e) => return Err(e),
    };
    numerics.check_tail(&state)?;
    let e_n = log_negativity_from_coefficients(&coeffs)?;
    Ok(ProtocolOutcome::defined(state, success, e_n, r.r(), spill))
}

/// Independent-arm circuit on an arbitrary normalized two-mode input, going
/// through the generic operator and Schmidt-decomposition path. `r` only
/// sets the baseline used for `delta_e_n`.
pub fn run_setup1_on_input(
    input: &TwoModeState,
    r: SqueezeParam,
    spec: &HeraldSpec,
    numerics: &Numerics,
) -> Result<ProtocolOutcome> {
    let (su, sl) = (shift(spec.m, spec.m_prime), shift(spec.n, spec.n_prime));
    let cutoff = input.cutoff().extended(su.max(sl).max(0) as usize);
    let mut state = input.padded(cutoff);
    let upper = make_conditional_op(spec.m, spec.m_prime, spec.theta_u, cutoff);
    state = apply_conditional(&upper, Side::First, &state);
    let lower = make_conditional_op(spec.n, spec.n_prime, spec.theta_l, cutoff);
    state = apply_conditional(&lower, Side::Second, &state);
    finish_generic(state, r, numerics)
}

fn finish_generic(
    state: TwoModeState,
    r: SqueezeParam,
    numerics: &Numerics,
) -> Result<ProtocolOutcome> {
    let spill = state.spill();
    let (state, success) = match normalize(state, numerics.zero_threshold) {
        Ok(ok) => ok,
        Err(Error::ZeroState { norm_squared }) => {
            return Ok(ProtocolOutcome::annihilated(norm_squared, r.r(), spill));
        }
        Err(e) => return Err(e),
    };
    numerics.check_tail(&state)?;
    let spectrum = schmidt(&state)?;
    let e_n = log_negativity_pure_with(&spectrum, numerics.schmidt_drop)?;
    Ok(ProtocolOutcome::defined(state, success, e_n, r.r(), spill))
}

/// Four-mode state after `BS_A`, `BS_U` and `BS_L`, before projection.
///
/// System modes are cut at `k_max + m + n` so that no system amplitude is
/// lost; the ancillas hold up to `max(m + n, m', n')` photons. Ancilla
/// amplitude above that cap is dropped into the state's spill: it can never
/// reach the `<m'| <n'|` projection.
pub fn setup2_four_mode(
    r: SqueezeParam,
    spec: &HeraldSpec,
    numerics: &Numerics,
) -> Result<FourModeState> {
    let source = tmsvs(r, numerics)?;
    let cap = (spec.m + spec.n).max(spec.m_prime).max(spec.n_prime);
    let sys_cutoff = source.cutoff().extended(spec.m + spec.n);
    let state = FourModeState::with_fock_ancillas(&source, spec.m, spec.n, sys_cutoff, cap)?;
    let state = apply_full_bs(
        &state,
        (FourMode::LowerAncilla, FourMode::UpperAncilla),
        spec.theta_a,
    );
    let state = apply_full_bs(
        &state,
        (FourMode::Upper, FourMode::UpperAncilla),
        spec.theta_u,
    );
    Ok(apply_full_bs(
        &state,
        (FourMode::Lower, FourMode::LowerAncilla),
        spec.theta_l,
    ))
}

/// Premixed-ancilla circuit on a squeezed vacuum, evaluated on the full
/// four-mode state and Schmidt-decomposed numerically.
pub fn run_setup2(
    r: SqueezeParam,
    spec: &HeraldSpec,
    numerics: &Numerics,
) -> Result<ProtocolOutcome> {
    let lambda = r.lambda();
    let outside = lambda.powi(2 * numerics.cutoff_for(r.r()).dim() as i32);
    let four = setup2_four_mode(r, spec, numerics)?;
    let heralded = four
        .project_ancillas(spec.m_prime, spec.n_prime)
        .with_spill(outside);
    finish_generic(heralded, r, numerics)
}

/// Closed form of the premixed single-photon addition (`|1,0>` in, `|0,0>`
/// detected, balanced premix, both arms at `angle`):
///
/// ```text
/// |ψ_f> ∝ Σ_k (λ cos²θ)^k √(k+1) (|k+1, k> + |k, k+1>) / √2
/// P     = sech²r sin²θ / (1 − λ² cos⁴θ)²
/// ```
pub fn setup2_addition_analytic(
    r: SqueezeParam,
    angle: BsAngle,
    numerics: &Numerics,
) -> Result<ProtocolOutcome> {
    if angle.theta() == 0.0 || angle.sin() == 0.0 {
        return Err(Error::Domain("closed-form addition needs theta > 0".into()));
    }
    let cutoff = numerics.cutoff_for(r.r());
    let x = r.lambda() * angle.transmittance();
    let mut state = TwoModeState::zeros(cutoff.extended(1));
    let mut amp = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..cutoff.dim() {
        let c = amp * ((k + 1) as f64).sqrt();
        state.set(k + 1, k, c);
        state.set(k, k + 1, c);
        amp *= x;
    }
    let success = (r.prefactor() * angle.sin() / (1.0 - x * x)).powi(2);
    let lambda = r.lambda();
    let spill = lambda.powi(2 * cutoff.dim() as i32);
    let (state, _) = normalize(state, numerics.zero_threshold)?;
    numerics.check_tail(&state)?;
    let spectrum = schmidt(&state)?;
    let e_n = log_negativity_pure_with(&spectrum, numerics.schmidt_drop)?;
    Ok(ProtocolOutcome::defined(state, success, e_n, r.r(), spill))
}

/// `p_k = (1 − x²)² x^(2k) (k+1)` with `x = λ cos²θ`, for `k = 0..=k_limit`.
pub fn pk_distribution(r: SqueezeParam, angle: BsAngle, k_limit: usize) -> Vec<f64> {
    let x2 = (r.lambda() * angle.transmittance()).powi(2);
    let lead = (1.0 - x2).powi(2);
    let mut pow = 1.0;
    (0..=k_limit)
        .map(|k| {
            let p = lead * pow * (k + 1) as f64;
            pow *= x2;
            p
        })
        .collect()
}

const PK_TIE_TOLERANCE: f64 = 1e-12;

/// Most probable `k` of [`pk_distribution`]; ties go to the smaller `k`.
pub fn pk_mode(r: SqueezeParam, angle: BsAngle) -> usize {
    let x2 = (r.lambda() * angle.transmittance()).powi(2);
    if 2.0 * x2 <= 1.0 {
        return 0;
    }
    let peak = 1.0 / (1.0 - x2) - 2.0;
    let lo = peak.floor().max(0.0) as usize;
    let hi = peak.ceil().max(0.0) as usize;
    // Compare in log space: ln p_k = 2k ln x + ln(k+1) + const.
    // Differences within rounding count as ties.
    let ln_p = |k: usize| k as f64 * x2.ln() + ((k + 1) as f64).ln();
    if ln_p(hi) > ln_p(lo) + PK_TIE_TOLERANCE {
        hi
    } else {
        lo
    }
}
