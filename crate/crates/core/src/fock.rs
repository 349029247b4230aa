//! Truncated Fock-space state containers.
//!
//! Two-mode states store a real coefficient matrix `c[j][k]` over the basis
//! `|j, k>` with `j, k <= k_max`. The four-mode state used by the premixed
//! ancilla circuit stores `c[u][l][ua][la]` with the system modes cut at
//! `k_max` and the ancilla modes at `ancilla_cap`.
//!
//! All amplitudes are real: every beam splitter in this crate has zero phase
//! and squeezing is real, so global signs are the only phase freedom.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Photon-number band inspected by the default tail check.
pub const DEFAULT_TAIL_BAND: usize = 5;
/// Largest top-band mass accepted by the default tail check.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;
/// Norm-squared below which a heralded branch counts as annihilated.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-30;
/// Schmidt values below this are ignored when forming `sum(s_k)`.
pub const DEFAULT_SCHMIDT_DROP: f64 = 1e-14;

/// Amplitude tail targeted by [`Cutoff::for_squeezing`]: `tanh(r)^(k_max - band) <= 1e-11`.
const POLICY_AMPLITUDE_TAIL: f64 = 1e-11;
const POLICY_MIN_K_MAX: usize = 40;
const POLICY_MAX_K_MAX: usize = 400;

/// Largest retained photon number per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cutoff(usize);

impl Cutoff {
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max < 1 {
            return Err(Error::Domain("cutoff k_max must be at least 1".into()));
        }
        Ok(Self(k_max))
    }

    /// Adaptive cutoff for a squeezed source with squeezing `r`.
    ///
    /// The squeezed-vacuum amplitudes fall off as `tanh(r)^k`, so the cutoff
    /// is sized for the amplitude (not the probability) tail: the logarithmic
    /// negativity depends on `sum(s_k)` and would otherwise carry an error of
    /// order `tanh(r)^k_max`. Clamped to `[40, 400]`.
    pub fn for_squeezing(r: f64) -> Self {
        let lambda = r.abs().tanh();
        if lambda <= 0.0 || !lambda.is_finite() {
            return Self(POLICY_MIN_K_MAX);
        }
        let needed = (POLICY_AMPLITUDE_TAIL.ln() / lambda.ln()).ceil();
        let needed = if needed.is_finite() && needed > 0.0 {
            needed.min(POLICY_MAX_K_MAX as f64) as usize
        } else {
            POLICY_MAX_K_MAX
        };
        Self((needed + DEFAULT_TAIL_BAND).clamp(POLICY_MIN_K_MAX, POLICY_MAX_K_MAX))
    }

    pub fn k_max(self) -> usize {
        self.0
    }

    /// Number of basis states per mode (`k_max + 1`).
    pub fn dim(self) -> usize {
        self.0 + 1
    }

    pub fn extended(self, extra: usize) -> Self {
        Self(self.0 + extra)
    }
}

/// Numerical policy shared by the protocol evaluators.
#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    /// Fixed cutoff; `None` selects [`Cutoff::for_squeezing`].
    pub cutoff: Option<Cutoff>,
    pub tail_band: usize,
    pub tail_tolerance: f64,
    pub zero_threshold: f64,
    pub schmidt_drop: f64,
    /// Downgrade a failed tail check to a logged warning.
    pub allow_truncation: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            cutoff: None,
            tail_band: DEFAULT_TAIL_BAND,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
            schmidt_drop: DEFAULT_SCHMIDT_DROP,
            allow_truncation: false,
        }
    }
}

impl Numerics {
    pub fn cutoff_for(&self, r: f64) -> Cutoff {
        self.cutoff.unwrap_or_else(|| Cutoff::for_squeezing(r))
    }

    /// Tail check on a state. Returns the measured tail mass.
    pub fn check_tail<S: FockState + ?Sized>(&self, state: &S) -> Result<f64> {
        let total = state.norm_squared();
        let tail = state.tail_mass(self.tail_band);
        let relative = if total > 0.0 { tail / total } else { 0.0 };
        if relative < self.tail_tolerance {
            return Ok(tail);
        }
        let k_max = state.cutoff().k_max();
        if self.allow_truncation {
            log::warn!(
                "truncation unsafe: tail mass {relative:e} >= {:e} at k_max = {k_max}",
                self.tail_tolerance
            );
            Ok(tail)
        } else {
            Err(Error::TruncationUnsafe {
                tail: relative,
                tolerance: self.tail_tolerance,
                k_max,
            })
        }
    }
}

/// Common surface of the state containers.
pub trait FockState {
    fn amplitudes(&self) -> &[f64];
    fn cutoff(&self) -> Cutoff;
    /// Probability mass in which any system mode index exceeds `k_max - band`.
    fn tail_mass(&self, band: usize) -> f64;

    fn norm_squared(&self) -> f64 {
        self.amplitudes().iter().map(|c| c * c).sum()
    }
}

/// `sum |c|^2` over all stored amplitudes.
pub fn norm_squared<S: FockState + ?Sized>(state: &S) -> f64 {
    state.norm_squared()
}

/// See [`FockState::tail_mass`].
pub fn tail_mass<S: FockState + ?Sized>(state: &S, band: usize) -> f64 {
    state.tail_mass(band)
}

/// Pure state of two bosonic modes, `sum c[j][k] |j, k>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    cutoff: Cutoff,
    coeffs: DMatrix<f64>,
    normalized: bool,
    spill: f64,
}

impl TwoModeState {
    pub fn zeros(cutoff: Cutoff) -> Self {
        Self {
            cutoff,
            coeffs: DMatrix::zeros(cutoff.dim(), cutoff.dim()),
            normalized: false,
            spill: 0.0,
        }
    }

    /// Wraps a square coefficient matrix; the cutoff is `rows - 1`.
    pub fn from_matrix(coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.nrows() != coeffs.ncols() || coeffs.nrows() < 2 {
            return Err(Error::Domain(format!(
                "two-mode coefficients must be square with at least 2 rows, got {}x{}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite amplitude".into()));
        }
        let cutoff = Cutoff::new(coeffs.nrows() - 1)?;
        let mut state = Self {
            cutoff,
            coeffs,
            normalized: false,
            spill: 0.0,
        };
        state.normalized = (state.norm_squared() - 1.0).abs() <= 1e-12;
        Ok(state)
    }

    /// Product Fock state `|j, k>`.
    pub fn fock(cutoff: Cutoff, j: usize, k: usize) -> Result<Self> {
        if j > cutoff.k_max() || k > cutoff.k_max() {
            return Err(Error::Domain(format!(
                "|{j},{k}> outside cutoff {}",
                cutoff.k_max()
            )));
        }
        let mut state = Self::zeros(cutoff);
        state.coeffs[(j, k)] = 1.0;
        state.normalized = true;
        Ok(state)
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        if j < self.coeffs.nrows() && k < self.coeffs.ncols() {
            self.coeffs[(j, k)]
        } else {
            0.0
        }
    }

    pub(crate) fn set(&mut self, j: usize, k: usize, value: f64) {
        self.coeffs[(j, k)] = value;
        self.normalized = false;
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Probability mass pushed beyond the cutoff while building this state.
    pub fn spill(&self) -> f64 {
        self.spill
    }

    pub(crate) fn with_spill(mut self, spill: f64) -> Self {
        self.spill = spill;
        self
    }

    /// Embeds the state into a larger cutoff (zero padding).
    pub fn padded(&self, cutoff: Cutoff) -> Self {
        assert!(cutoff >= self.cutoff, "cannot pad into a smaller cutoff");
        let mut coeffs = DMatrix::zeros(cutoff.dim(), cutoff.dim());
        coeffs
            .view_mut((0, 0), (self.cutoff.dim(), self.cutoff.dim()))
            .copy_from(&self.coeffs);
        Self {
            cutoff,
            coeffs,
            normalized: self.normalized,
            spill: self.spill,
        }
    }

    /// Swaps the roles of the two modes.
    pub fn transposed(&self) -> Self {
        Self {
            coeffs: self.coeffs.transpose(),
            ..self.clone()
        }
    }

    /// Flips the global sign so the largest-magnitude amplitude is positive.
    pub fn canonicalized(mut self) -> Self {
        let pivot =
            self.coeffs.iter().copied().fold(
                0.0_f64,
                |best, c| if c.abs() > best.abs() { c } else { best },
            );
        if pivot < 0.0 {
            self.coeffs.neg_mut();
        }
        self
    }

    /// `<self|other>`; states of different cutoffs are compared on the common block.
    pub fn overlap(&self, other: &Self) -> f64 {
        let dim = self.cutoff.dim().min(other.cutoff.dim());
        let mut acc = 0.0;
        for k in 0..dim {
            for j in 0..dim {
                acc += self.coeffs[(j, k)] * other.coeffs[(j, k)];
            }
        }
        acc
    }

    /// Largest absolute amplitude difference, treating missing entries as zero.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let dim = self.cutoff.dim().max(other.cutoff.dim());
        let mut worst = 0.0_f64;
        for k in 0..dim {
            for j in 0..dim {
                worst = worst.max((self.get(j, k) - other.get(j, k)).abs());
            }
        }
        worst
    }
}

impl FockState for TwoModeState {
    fn amplitudes(&self) -> &[f64] {
        self.coeffs.as_slice()
    }

    fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    fn tail_mass(&self, band: usize) -> f64 {
        let first = (self.cutoff.k_max() + 1).saturating_sub(band);
        let mut mass = 0.0;
        for k in 0..self.cutoff.dim() {
            for j in 0..self.cutoff.dim() {
                if j >= first || k >= first {
                    let c = self.coeffs[(j, k)];
                    mass += c * c;
                }
            }
        }
        mass
    }
}

/// Normalizes a state, returning it with its pre-normalization norm squared.
///
/// Fails with [`Error::ZeroState`] when the norm squared is at or below
/// `zero_threshold` (an annihilated heralded branch).
pub fn normalize(state: TwoModeState, zero_threshold: f64) -> Result<(TwoModeState, f64)> {
    let norm_squared = state.norm_squared();
    if norm_squared.is_nan() || norm_squared <= zero_threshold {
        return Err(Error::ZeroState { norm_squared });
    }
    let mut state = state;
    if !state.normalized {
        state.coeffs /= norm_squared.sqrt();
        state.normalized = true;
    }
    Ok((state, norm_squared))
}

/// Mode labels of [`FourModeState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FourMode {
    Upper,
    Lower,
    UpperAncilla,
    LowerAncilla,
}

impl FourMode {
    fn axis(self) -> usize {
        match self {
            FourMode::Upper => 0,
            FourMode::Lower => 1,
            FourMode::UpperAncilla => 2,
            FourMode::LowerAncilla => 3,
        }
    }
}

/// Pure state of two system modes and two ancilla modes, `c[u][l][ua][la]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourModeState {
    cutoff: Cutoff,
    ancilla_cap: usize,
    coeffs: Vec<f64>,
    spill: f64,
}

impl FourModeState {
    pub fn zeros(cutoff: Cutoff, ancilla_cap: usize) -> Self {
        let len = cutoff.dim() * cutoff.dim() * (ancilla_cap + 1) * (ancilla_cap + 1);
        Self {
            cutoff,
            ancilla_cap,
            coeffs: vec![0.0; len],
            spill: 0.0,
        }
    }

    /// `system ⊗ |m>_UA |n>_LA`. The system state is embedded into `cutoff`.
    pub fn with_fock_ancillas(
        system: &TwoModeState,
        m: usize,
        n: usize,
        cutoff: Cutoff,
        ancilla_cap: usize,
    ) -> Result<Self> {
        if system.cutoff() > cutoff {
            return Err(Error::Domain(
                "system state exceeds the four-mode cutoff".into(),
            ));
        }
        if m > ancilla_cap || n > ancilla_cap {
            return Err(Error::Domain(format!(
                "ancilla |{m},{n}> exceeds cap {ancilla_cap}"
            )));
        }
        let mut state = Self::zeros(cutoff, ancilla_cap);
        let dim = system.cutoff().dim();
        for l in 0..dim {
            for u in 0..dim {
                let c = system.get(u, l);
                if c != 0.0 {
                    let idx = state.index([u, l, m, n]);
                    state.coeffs[idx] = c;
                }
            }
        }
        state.spill = system.spill();
        Ok(state)
    }

    pub fn ancilla_cap(&self) -> usize {
        self.ancilla_cap
    }

    /// Extent of each axis, ordered `[U, L, UA, LA]`.
    pub fn dims(&self) -> [usize; 4] {
        let s = self.cutoff.dim();
        let a = self.ancilla_cap + 1;
        [s, s, a, a]
    }

    pub(crate) fn strides(&self) -> [usize; 4] {
        let [_, d1, d2, d3] = self.dims();
        [d1 * d2 * d3, d2 * d3, d3, 1]
    }

    fn index(&self, idx: [usize; 4]) -> usize {
        let st = self.strides();
        idx[0] * st[0] + idx[1] * st[1] + idx[2] * st[2] + idx[3] * st[3]
    }

    pub fn get(&self, idx: [usize; 4]) -> f64 {
        let dims = self.dims();
        if idx.iter().zip(dims).all(|(&i, d)| i < d) {
            self.coeffs[self.index(idx)]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, idx: [usize; 4], value: f64) {
        let i = self.index(idx);
        self.coeffs[i] = value;
    }

    /// Accumulated mass dropped by operations that left the stored index range.
    pub fn spill(&self) -> f64 {
        self.spill
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub(crate) fn add_spill(&mut self, spill: f64) {
        self.spill += spill;
    }

    pub(crate) fn axis_of(mode: FourMode) -> usize {
        mode.axis()
    }

    /// Projects the ancillas onto `<m'|_UA <n'|_LA` (unnormalized).
    pub fn project_ancillas(&self, m_prime: usize, n_prime: usize) -> TwoModeState {
        let mut out = TwoModeState::zeros(self.cutoff);
        if m_prime > self.ancilla_cap || n_prime > self.ancilla_cap {
            return out.with_spill(self.spill);
        }
        let dim = self.cutoff.dim();
        for l in 0..dim {
            for u in 0..dim {
                out.coeffs[(u, l)] = self.coeffs[self.index([u, l, m_prime, n_prime])];
            }
        }
        out.with_spill(self.spill)
    }
}

impl FockState for FourModeState {
    fn amplitudes(&self) -> &[f64] {
        &self.coeffs
    }

    fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    fn tail_mass(&self, band: usize) -> f64 {
        let first = (self.cutoff.k_max() + 1).saturating_sub(band);
        let [_, _, da, db] = self.dims();
        let block = da * db;
        let dim = self.cutoff.dim();
        let mut mass = 0.0;
        for u in 0..dim {
            for l in 0..dim {
                if u >= first || l >= first {
                    let start = (u * dim + l) * block;
                    mass += self.coeffs[start..start + block]
                        .iter()
                        .map(|c| c * c)
                        .sum::<f64>();
                }
            }
        }
        mass
    }
}

/// Schmidt coefficients of a pure two-mode state, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    pub values: Vec<f64>,
    /// Squared norm of the trailing rows and columns discarded before decomposition.
    pub residual: f64,
}

impl SchmidtSpectrum {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.iter_mut().for_each(|v| *v = v.abs());
        values.sort_by(|a, b| b.total_cmp(a));
        Self {
            values,
            residual: 0.0,
        }
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Rows or columns with squared norm below this are trimmed off the end before the SVD.
const SCHMIDT_TRIM: f64 = 1e-34;

/// Schmidt decomposition of a normalized two-mode state (singular values of `c`).
///
/// States with at most one nonzero per row and column are already in Schmidt
/// form and are read off directly. Everything else goes through a
/// Golub-Kahan SVD on the nonzero block.
pub fn schmidt(state: &TwoModeState) -> Result<SchmidtSpectrum> {
    let norm = state.norm_squared();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "schmidt requires a normalized state, got norm {norm}"
        )));
    }
    let c = state.coeffs();
    if let Some(values) = diagonal_form(c) {
        return Ok(SchmidtSpectrum::from_values(values));
    }

    let row_mass: Vec<f64> = c.row_iter().map(|r| r.norm_squared()).collect();
    let col_mass: Vec<f64> = c.column_iter().map(|r| r.norm_squared()).collect();
    let keep_rows = row_mass
        .iter()
        .rposition(|&m| m > SCHMIDT_TRIM)
        .map_or(1, |i| i + 1);
    let keep_cols = col_mass
        .iter()
        .rposition(|&m| m > SCHMIDT_TRIM)
        .map_or(1, |i| i + 1);
    let residual: f64 =
        row_mass[keep_rows..].iter().sum::<f64>() + col_mass[keep_cols..].iter().sum::<f64>();

    let block = c.view((0, 0), (keep_rows, keep_cols)).into_owned();
    let max_iter = 200 * keep_rows.max(keep_cols).max(10);
    let svd = block
        .try_svd(false, false, f64::EPSILON, max_iter)
        .ok_or_else(|| {
            Error::ConvergenceFailure(format!(
                "SVD of {keep_rows}x{keep_cols} block did not converge"
            ))
        })?;
    let mut spectrum = SchmidtSpectrum::from_values(svd.singular_values.iter().copied().collect());
    spectrum.residual = residual;
    let total = spectrum.sum_of_squares();
    if (total - 1.0).abs() > 1e-10 + residual {
        return Err(Error::ConvergenceFailure(format!(
            "Schmidt values square-sum to {total}, expected 1"
        )));
    }
    Ok(spectrum)
}

/// Magnitudes of the nonzeros if every row and column holds at most one.
fn diagonal_form(c: &DMatrix<f64>) -> Option<Vec<f64>> {
    let mut col_used = vec![false; c.ncols()];
    let mut values = Vec::new();
    for j in 0..c.nrows() {
        let mut seen = false;
        for k in 0..c.ncols() {
            let v = c[(j, k)];
            if v != 0.0 {
                if seen || col_used[k] {
                    return None;
                }
                seen = true;
                col_used[k] = true;
                values.push(v.abs());
            }
        }
    }
    Some(values)
}
