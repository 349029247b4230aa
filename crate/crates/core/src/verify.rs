//! Self-check suite run by `herald verify`.
//!
//! Each check evaluates one structural property of the library at a fixed
//! grid and reports pass/fail with the worst deviation observed.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beamsplitter::{
    apply_conditional, apply_full_bs, bs_coefficient, make_conditional_op, BsAngle, Side,
};
use crate::entanglement::{log_negativity_from_coefficients, log_negativity_pure};
use crate::error::Result;
use crate::fock::{
    normalize, schmidt, Cutoff, FockState, FourMode, FourModeState, Numerics, SchmidtSpectrum,
    TwoModeState,
};
use crate::oracle::DenseBeamSplitter;
use crate::protocols::{
    run_setup1, run_setup1_on_input, run_setup2, setup1_coefficients, setup2_addition_analytic,
    setup2_four_mode, tmsvs, HeraldSpec, SqueezeParam,
};
use crate::sweep::{optimize, sweep, write_table, Bounds, Protocol, SweepGrid, TableFormat};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn bound(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst <= tol,
        detail: format!("worst deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn from_result(name: &'static str, res: Result<Check>) -> Check {
    res.unwrap_or_else(|e| Check {
        name,
        passed: false,
        detail: format!("error: {e}"),
    })
}

type CheckFn = fn() -> Result<Check>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("fock/norm-preservation", norm_preservation),
    ("fock/schmidt-normalization-and-swap", schmidt_swap),
    ("fock/schmidt-product-rank-one", schmidt_product),
    ("beamsplitter/unitarity", unitarity),
    ("beamsplitter/dense-oracle-and-selection-rule", dense_oracle),
    ("beamsplitter/special-cases", special_cases),
    ("beamsplitter/catalysis-kill-zero", kill_zero),
    ("beamsplitter/branch-norm", branch_norm),
    ("protocols/herald-completeness", herald_completeness),
    ("protocols/setup1-schmidt-form", setup1_schmidt_form),
    ("protocols/premix-zero-reduction", premix_reduction),
    ("protocols/closed-form-equivalence", closed_form_equivalence),
    ("protocols/noop-baseline", noop_baseline),
    ("entanglement/uniform-maximum", uniform_maximum),
    (
        "entanglement/permutation-invariance",
        permutation_invariance,
    ),
    ("entanglement/two-routes", two_routes),
    ("sweep/determinism", determinism),
    ("sweep/refinement-soundness", refinement_soundness),
    ("sweep/identity-limit", identity_limit),
];

/// Runs every check, calling `progress` after each one.
pub fn run_all_with(mut progress: impl FnMut(&Check)) -> VerifyReport {
    let mut report = VerifyReport::default();
    for (name, check) in CHECKS {
        let c = from_result(name, check());
        progress(&c);
        report.checks.push(c);
    }
    report
}

pub fn run_all() -> VerifyReport {
    run_all_with(|_| {})
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed)
}

fn angle_grid(points: usize) -> Vec<BsAngle> {
    (0..points)
        .map(|i| {
            BsAngle::new(0.1 + 1.4 * i as f64 / (points - 1) as f64).expect("grid inside [0, pi/2]")
        })
        .collect()
}

fn random_two_mode(rng: &mut ChaCha8Rng, k_max: usize) -> TwoModeState {
    let d = k_max + 1;
    let m = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let s = TwoModeState::from_matrix(m).expect("finite square matrix");
    normalize(s, 0.0).expect("random state is nonzero").0
}

fn norm_preservation() -> Result<Check> {
    let mut rng = rng();
    let cut = Cutoff::new(6)?;
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let mut s = FourModeState::zeros(cut, 3);
        let [d0, d1, d2, d3] = s.dims();
        for u in 0..d0 {
            for l in 0..d1 {
                for a in 0..d2 {
                    for b in 0..d3 {
                        s.set([u, l, a, b], rng.gen_range(-1.0..1.0));
                    }
                }
            }
        }
        let before = s.norm_squared();
        let theta = BsAngle::new(rng.gen_range(0.0..std::f64::consts::FRAC_PI_2))?;
        for pair in [
            (FourMode::Upper, FourMode::UpperAncilla),
            (FourMode::LowerAncilla, FourMode::UpperAncilla),
            (FourMode::Upper, FourMode::Lower),
        ] {
            let out = apply_full_bs(&s, pair, theta);
            // Relative to the input mass; the random state is not normalized.
            worst = worst.max(((out.norm_squared() + out.spill()) - before).abs() / before);
        }
    }
    Ok(bound("fock/norm-preservation", worst, 1e-12))
}

fn schmidt_swap() -> Result<Check> {
    let mut rng = rng();
    let mut worst = 0.0_f64;
    for k_max in [1, 3, 8, 20] {
        let s = random_two_mode(&mut rng, k_max);
        let a = schmidt(&s)?;
        let b = schmidt(&s.transposed())?;
        worst = worst.max((a.sum_of_squares() - 1.0).abs());
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(bound("fock/schmidt-normalization-and-swap", worst, 1e-10))
}

fn schmidt_product() -> Result<Check> {
    let mut rng = rng();
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let d = 8;
        let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = DMatrix::from_fn(d, d, |j, k| u[j] * v[k]);
        let (s, _) = normalize(TwoModeState::from_matrix(m)?, 0.0)?;
        let spec = schmidt(&s)?;
        worst = worst.max((spec.values[0] - 1.0).abs());
        worst = worst.max(spec.values[1..].iter().copied().fold(0.0, f64::max));
    }
    Ok(bound("fock/schmidt-product-rank-one", worst, 1e-12))
}

fn unitarity() -> Result<Check> {
    let mut worst = 0.0_f64;
    for a in angle_grid(15) {
        for m in 0..=4 {
            for k in 0..=40 {
                let total: f64 = (0..=m + k)
                    .map(|mp| bs_coefficient(m, mp, k, a).powi(2))
                    .sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
    }
    Ok(bound("beamsplitter/unitarity", worst, 1e-12))
}

fn dense_oracle() -> Result<Check> {
    let dim = 18;
    let mut worst = 0.0_f64;
    for theta in [0.2, 0.7, 1.2, std::f64::consts::FRAC_PI_4] {
        let a = BsAngle::new(theta)?;
        let dense = DenseBeamSplitter::new(a, dim);
        for m in 0..=3 {
            for mp in 0..=5 {
                for k in 0..=10 {
                    for k_out in 0..=(k + m).min(dim - 1) {
                        let brute = dense.element(m, mp, k, k_out);
                        let want = if k + m >= mp && k_out == k + m - mp {
                            bs_coefficient(m, mp, k, a)
                        } else {
                            0.0
                        };
                        worst = worst.max((brute - want).abs());
                    }
                }
            }
        }
    }
    Ok(bound(
        "beamsplitter/dense-oracle-and-selection-rule",
        worst,
        1e-9,
    ))
}

fn special_cases() -> Result<Check> {
    let mut worst = 0.0_f64;
    for a in angle_grid(8) {
        let (c, s) = (a.cos(), a.sin());
        for k in 0..=40 {
            let ki = k as i32;
            worst = worst.max((bs_coefficient(0, 0, k, a) - c.powi(ki)).abs());
            worst = worst.max(
                (bs_coefficient(1, 1, k, a) - c.powi(ki - 1) * (c * c - k as f64 * s * s)).abs(),
            );
            worst = worst
                .max((bs_coefficient(1, 0, k, a) - s * c.powi(ki) * ((k + 1) as f64).sqrt()).abs());
        }
    }
    Ok(bound("beamsplitter/special-cases", worst, 1e-13))
}

fn kill_zero() -> Result<Check> {
    let mut worst = 0.0_f64;
    for k in 1..=5 {
        let a = BsAngle::from_transmittance(k as f64 / (k + 1) as f64)?;
        worst = worst.max(bs_coefficient(1, 1, k, a).abs());
    }
    Ok(bound("beamsplitter/catalysis-kill-zero", worst, 1e-14))
}

fn branch_norm() -> Result<Check> {
    let mut rng = rng();
    let mut worst = 0.0_f64;
    let cut = Cutoff::new(12)?;
    for _ in 0..10 {
        let mut diag = TwoModeState::zeros(cut);
        let coeffs: Vec<f64> = (0..cut.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut m = diag.coeffs().clone();
        for (k, c) in coeffs.iter().enumerate() {
            m[(k, k)] = c / norm;
        }
        diag = TwoModeState::from_matrix(m)?;
        let (mi, mpi) = (rng.gen_range(0..3), rng.gen_range(0..3));
        let op = make_conditional_op(mi, mpi, BsAngle::new(rng.gen_range(0.0..1.5))?, cut);
        let out = apply_conditional(&op, Side::First, &diag);
        let direct: f64 = (0..cut.dim())
            .map(|k| (coeffs[k] / norm * op.b[k]).powi(2))
            .sum();
        worst = worst.max((out.norm_squared() + out.spill() - direct).abs());
    }
    Ok(bound("beamsplitter/branch-norm", worst, 1e-14))
}

fn herald_completeness() -> Result<Check> {
    let numerics = Numerics::default();
    let r = SqueezeParam::new(0.8)?;
    let a = BsAngle::from_transmittance(0.6)?;
    let cutoff = numerics.cutoff_for(r.r());
    // Branch norms straight from the coefficients: the high-m' branches sit
    // on the cutoff edge and would trip the tail guard if normalized.
    let mut total = 0.0;
    for mp in 0..=(1 + cutoff.k_max()) {
        let spec = HeraldSpec::noop().with_upper(1, mp, a);
        total += setup1_coefficients(r, &spec, cutoff)
            .iter()
            .map(|c| c * c)
            .sum::<f64>();
    }
    let spill = r.lambda().powi(2 * cutoff.dim() as i32);
    let setup1 = (total - 1.0).abs() - spill;

    // Premixed circuit: every ancilla outcome of a small state with a wide ancilla cap.
    let small = Numerics {
        cutoff: Some(Cutoff::new(16)?),
        ..Numerics::default()
    };
    let r2 = SqueezeParam::new(0.2)?;
    let spec = HeraldSpec::noop()
        .with_upper(1, 0, a)
        .with_lower(1, 0, BsAngle::from_transmittance(0.3)?)
        .with_premix(BsAngle::balanced());
    let wide = HeraldSpec {
        m_prime: 20,
        n_prime: 20,
        ..spec
    };
    let four = setup2_four_mode(r2, &wide, &small)?;
    let mut branch_sum = 0.0;
    for mp in 0..=four.ancilla_cap() {
        for np in 0..=four.ancilla_cap() {
            branch_sum += four.project_ancillas(mp, np).norm_squared();
        }
    }
    let input = tmsvs(r2, &small)?.norm_squared();
    let setup2 = (branch_sum + four.spill() - input).abs();
    let worst = setup1.max(setup2).max(0.0);
    Ok(bound("protocols/herald-completeness", worst, 1e-9))
}

fn setup1_schmidt_form() -> Result<Check> {
    let numerics = Numerics::default();
    let mut worst = 0.0_f64;
    for r in [0.2, 0.7, 1.3] {
        let r = SqueezeParam::new(r)?;
        let src = tmsvs(r, &numerics)?;
        for (m, mp, n, np) in [
            (1, 0, 0, 0),
            (1, 1, 0, 0),
            (1, 2, 0, 0),
            (2, 1, 1, 1),
            (1, 1, 2, 2),
        ] {
            let a = BsAngle::from_transmittance(0.65)?;
            let lower = if n == 0 && np == 0 {
                BsAngle::IDENTITY
            } else {
                a
            };
            let spec = HeraldSpec::noop()
                .with_upper(m, mp, a)
                .with_lower(n, np, lower);
            let direct = run_setup1(r, &spec, &numerics)?;
            let generic = run_setup1_on_input(&src, r, &spec, &numerics)?;
            let spectrum = schmidt(direct.state.as_ref().expect("branch survives"))?;
            worst = worst.max((log_negativity_pure(&spectrum)? - direct.e_n.unwrap()).abs());
            worst = worst.max((generic.e_n.unwrap() - direct.e_n.unwrap()).abs());
        }
    }
    Ok(bound("protocols/setup1-schmidt-form", worst, 1e-10))
}

fn premix_reduction() -> Result<Check> {
    let numerics = Numerics::default();
    let r = SqueezeParam::new(0.5)?;
    let mut worst = 0.0_f64;
    let angles = [BsAngle::new(0.3)?, BsAngle::new(0.9)?, BsAngle::new(1.4)?];
    for m in 0..=2 {
        for n in 0..=2 {
            for mp in 0..=2 {
                for np in 0..=2 {
                    for (i, &au) in angles.iter().enumerate() {
                        let al = angles[(i + 1) % angles.len()];
                        let spec = HeraldSpec::noop()
                            .with_upper(m, mp, au)
                            .with_lower(n, np, al);
                        let one = run_setup1(r, &spec, &numerics)?;
                        let two = run_setup2(r, &spec, &numerics)?;
                        worst = worst.max((one.success_prob - two.success_prob).abs());
                        match (&one.state, &two.state) {
                            (Some(a), Some(b)) => {
                                worst = worst.max(a.max_abs_diff(b));
                                worst = worst.max((one.e_n.unwrap() - two.e_n.unwrap()).abs());
                            }
                            (None, None) => {}
                            _ => worst = f64::INFINITY,
                        }
                    }
                }
            }
        }
    }
    Ok(bound("protocols/premix-zero-reduction", worst, 1e-12))
}

fn closed_form_equivalence() -> Result<Check> {
    let numerics = Numerics::default();
    let mut worst = 0.0_f64;
    for r in [0.1, 0.45, 0.8, 1.15, 1.5] {
        for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let r = SqueezeParam::new(r)?;
            let a = BsAngle::from_transmittance(t)?;
            let num = run_setup2(r, &HeraldSpec::premixed_addition(a), &numerics)?;
            let ana = setup2_addition_analytic(r, a, &numerics)?;
            worst = worst.max((num.success_prob - ana.success_prob).abs());
            worst = worst.max((num.e_n.unwrap() - ana.e_n.unwrap()).abs());
            let overlap = num
                .state
                .as_ref()
                .unwrap()
                .overlap(ana.state.as_ref().unwrap());
            worst = worst.max(1.0 - overlap);
        }
    }
    Ok(bound("protocols/closed-form-equivalence", worst, 1e-10))
}

fn noop_baseline() -> Result<Check> {
    let numerics = Numerics::default();
    let mut worst = 0.0_f64;
    for i in 0..=15 {
        let r = SqueezeParam::new(0.1 * i as f64)?;
        let out = run_setup1(r, &HeraldSpec::noop(), &numerics)?;
        worst = worst.max(out.delta_e_n.unwrap().abs());
    }
    Ok(bound("protocols/noop-baseline", worst, 1e-9))
}

fn uniform_maximum() -> Result<Check> {
    let mut rng = rng();
    let mut violations = 0;
    let mut worst = 0.0_f64;
    for d in 1..=6 {
        let uniform = SchmidtSpectrum::from_values(vec![(1.0 / d as f64).sqrt(); d]);
        let top = log_negativity_pure(&uniform)?;
        worst = worst.max((top - (d as f64).log2()).abs());
        for _ in 0..200 {
            let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = SchmidtSpectrum::from_values(raw.iter().map(|x| x / norm).collect());
            if log_negativity_pure(&s)? > top + 1e-12 {
                violations += 1;
            }
        }
    }
    Ok(Check {
        name: "entanglement/uniform-maximum",
        passed: violations == 0 && worst < 1e-12,
        detail: format!("{violations} random spectra above log2(d); uniform error {worst:.3e}"),
    })
}

fn permutation_invariance() -> Result<Check> {
    let mut rng = rng();
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let raw: Vec<f64> = (0..7).map(|_| rng.gen_range(0.0..1.0)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let mut rev = v.clone();
        rev.reverse();
        // Bypass the sorting constructor so the sums really run in different orders.
        let a = log_negativity_pure(&SchmidtSpectrum {
            values: v,
            residual: 0.0,
        })?;
        let b = log_negativity_pure(&SchmidtSpectrum {
            values: rev,
            residual: 0.0,
        })?;
        worst = worst.max((a - b).abs());
    }
    Ok(bound("entanglement/permutation-invariance", worst, 1e-14))
}

fn two_routes() -> Result<Check> {
    let numerics = Numerics::default();
    let mut worst = 0.0_f64;
    for r in [0.3, 1.0] {
        let r = SqueezeParam::new(r)?;
        let cutoff = numerics.cutoff_for(r.r());
        for t in [0.2, 0.5, 0.8] {
            let a = BsAngle::from_transmittance(t)?;
            let spec = HeraldSpec::noop().with_upper(1, 1, a).with_lower(2, 1, a);
            let c = setup1_coefficients(r, &spec, cutoff);
            let out = run_setup1(r, &spec, &numerics)?;
            let spectrum = schmidt(out.state.as_ref().unwrap())?;
            worst = worst.max(
                (log_negativity_from_coefficients(&c)? - log_negativity_pure(&spectrum)?).abs(),
            );
        }
    }
    Ok(bound("entanglement/two-routes", worst, 1e-10))
}

fn determinism() -> Result<Check> {
    let numerics = Numerics::default();
    let grid = SweepGrid {
        r_min: 0.1,
        r_max: 1.2,
        r_steps: 6,
        t_min: 0.1,
        t_max: 0.9,
        t_steps: 6,
    };
    let spec = HeraldSpec::premixed_addition(BsAngle::balanced());
    let mut bytes = Vec::new();
    for _ in 0..2 {
        let table = sweep(Protocol::Setup2, &spec, &grid, &numerics)?;
        let mut buf = Vec::new();
        write_table(&table, TableFormat::Csv, &mut buf)?;
        bytes.push(buf);
    }
    Ok(Check {
        name: "sweep/determinism",
        passed: bytes[0] == bytes[1],
        detail: format!("{} bytes per run", bytes[0].len()),
    })
}

fn refinement_soundness() -> Result<Check> {
    let numerics = Numerics::default();
    let spec = HeraldSpec::noop().with_upper(1, 1, BsAngle::IDENTITY);
    let rep = optimize(Protocol::Setup1, &spec, &Bounds::default(), 0.1, &numerics)?;
    Ok(Check {
        name: "sweep/refinement-soundness",
        passed: rep.delta_e_n >= rep.coarse_best - 1e-12 && rep.success_prob >= rep.p_min,
        detail: format!(
            "refined {:.6} vs coarse {:.6} at r = {:.4}, T = {:.4}",
            rep.delta_e_n, rep.coarse_best, rep.best_r, rep.best_t
        ),
    })
}

fn identity_limit() -> Result<Check> {
    let numerics = Numerics::default();
    let a = BsAngle::from_transmittance(0.999)?;
    let mut worst_delta = 0.0_f64;
    let mut worst_success = 0.0_f64;
    for r in [0.1, 0.5, 1.0] {
        let out = run_setup1(
            SqueezeParam::new(r)?,
            &HeraldSpec::noop().with_upper(1, 1, a),
            &numerics,
        )?;
        worst_delta = worst_delta.max(out.delta_e_n.unwrap().abs());
        worst_success = worst_success.max(1.0 - out.success_prob);
    }
    Ok(Check {
        name: "sweep/identity-limit",
        passed: worst_delta < 0.01 && worst_success < 0.01,
        detail: format!(
            "at T = 0.999: |delta_E_N| <= {worst_delta:.3e}, 1 - P <= {worst_success:.3e}"
        ),
    })
}
