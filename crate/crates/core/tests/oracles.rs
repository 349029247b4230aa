//! Library results against slow, independent reference computations.

use herald_core::fock::FourModeState;
use herald_core::oracle::{expm, DenseBeamSplitter};
use herald_core::protocols::setup1_coefficients;
use herald_core::{
    apply_full_bs, log_negativity_pure, run_setup1, run_setup2, schmidt, BsAngle, Cutoff,
    FockState, FourMode, HeraldSpec, Numerics, SqueezeParam, TwoModeState,
};
use nalgebra::DMatrix;

fn sq(r: f64) -> SqueezeParam {
    SqueezeParam::new(r).unwrap()
}

fn t(x: f64) -> BsAngle {
    BsAngle::from_transmittance(x).unwrap()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let tan = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let tan = if tau == 0.0 { 1.0 } else { tan };
                let c = 1.0 / (1.0 + tan * tan).sqrt();
                let s = tan * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

fn schmidt_by_jacobi(state: &TwoModeState) -> Vec<f64> {
    let m = state.coeffs();
    jacobi_eigenvalues(m * m.transpose())
        .into_iter()
        .map(|e| e.max(0.0).sqrt())
        .collect()
}

#[test]
fn schmidt_values_match_jacobi_on_premixed_addition() {
    let numerics = Numerics {
        cutoff: Some(Cutoff::new(30).unwrap()),
        ..Numerics::default()
    };
    let out = run_setup2(sq(0.3), &HeraldSpec::premixed_addition(t(0.7)), &numerics).unwrap();
    let state = out.state.unwrap();
    let fast = schmidt(&state).unwrap();
    let slow = schmidt_by_jacobi(&state);
    for (a, b) in fast.values.iter().zip(&slow) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn premixed_addition_matches_hand_built_superposition() {
    // (1 - x²) Σ x^k √(k+1) (|k+1,k> + |k,k+1>)/√2 with x = λ cos²θ.
    let (r, a) = (sq(0.3), t(0.7));
    let numerics = Numerics::default();
    let out = run_setup2(r, &HeraldSpec::premixed_addition(a), &numerics).unwrap();
    let state = out.state.unwrap();
    let x = r.lambda() * a.transmittance();
    let dim = state.coeffs().nrows();
    let mut expected = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim - 1 {
        let amp = (1.0 - x * x) * x.powi(k as i32) * ((k + 1) as f64).sqrt() / 2f64.sqrt();
        expected[(k + 1, k)] = amp;
        expected[(k, k + 1)] = amp;
    }
    let diff = (state.coeffs() - &expected).abs().max();
    assert!(diff < 1e-10, "max deviation {diff}");

    let success = (1.0 / r.r().cosh()).powi(2) * a.reflectance() / (1.0 - x * x).powi(2);
    assert!((out.success_prob - success).abs() < 1e-10);
}

#[test]
fn independent_arm_coefficients_match_dense_splitter() {
    // Each |k, k> term sees the upper splitter as a two-mode unitary on
    // (system, ancilla); the lower mode only labels the term.
    let (r, a) = (sq(0.4), t(0.35));
    let cutoff = Cutoff::new(12).unwrap();
    let dense = DenseBeamSplitter::new(a, 18);
    for (m, mp) in [(1, 0), (1, 1), (0, 1), (2, 1), (1, 3)] {
        let spec = HeraldSpec::noop().with_upper(m, mp, a);
        let c = setup1_coefficients(r, &spec, cutoff);
        assert_eq!(c.len(), 13);
        for (k, &ck) in c.iter().enumerate() {
            let source = (1.0 / r.r().cosh()) * r.lambda().powi(k as i32);
            let brute = if k + m >= mp {
                source * dense.element(m, mp, k, k + m - mp)
            } else {
                0.0
            };
            assert!(
                (ck - brute).abs() < 1e-12,
                "m={m} m'={mp} k={k}: {ck} vs {brute}"
            );
        }
    }
}

/// Dense four-mode space with `d` levels per mode, axes (U, L, UA, LA).
struct Dense4 {
    d: usize,
}

impl Dense4 {
    fn index(&self, n: [usize; 4]) -> usize {
        ((n[0] * self.d + n[1]) * self.d + n[2]) * self.d + n[3]
    }

    fn states(&self) -> impl Iterator<Item = [usize; 4]> + '_ {
        let d = self.d;
        (0..d.pow(4)).map(move |i| [i / d.pow(3), (i / d.pow(2)) % d, (i / d) % d, i % d])
    }

    /// `exp{θ(a_i† a_j − a_j† a_i)}`.
    fn splitter(&self, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
        let n = self.d.pow(4);
        let mut gen = DMatrix::<f64>::zeros(n, n);
        for s in self.states() {
            if s[j] > 0 && s[i] + 1 < self.d {
                let mut o = s;
                o[i] += 1;
                o[j] -= 1;
                gen[(self.index(o), self.index(s))] += theta * ((s[j] * (s[i] + 1)) as f64).sqrt();
            }
            if s[i] > 0 && s[j] + 1 < self.d {
                let mut o = s;
                o[i] -= 1;
                o[j] += 1;
                gen[(self.index(o), self.index(s))] -= theta * ((s[i] * (s[j] + 1)) as f64).sqrt();
            }
        }
        expm(&gen)
    }
}

#[test]
fn premixed_circuit_matches_dense_four_mode_exponential() {
    // Input Σ_{k≤1} c_k |k,k> ⊗ |1>|1>: at most 4 photons, exact for d = 5.
    let d = 5;
    let dense = Dense4 { d };
    let coeffs = [0.8, -0.6];
    let (tu, tl, ta) = (t(0.6), t(0.3), BsAngle::new(0.5).unwrap());

    let mut psi = nalgebra::DVector::<f64>::zeros(d.pow(4));
    for (k, c) in coeffs.iter().enumerate() {
        psi[dense.index([k, k, 1, 1])] = *c;
    }
    // Axis order (U, L, UA, LA); pairs are (first, second) as passed to apply_full_bs.
    let psi = dense.splitter(3, 2, ta.theta()) * psi;
    let psi = dense.splitter(0, 2, tu.theta()) * psi;
    let psi = dense.splitter(1, 3, tl.theta()) * psi;

    let cutoff = Cutoff::new(1).unwrap();
    let mut system = TwoModeState::zeros(cutoff);
    let mut m = system.coeffs().clone();
    for (k, c) in coeffs.iter().enumerate() {
        m[(k, k)] = *c;
    }
    system = TwoModeState::from_matrix(m).unwrap();
    let wide = Cutoff::new(4).unwrap();
    let four = FourModeState::with_fock_ancillas(&system, 1, 1, wide, 4).unwrap();
    let four = apply_full_bs(&four, (FourMode::LowerAncilla, FourMode::UpperAncilla), ta);
    let four = apply_full_bs(&four, (FourMode::Upper, FourMode::UpperAncilla), tu);
    let four = apply_full_bs(&four, (FourMode::Lower, FourMode::LowerAncilla), tl);
    assert!(four.spill() < 1e-15);

    for s in dense.states() {
        let expected = psi[dense.index(s)];
        let got = if s[0] <= 4 && s[1] <= 4 && s[2] <= 4 && s[3] <= 4 {
            four.get(s)
        } else {
            0.0
        };
        assert!(
            (expected - got).abs() < 1e-12,
            "{s:?}: dense {expected} vs library {got}"
        );
    }
}

#[test]
fn vacuum_addition_through_balanced_splitter_is_a_product() {
    let out = run_setup1(
        sq(0.0),
        &HeraldSpec::noop().with_upper(1, 0, t(0.5)),
        &Numerics::default(),
    )
    .unwrap();
    let state = out.state.unwrap();
    assert!((out.success_prob - 0.5).abs() < 1e-15);
    assert!((state.get(1, 0) - 1.0).abs() < 1e-15);
    assert!(out.e_n.unwrap().abs() < 1e-15);
}

#[test]
fn negativity_of_premixed_limit_is_one_bit() {
    let out = run_setup2(
        sq(1e-6),
        &HeraldSpec::premixed_addition(t(0.5)),
        &Numerics::default(),
    )
    .unwrap();
    let spectrum = schmidt(out.state.as_ref().unwrap()).unwrap();
    assert!((log_negativity_pure(&spectrum).unwrap() - 1.0).abs() < 1e-6);
    assert!((out.success_prob - 0.5).abs() < 1e-6);
    assert!(out.state.unwrap().norm_squared() > 0.0);
}
