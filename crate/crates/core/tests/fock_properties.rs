use nalgebra::DMatrix;
use num_complex::Complex64;
use photosub::fock::*;
use photosub::model::*;
use proptest::prelude::*;

/// Random mixed state `G G†/Tr` from a flat list of complex entries. With
/// `block_complete`, rows of `G` outside `n₁ + n₂ ≤ cutoff` are zeroed so the
/// state lives entirely in photon-number blocks the beamsplitter keeps.
fn random_state(modes: usize, cutoff: usize, raw: &[(f64, f64)], block_complete: bool) -> DensityMatrix {
    let dim = (cutoff + 1).pow(modes as u32);
    let rank = raw.len() / dim;
    let g = DMatrix::from_fn(dim, rank, |i, k| {
        let (n1, n2) = (i / (cutoff + 1), i % (cutoff + 1));
        if block_complete && modes == 2 && n1 + n2 > cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            let (re, im) = raw[i * rank + k];
            Complex64::new(re, im)
        }
    });
    let rho = &g * g.adjoint();
    let t = rho.trace().re;
    DensityMatrix::new(modes, cutoff, rho.unscale(t)).unwrap()
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn beamsplitter_preserves_spectrum(raw in entries(16 * 3)) {
        let rho = random_state(2, 3, &raw, true);
        prop_assert!(photon_number_leakage(&rho).unwrap() < 1e-15);
        let out = beamsplitter_rotate(&rho, BeamsplitterDirection::PlusMinusToOneTwo).unwrap();
        let (before, after) = (sorted(rho.eigenvalues()), sorted(out.eigenvalues()));
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!((out.purity() - rho.purity()).abs() < 1e-12);
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        prop_assert!(out.hermiticity_error() < 1e-12);
    }

    #[test]
    fn beamsplitter_inverse_is_identity(raw in entries(25 * 2)) {
        let rho = random_state(2, 4, &raw, false);
        // Arbitrary states are handled block by block, so the round trip holds
        // on every block the map keeps.
        let there = beamsplitter_rotate(&rho, BeamsplitterDirection::PlusMinusToOneTwo).unwrap();
        let back = beamsplitter_rotate(&there, BeamsplitterDirection::OneTwoToPlusMinus).unwrap();
        let d = 5;
        for i in 0..rho.dim() {
            for j in 0..rho.dim() {
                let keep = |k: usize| k / d + k % d <= 4;
                if keep(i) && keep(j) {
                    prop_assert!((back.elements()[(i, j)] - rho.elements()[(i, j)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn partial_transpose_is_trace_preserving_involution(raw in entries(16 * 4), mode in 1usize..=2) {
        let rho = random_state(2, 3, &raw, false);
        let pt = partial_transpose(&rho, mode).unwrap();
        prop_assert!((pt.trace() - rho.trace()).abs() < 1e-14);
        prop_assert!(pt.hermiticity_error() < 1e-14);
        let twice = partial_transpose(&pt, mode).unwrap();
        prop_assert_eq!(twice.elements(), rho.elements());
    }

    #[test]
    fn product_states_have_zero_negativity(a in entries(5 * 2), b in entries(5 * 3)) {
        let (ra, rb) = (random_state(1, 4, &a, false), random_state(1, 4, &b, false));
        let joint = two_mode_assemble(&ra, &rb).unwrap();
        prop_assert!(negativity(&joint).unwrap() < 1e-8);
        prop_assert!(partial_transpose(&joint, 1).unwrap().eigenvalues().iter().all(|&l| l > -1e-12));
        prop_assert!((joint.purity() - ra.purity() * rb.purity()).abs() < 1e-12);
        prop_assert!((joint.trace() - ra.trace() * rb.trace()).abs() < 1e-14);
    }

    #[test]
    fn negativity_is_bounded_and_local_unitary_invariant(raw in entries(16 * 2), phi in -3.0f64..3.0) {
        let rho = random_state(2, 3, &raw, false);
        let n = negativity(&rho).unwrap();
        // (d − 1)/2 bound for a d×d system.
        prop_assert!((0.0..=1.5 + 1e-12).contains(&n));
        let turned = apply_local_phase(&rho, 2, phi).unwrap();
        prop_assert!((negativity(&turned).unwrap() - n).abs() < 1e-10);
    }

    #[test]
    fn model_states_are_physical(
        s in 0.45f64..1.0,
        reflectivity in 0.0f64..0.15,
        xi in 0.5f64..1.0,
        gamma in 0.0f64..0.4,
        eta in 0.6f64..1.0,
    ) {
        let params = ExperimentParams { reflectivity, xi, gamma, eta, excess_noise: 0.01, ..ExperimentParams::ideal(s) };
        let coeffs = coeffs_from_params(&params).unwrap();
        for branch in [Branch::Squeezed, Branch::Subtracted] {
            let rho = single_mode_from_wigner(&coeffs, branch, 24).unwrap();
            prop_assert!(rho.hermiticity_error() < 1e-10);
            prop_assert!(rho.trace() <= 1.0 + 1e-10);
            prop_assert!(rho.truncation_deficit() < TRUNCATION_TOLERANCE);
            prop_assert!(rho.eigenvalues().iter().all(|&l| l > -1e-8));
        }
        let two = two_mode_density(&AnalyticTwoModeState::conditioned(&params).unwrap(), 8).unwrap();
        prop_assert!(two.hermiticity_error() < 1e-10);
        prop_assert!(two.eigenvalues().iter().all(|&l| l > -1e-8));
        prop_assert!(two.trace() <= 1.0 + 1e-10);
    }
}

#[test]
fn negativity_never_grows_with_detection_loss() {
    // Rows: excess noise e; columns: transmission η(1−R).
    let noise = [0.0, 0.02, 0.05, 0.1, 0.2];
    let transmission = [1.0, 0.9, 0.8, 0.7, 0.6];
    let table: Vec<Vec<f64>> = noise
        .iter()
        .map(|&e| {
            transmission
                .iter()
                .map(|&t| {
                    let params = ExperimentParams {
                        eta: t,
                        excess_noise: e,
                        ..ExperimentParams::average_corrected(s_from_db(2.0), 0.0)
                    };
                    let state = AnalyticTwoModeState::conditioned(&params).unwrap();
                    analytic_negativity(&state, &[10, 12]).unwrap().negativity
                })
                .collect()
        })
        .collect();
    for i in 0..noise.len() {
        for j in 0..transmission.len() {
            if i + 1 < noise.len() {
                assert!(table[i + 1][j] <= table[i][j] + 1e-9, "e: {table:?}");
            }
            if j + 1 < transmission.len() {
                assert!(table[i][j + 1] <= table[i][j] + 1e-9, "eta: {table:?}");
            }
        }
    }
}

#[test]
fn json_export_round_trips() {
    let rho = two_mode_density(&AnalyticTwoModeState::conditioned(&ExperimentParams::ideal(0.7)).unwrap(), 3).unwrap();
    let back: DensityMatrix = serde_json::from_str(&rho.to_json().unwrap()).unwrap();
    assert_eq!(back.cutoff(), 3);
    assert!((back.elements() - rho.elements()).norm() < 1e-12);
}
