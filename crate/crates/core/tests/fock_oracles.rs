//! Fock-basis results checked against constructions that do not go through
//! the phase-space pipeline.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use photosub::fock::*;
use photosub::model::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Closed-form squeezed vacuum, x squeezed:
/// `c_2n = (−tanh r)^n √((2n)!)/(2^n n!) / √cosh r`.
fn squeezed_amplitudes(r: f64, cutoff: usize) -> Vec<f64> {
    let mut amp = vec![0.0; cutoff + 1];
    let mut c2n = 1.0 / r.cosh().sqrt();
    for n in 0..=cutoff / 2 {
        amp[2 * n] = c2n;
        let nf = n as f64;
        // c_{2n+2}/c_{2n} = −tanh r · √((2n+1)(2n+2)) / (2(n+1))
        c2n *= -r.tanh() * ((2.0 * nf + 1.0) * (2.0 * nf + 2.0)).sqrt() / (2.0 * (nf + 1.0));
    }
    amp
}

#[test]
fn squeezed_vacuum_matches_closed_form_amplitudes() {
    let r = std::f64::consts::LN_2 / 2.0; // a = 1/2
    let rho = squeezed_vacuum((-2.0 * r).exp(), 30).unwrap();
    let amp = squeezed_amplitudes(r, 30);
    for m in 0..=30 {
        for n in 0..=30 {
            let expect = amp[m] * amp[n];
            assert!(
                (rho.elements()[(m, n)].re - expect).abs() < 1e-10,
                "({m},{n}): {} vs {expect}",
                rho.elements()[(m, n)].re
            );
        }
    }
    let odd: f64 = rho.photon_distribution().iter().skip(1).step_by(2).sum();
    assert!(odd.abs() < 1e-14);
}

/// Plain midpoint quadrature of `2π ∬ W · W_{|m⟩⟨n|}` on a fine grid.
fn brute_force_element(coeffs: &QuadCoeffs, which: Branch, m: usize, n: usize) -> f64 {
    let (h, half) = (0.02, 7.0);
    let steps = (2.0 * half / h) as usize;
    let mut acc = 0.0;
    for i in 0..steps {
        let x = -half + (i as f64 + 0.5) * h;
        for j in 0..steps {
            let p = -half + (j as f64 + 0.5) * h;
            let pt = PhasePoint::new(x, p);
            let k = wigner_kernel_matrix(pt, m.max(n));
            acc += wigner_branch(coeffs, which, pt) * k[(m, n)].re;
        }
    }
    2.0 * PI * acc * h * h
}

#[test]
fn gauss_hermite_elements_match_brute_force_quadrature() {
    let coeffs = coeffs_from_params(&ExperimentParams::average_corrected(s_from_db(1.8), 0.05)).unwrap();
    let rho = single_mode_from_wigner(&coeffs, Branch::Subtracted, 8).unwrap();
    for (m, n) in [(0, 0), (1, 1), (2, 0), (3, 1), (4, 2), (6, 6)] {
        let brute = brute_force_element(&coeffs, Branch::Subtracted, m, n);
        assert!(
            (rho.elements()[(m, n)].re - brute).abs() < 1e-7,
            "({m},{n}): {} vs {brute}",
            rho.elements()[(m, n)].re
        );
    }
}

#[test]
fn beamsplitter_single_photon_rule() {
    let mut psi = vec![c(0.0); 9];
    psi[3] = c(1.0); // |1,0⟩ in the ± basis
    let pm = DensityMatrix::from_pure(2, 2, &psi).unwrap();
    let out = beamsplitter_rotate(&pm, BeamsplitterDirection::PlusMinusToOneTwo).unwrap();
    let mut expect = vec![c(0.0); 9];
    expect[3] = c(std::f64::consts::FRAC_1_SQRT_2);
    expect[1] = c(std::f64::consts::FRAC_1_SQRT_2);
    let target = DensityMatrix::from_pure(2, 2, &expect).unwrap();
    assert!((out.elements() - target.elements()).norm() < 1e-14);
}

#[test]
fn two_photon_interference() {
    // Hong–Ou–Mandel: |1,1⟩ in the ± basis has no |1,1⟩ component in 1,2.
    let mut psi = vec![c(0.0); 9];
    psi[4] = c(1.0);
    let pm = DensityMatrix::from_pure(2, 2, &psi).unwrap();
    let out = beamsplitter_rotate(&pm, BeamsplitterDirection::PlusMinusToOneTwo).unwrap();
    let i11 = out.index(1, 1);
    assert!(out.elements()[(i11, i11)].norm() < 1e-15);
    let i20 = out.index(2, 0);
    assert!((out.elements()[(i20, i20)].re - 0.5).abs() < 1e-14);
}

#[test]
fn ideal_tmss_at_3db() {
    let r = -nominal_s3().ln() / 2.0;
    assert!((r.tanh() - 1.0 / 3.0).abs() < 1e-15);
    let n = negativity(&oracle_ideal_tmss(r, 40).unwrap()).unwrap();
    assert!((n - 0.5).abs() < 1e-12, "{n}");
}

fn nominal_s3() -> f64 {
    s_from_db(nominal_3db())
}

#[test]
fn pipeline_initial_state_reproduces_tmss() {
    let params = ExperimentParams::ideal(nominal_s3());
    let res = analytic_negativity(&AnalyticTwoModeState::initial(&params).unwrap(), &DEFAULT_CUTOFF_SWEEP).unwrap();
    assert!(res.converged);
    assert!((res.negativity - 0.5).abs() < 1e-3, "{res:?}");
}

#[test]
fn pipeline_matches_subtracted_oracle() {
    for r in [0.1f64, 0.2, 0.35] {
        let params = ExperimentParams::ideal((-2.0 * r).exp());
        let state = AnalyticTwoModeState::conditioned(&params).unwrap();
        let pipe = analytic_negativity(&state, &DEFAULT_CUTOFF_SWEEP).unwrap();
        let oracle = negativity(&oracle_ideal_subtracted(r, 40).unwrap()).unwrap();
        assert!((pipe.negativity - oracle).abs() < 1e-3, "r={r}: {} vs {oracle}", pipe.negativity);

        // The two constructions differ by local quarter-period phases.
        let rho = two_mode_density(&state, 14).unwrap().normalized();
        let (o, _) = oracle_ideal_subtracted(r, 40).unwrap().truncated(14).unwrap();
        let o = apply_local_phase(&apply_local_phase(&o, 1, FRAC_PI_2).unwrap(), 2, -FRAC_PI_2).unwrap();
        let f = rho.fidelity(&o.normalized()).unwrap();
        assert!(f >= 1.0 - 1e-4, "r={r}: fidelity {f}");
    }
}

#[test]
fn ideal_subtracted_at_3db() {
    let r = -nominal_s3().ln() / 2.0;
    let oracle = negativity(&oracle_ideal_subtracted(r, 40).unwrap()).unwrap();
    assert!((oracle - 0.90).abs() <= 0.01, "{oracle}");
}

#[test]
fn weak_squeezing_approaches_closed_form_limit() {
    let cases = [(1.0, 0.0, 0.0), (0.78, 0.03, 0.22), (0.6, 0.1, 0.4), (0.9, 0.2, 0.1)];
    for (xi, reflectivity, gamma) in cases {
        let params = ExperimentParams {
            xi,
            reflectivity,
            gamma,
            ..ExperimentParams::ideal(1.0 - 1e-3)
        };
        let state = AnalyticTwoModeState::conditioned(&params).unwrap();
        let n = analytic_negativity(&state, &[6, 8]).unwrap().negativity;
        let limit = negativity_zero_squeezing_limit(&params);
        assert!((n - limit).abs() < 2e-3, "{xi},{reflectivity},{gamma}: {n} vs {limit}");
    }
}

#[test]
fn orientation_relabeling_leaves_negativity_unchanged() {
    let coeffs = coeffs_from_params(&ExperimentParams::average_corrected(s_from_db(2.5), 0.05)).unwrap();
    let n1 = analytic_negativity(&AnalyticTwoModeState::from_coeffs(coeffs).unwrap(), &[12, 14]).unwrap();
    let n2 = analytic_negativity(&AnalyticTwoModeState::from_coeffs(coeffs.swapped()).unwrap(), &[12, 14]).unwrap();
    assert!((n1.negativity - n2.negativity).abs() < 1e-10);
}

#[test]
fn local_phases_leave_negativity_unchanged() {
    let state = AnalyticTwoModeState::conditioned(&ExperimentParams::average_corrected(0.6, 0.05)).unwrap();
    let rho = two_mode_density(&state, 10).unwrap();
    let n = negativity(&rho).unwrap();
    for (phi1, phi2) in [(0.3, 0.0), (1.1, -2.0), (PI, FRAC_PI_2)] {
        let turned = apply_local_phase(&apply_local_phase(&rho, 1, phi1).unwrap(), 2, phi2).unwrap();
        assert!((negativity(&turned).unwrap() - n).abs() < 1e-10);
    }
}

#[test]
fn branch_reconstruction_route_agrees_with_direct_state() {
    // Branches in their own frame, combined by two_mode_from_branches.
    let coeffs = coeffs_from_params(&ExperimentParams::average_corrected(s_from_db(1.8), 0.05)).unwrap();
    let rho_s = single_mode_from_wigner(&coeffs.gaussian(), Branch::Squeezed, 20).unwrap();
    let rho_c = single_mode_from_wigner(&coeffs, Branch::Subtracted, 20).unwrap();
    let joined = two_mode_from_branches(&rho_s, &rho_c).unwrap();
    let (joined, _) = joined.truncated(10).unwrap();
    let direct = two_mode_density(&AnalyticTwoModeState::from_coeffs(coeffs).unwrap(), 10).unwrap();
    assert!((joined.elements() - direct.elements()).norm() < 1e-10);
}

#[test]
fn initial_state_is_gaussian_product_without_subtraction() {
    let params = ExperimentParams::ideal(0.5);
    let init = AnalyticTwoModeState::initial(&params).unwrap();
    assert_eq!(init.coeffs.sub_a, 0.0);
    assert_eq!(init.coeffs.sub_b, 0.0);
}
