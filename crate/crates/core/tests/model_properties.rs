use std::f64::consts::PI;

use photosub::model::*;
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = ExperimentParams> {
    (0.25f64..1.0, 0.0f64..0.3, 0.3f64..1.0, 0.0f64..0.6, 0.4f64..1.0, 0.0f64..0.1).prop_map(
        |(s, reflectivity, xi, gamma, eta, excess_noise)| ExperimentParams {
            reflectivity,
            xi,
            gamma,
            eta,
            excess_noise,
            ..ExperimentParams::ideal(s)
        },
    )
}

/// Trapezoid rule on `[−half, half]`; spectrally accurate for the rapidly
/// decaying integrands here.
fn trapezoid(f: impl Fn(f64) -> f64, half: f64, nodes: usize) -> f64 {
    let h = 2.0 * half / (nodes - 1) as f64;
    (0..nodes)
        .map(|i| {
            let w = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
            w * f(-half + i as f64 * h)
        })
        .sum::<f64>()
        * h
}

fn integrate_2d(f: impl Fn(f64, f64) -> f64, half: f64, nodes: usize) -> f64 {
    trapezoid(|x| trapezoid(|p| f(x, p), half, nodes), half, nodes)
}

fn extent(c: &QuadCoeffs) -> f64 {
    9.0 * c.a.max(c.b).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coefficients_are_physical(params in params_strategy()) {
        let c = coeffs_from_params(&params).unwrap();
        prop_assert!(c.a > 0.0 && c.b > 0.0 && c.sub_a >= 0.0 && c.sub_b >= 0.0);
        // s ≤ 1 squeezes x.
        prop_assert!(c.a <= c.b + 1e-12);
        let bound = coeffs_from_params(&ExperimentParams { xi: 1.0, ..params }).unwrap();
        prop_assert!(c.sub_a <= bound.sub_a + 1e-15 && c.sub_b <= bound.sub_b + 1e-15);
    }

    #[test]
    fn wigner_factors_normalize(params in params_strategy()) {
        let c = coeffs_from_params(&params).unwrap();
        let half = extent(&c);
        let ns = integrate_2d(|x, p| wigner_s(&c, PhasePoint::new(x, p)), half, 241);
        let nc = integrate_2d(|x, p| wigner_c(&c, PhasePoint::new(x, p)), half, 241);
        prop_assert!((ns - 1.0).abs() < 1e-6, "{ns}");
        prop_assert!((nc - 1.0).abs() < 1e-6, "{nc}");
    }

    #[test]
    fn marginals_normalize(params in params_strategy(), theta in 0.0f64..(2.0 * PI)) {
        let c = coeffs_from_params(&params).unwrap();
        for which in [Branch::Squeezed, Branch::Subtracted] {
            let m = marginal(&c, which, theta);
            let total = trapezoid(|x| m.pdf(x), extent(&c), 801);
            prop_assert!((total - 1.0).abs() < 1e-8, "{which:?}: {total}");
        }
    }

    #[test]
    fn marginal_is_projection_of_wigner(
        params in params_strategy(),
        theta in 0.0f64..(2.0 * PI),
        x in -2.5f64..2.5,
    ) {
        let c = coeffs_from_params(&params).unwrap();
        let (ct, st) = (theta.cos(), theta.sin());
        let projected = trapezoid(
            |y| wigner_c(&c, PhasePoint::new(x * ct - y * st, x * st + y * ct)),
            extent(&c),
            601,
        );
        let closed = marginal(&c, Branch::Subtracted, theta).pdf(x);
        prop_assert!((projected - closed).abs() < 1e-8, "{projected} vs {closed}");
    }

    #[test]
    fn closed_form_moments_match_wigner_moments(params in params_strategy(), theta in 0.0f64..PI) {
        let c = coeffs_from_params(&params).unwrap();
        let (ct, st) = (theta.cos(), theta.sin());
        let half = extent(&c);
        let moment = |k: i32| {
            integrate_2d(
                |x, p| (x * ct + p * st).powi(k) * wigner_c(&c, PhasePoint::new(x, p)),
                half,
                241,
            )
        };
        let m = marginal(&c, Branch::Subtracted, theta);
        prop_assert!((moment(2) - m.second_moment()).abs() < 1e-4);
        prop_assert!((moment(4) - m.fourth_moment()).abs() < 1e-4);
    }

    #[test]
    fn marginal_phase_symmetries(params in params_strategy(), theta in 0.0f64..PI, x in -4.0f64..4.0) {
        let c = coeffs_from_params(&params).unwrap();
        let m = |t: f64, x: f64| marginal(&c, Branch::Subtracted, t).pdf(x);
        prop_assert!((m(theta, x) - m(PI - theta, x)).abs() < 1e-14);
        prop_assert!((m(theta, x) - m(PI + theta, -x)).abs() < 1e-14);
    }

    #[test]
    fn two_mode_swap_symmetry(
        params in params_strategy(),
        q in prop::array::uniform4(-2.5f64..2.5),
    ) {
        let state = AnalyticTwoModeState::conditioned(&params).unwrap();
        let (p1, p2) = (PhasePoint::new(q[0], q[1]), PhasePoint::new(q[2], q[3]));
        let w = wigner_two_mode(&state, p1, p2);
        prop_assert_eq!(w, wigner_two_mode(&state, p2, p1));
    }
}

#[test]
fn theta_zero_moments_of_subtracted_marginal() {
    let c = coeffs_from_params(&ExperimentParams::average_measured(s_from_db(1.8), 0.05)).unwrap();
    let m = marginal(&c, Branch::Subtracted, 0.0);
    let m2 = trapezoid(|x| x * x * m.pdf(x), 12.0, 2001);
    let m4 = trapezoid(|x| x.powi(4) * m.pdf(x), 12.0, 2001);
    assert!((m2 - (c.a / 2.0 + c.sub_a)).abs() < 1e-10);
    assert!((m4 - (0.75 * c.a * c.a + 3.0 * c.a * c.sub_a)).abs() < 1e-10);
}

#[test]
fn four_dimensional_normalization() {
    for params in [
        ExperimentParams::ideal(0.5),
        ExperimentParams::average_corrected(s_from_db(1.8), 0.05),
        ExperimentParams::average_measured(s_from_db(3.2), 0.1),
    ] {
        let state = AnalyticTwoModeState::conditioned(&params).unwrap();
        let half = extent(&state.coeffs);
        let nodes = 41;
        let h = 2.0 * half / (nodes - 1) as f64;
        let grid: Vec<f64> = (0..nodes).map(|i| -half + i as f64 * h).collect();
        let mut total = 0.0;
        for &x1 in &grid {
            for &p1 in &grid {
                for &x2 in &grid {
                    for &p2 in &grid {
                        total += wigner_two_mode(&state, PhasePoint::new(x1, p1), PhasePoint::new(x2, p2));
                    }
                }
            }
        }
        total *= h.powi(4);
        assert!((total - 1.0).abs() < 1e-4, "{params:?}: {total}");

        let origin = wigner_two_mode(&state, PhasePoint::default(), PhasePoint::default());
        let product = wigner_s(&state.factor_coeffs(Branch::Squeezed), PhasePoint::default())
            * wigner_c(&state.coeffs, PhasePoint::default());
        assert!((origin - product).abs() < 1e-15);
    }
}

#[test]
fn no_subtraction_weight_leaves_gaussian() {
    let c = coeffs_from_params(&ExperimentParams { xi: 0.0, ..ExperimentParams::average_measured(0.6, 0.05) }).unwrap();
    for (x, p) in [(0.0, 0.0), (0.7, -1.2), (-2.0, 0.4)] {
        let pt = PhasePoint::new(x, p);
        assert!((wigner_c(&c, pt) - wigner_s(&c, pt)).abs() < 1e-16);
    }
}
