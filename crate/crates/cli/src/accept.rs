//! Numerical acceptance checks. Each returns a [`Criterion`] instead of
//! panicking so the whole list can be reported even when some fail.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;
use photosub::fock::{
    analytic_negativity, beamsplitter_rotate, negativity, oracle_ideal_subtracted, oracle_ideal_tmss,
    partial_transpose, two_mode_density, BeamsplitterDirection, DensityMatrix,
};
use photosub::model::{
    coeffs_from_params, negativity_zero_squeezing_limit, nominal_3db, s_from_db, wigner_c, wigner_s,
    AnalyticTwoModeState, Basis, Branch, ExperimentParams, PhasePoint,
};
use photosub::tomography::{
    moment_fit, sample_homodyne, separability_test, substream, GridSpec, MomentFitSettings, WignerGrid,
    MIN_BOOTSTRAP_RESAMPLES,
};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{CrossoverConfig, Preset, RunConfig};
use crate::crossover::find_crossover;
use crate::error::{CliError, CliResult, StageExt};
use crate::output::{ensure_dir, write_json, Provenance};
use crate::pipeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub values: serde_json::Value,
}

impl Criterion {
    fn new(id: u8, name: &str, checks: &[Check]) -> Self {
        Self {
            id,
            name: name.to_string(),
            passed: checks.iter().all(|c| c.ok()),
            detail: checks.iter().map(Check::describe).collect::<Vec<_>>().join("; "),
            values: serde_json::to_value(checks).expect("checks serialize"),
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

/// One measured value and the closed interval it must fall in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Printed form of the requirement.
    pub requirement: String,
}

impl Check {
    fn within(label: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            value,
            lower: target - tolerance,
            upper: target + tolerance,
            requirement: format!("{} ± {}", num(target), num(tolerance)),
        }
    }

    fn at_most(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            value,
            lower: f64::NEG_INFINITY,
            upper: bound,
            requirement: format!("≤ {}", num(bound)),
        }
    }

    fn above(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            value,
            lower: bound,
            upper: f64::INFINITY,
            requirement: format!("> {}", num(bound)),
        }
    }

    fn flag(label: impl Into<String>, holds: bool) -> Self {
        Self {
            label: label.into(),
            value: if holds { 1.0 } else { 0.0 },
            lower: 1.0,
            upper: 1.0,
            requirement: "true".into(),
        }
    }

    /// NaN values fail.
    pub fn ok(&self) -> bool {
        self.value >= self.lower && self.value <= self.upper
    }

    fn describe(&self) -> String {
        if self.requirement == "true" {
            return format!("{} = {}", self.label, self.value == 1.0);
        }
        format!("{} = {} ({})", self.label, num(self.value), self.requirement)
    }
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.2e}")
    } else {
        let s = format!("{x:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn three_db() -> f64 {
    s_from_db(nominal_3db())
}

/// Cutoffs used for the model negativities in this suite.
const SWEEP: [usize; 4] = [10, 12, 14, 16];

fn conditioned_n(p: &ExperimentParams) -> CliResult<f64> {
    Ok(analytic_negativity(&AnalyticTwoModeState::conditioned(p)?, &SWEEP)?.require_converged()?.negativity)
}

fn initial_n(p: &ExperimentParams) -> CliResult<f64> {
    Ok(analytic_negativity(&AnalyticTwoModeState::initial(p)?, &SWEEP)?.require_converged()?.negativity)
}

pub fn criterion_1() -> CliResult<Criterion> {
    let r = LN_2 / 2.0;
    let lambda = r.tanh();
    let closed = lambda / (1.0 - lambda);
    let oracle = negativity(&oracle_ideal_tmss(r, 30)?)?;
    let model = initial_n(&ExperimentParams::ideal(three_db()))?;
    Ok(Criterion::new(
        1,
        "ideal two-mode squeezed vacuum at 3 dB",
        &[
            Check::within("closed form", closed, 0.5, 1e-12),
            Check::within("Fock oracle", oracle, 0.5, 1e-9),
            Check::within("model", model, 0.5, 1e-3),
        ],
    ))
}

pub fn criterion_2() -> CliResult<Criterion> {
    let oracle = negativity(&oracle_ideal_subtracted(LN_2 / 2.0, 30)?)?;
    let model = conditioned_n(&ExperimentParams::ideal(three_db()))?;
    Ok(Criterion::new(
        2,
        "ideal photon subtraction at 3 dB",
        &[Check::within("Fock oracle", oracle, 0.90, 0.01), Check::within("model", model, 0.90, 0.01)],
    ))
}

pub fn criterion_3() -> CliResult<Criterion> {
    let p = ExperimentParams {
        reflectivity: 0.03,
        ..ExperimentParams::ideal(three_db())
    };
    Ok(Criterion::new(3, "pick-off loss only, 3 dB", &[Check::within("N", conditioned_n(&p)?, 0.81, 0.01)]))
}

pub fn criterion_4() -> CliResult<Criterion> {
    let p = ExperimentParams::average_corrected(three_db(), 0.03);
    Ok(Criterion::new(
        4,
        "average imperfections, 3 dB, corrected",
        &[Check::within("N", conditioned_n(&p)?, 0.51, 0.01), Check::within("N0", initial_n(&p)?, 0.49, 0.01)],
    ))
}

pub fn criterion_5() -> CliResult<Criterion> {
    let measured = Preset::Moderate.measured_params();
    let corrected = measured.corrected();
    let origin = PhasePoint::default();
    Ok(Criterion::new(
        5,
        "1.8 dB, R = 5% model values",
        &[
            Check::within("N", conditioned_n(&corrected)?, 0.34, 0.02),
            Check::within("N0", initial_n(&corrected)?, 0.24, 0.01),
            Check::within("Wc(0) corrected", wigner_c(&coeffs_from_params(&corrected)?, origin), -0.13, 0.01),
            Check::within("Wc(0) uncorrected", wigner_c(&coeffs_from_params(&measured)?, origin), 0.01, 0.01),
        ],
    ))
}

pub fn criterion_6() -> CliResult<Criterion> {
    let scan = CrossoverConfig::default();
    let mut checks = Vec::new();
    for (xi, target) in [(0.78, 3.0), (0.82, 4.0)] {
        let base = ExperimentParams {
            reflectivity: 0.03,
            xi,
            gamma: scan.gamma,
            ..ExperimentParams::ideal(1.0)
        };
        let c = find_crossover(&scan, base, &SWEEP)?;
        checks.push(Check::within(format!("crossover dB at xi={xi}"), c.crossover_db.unwrap_or(f64::NAN), target, 0.5));
    }
    Ok(Criterion::new(6, "initial/final negativity crossover", &checks))
}

pub fn criterion_7(seed: u64) -> CliResult<Criterion> {
    let mut rng = substream(seed, 7);
    let s = 1.0 - 1e-3;
    let mut checks = Vec::new();
    let mut points: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| (rng.random_range(0.5..1.0), rng.random_range(0.0..0.2), rng.random_range(0.0..0.5)))
        .collect();
    points.push((1.0, 0.0, 0.0));
    for (xi, r, gamma) in points {
        let p = ExperimentParams {
            reflectivity: r,
            xi,
            gamma,
            ..ExperimentParams::ideal(s)
        };
        let limit = negativity_zero_squeezing_limit(&p);
        let label = format!("xi={xi:.3} R={r:.3} gamma={gamma:.3}");
        checks.push(Check::within(label, conditioned_n(&p)?, limit, 2e-3));
    }
    let unit = ExperimentParams::ideal(1.0);
    checks.push(Check::within("closed form at C=1", negativity_zero_squeezing_limit(&unit), 0.5, 1e-12));
    Ok(Criterion::new(7, "zero-squeezing limit", &checks))
}

pub fn criterion_8(cfg: &RunConfig) -> CliResult<Criterion> {
    let cfg = RunConfig {
        tomography: Default::default(),
        ..cfg.clone()
    };
    let (report, _) = pipeline::simulate(&cfg)?;
    let truth = report.truth_corrected.negativity;
    let ml = report.maxlik_corrected.estimate.negativity;
    let ml_u = report.maxlik_uncorrected.estimate.negativity;
    let radon = report.radon.negativity;
    Ok(Criterion::new(
        8,
        "tomography round trip, 12 phases x 2e4",
        &[
            Check::within("MaxLik N (corrected)", ml, truth, 0.03),
            Check::within("Radon N vs MaxLik N (uncorrected)", radon, ml_u, 0.03),
            Check::flag("converged", report.converged),
        ],
    ))
}

pub fn criterion_9(seed: u64) -> CliResult<Criterion> {
    let c = coeffs_from_params(&Preset::Moderate.measured_params())?;
    let phases = [0.0, FRAC_PI_2];
    let mut seeds = substream(seed, 9);
    let dc = sample_homodyne(&c, Branch::Subtracted, &phases, 100_000, seeds.next_u64())?;
    let ds = sample_homodyne(&c.gaussian(), Branch::Squeezed, &phases, 100_000, seeds.next_u64())?;
    let settings = MomentFitSettings {
        resamples: MIN_BOOTSTRAP_RESAMPLES,
        seed: seeds.next_u64(),
    };
    let fit = moment_fit(&dc, Some(&ds), &settings).stage("moment fit")?.coeffs;
    let rel = |est: f64, truth: f64| ((est - truth) / truth).abs();
    let mut checks = vec![
        Check::at_most("a rel. error", rel(fit.a, c.a), 0.03),
        Check::at_most("b rel. error", rel(fit.b, c.b), 0.03),
        Check::at_most("A rel. error", rel(fit.sub_a, c.sub_a), 0.03),
        Check::at_most("B rel. error", rel(fit.sub_b, c.sub_b), 0.03),
    ];

    // RMS relative error over repeated draws, three decades of sample size.
    let sizes = [100usize, 1_000, 10_000, 100_000];
    let repeats = 24;
    let mut logs = Vec::new();
    for &n in &sizes {
        let mut sq = 0.0;
        for _ in 0..repeats {
            let d = sample_homodyne(&c, Branch::Subtracted, &phases, n, seeds.next_u64())?;
            let f = moment_fit(&d, None, &settings).stage("moment fit")?.coeffs;
            sq += rel(f.a, c.a).powi(2) + rel(f.b, c.b).powi(2) + rel(f.sub_a, c.sub_a).powi(2) + rel(f.sub_b, c.sub_b).powi(2);
        }
        logs.push(((n as f64).ln(), (sq / repeats as f64).sqrt().ln()));
    }
    checks.push(Check::within("error slope", least_squares_slope(&logs), -0.5, 0.1));
    Ok(Criterion::new(9, "moment fit accuracy and scaling", &checks))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn criterion_10(seed: u64) -> CliResult<Criterion> {
    let params = ExperimentParams::average_corrected(three_db(), 0.03);
    let pm = AnalyticTwoModeState::conditioned(&params)?.with_basis(Basis::PlusMinus);
    let mut rng = substream(seed, 10);
    let deg = PI / 180.0;
    let mut pairs = vec![(20.0, 50.0)];
    pairs.extend((0..4).map(|_| (rng.random_range(0.0..180.0f64).round(), rng.random_range(0.0..180.0f64).round())));
    let mut checks = Vec::new();
    for (t1, t2) in pairs {
        let r = separability_test(&pm, t1 * deg, t2 * deg, 20_000, rng.next_u64())?;
        checks.push(Check::above(format!("p(± basis, {t1}°, {t2}°)"), r.p_value, 0.05));
    }
    let ideal = AnalyticTwoModeState::conditioned(&ExperimentParams::ideal(three_db()))?;
    let r = separability_test(&ideal, 0.0, 0.0, 20_000, rng.next_u64())?;
    checks.push(Check::at_most("p(1,2 basis, 0°, 0°)", r.p_value, 0.05));
    Ok(Criterion::new(10, "factorization in the ± basis", &checks))
}

fn block_projected(rho: &DensityMatrix) -> CliResult<DensityMatrix> {
    let d = rho.cutoff();
    let mut m = rho.elements().clone();
    for n1 in 0..=d {
        for n2 in 0..=d {
            if n1 + n2 > d {
                let i = rho.index(n1, n2);
                m.row_mut(i).fill(Complex64::new(0.0, 0.0));
                m.column_mut(i).fill(Complex64::new(0.0, 0.0));
            }
        }
    }
    Ok(DensityMatrix::new(2, d, m)?)
}

pub fn criterion_11(seed: u64) -> CliResult<Criterion> {
    let mut rng = substream(seed, 11);
    let mut worst = [0.0f64; 6];
    for _ in 0..6 {
        let p = ExperimentParams {
            s: s_from_db(rng.random_range(0.25..3.5)),
            reflectivity: rng.random_range(0.0..0.15),
            xi: rng.random_range(0.5..1.0),
            gamma: rng.random_range(0.0..0.4),
            eta: rng.random_range(0.6..1.0),
            excess_noise: rng.random_range(0.0..0.03),
            ..ExperimentParams::ideal(1.0)
        };
        let state = AnalyticTwoModeState::conditioned(&p)?;
        let rho = two_mode_density(&state.with_basis(Basis::OneTwo), 10)?;
        let min_eig = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        let twice = partial_transpose(&partial_transpose(&rho, 1)?, 1)?;

        let pm = block_projected(&two_mode_density(&state.with_basis(Basis::PlusMinus), 10)?)?;
        let mut before = pm.eigenvalues();
        let mut after = beamsplitter_rotate(&pm, BeamsplitterDirection::PlusMinusToOneTwo)?.eigenvalues();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        let spectrum = before.iter().zip(&after).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

        let grid = GridSpec::square(8.0, 161);
        let norm_c = WignerGrid::from_fn(grid, |pt| wigner_c(&state.factor_coeffs(Branch::Subtracted), pt))?.riemann_sum();
        let norm_s = WignerGrid::from_fn(grid, |pt| wigner_s(&state.factor_coeffs(Branch::Squeezed), pt))?.riemann_sum();

        let errs = [
            rho.hermiticity_error(),
            (rho.trace() - 1.0).abs(),
            (-min_eig).max(0.0),
            (twice.elements() - rho.elements()).norm(),
            spectrum,
            (norm_c - 1.0).abs().max((norm_s - 1.0).abs()),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    Ok(Criterion::new(
        11,
        "structural invariants on random parameters",
        &[
            Check::at_most("hermiticity", worst[0], 1e-10),
            Check::at_most("trace deficit", worst[1], 1e-3),
            Check::at_most("negative eigenvalue", worst[2], 1e-10),
            Check::at_most("PT involution", worst[3], 1e-12),
            Check::at_most("beamsplitter spectrum", worst[4], 1e-10),
            Check::at_most("Wigner normalization", worst[5], 1e-6),
        ],
    ))
}

/// Evaluates criterion `id`. Errors inside a criterion count as a failure.
pub fn evaluate(id: u8, cfg: &RunConfig) -> Criterion {
    let result = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(cfg.seed),
        8 => criterion_8(cfg),
        9 => criterion_9(cfg.seed),
        10 => criterion_10(cfg.seed),
        11 => criterion_11(cfg.seed),
        _ => unreachable!("criteria are numbered 1 to 11"),
    };
    result.unwrap_or_else(|e| Criterion {
        id,
        name: format!("criterion {id}"),
        passed: false,
        detail: format!("error: {e}"),
        values: json!(null),
    })
}

pub const CRITERIA: std::ops::RangeInclusive<u8> = 1..=11;

/// Runs every criterion, prints one line each and writes `acceptance.json`.
pub fn run(cfg: &RunConfig) -> CliResult<Vec<Criterion>> {
    run_selected(cfg, &CRITERIA.collect::<Vec<_>>())
}

/// Like [`run`] for a subset of criterion numbers.
pub fn run_selected(cfg: &RunConfig, ids: &[u8]) -> CliResult<Vec<Criterion>> {
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.contains(id)) {
        return Err(CliError::Config(format!("no acceptance criterion {bad}")));
    }
    let results: Vec<Criterion> = ids
        .iter()
        .map(|&id| {
            let c = evaluate(id, cfg);
            println!("{}", c.line());
            c
        })
        .collect();
    ensure_dir(&cfg.out)?;
    write_json(
        &cfg.out.join("acceptance.json"),
        &Provenance::new("accept", cfg),
        &json!({
            "passed": results.iter().filter(|c| c.passed).count(),
            "total": results.len(),
            "criteria": results,
        }),
    )?;
    Ok(results)
}
