//! Simulate homodyne data for one parameter point, reconstruct it three ways
//! and compare against the model.

use std::path::Path;

use photosub::fock::{
    analytic_negativity, negativity_sweep, single_mode_from_grid, two_mode_from_branches, DensityMatrix,
    NegativityResult,
};
use photosub::model::{
    coeffs_from_params, wigner_c, AnalyticTwoModeState, Branch, ExperimentParams, PhasePoint, QuadCoeffs,
};
use photosub::tomography::{
    correct_for_losses, default_phases, invert_params, maxlik_reconstruct, moment_fit, radon_reconstruct,
    sample_homodyne, substream, MaxLikResult, MaxLikSettings, MomentFit, MomentFitSettings, QuadratureDataset,
    RadonSettings, RecoveredParams, WignerGrid,
};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliResult, StageExt};
use crate::output::{ensure_dir, write_csv, write_json, Provenance};

/// Independent seeds for the pipeline's random stages.
fn child_seed(seed: u64, stage: u64) -> u64 {
    substream(seed, u64::MAX - stage).next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEstimate {
    pub negativity: f64,
    pub convergence_delta: f64,
    pub wc_origin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxLikStage {
    pub estimate: StateEstimate,
    pub iterations: (usize, usize),
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentStage {
    pub fit: MomentFit,
    pub recovered: RecoveredParams,
    pub corrected_coeffs: QuadCoeffs,
    pub uncorrected: StateEstimate,
    pub corrected: StateEstimate,
    pub initial_negativity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub truth: f64,
    pub radon: Option<f64>,
    pub maxlik: Option<f64>,
    pub moments: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub measured_params: ExperimentParams,
    pub samples_per_phase: usize,
    pub phases: Vec<f64>,
    pub truth_uncorrected: StateEstimate,
    pub truth_corrected: StateEstimate,
    pub truth_initial_negativity: f64,
    pub radon: StateEstimate,
    pub radon_normalization: (f64, f64),
    pub maxlik_uncorrected: MaxLikStage,
    pub maxlik_corrected: MaxLikStage,
    pub moments: MomentStage,
    pub comparison: Vec<ComparisonRow>,
    /// False when a MaxLik run or a model negativity did not converge.
    pub converged: bool,
}

/// Intermediate products kept for writing to disk.
pub struct PipelineArtifacts {
    pub data_c: QuadratureDataset,
    pub data_s: QuadratureDataset,
    pub radon_c: WignerGrid,
    pub radon_s: WignerGrid,
    pub maxlik: Vec<(&'static str, DensityMatrix)>,
}

fn analytic(coeffs: QuadCoeffs, sweep: &[usize]) -> CliResult<(StateEstimate, NegativityResult)> {
    let n = analytic_negativity(&AnalyticTwoModeState::from_coeffs(coeffs)?, sweep)?;
    Ok((
        StateEstimate {
            negativity: n.negativity,
            convergence_delta: n.convergence_delta,
            wc_origin: wigner_c(&coeffs, PhasePoint::default()),
        },
        n,
    ))
}

fn reconstructed(rho_s: &DensityMatrix, rho_c: &DensityMatrix) -> CliResult<StateEstimate> {
    let c = rho_c.cutoff();
    let two = two_mode_from_branches(rho_s, rho_c)?;
    let n = negativity_sweep(&two, &[c - 4, c - 2, c])?;
    Ok(StateEstimate {
        negativity: n.negativity,
        convergence_delta: n.convergence_delta,
        wc_origin: rho_c.wigner(PhasePoint::default())?,
    })
}

fn maxlik_pair(
    data_s: &QuadratureDataset,
    data_c: &QuadratureDataset,
    settings: &MaxLikSettings,
    stage: &'static str,
) -> CliResult<(MaxLikStage, MaxLikResult, MaxLikResult)> {
    let (rs, rc) = rayon::join(
        || maxlik_reconstruct(data_s, settings),
        || maxlik_reconstruct(data_c, settings),
    );
    let (rs, rc) = (rs.stage(stage)?, rc.stage(stage)?);
    let estimate = reconstructed(&rs.rho, &rc.rho)?;
    Ok((
        MaxLikStage {
            estimate,
            iterations: (rs.iterations, rc.iterations),
            converged: rs.converged && rc.converged,
        },
        rs,
        rc,
    ))
}

pub fn simulate(cfg: &RunConfig) -> CliResult<(PipelineReport, PipelineArtifacts)> {
    let t = &cfg.tomography;
    let measured = t.measured_params();
    let corrected = measured.corrected();
    let coeffs = coeffs_from_params(&measured)?;
    let phases = default_phases(t.phases);
    let sweep = cfg.cutoff_sweep();

    let data_c = sample_homodyne(&coeffs, Branch::Subtracted, &phases, t.samples_per_phase, child_seed(cfg.seed, 0))
        .stage("sampling")?;
    let data_s = sample_homodyne(
        &coeffs.gaussian(),
        Branch::Squeezed,
        &phases,
        t.samples_per_phase,
        child_seed(cfg.seed, 1),
    )
    .stage("sampling")?;

    let (truth_uncorrected, nu) = analytic(coeffs, &sweep)?;
    let (truth_corrected, nc) = analytic(coeffs_from_params(&corrected)?, &sweep)?;
    let initial = analytic_negativity(&AnalyticTwoModeState::initial(&corrected)?, &sweep)?;
    let mut converged = nu.converged && nc.converged && initial.converged;

    // Back-projection: exported grids, then finer grids for density matrices.
    let radon_c = radon_reconstruct(&data_c, &t.radon).stage("radon")?;
    let radon_s = radon_reconstruct(&data_s, &t.radon).stage("radon")?;
    let rho_settings = RadonSettings {
        grid: t.radon_rho_grid,
        ..t.radon
    };
    let cutoff = t.maxlik.cutoff;
    let to_rho = |d: &QuadratureDataset| -> CliResult<DensityMatrix> {
        let g = radon_reconstruct(d, &rho_settings).stage("radon")?;
        Ok(single_mode_from_grid(&g, cutoff)?.projected_physical())
    };
    let mut radon = reconstructed(&to_rho(&data_s)?, &to_rho(&data_c)?)?;
    radon.wc_origin = radon_c.origin_value();

    let plain = MaxLikSettings {
        eta: 1.0,
        excess_noise: 0.0,
        ..t.maxlik
    };
    let dressed = plain.with_detector(measured.eta, measured.excess_noise);
    let (ml_u, mu_s, mu_c) = maxlik_pair(&data_s, &data_c, &plain, "maxlik")?;
    let (ml_c, mc_s, mc_c) = maxlik_pair(&data_s, &data_c, &dressed, "maxlik with loss model")?;
    converged &= ml_u.converged && ml_c.converged;

    let fit = moment_fit(
        &data_c,
        Some(&data_s),
        &MomentFitSettings {
            resamples: t.moment_resamples,
            seed: child_seed(cfg.seed, 2),
        },
    )
    .stage("moment fit")?;
    let recovered = invert_params(&fit.coeffs, measured.s, measured.eta, measured.excess_noise)
        .stage("parameter inversion")?;
    let corrected_coeffs = correct_for_losses(&recovered).stage("loss correction")?;
    let (m_uncorrected, _) = analytic(fit.coeffs, &sweep)?;
    let (m_corrected, _) = analytic(corrected_coeffs, &sweep)?;
    let m_initial = analytic_negativity(&AnalyticTwoModeState::initial(&recovered.params().corrected())?, &sweep)?;

    let row = |q: &str, truth: f64, radon: Option<f64>, maxlik: Option<f64>, moments: Option<f64>| ComparisonRow {
        quantity: q.to_string(),
        truth,
        radon,
        maxlik,
        moments,
    };
    let comparison = vec![
        row(
            "negativity",
            truth_corrected.negativity,
            None,
            Some(ml_c.estimate.negativity),
            Some(m_corrected.negativity),
        ),
        row(
            "negativity_uncorrected",
            truth_uncorrected.negativity,
            Some(radon.negativity),
            Some(ml_u.estimate.negativity),
            Some(m_uncorrected.negativity),
        ),
        row("negativity_initial", initial.negativity, None, None, Some(m_initial.negativity)),
        row(
            "wc_origin",
            truth_corrected.wc_origin,
            None,
            Some(ml_c.estimate.wc_origin),
            Some(m_corrected.wc_origin),
        ),
        row(
            "wc_origin_uncorrected",
            truth_uncorrected.wc_origin,
            Some(radon.wc_origin),
            Some(ml_u.estimate.wc_origin),
            Some(m_uncorrected.wc_origin),
        ),
        row("a", coeffs.a, None, None, Some(fit.coeffs.a)),
        row("b", coeffs.b, None, None, Some(fit.coeffs.b)),
        row("A", coeffs.sub_a, None, None, Some(fit.coeffs.sub_a)),
        row("B", coeffs.sub_b, None, None, Some(fit.coeffs.sub_b)),
        row("xi", measured.xi, None, None, Some(recovered.xi)),
        row("gamma", measured.gamma, None, None, Some(recovered.gamma)),
    ];

    let report = PipelineReport {
        measured_params: measured,
        samples_per_phase: t.samples_per_phase,
        phases,
        truth_uncorrected,
        truth_corrected,
        truth_initial_negativity: initial.negativity,
        radon,
        radon_normalization: (radon_s.riemann_sum(), radon_c.riemann_sum()),
        maxlik_uncorrected: ml_u,
        maxlik_corrected: ml_c,
        moments: MomentStage {
            fit,
            recovered,
            corrected_coeffs,
            uncorrected: m_uncorrected,
            corrected: m_corrected,
            initial_negativity: m_initial.negativity,
        },
        comparison,
        converged,
    };
    let artifacts = PipelineArtifacts {
        data_c,
        data_s,
        radon_c,
        radon_s,
        maxlik: vec![
            ("rho_s_uncorrected", mu_s.rho),
            ("rho_c_uncorrected", mu_c.rho),
            ("rho_s_corrected", mc_s.rho),
            ("rho_c_corrected", mc_c.rho),
        ],
    };
    Ok((report, artifacts))
}

fn write_artifacts(dir: &Path, prov: &Provenance, a: &PipelineArtifacts) -> CliResult<()> {
    let meta = prov.to_value();
    a.data_c.write(&dir.join("data_c.csv"), meta.clone())?;
    a.data_s.write(&dir.join("data_s.csv"), meta.clone())?;
    a.radon_c.write(&dir.join("radon_c.csv"), meta.clone())?;
    a.radon_s.write(&dir.join("radon_s.csv"), meta)?;
    for (name, rho) in &a.maxlik {
        write_json(&dir.join(format!("{name}.json")), prov, &serde_json::json!({ "density_matrix": rho }))?;
    }
    Ok(())
}

/// Runs the pipeline and writes everything under `<out>/pipeline/`.
pub fn run(cfg: &RunConfig) -> CliResult<PipelineReport> {
    let (report, artifacts) = simulate(cfg)?;
    let dir = cfg.out.join("pipeline");
    ensure_dir(&dir)?;
    let prov = Provenance::new("pipeline", cfg);
    write_artifacts(&dir, &prov, &artifacts)?;
    write_csv(&dir.join("comparison.csv"), &report.comparison, &prov, &serde_json::json!({}))?;
    write_json(&dir.join("report.json"), &prov, &report)?;
    Ok(report)
}
