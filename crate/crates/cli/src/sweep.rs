use photosub::fock::analytic_negativity;
use photosub::model::{s_from_db, AnalyticTwoModeState, ExperimentParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliResult, StageExt};
use crate::output::{ensure_dir, write_csv, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub squeezing_db: f64,
    pub reflectivity: f64,
    pub n_initial: f64,
    pub n_final: f64,
    pub cutoff_used: usize,
    /// Larger of the two states' changes between the last two cutoffs.
    pub convergence_delta: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepMeta {
    pub rows: usize,
    pub non_converged: Vec<(f64, f64)>,
}

/// Negativity before the pick-off (Gaussian, no subtraction) and after
/// subtraction at one parameter point.
pub fn negativity_pair(params: &ExperimentParams, cutoff_sweep: &[usize]) -> CliResult<SweepRow> {
    let initial = analytic_negativity(&AnalyticTwoModeState::initial(params)?, cutoff_sweep).stage("initial state")?;
    let fin = analytic_negativity(&AnalyticTwoModeState::conditioned(params)?, cutoff_sweep).stage("conditioned state")?;
    let delta = initial.convergence_delta.max(fin.convergence_delta);
    Ok(SweepRow {
        squeezing_db: params.squeezing_db(),
        reflectivity: params.reflectivity,
        n_initial: initial.negativity,
        n_final: fin.negativity,
        cutoff_used: fin.cutoff_used,
        convergence_delta: delta,
        converged: initial.converged && fin.converged,
    })
}

pub fn sweep_rows(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let sc = &cfg.sweep;
    let sweep = cfg.cutoff_sweep();
    let points: Vec<(f64, f64)> = sc
        .squeezing_db
        .iter()
        .flat_map(|&db| sc.reflectivities.iter().map(move |&r| (db, r)))
        .collect();
    points
        .par_iter()
        .map(|&(db, r)| {
            let params = cfg.detector(ExperimentParams {
                reflectivity: r,
                xi: sc.xi,
                gamma: sc.gamma,
                ..ExperimentParams::ideal(s_from_db(db))
            });
            let mut row = negativity_pair(&params, &sweep)?;
            row.squeezing_db = db;
            Ok(row)
        })
        .collect()
}

/// Writes `sweep.csv` and its sidecar. Returns the rows; non-converged rows
/// are kept and listed in the sidecar.
pub fn run(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let rows = sweep_rows(cfg)?;
    ensure_dir(&cfg.out)?;
    let meta = SweepMeta {
        rows: rows.len(),
        non_converged: rows
            .iter()
            .filter(|r| !r.converged)
            .map(|r| (r.squeezing_db, r.reflectivity))
            .collect(),
    };
    write_csv(&cfg.out.join("sweep.csv"), &rows, &Provenance::new("sweep", cfg), &meta)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use photosub::model::negativity_zero_squeezing_limit;

    #[test]
    fn weak_squeezing_rows_approach_the_limit() {
        let p = ExperimentParams::average_corrected(s_from_db(0.01), 0.05);
        let row = negativity_pair(&p, &[6, 8, 10]).unwrap();
        assert!(row.n_initial < 2e-3, "{row:?}");
        assert!((row.n_final - negativity_zero_squeezing_limit(&p)).abs() < 2e-3, "{row:?}");
    }
}
