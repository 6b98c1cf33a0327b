use photosub::model::{s_from_db, ExperimentParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CrossoverConfig, RunConfig};
use crate::error::CliResult;
use crate::output::{ensure_dir, write_json, Provenance};
use crate::sweep::negativity_pair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub xi: f64,
    pub reflectivity: f64,
    pub gamma: f64,
    /// Squeezing where the subtracted state stops beating the initial one;
    /// `None` when `N > N₀` over the whole scan.
    pub crossover_db: Option<f64>,
    /// `(dB, N₀, N)` at the scan points.
    pub scan: Vec<(f64, f64, f64)>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossoverReport {
    pub results: Vec<Crossover>,
}

/// Scans `N − N₀` on the configured dB grid and bisects the first sign
/// change from positive to non-positive.
pub fn find_crossover(
    scan_cfg: &CrossoverConfig,
    base: ExperimentParams,
    cutoff_sweep: &[usize],
) -> CliResult<Crossover> {
    let at = |db: f64| {
        negativity_pair(
            &ExperimentParams {
                s: s_from_db(db),
                ..base
            },
            cutoff_sweep,
        )
    };
    let steps = ((scan_cfg.db_max - scan_cfg.db_min) / scan_cfg.db_step).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| scan_cfg.db_min + k as f64 * scan_cfg.db_step)
        .collect();
    let rows = grid.par_iter().map(|&db| at(db)).collect::<CliResult<Vec<_>>>()?;
    let mut converged = rows.iter().all(|r| r.converged);
    let scan: Vec<(f64, f64, f64)> = grid
        .iter()
        .zip(&rows)
        .map(|(&db, r)| (db, r.n_initial, r.n_final))
        .collect();

    let gain = |r: &crate::sweep::SweepRow| r.n_final - r.n_initial;
    let mut crossover_db = None;
    if let Some(k) = (1..rows.len()).find(|&k| gain(&rows[k - 1]) > 0.0 && gain(&rows[k]) <= 0.0) {
        let (mut lo, mut hi) = (grid[k - 1], grid[k]);
        while hi - lo > scan_cfg.tolerance_db {
            let mid = 0.5 * (lo + hi);
            let r = at(mid)?;
            converged &= r.converged;
            if gain(&r) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        crossover_db = Some(0.5 * (lo + hi));
    }
    Ok(Crossover {
        xi: base.xi,
        reflectivity: base.reflectivity,
        gamma: base.gamma,
        crossover_db,
        scan,
        converged,
    })
}

pub fn crossovers(cfg: &RunConfig) -> CliResult<Vec<Crossover>> {
    let c = &cfg.crossover;
    c.xi_values
        .iter()
        .map(|&xi| {
            let base = cfg.detector(ExperimentParams {
                reflectivity: c.reflectivity,
                xi,
                gamma: c.gamma,
                ..ExperimentParams::ideal(1.0)
            });
            find_crossover(c, base, &cfg.cutoff_sweep())
        })
        .collect()
}

/// Writes `crossover.json`.
pub fn run(cfg: &RunConfig) -> CliResult<Vec<Crossover>> {
    let results = crossovers(cfg)?;
    ensure_dir(&cfg.out)?;
    let report = CrossoverReport { results };
    write_json(&cfg.out.join("crossover.json"), &Provenance::new("crossover", cfg), &report)?;
    Ok(report.results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_source_never_crosses() {
        let scan = CrossoverConfig {
            db_max: 3.5,
            db_step: 0.5,
            ..CrossoverConfig::default()
        };
        let base = ExperimentParams {
            reflectivity: 1e-3,
            ..ExperimentParams::ideal(1.0)
        };
        let c = find_crossover(&scan, base, &[8, 10, 12, 14]).unwrap();
        assert_eq!(c.crossover_db, None, "{c:?}");
        assert!(c.scan.iter().all(|&(_, n0, n)| n > n0));
    }
}
