//! Two-dimensional cuts of the two-mode Wigner function, written as
//! [`WignerGrid`] files.

use photosub::model::{wigner_c, wigner_s, wigner_two_mode, AnalyticTwoModeState, Basis, Branch, PhasePoint};
use photosub::tomography::WignerGrid;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Preset, RunConfig};
use crate::error::CliResult;
use crate::output::{ensure_dir, write_json, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cut {
    /// `W(x₁, p₁ = 0, x₂, p₂ = 0)`.
    X1X2,
    /// `W` over `(x₋, p₋)` with `x₊ = p₊ = 0`.
    Minus,
    /// `W` over `(x₊, p₊)` with `x₋ = p₋ = 0`.
    Plus,
    /// The subtracted factor `W_c(x₋, p₋)` alone.
    SubtractedFactor,
}

impl Cut {
    pub const ALL: [Cut; 4] = [Cut::X1X2, Cut::Minus, Cut::Plus, Cut::SubtractedFactor];

    pub fn file_stem(self) -> &'static str {
        match self {
            Cut::X1X2 => "x1x2",
            Cut::Minus => "minus",
            Cut::Plus => "plus",
            Cut::SubtractedFactor => "wc",
        }
    }

    fn axes(self) -> [&'static str; 2] {
        match self {
            Cut::X1X2 => ["x1", "x2"],
            Cut::Minus | Cut::SubtractedFactor => ["x-", "p-"],
            Cut::Plus => ["x+", "p+"],
        }
    }

    pub fn evaluate(self, state: &AnalyticTwoModeState, u: f64, v: f64) -> f64 {
        let zero = PhasePoint::default();
        let pm = state.with_basis(Basis::PlusMinus);
        match self {
            Cut::X1X2 => wigner_two_mode(&state.with_basis(Basis::OneTwo), PhasePoint::new(u, 0.0), PhasePoint::new(v, 0.0)),
            Cut::Minus => wigner_two_mode(&pm, zero, PhasePoint::new(u, v)),
            Cut::Plus => wigner_two_mode(&pm, PhasePoint::new(u, v), zero),
            Cut::SubtractedFactor => wigner_c(&state.factor_coeffs(Branch::Subtracted), PhasePoint::new(u, v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSummary {
    pub preset: Preset,
    pub squeezing_db: f64,
    pub reflectivity: f64,
    pub corrected: bool,
    /// `W_c(0, 0)`.
    pub wc_origin: f64,
    /// `W_s(0, 0)` of the Gaussian factor.
    pub ws_origin: f64,
    /// Joint value at the phase-space origin, `W_s(0,0)·W_c(0,0)`.
    pub joint_origin: f64,
    /// Smallest value on each exported cut, keyed by file stem.
    pub minima: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutsReport {
    pub presets: Vec<CutSummary>,
}

pub fn preset_state(preset: Preset, corrected: bool) -> CliResult<AnalyticTwoModeState> {
    Ok(AnalyticTwoModeState::conditioned(&preset.params(corrected))?)
}

/// Writes `<out>/cuts/<preset>/<cut>.csv` grids and `<out>/cuts/cuts.json`.
pub fn run(cfg: &RunConfig) -> CliResult<Vec<CutSummary>> {
    let prov = Provenance::new("wigner-cuts", cfg);
    let root = cfg.out.join("cuts");
    let mut summaries = Vec::new();
    for &preset in &cfg.cuts.presets {
        let state = preset_state(preset, cfg.corrected)?;
        let dir = root.join(preset.label());
        ensure_dir(&dir)?;
        let mut minima = Vec::new();
        for cut in Cut::ALL {
            let grid = WignerGrid::from_fn(cfg.cuts.grid, |pt| cut.evaluate(&state, pt.x, pt.p))?;
            minima.push((cut.file_stem().to_string(), grid.min_value()));
            let mut meta = prov.to_value();
            meta["preset"] = json!(preset);
            meta["cut"] = json!(cut);
            meta["axes"] = json!(cut.axes());
            grid.write(&dir.join(format!("{}.csv", cut.file_stem())), meta)?;
        }
        let zero = PhasePoint::default();
        let params = state.params.expect("preset states carry parameters");
        let ws_origin = wigner_s(&state.factor_coeffs(Branch::Squeezed), zero);
        let wc_origin = wigner_c(&state.factor_coeffs(Branch::Subtracted), zero);
        summaries.push(CutSummary {
            preset,
            squeezing_db: params.squeezing_db(),
            reflectivity: params.reflectivity,
            corrected: cfg.corrected,
            wc_origin,
            ws_origin,
            joint_origin: ws_origin * wc_origin,
            minima,
        });
    }
    ensure_dir(&root)?;
    let report = CutsReport { presets: summaries };
    write_json(&root.join("cuts.json"), &prov, &report)?;
    Ok(report.presets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use photosub::tomography::GridSpec;

    #[test]
    fn vacuum_cuts_are_positive_with_unit_factor_peaks() {
        let state = preset_state(Preset::Vacuum, true).unwrap();
        let grid = GridSpec::square(3.0, 25);
        for cut in Cut::ALL {
            let g = WignerGrid::from_fn(grid, |pt| cut.evaluate(&state, pt.x, pt.p)).unwrap();
            assert!(g.min_value() > 0.0, "{cut:?}");
        }
        let inv_pi = std::f64::consts::FRAC_1_PI;
        assert!((Cut::SubtractedFactor.evaluate(&state, 0.0, 0.0) - inv_pi).abs() < 1e-15);
        assert!((Cut::Minus.evaluate(&state, 0.0, 0.0) - inv_pi * inv_pi).abs() < 1e-15);
    }

    #[test]
    fn origin_dip_shrinks_for_the_larger_state() {
        let origin = |p: Preset| Cut::SubtractedFactor.evaluate(&preset_state(p, true).unwrap(), 0.0, 0.0);
        let (weak, strong) = (origin(Preset::Weak), origin(Preset::Strong));
        assert!(weak < strong && strong < 0.0, "{weak} {strong}");
    }

    #[test]
    fn joint_minus_cut_is_the_scaled_factor() {
        let state = preset_state(Preset::Moderate, true).unwrap();
        let ws0 = wigner_s(&state.factor_coeffs(Branch::Squeezed), PhasePoint::default());
        for (u, v) in [(0.0, 0.0), (0.4, -0.7), (1.2, 0.3)] {
            let joint = Cut::Minus.evaluate(&state, u, v);
            assert!((joint - ws0 * Cut::SubtractedFactor.evaluate(&state, u, v)).abs() < 1e-14);
        }
    }
}
