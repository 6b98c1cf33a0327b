use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{QuadratureDataset, PHASE_TOLERANCE};
use super::grid::{GridSpec, WignerGrid};
use crate::error::{Error, Result};

/// Fewest distinct phases (in `[0, π/2]`) accepted for back-projection.
pub const MIN_RADON_PHASES: usize = 6;
/// Fewest samples accepted at any single phase.
pub const MIN_SAMPLES_PER_PHASE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadonSettings {
    pub grid: GridSpec,
    /// Hard cutoff of the ramp filter, in inverse shot-noise units.
    pub k_cutoff: f64,
    pub bin_width: f64,
    /// `(η, e)` of the detector to deconvolve, or `None` for the measured
    /// (uncorrected) Wigner function.
    pub loss_correction: Option<(f64, f64)>,
}

impl Default for RadonSettings {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            k_cutoff: 5.0,
            bin_width: 0.05,
            loss_correction: None,
        }
    }
}

/// Antiderivative of the filter kernel, tabulated.
///
/// The filter is `K(τ) = (1/2π²) ∫₀^kc k·e^{c k²} cos(kτ) dk` with `c = 0`
/// for plain back-projection; its antiderivative is
/// `G(τ) = (1/2π²) ∫₀^kc e^{c k²} sin(kτ) dk`.
struct FilterTable {
    tau_max: f64,
    step: f64,
    values: Vec<f64>,
}

impl FilterTable {
    fn new(k_cutoff: f64, gain: f64, tau_max: f64) -> Self {
        let step = 1e-3;
        let n = (2.0 * tau_max / step).ceil() as usize + 1;
        let norm = 1.0 / (2.0 * PI * PI);
        let values = (0..n)
            .into_par_iter()
            .map(|i| {
                let tau = -tau_max + i as f64 * step;
                norm * if gain == 0.0 {
                    if tau.abs() < 1e-12 {
                        0.0
                    } else {
                        (1.0 - (k_cutoff * tau).cos()) / tau
                    }
                } else {
                    simpson(|k| (gain * k * k).exp() * (k * tau).sin(), 0.0, k_cutoff, 400)
                }
            })
            .collect();
        Self {
            tau_max,
            step,
            values,
        }
    }

    fn eval(&self, tau: f64) -> f64 {
        let pos = ((tau + self.tau_max) / self.step).clamp(0.0, (self.values.len() - 2) as f64);
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Phases of `[0, π/2]` extended to `[0, π)` with `P(x; π−θ) = P(x; θ)`,
/// paired with trapezoidal weights on the π-periodic circle.
fn unfold(phases: &[(f64, Vec<f64>)]) -> Vec<(f64, f64, usize)> {
    let mut angles: Vec<(f64, usize)> = Vec::new();
    for (k, (theta, _)) in phases.iter().enumerate() {
        angles.push((*theta, k));
        if *theta > PHASE_TOLERANCE && *theta < PI / 2.0 - PHASE_TOLERANCE {
            angles.push((PI - theta, k));
        }
    }
    angles.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = angles.len();
    (0..m)
        .map(|i| {
            let next = angles[(i + 1) % m].0 + if i + 1 == m { PI } else { 0.0 };
            let prev = angles[(i + m - 1) % m].0 - if i == 0 { PI } else { 0.0 };
            (angles[i].0, (next - prev) / 2.0, angles[i].1)
        })
        .collect()
}

/// Filtered back-projection of binned quadrature histograms.
pub fn radon_reconstruct(data: &QuadratureDataset, settings: &RadonSettings) -> Result<WignerGrid> {
    settings.grid.validate()?;
    if !(settings.k_cutoff > 0.0 && settings.bin_width > 0.0) {
        return Err(Error::ParamDomain("filter cutoff and bin width must be positive".into()));
    }
    let phases = data.by_phase();
    if phases.len() < MIN_RADON_PHASES {
        return Err(Error::TooFewPhases {
            needed: MIN_RADON_PHASES,
            got: phases.len(),
        });
    }
    if let Some((theta, xs)) = phases.iter().find(|(_, xs)| xs.len() < MIN_SAMPLES_PER_PHASE) {
        return Err(Error::Dataset(format!(
            "phase {theta:.4} has {} samples, need {MIN_SAMPLES_PER_PHASE}",
            xs.len()
        )));
    }
    let (scale, gain) = match settings.loss_correction {
        None => (1.0, 0.0),
        Some((eta, e)) => {
            if !(eta > 0.0 && eta <= 1.0 && e >= 0.0) {
                return Err(Error::ParamDomain(format!("bad detector model eta={eta}, e={e}")));
            }
            // Measured x = √η·x_true + N(0, (1−η+e)/2).
            (eta.sqrt(), (1.0 - eta + e) / 2.0 / (2.0 * eta))
        }
    };

    // Histograms on a common bin lattice centred on zero.
    let bw = settings.bin_width;
    let histograms: Vec<Vec<(f64, f64, f64)>> = phases
        .iter()
        .map(|(_, xs)| {
            let mut counts = std::collections::BTreeMap::<i64, usize>::new();
            for &x in xs {
                *counts.entry((x / bw).round() as i64).or_default() += 1;
            }
            let n = xs.len() as f64;
            counts
                .into_iter()
                .map(|(b, c)| ((b as f64 - 0.5) * bw, (b as f64 + 0.5) * bw, c as f64 / n))
                .collect()
        })
        .collect();

    let spec = settings.grid;
    let radius = spec.x_max.hypot(spec.p_max);
    let x_extent = histograms
        .iter()
        .flat_map(|h| h.iter().map(|(lo, hi, _)| lo.abs().max(hi.abs())))
        .fold(0.0, f64::max);
    let table = FilterTable::new(settings.k_cutoff, gain, radius + x_extent / scale + 1.0);

    let angles = unfold(&phases);
    let columns: Vec<Vec<f64>> = (0..spec.nx)
        .into_par_iter()
        .map(|i| {
            let x = spec.x(i);
            (0..spec.np)
                .map(|j| {
                    let p = spec.p(j);
                    let mut w = 0.0;
                    for &(theta, weight, k) in &angles {
                        let t = x * theta.cos() + p * theta.sin();
                        let mut proj = 0.0;
                        for &(lo, hi, f) in &histograms[k] {
                            proj += f * (table.eval(t - lo / scale) - table.eval(t - hi / scale));
                        }
                        w += weight * scale * proj / bw;
                    }
                    w
                })
                .collect()
        })
        .collect();
    let values = DMatrix::from_fn(spec.nx, spec.np, |i, j| columns[i][j]);
    WignerGrid::new(spec, values)
}
