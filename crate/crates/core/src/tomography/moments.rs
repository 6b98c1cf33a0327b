use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{substream, QuadratureDataset};
use crate::error::{Error, Result};
use crate::model::{coeffs_from_params, ExperimentParams, QuadCoeffs, APD_EFFICIENCY};

pub const MIN_BOOTSTRAP_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentFitSettings {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for MomentFitSettings {
    fn default() -> Self {
        Self {
            resamples: 200,
            seed: 0,
        }
    }
}

/// Raw moments `⟨x²⟩`, `⟨x⁴⟩` at θ = 0 and θ = π/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchMoments {
    pub x2: f64,
    pub x4: f64,
    pub p2: f64,
    pub p4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFit {
    /// Best estimate: `A`, `B` from the subtracted branch, `a`, `b` pooled
    /// from both branches (inverse-variance weights).
    pub coeffs: QuadCoeffs,
    /// Estimate from the subtracted branch alone.
    pub coeffs_c: QuadCoeffs,
    /// `(a, b)` from the Gaussian branch variances, if that branch was given.
    pub widths_s: Option<(f64, f64)>,
    pub moments_c: BranchMoments,
    pub moments_s: Option<BranchMoments>,
    /// Bootstrap standard errors of `coeffs`.
    pub std_errors: QuadCoeffs,
    pub resamples: usize,
    /// Set when a moment pair had no physical inversion and `A` or `B` was
    /// clamped to zero.
    pub clamped: bool,
}

fn moments(x: &[f64], p: &[f64]) -> BranchMoments {
    let m = |v: &[f64], k: i32| v.iter().map(|y| y.powi(k)).sum::<f64>() / v.len() as f64;
    BranchMoments {
        x2: m(x, 2),
        x4: m(x, 4),
        p2: m(p, 2),
        p4: m(p, 4),
    }
}

/// Solves `⟨x²⟩ = a/2 + A`, `⟨x⁴⟩ = 3a²/4 + 3aA` for `(a, A)`. Returns the
/// Gaussian solution and `true` when `⟨x⁴⟩ ≥ 3⟨x²⟩²`, which no `A > 0` can
/// produce.
pub fn invert_moments(m2: f64, m4: f64) -> (f64, f64, bool) {
    let disc = 9.0 * m2 * m2 - 3.0 * m4;
    if disc <= 0.0 {
        return (2.0 * m2, 0.0, true);
    }
    let a = 2.0 * m2 - 2.0 / 3.0 * disc.sqrt();
    (a, m2 - a / 2.0, false)
}

fn coeffs_from_moments(m: &BranchMoments) -> (QuadCoeffs, bool) {
    let (a, sub_a, ca) = invert_moments(m.x2, m.x4);
    let (b, sub_b, cb) = invert_moments(m.p2, m.p4);
    (QuadCoeffs { a, b, sub_a, sub_b }, ca || cb)
}

fn resample<R: Rng>(v: &[f64], rng: &mut R) -> Vec<f64> {
    (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).collect()
}

fn quadrature_pair(data: &QuadratureDataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = data.at_phase(0.0);
    let p = data.at_phase(FRAC_PI_2);
    if x.len() < 2 || p.len() < 2 {
        return Err(Error::Dataset(format!(
            "{:?} dataset needs samples at θ = 0 and θ = π/2 (got {} and {})",
            data.branch,
            x.len(),
            p.len()
        )));
    }
    Ok((x, p))
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn inverse_variance(values: [f64; 2], sd: [f64; 2]) -> f64 {
    let w = [1.0 / (sd[0] * sd[0]), 1.0 / (sd[1] * sd[1])];
    if !(w[0].is_finite() && w[1].is_finite()) {
        return 0.5 * (values[0] + values[1]);
    }
    (w[0] * values[0] + w[1] * values[1]) / (w[0] + w[1])
}

/// Moment estimates of `(a, A, b, B)` with bootstrap standard errors.
///
/// The θ = 0 and θ = π/2 marginals of the subtracted branch give `(a, A)` and
/// `(b, B)`; the Gaussian branch, when supplied, gives independent `a = 2⟨x²⟩`
/// and `b = 2⟨p²⟩`.
pub fn moment_fit(
    data_c: &QuadratureDataset,
    data_s: Option<&QuadratureDataset>,
    settings: &MomentFitSettings,
) -> Result<MomentFit> {
    if settings.resamples < MIN_BOOTSTRAP_RESAMPLES {
        return Err(Error::ParamDomain(format!(
            "need at least {MIN_BOOTSTRAP_RESAMPLES} bootstrap resamples"
        )));
    }
    let (cx, cp) = quadrature_pair(data_c)?;
    let s_pair = data_s.map(quadrature_pair).transpose()?;

    let moments_c = moments(&cx, &cp);
    let (coeffs_c, clamped) = coeffs_from_moments(&moments_c);
    let moments_s = s_pair.as_ref().map(|(x, p)| moments(x, p));
    let widths_s = moments_s.map(|m| (2.0 * m.x2, 2.0 * m.p2));

    // Each resample: c-branch coefficients and s-branch widths.
    let boot: Vec<(QuadCoeffs, Option<(f64, f64)>)> = (0..settings.resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(settings.seed, k as u64);
            let (c, _) = coeffs_from_moments(&moments(&resample(&cx, &mut rng), &resample(&cp, &mut rng)));
            let s = s_pair.as_ref().map(|(x, p)| {
                let m = moments(&resample(x, &mut rng), &resample(p, &mut rng));
                (2.0 * m.x2, 2.0 * m.p2)
            });
            (c, s)
        })
        .collect();

    let column = |f: &dyn Fn(&(QuadCoeffs, Option<(f64, f64)>)) -> f64| -> Vec<f64> { boot.iter().map(f).collect() };
    let a_c = column(&|r| r.0.a);
    let b_c = column(&|r| r.0.b);
    let sub_a = column(&|r| r.0.sub_a);
    let sub_b = column(&|r| r.0.sub_b);

    let (coeffs, sd_a, sd_b) = match widths_s {
        None => (coeffs_c, std_dev(&a_c), std_dev(&b_c)),
        Some((a_s, b_s)) => {
            let a_sb = column(&|r| r.1.unwrap().0);
            let b_sb = column(&|r| r.1.unwrap().1);
            let sd_ac = [std_dev(&a_c), std_dev(&a_sb)];
            let sd_bc = [std_dev(&b_c), std_dev(&b_sb)];
            let pooled: Vec<(f64, f64)> = boot
                .iter()
                .map(|(c, s)| {
                    let (x, y) = s.unwrap();
                    (inverse_variance([c.a, x], sd_ac), inverse_variance([c.b, y], sd_bc))
                })
                .collect();
            let coeffs = QuadCoeffs {
                a: inverse_variance([coeffs_c.a, a_s], sd_ac),
                b: inverse_variance([coeffs_c.b, b_s], sd_bc),
                ..coeffs_c
            };
            let pa: Vec<f64> = pooled.iter().map(|v| v.0).collect();
            let pb: Vec<f64> = pooled.iter().map(|v| v.1).collect();
            (coeffs, std_dev(&pa), std_dev(&pb))
        }
    };

    Ok(MomentFit {
        coeffs,
        coeffs_c,
        widths_s,
        moments_c,
        moments_s,
        std_errors: QuadCoeffs {
            a: sd_a,
            b: sd_b,
            sub_a: std_dev(&sub_a),
            sub_b: std_dev(&sub_b),
        },
        resamples: settings.resamples,
        clamped,
    })
}

/// Experimental parameters recovered from fitted coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredParams {
    pub s: f64,
    /// `η(1−R)`.
    pub u: f64,
    pub reflectivity: f64,
    pub h: f64,
    pub gamma: f64,
    pub xi: f64,
    pub eta: f64,
    pub excess_noise: f64,
    /// `B` predicted from the other recovered values minus the fitted `B`.
    pub b_residual: f64,
    /// Quantities pushed back into their physical range, if any.
    pub clamped: Vec<String>,
}

impl RecoveredParams {
    pub fn params(&self) -> ExperimentParams {
        ExperimentParams {
            s: self.s,
            reflectivity: self.reflectivity,
            xi: self.xi,
            gamma: self.gamma,
            eta: self.eta,
            excess_noise: self.excess_noise,
            apd_efficiency: APD_EFFICIENCY,
        }
    }
}

/// Solves the width equations `a = 1+e+u(hs+h−2)`, `b = 1+e+u(h/s+h−2)` for
/// `(u, h)`, then `ξ` from `A`. The `B` equation is left over as a
/// consistency check.
pub fn invert_params(coeffs: &QuadCoeffs, s_known: f64, eta: f64, excess_noise: f64) -> Result<RecoveredParams> {
    if !(s_known > 0.0 && s_known < 1.0) {
        return Err(Error::ParamDomain(format!("s must be in (0, 1), got {s_known}")));
    }
    if !(eta > 0.0 && eta <= 1.0 && excess_noise >= 0.0) {
        return Err(Error::ParamDomain(format!("bad detector model eta={eta}, e={excess_noise}")));
    }
    coeffs.validate()?;
    let s = s_known;
    let alpha = coeffs.a - 1.0 - excess_noise;
    let beta = coeffs.b - 1.0 - excess_noise;
    let h = 2.0 * (alpha - beta) / (alpha * (1.0 / s + 1.0) - beta * (s + 1.0));
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::NoSolution(format!("gain h = {h}")));
    }
    let lin_s = h * s + h - 2.0;
    let lin_inv = h / s + h - 2.0;
    let u = beta / lin_inv;
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::NoSolution(format!("u = η(1−R) = {u}")));
    }
    let den = h * (s + 1.0 / s) + 2.0 * h - 4.0;
    let xi_raw = coeffs.sub_a * den / (u * lin_s * lin_s);
    if !xi_raw.is_finite() {
        return Err(Error::NoSolution(format!("ξ = {xi_raw}")));
    }

    let mut clamped = Vec::new();
    let r = -s.ln() / 2.0;
    let gamma = if h >= 1.0 {
        h.sqrt().acosh() / r
    } else {
        clamped.push(format!("h = {h} < 1, γ set to 0"));
        0.0
    };
    let mut reflectivity = 1.0 - u / eta;
    if reflectivity < 0.0 {
        clamped.push(format!("R = {reflectivity} < 0, set to 0"));
        reflectivity = 0.0;
    }
    let xi = xi_raw.clamp(0.0, 1.0);
    if xi != xi_raw {
        clamped.push(format!("ξ = {xi_raw} outside [0, 1]"));
    }
    let b_pred = u * xi_raw * lin_inv * lin_inv / den;
    Ok(RecoveredParams {
        s,
        u,
        reflectivity,
        h,
        gamma,
        xi,
        eta,
        excess_noise,
        b_residual: b_pred - coeffs.sub_b,
        clamped,
    })
}

/// Coefficients the same state would show with an ideal detector
/// (`η = 1`, `e = 0`), all other recovered parameters kept.
pub fn correct_for_losses(recovered: &RecoveredParams) -> Result<QuadCoeffs> {
    coeffs_from_params(&recovered.params().corrected())
}
