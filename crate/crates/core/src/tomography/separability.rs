use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::substream;
use crate::error::{Error, Result};
use crate::model::{marginal, AnalyticTwoModeState, Basis, Branch};

pub const MIN_SEPARABILITY_SAMPLES: usize = 10_000;
pub const SEPARABILITY_BINS: usize = 10;
pub const PERMUTATIONS: usize = 1000;
/// Independence is rejected below this p-value.
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub basis: Basis,
    pub theta_1: f64,
    pub theta_2: f64,
    pub samples: usize,
    /// `Σ |p̂(i,j) − p̂(i)·p̂(j)|` over the decile-binned joint histogram.
    pub l1_distance: f64,
    pub p_value: f64,
    pub independent: bool,
}

/// Decile index of every value (bins of equal empirical mass).
fn decile_bins(v: &[f64], bins: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0; v.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank * bins / v.len();
    }
    out
}

fn l1_distance(u: &[usize], v: &[usize], bins: usize) -> f64 {
    let n = u.len() as f64;
    let mut joint = vec![0.0; bins * bins];
    let mut mu = vec![0.0; bins];
    let mut mv = vec![0.0; bins];
    for (&i, &j) in u.iter().zip(v) {
        joint[i * bins + j] += 1.0 / n;
        mu[i] += 1.0 / n;
        mv[j] += 1.0 / n;
    }
    let mut d = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            d += (joint[i * bins + j] - mu[i] * mv[j]).abs();
        }
    }
    d
}

/// Permutation test of independence for paired samples.
pub fn independence_test(u: &[f64], v: &[f64], seed: u64) -> Result<(f64, f64)> {
    if u.len() != v.len() || u.len() < MIN_SEPARABILITY_SAMPLES {
        return Err(Error::Dataset(format!(
            "need at least {MIN_SEPARABILITY_SAMPLES} paired samples, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    let bu = decile_bins(u, SEPARABILITY_BINS);
    let bv = decile_bins(v, SEPARABILITY_BINS);
    let observed = l1_distance(&bu, &bv, SEPARABILITY_BINS);
    let exceed: usize = (0..PERMUTATIONS)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, 1 + k as u64);
            let mut shuffled = bv.clone();
            shuffled.shuffle(&mut rng);
            usize::from(l1_distance(&bu, &shuffled, SEPARABILITY_BINS) >= observed)
        })
        .sum();
    Ok((observed, (1 + exceed) as f64 / (1 + PERMUTATIONS) as f64))
}

/// Samples joint quadrature pairs of the two-mode state and tests whether
/// their distribution factorizes.
///
/// In the ± basis `(θ₁, θ₂)` are the phases of the `+` and `−` modes and the
/// pairs come from the product structure of the state. In the 1,2 basis the
/// pairs are `x₁,₂ = (x₊ ± x₋)/√2`, which requires a common phase
/// `θ₁ = θ₂`.
pub fn separability_test(
    state: &AnalyticTwoModeState,
    theta_1: f64,
    theta_2: f64,
    n: usize,
    seed: u64,
) -> Result<FactorizationReport> {
    if state.basis == Basis::OneTwo && (theta_1 - theta_2).abs() > 1e-12 {
        return Err(Error::ParamDomain(
            "joint sampling in the 1,2 basis needs equal phases".into(),
        ));
    }
    if n < MIN_SEPARABILITY_SAMPLES {
        return Err(Error::Dataset(format!(
            "need at least {MIN_SEPARABILITY_SAMPLES} samples, got {n}"
        )));
    }
    let plus = marginal(&state.factor_coeffs(Branch::Squeezed), Branch::Squeezed, theta_1);
    let minus = marginal(&state.factor_coeffs(Branch::Subtracted), Branch::Subtracted, theta_2);
    let mut rng = substream(seed, 0);
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        let (xp, xm) = (plus.sample(&mut rng), minus.sample(&mut rng));
        match state.basis {
            Basis::PlusMinus => {
                u.push(xp);
                v.push(xm);
            }
            Basis::OneTwo => {
                let k = std::f64::consts::FRAC_1_SQRT_2;
                u.push(k * (xp + xm));
                v.push(k * (xp - xm));
            }
        }
    }
    let (l1, p) = independence_test(&u, &v, seed)?;
    Ok(FactorizationReport {
        basis: state.basis,
        theta_1,
        theta_2,
        samples: n,
        l1_distance: l1,
        p_value: p,
        independent: p > SIGNIFICANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deciles_are_balanced() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let b = decile_bins(&v, 10);
        for k in 0..10 {
            assert_eq!(b.iter().filter(|&&x| x == k).count(), 100);
        }
    }

    #[test]
    fn identical_columns_are_dependent() {
        let u: Vec<f64> = (0..MIN_SEPARABILITY_SAMPLES).map(|i| (i as f64).sin()).collect();
        let (_, p) = independence_test(&u, &u, 3).unwrap();
        assert!(p < 0.01);
        assert!(independence_test(&u[..10], &u[..10], 3).is_err());
    }
}
