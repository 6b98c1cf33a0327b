use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dataset::QuadratureDataset;
use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::linalg::{hermitian_map, hermite_functions};

/// Smallest photon-number cutoff accepted for reconstruction.
pub const MIN_MAXLIK_CUTOFF: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaxLikSettings {
    pub cutoff: usize,
    /// Detector efficiency folded into the POVM.
    pub eta: f64,
    /// Detector excess noise, in units of the vacuum variance.
    pub excess_noise: f64,
    pub bins: usize,
    pub range: f64,
    pub max_iterations: usize,
    /// Stop once an iteration raises the total log-likelihood (summed over
    /// all samples) by less than this.
    pub tolerance: f64,
}

impl Default for MaxLikSettings {
    fn default() -> Self {
        Self {
            cutoff: 14,
            eta: 1.0,
            excess_noise: 0.0,
            bins: 200,
            range: 5.0,
            max_iterations: 100_000,
            tolerance: 1e-10,
        }
    }
}

impl MaxLikSettings {
    pub fn with_detector(self, eta: f64, excess_noise: f64) -> Self {
        Self {
            eta,
            excess_noise,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxLikResult {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood per sample after each iteration (entry 0 is the start).
    pub log_likelihood: Vec<f64>,
    pub samples: usize,
    pub tolerance: f64,
}

impl MaxLikResult {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            let n = self.log_likelihood.len();
            let delta = if n >= 2 {
                (self.log_likelihood[n - 1] - self.log_likelihood[n - 2]) * self.samples as f64
            } else {
                f64::NAN
            };
            Err(Error::NotConverged {
                delta,
                tolerance: self.tolerance,
            })
        }
    }
}

/// Bin edges: `bins` equal bins on `[−range, range]` plus one overflow bin on
/// each side.
fn bin_index(x: f64, bins: usize, range: f64) -> usize {
    if x < -range {
        0
    } else if x >= range {
        bins + 1
    } else {
        1 + (((x + range) / (2.0 * range) * bins as f64) as usize).min(bins - 1)
    }
}

fn bin_edges(j: usize, bins: usize, range: f64) -> (f64, f64) {
    let w = 2.0 * range / bins as f64;
    match j {
        0 => (f64::NEG_INFINITY, -range),
        _ if j == bins + 1 => (range, f64::INFINITY),
        _ => (-range + (j - 1) as f64 * w, -range + j as f64 * w),
    }
}

/// Upper bound of the step-length factor β.
const MAX_OVERRELAXATION: f64 = 20.0;

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `∫ ψ_m(y) ψ_n(y) f_j(y) dy` for every bin `j`, where `f_j(y)` is the
/// probability that a detector with efficiency η and excess noise e reports
/// a value in bin `j` given the ideal quadrature value `y`.
///
/// The detector response is `x ~ N(√η·y, (1−η+e)/2)`, which is the
/// quadrature statistics of a beamsplitter loss of 1−η followed by added
/// Gaussian noise.
fn dressed_bin_elements(settings: &MaxLikSettings) -> Vec<DMatrix<f64>> {
    let MaxLikSettings {
        cutoff,
        eta,
        excess_noise,
        bins,
        range,
        ..
    } = *settings;
    let dim = cutoff + 1;
    let noise = ((1.0 - eta + excess_noise) / 2.0).max(0.0).sqrt();
    let scale = eta.sqrt();
    let prob = |j: usize, y: f64| -> f64 {
        let (lo, hi) = bin_edges(j, bins, range);
        if noise == 0.0 {
            let x = scale * y;
            if x >= lo && x < hi {
                1.0
            } else {
                0.0
            }
        } else {
            normal_cdf((hi - scale * y) / noise) - normal_cdf((lo - scale * y) / noise)
        }
    };

    // Gauss–Legendre panels whose boundaries sit on the bin edges mapped to y,
    // so the integrand is smooth on every panel even without noise.
    let (gl_x, gl_w) = gauss_legendre(8);
    let y_max = ((2 * cutoff + 1) as f64).sqrt() + 6.0;
    let mut breaks: Vec<f64> = (0..=bins)
        .map(|k| (-range + k as f64 * 2.0 * range / bins as f64) / scale)
        .collect();
    let outer_step = 2.0 * range / bins as f64 / scale;
    let mut y = breaks[0];
    while y > -y_max {
        y -= outer_step;
        breaks.insert(0, y);
    }
    let mut y = *breaks.last().unwrap();
    while y < y_max {
        y += outer_step;
        breaks.push(y);
    }

    let mut nodes = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        for (t, wt) in gl_x.iter().zip(&gl_w) {
            nodes.push((0.5 * (a + b) + half * t, half * wt));
        }
    }

    let nodes_count = nodes.len();
    let psi_products = DMatrix::from_fn(nodes_count, dim * dim, |q, mn| {
        let (y, w) = nodes[q];
        let psi = hermite_functions(y, cutoff);
        w * psi[mn / dim] * psi[mn % dim]
    });
    let response = DMatrix::from_fn(bins + 2, nodes_count, |j, q| prob(j, nodes[q].0));
    let all = response * psi_products;
    (0..bins + 2)
        .map(|j| DMatrix::from_fn(dim, dim, |m, n| all[(j, m * dim + n)]))
        .collect()
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn rotated(m: &DMatrix<f64>, theta: f64) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        Complex64::from_polar(m[(i, j)], theta * (i as f64 - j as f64))
    })
}

/// POVM elements of all observed bins, one flattened (column-major) row per
/// bin, split into real and imaginary parts.
struct Observations {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
    frequency: DVector<f64>,
}

impl Observations {
    /// Bin probabilities `Tr(Π ρ)`.
    fn probabilities(&self, rho: &DMatrix<Complex64>) -> DVector<f64> {
        let vr = DVector::from_iterator(rho.len(), rho.iter().map(|z| z.re));
        let vi = DVector::from_iterator(rho.len(), rho.iter().map(|z| z.im));
        let mut p = &self.re * vr;
        p.gemv(1.0, &self.im, &vi, 1.0);
        p.map(|v| v.max(1e-300))
    }

    fn log_likelihood(&self, p: &DVector<f64>) -> f64 {
        self.frequency.iter().zip(p.iter()).map(|(f, q)| f * q.ln()).sum()
    }

    /// `R = Σ f Π / Tr(Π ρ)`.
    fn r_operator(&self, p: &DVector<f64>, dim: usize) -> DMatrix<Complex64> {
        let w = self.frequency.component_div(p);
        let rr = self.re.tr_mul(&w);
        let ri = self.im.tr_mul(&w);
        // Tr(Π ρ) = Σ Π_ij conj(ρ_ij), so R_ij pairs with ρ_ij directly.
        DMatrix::from_fn(dim, dim, |i, j| Complex64::new(rr[i + j * dim], ri[i + j * dim]))
    }
}

/// Observed bins and `G = Σ_θ f_θ Σ_j Π_θj` (the identity for a complete
/// POVM, kept to absorb truncation effects).
fn observations(data: &QuadratureDataset, settings: &MaxLikSettings) -> Result<(Observations, DMatrix<Complex64>)> {
    let dressed = dressed_bin_elements(settings);
    let dim = settings.cutoff + 1;
    let complete = dressed.iter().fold(DMatrix::zeros(dim, dim), |a, b| a + b);
    let total = data.len() as f64;
    let mut g = DMatrix::<Complex64>::zeros(dim, dim);
    let mut rows: Vec<DMatrix<Complex64>> = Vec::new();
    let mut frequency = Vec::new();
    for (theta, xs) in data.by_phase() {
        g += rotated(&complete, theta).scale(xs.len() as f64 / total);
        let mut counts = vec![0usize; settings.bins + 2];
        for &x in &xs {
            counts[bin_index(x, settings.bins, settings.range)] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            if c > 0 {
                rows.push(rotated(&dressed[j], theta));
                frequency.push(c as f64 / total);
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Dataset("no records".into()));
    }
    let n = rows.len();
    let re = DMatrix::from_fn(n, dim * dim, |k, l| rows[k][l].re);
    let im = DMatrix::from_fn(n, dim * dim, |k, l| rows[k][l].im);
    Ok((
        Observations {
            re,
            im,
            frequency: DVector::from_vec(frequency),
        },
        g,
    ))
}

fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    // Tr(AB) = Σ A_ij conj(B_ij) for Hermitian B.
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Probability of each bin (overflow bins first and last) when a
/// single-mode state is measured at phase `theta` with the detector of
/// `settings`.
pub fn bin_probabilities(rho: &DensityMatrix, theta: f64, settings: &MaxLikSettings) -> Result<Vec<f64>> {
    if rho.modes() != 1 || rho.cutoff() != settings.cutoff {
        return Err(Error::CutoffMismatch(rho.cutoff(), settings.cutoff));
    }
    Ok(dressed_bin_elements(settings)
        .iter()
        .map(|d| trace_product(&rotated(d, theta), rho.elements()))
        .collect())
}

/// Iterative maximum-likelihood reconstruction over binned quadrature data,
/// with the detector model built into the POVM.
///
/// Each iteration moves along the `ρ ← R ρ R` direction with the operator
/// `M = 1 + β(R − 1)`; `β = 1` is the plain fixed-point step. β grows while
/// steps keep improving the likelihood and is halved when a step would lower
/// it, so the recorded likelihood never decreases and `M ρ M†` stays positive.
pub fn maxlik_reconstruct(data: &QuadratureDataset, settings: &MaxLikSettings) -> Result<MaxLikResult> {
    if settings.cutoff < MIN_MAXLIK_CUTOFF {
        return Err(Error::ParamDomain(format!(
            "cutoff must be >= {MIN_MAXLIK_CUTOFF}, got {}",
            settings.cutoff
        )));
    }
    if !(settings.eta > 0.0 && settings.eta <= 1.0 && settings.excess_noise >= 0.0) {
        return Err(Error::ParamDomain(format!(
            "bad detector model eta={}, e={}",
            settings.eta, settings.excess_noise
        )));
    }
    if settings.bins == 0 || !(settings.range > 0.0) {
        return Err(Error::ParamDomain("bins and range must be positive".into()));
    }
    let (obs, g) = observations(data, settings)?;
    let total = data.len() as f64;
    let dim = settings.cutoff + 1;
    let g_inv_sqrt = hermitian_map(&g, |l| 1.0 / l.sqrt());
    let identity = DMatrix::<Complex64>::identity(dim, dim);

    let mut rho = identity.unscale(dim as f64);
    let mut p = obs.probabilities(&rho);
    let mut history = vec![obs.log_likelihood(&p)];
    let mut converged = false;
    let mut iterations = 0;
    let mut beta = 1.0f64;
    while iterations < settings.max_iterations {
        iterations += 1;
        let r = &g_inv_sqrt * obs.r_operator(&p, dim) * &g_inv_sqrt;
        let current = *history.last().unwrap();
        let step = |beta: f64| {
            let op = &identity + (&r - &identity).scale(beta);
            let next = &op * &rho * op.adjoint();
            let next = (&next + next.adjoint()).scale(0.5);
            let t = next.trace().re;
            let next = next.unscale(t);
            let q = obs.probabilities(&next);
            let l = obs.log_likelihood(&q);
            (next, q, l)
        };
        let (mut next, mut q, mut l) = step(beta);
        while l <= current && beta > 1e-12 {
            beta *= 0.5;
            (next, q, l) = step(beta);
        }
        if l <= current {
            // No step along R improves the likelihood: stationary point.
            converged = true;
            break;
        }
        rho = next;
        p = q;
        history.push(l);
        if (l - current) * total < settings.tolerance {
            converged = true;
            break;
        }
        beta = (beta * 1.5).min(MAX_OVERRELAXATION);
    }
    let rho = DensityMatrix::new(1, settings.cutoff, rho)?;
    Ok(MaxLikResult {
        rho,
        iterations,
        converged,
        log_likelihood: history,
        samples: data.len(),
        tolerance: settings.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_cover_the_line() {
        assert_eq!(bin_index(-7.0, 200, 5.0), 0);
        assert_eq!(bin_index(-5.0, 200, 5.0), 1);
        assert_eq!(bin_index(4.99, 200, 5.0), 200);
        assert_eq!(bin_index(5.0, 200, 5.0), 201);
        let (lo, hi) = bin_edges(1, 200, 5.0);
        assert!((lo + 5.0).abs() < 1e-15 && (hi + 4.95).abs() < 1e-12);
    }

    #[test]
    fn dressed_povm_is_complete() {
        for (eta, e) in [(1.0, 0.0), (0.7, 0.01)] {
            let s = MaxLikSettings::default().with_detector(eta, e);
            let els = dressed_bin_elements(&s);
            let sum = els.iter().fold(DMatrix::zeros(15, 15), |a, b| a + b);
            let err = (sum - DMatrix::<f64>::identity(15, 15)).abs().max();
            assert!(err < 1e-10, "eta={eta}: {err}");
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.powi(k)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k + 1) as f64 } else { 0.0 };
            assert!((q - exact).abs() < 1e-14, "{k}");
        }
    }
}
