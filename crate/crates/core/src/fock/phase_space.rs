use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::gauss_hermite;
use crate::model::{Branch, PhasePoint, QuadCoeffs};
use crate::tomography::WignerGrid;

/// Largest acceptable probability lost to the Fock cutoff.
pub const TRUNCATION_TOLERANCE: f64 = 1e-3;

/// `e^{x²+p²}·W_{|m⟩⟨n|}(x, p)`: a polynomial in (x, p).
fn reduced_kernels(pt: PhasePoint, cutoff: usize) -> DMatrix<Complex64> {
    let dim = cutoff + 1;
    let y = 2.0 * (pt.x * pt.x + pt.p * pt.p); // 4|α|²
    let two_alpha_bar = Complex64::new(SQRT_2 * pt.x, -SQRT_2 * pt.p);
    let mut out = DMatrix::zeros(dim, dim);
    let mut lag = vec![0.0; dim];
    let mut power = Complex64::new(1.0, 0.0); // (2ᾱ)^k
    for k in 0..dim {
        let kf = k as f64;
        let len = dim - k;
        lag[0] = 1.0;
        if len > 1 {
            lag[1] = 1.0 + kf - y;
        }
        for j in 1..len.saturating_sub(1) {
            let jf = j as f64;
            lag[j + 1] = ((2.0 * jf + 1.0 + kf - y) * lag[j] - (jf + kf) * lag[j - 1]) / (jf + 1.0);
        }
        for n in 0..len {
            let m = n + k;
            // √(n!/m!)
            let ratio: f64 = (n + 1..=m).map(|j| 1.0 / (j as f64).sqrt()).product();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let v = power * (sign / PI * ratio * lag[n]);
            out[(m, n)] = v;
            out[(n, m)] = v.conj();
        }
        power *= two_alpha_bar;
    }
    out
}

/// Wigner functions of the Fock operators: entry `(m, n)` is `W_{|m⟩⟨n|}(pt)`.
///
/// The Wigner function of a state is `Σ ρ_mn W_{|m⟩⟨n|}` and matrix elements
/// follow from `ρ_mn = 2π ∫ W · conj(W_{|m⟩⟨n|})`.
pub fn wigner_kernel_matrix(pt: PhasePoint, cutoff: usize) -> DMatrix<Complex64> {
    reduced_kernels(pt, cutoff) * Complex64::new((-(pt.x * pt.x + pt.p * pt.p)).exp(), 0.0)
}

impl DensityMatrix {
    /// Wigner function of a single-mode state at `pt`.
    pub fn wigner(&self, pt: PhasePoint) -> Result<f64> {
        if self.modes() != 1 {
            return Err(Error::ModeCount {
                expected: 1,
                got: self.modes(),
            });
        }
        let k = wigner_kernel_matrix(pt, self.cutoff());
        Ok(self
            .elements()
            .iter()
            .zip(k.iter())
            .map(|(r, w)| (r * w).re)
            .sum())
    }
}

/// Fock matrix of one factor of the model, `ρ_mn = 2π ∬ W · conj(W_{|m⟩⟨n|})`.
///
/// The integrand is a Gaussian times a polynomial of degree at most
/// `2·cutoff + 2` per axis, so tensor Gauss–Hermite quadrature with
/// `cutoff + 12` nodes per axis evaluates it exactly up to rounding.
pub fn single_mode_from_wigner(
    coeffs: &QuadCoeffs,
    which: Branch,
    cutoff: usize,
) -> Result<DensityMatrix> {
    coeffs.validate()?;
    if cutoff < 2 {
        return Err(Error::ParamDomain(format!("cutoff must be >= 2, got {cutoff}")));
    }
    let QuadCoeffs { a, b, sub_a, sub_b } = *coeffs;
    let (nodes, weights) = gauss_hermite(cutoff + 12);
    let (sx, sp) = ((1.0 / a + 1.0).sqrt(), (1.0 / b + 1.0).sqrt());
    let norm = 2.0 * PI / (PI * (a * b).sqrt() * sx * sp);
    let poly = |x: f64, p: f64| match which {
        Branch::Squeezed => 1.0,
        Branch::Subtracted => {
            2.0 * sub_a / (a * a) * x * x + 2.0 * sub_b / (b * b) * p * p + coeffs.origin_factor()
        }
    };

    let dim = cutoff + 1;
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for (tx, wx) in nodes.iter().zip(&weights) {
        for (tp, wp) in nodes.iter().zip(&weights) {
            let (x, p) = (tx / sx, tp / sp);
            let f = wx * wp * poly(x, p) * norm;
            let k = reduced_kernels(PhasePoint::new(x, p), cutoff);
            for n in 0..dim {
                // W is even in x and in p separately: ρ is real and only
                // couples photon numbers of equal parity.
                for m in (n % 2..dim).step_by(2) {
                    acc[(m, n)] += f * k[(m, n)].re;
                }
            }
        }
    }
    let elements = acc.map(|v| Complex64::new(v, 0.0));
    let rho = DensityMatrix::new(1, cutoff, elements)?;
    check_truncation(&rho)?;
    Ok(rho)
}

fn check_truncation(rho: &DensityMatrix) -> Result<()> {
    let deficit = rho.truncation_deficit();
    if deficit > TRUNCATION_TOLERANCE {
        return Err(Error::Truncation {
            deficit,
            threshold: TRUNCATION_TOLERANCE,
            cutoff: rho.cutoff(),
        });
    }
    Ok(())
}

/// Fock matrix of a sampled Wigner function (trapezoidal rule on the grid).
///
/// The result is Hermitian but not necessarily positive: reconstructed grids
/// carry statistical noise.
pub fn single_mode_from_grid(grid: &WignerGrid, cutoff: usize) -> Result<DensityMatrix> {
    let dim = cutoff + 1;
    let cell = grid.step_x() * grid.step_p();
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for (i, x) in grid.xs().enumerate() {
        for (j, p) in grid.ps().enumerate() {
            let w = grid.value(i, j);
            if w == 0.0 {
                continue;
            }
            let k = wigner_kernel_matrix(PhasePoint::new(x, p), cutoff);
            acc += k.map(|z| z.conj()) * Complex64::new(2.0 * PI * w * cell, 0.0);
        }
    }
    let herm = (&acc + acc.adjoint()).scale(0.5);
    DensityMatrix::new(1, cutoff, herm)
}

/// Squeezed vacuum with quadrature widths `a` (x) and `1/a` (p).
pub fn squeezed_vacuum(a: f64, cutoff: usize) -> Result<DensityMatrix> {
    single_mode_from_wigner(
        &QuadCoeffs {
            a,
            b: 1.0 / a,
            sub_a: 0.0,
            sub_b: 0.0,
        },
        Branch::Squeezed,
        cutoff,
    )
}
