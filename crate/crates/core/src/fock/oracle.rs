//! Direct Fock-basis constructions of the ideal states, independent of the
//! phase-space pipeline.

use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{Error, Result};

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::ParamDomain(format!("squeezing parameter r = {r} must be >= 0")));
    }
    Ok(())
}

/// `√(1−λ²) Σ λⁿ |n,n⟩` with `λ = tanh r`, truncated at `cutoff`.
///
/// Amplitudes are not renormalized after truncation, so the trace deficit
/// reports the dropped population.
pub fn oracle_ideal_tmss(r: f64, cutoff: usize) -> Result<DensityMatrix> {
    check_r(r)?;
    let lambda = r.tanh();
    let d = cutoff + 1;
    let mut psi = vec![Complex64::new(0.0, 0.0); d * d];
    let norm = (1.0 - lambda * lambda).sqrt();
    for n in 0..d {
        psi[n * d + n] = Complex64::new(norm * lambda.powi(n as i32), 0.0);
    }
    DensityMatrix::from_pure(2, cutoff, &psi)
}

/// `(a₁ + a₂)|TMSS⟩`, normalized with the exact untruncated norm
/// `⟨n₁ + n₂⟩ = 2λ²/(1−λ²)`.
pub fn oracle_ideal_subtracted(r: f64, cutoff: usize) -> Result<DensityMatrix> {
    check_r(r)?;
    if r == 0.0 {
        return Err(Error::ParamDomain("photon subtraction from vacuum is undefined".into()));
    }
    let lambda = r.tanh();
    let d = cutoff + 1;
    let mut psi = vec![Complex64::new(0.0, 0.0); d * d];
    let c0 = (1.0 - lambda * lambda).sqrt();
    let norm = (2.0 * lambda * lambda / (1.0 - lambda * lambda)).sqrt();
    // a₁|n,n⟩ = √n |n−1,n⟩ and a₂|n,n⟩ = √n |n,n−1⟩.
    for n in 1..d {
        let amp = c0 * lambda.powi(n as i32) * (n as f64).sqrt() / norm;
        psi[(n - 1) * d + n] += Complex64::new(amp, 0.0);
        psi[n * d + n - 1] += Complex64::new(amp, 0.0);
    }
    DensityMatrix::from_pure(2, cutoff, &psi)
}
