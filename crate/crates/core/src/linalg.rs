//! Small dense linear-algebra and quadrature helpers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Matrices with an identically zero imaginary part take the real symmetric
/// path, which is several times faster.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = if m.iter().all(|z| z.im == 0.0) {
        let re = m.map(|z| z.re);
        re.symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    ev.sort_by(f64::total_cmp);
    ev
}

/// Rebuilds `V f(Λ) V†` from the eigen-decomposition of a Hermitian matrix.
pub fn hermitian_map(m: &DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(m.clone());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let fl = f(*lambda);
        scaled.column_mut(j).scale_mut(fl);
    }
    &scaled * v.adjoint()
}

/// Nodes and weights of `n`-point Gauss–Hermite quadrature for the weight
/// `exp(−t²)`. Newton refinement on the normalized recurrence keeps the small
/// outer weights accurate to full relative precision.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Hermite functions `ψ_0 … ψ_cutoff` at `x` (position wavefunctions of the
/// Fock states, vacuum variance 1/2).
pub fn hermite_functions(x: f64, cutoff: usize) -> Vec<f64> {
    let mut psi = vec![0.0; cutoff + 1];
    psi[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if cutoff >= 1 {
        psi[1] = std::f64::consts::SQRT_2 * x * psi[0];
    }
    for n in 2..=cutoff {
        let nf = n as f64;
        psi[n] = (2.0 / nf).sqrt() * x * psi[n - 1] - ((nf - 1.0) / nf).sqrt() * psi[n - 2];
    }
    psi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_hermite_integrates_even_moments() {
        let (x, w) = gauss_hermite(40);
        let pi_sqrt = std::f64::consts::PI.sqrt();
        // ∫ t^{2k} e^{−t²} = Γ(k + 1/2)
        let mut gamma_half = pi_sqrt;
        for k in 0..30 {
            let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.powi(2 * k)).sum();
            assert!(
                ((q - gamma_half) / gamma_half).abs() < 1e-12,
                "k={k}: {q} vs {gamma_half}"
            );
            gamma_half *= k as f64 + 0.5;
        }
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let (x, w) = gauss_hermite(60);
        let psi: Vec<Vec<f64>> = x.iter().map(|&t| hermite_functions(t, 20)).collect();
        for m in 0..=20 {
            for n in 0..=20 {
                // ψ_m ψ_n = e^{−t²}·poly, so strip the weight.
                let q: f64 = x
                    .iter()
                    .zip(&w)
                    .zip(&psi)
                    .map(|((t, wi), p)| wi * (t * t).exp() * p[m] * p[n])
                    .sum();
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((q - expect).abs() < 1e-11, "({m},{n}) = {q}");
            }
        }
    }

    #[test]
    fn eigenvalues_real_and_complex_paths_agree() {
        let m = DMatrix::from_fn(6, 6, |i, j| {
            Complex64::new(((i + 2 * j) as f64).sin() + ((j + 2 * i) as f64).sin(), 0.0)
        });
        let ev_real = hermitian_eigenvalues(&m);
        let mut shifted = m.clone();
        shifted[(0, 1)].im = 1e-300; // forces the complex path without changing anything
        shifted[(1, 0)].im = -1e-300;
        let ev_cplx = hermitian_eigenvalues(&shifted);
        for (a, b) in ev_real.iter().zip(&ev_cplx) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
