use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{single_mode_from_wigner, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::model::{AnalyticTwoModeState, Basis, Branch};

/// Default photon-number cutoff per mode for negativity evaluation.
pub const DEFAULT_CUTOFF: usize = 14;
pub const DEFAULT_CUTOFF_SWEEP: [usize; 4] = [10, 12, 14, 16];
/// Allowed change of the negativity between the last two sweep cutoffs.
pub const SWEEP_TOLERANCE: f64 = 1e-4;

fn require_two_mode(rho: &DensityMatrix) -> Result<()> {
    if rho.modes() != 2 {
        return Err(Error::ModeCount {
            expected: 2,
            got: rho.modes(),
        });
    }
    Ok(())
}

/// Tensor product `ρ₊ ⊗ ρ₋` in the ± mode basis.
pub fn two_mode_assemble(rho_plus: &DensityMatrix, rho_minus: &DensityMatrix) -> Result<DensityMatrix> {
    for r in [rho_plus, rho_minus] {
        if r.modes() != 1 {
            return Err(Error::ModeCount {
                expected: 1,
                got: r.modes(),
            });
        }
    }
    if rho_plus.cutoff() != rho_minus.cutoff() {
        return Err(Error::CutoffMismatch(rho_plus.cutoff(), rho_minus.cutoff()));
    }
    DensityMatrix::new(
        2,
        rho_plus.cutoff(),
        rho_plus.elements().kronecker(rho_minus.elements()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamsplitterDirection {
    /// ± basis in, 1,2 basis out.
    PlusMinusToOneTwo,
    /// 1,2 basis in, ± basis out.
    OneTwoToPlusMinus,
}

/// Beamsplitter amplitudes inside the block of total photon number `total`:
/// entry `(j, k)` is `⟨j, total−j|k, total−k⟩±` in the 1,2 basis, with
/// `a±† = (a₁† ± a₂†)/√2`. Built by applying creation operators one photon at
/// a time, which avoids the cancellations of the binomial expansion.
fn beamsplitter_blocks(max_total: usize) -> Vec<DMatrix<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut blocks = vec![DMatrix::from_element(1, 1, 1.0)];
    for total in 0..max_total {
        let prev = &blocks[total];
        let mut next = DMatrix::zeros(total + 2, total + 2);
        // a±† acting on a vector of the `total` block.
        let create = |col: &[f64], sign: f64| -> Vec<f64> {
            let mut out = vec![0.0; total + 2];
            for (j, &v) in col.iter().enumerate() {
                out[j + 1] += s * ((j + 1) as f64).sqrt() * v;
                out[j] += sign * s * ((total - j + 1) as f64).sqrt() * v;
            }
            out
        };
        for k in 0..=total {
            let col: Vec<f64> = prev.column(k).iter().copied().collect();
            let raised = create(&col, 1.0);
            let norm = ((k + 1) as f64).sqrt();
            for (j, v) in raised.iter().enumerate() {
                next[(j, k + 1)] = v / norm;
            }
        }
        let col0: Vec<f64> = prev.column(0).iter().copied().collect();
        let lowered = create(&col0, -1.0);
        let norm = ((total + 1) as f64).sqrt();
        for (j, v) in lowered.iter().enumerate() {
            next[(j, 0)] = v / norm;
        }
        blocks.push(next);
    }
    blocks
}

/// Population carried by Fock states with `n₁ + n₂ > cutoff`, which the
/// beamsplitter cannot represent at the same per-mode cutoff.
pub fn photon_number_leakage(rho: &DensityMatrix) -> Result<f64> {
    require_two_mode(rho)?;
    let c = rho.cutoff();
    let mut leak = 0.0;
    for n1 in 0..=c {
        for n2 in 0..=c {
            if n1 + n2 > c {
                let i = rho.index(n1, n2);
                leak += rho.elements()[(i, i)].re;
            }
        }
    }
    Ok(leak)
}

/// 50/50 beamsplitter `a± = (a₁ ± a₂)/√2` acting on a two-mode state.
///
/// Photon number is conserved, so each block of fixed total number maps to
/// itself. The output keeps the input's per-mode cutoff and contains every
/// block with total `≤ cutoff`; input population beyond that is dropped and
/// reported by [`photon_number_leakage`]. For inputs without such population
/// the map is exactly unitary.
pub fn beamsplitter_rotate(rho: &DensityMatrix, direction: BeamsplitterDirection) -> Result<DensityMatrix> {
    require_two_mode(rho)?;
    let c = rho.cutoff();
    let blocks = beamsplitter_blocks(c);
    let transpose = direction == BeamsplitterDirection::OneTwoToPlusMinus;
    let dim = rho.dim();
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    let idx = |n1: usize, n2: usize| n1 * (c + 1) + n2;
    for nt in 0..=c {
        let un = if transpose {
            blocks[nt].transpose()
        } else {
            blocks[nt].clone()
        };
        for mt in 0..=c {
            let um = if transpose {
                blocks[mt].transpose()
            } else {
                blocks[mt].clone()
            };
            let sub = DMatrix::from_fn(nt + 1, mt + 1, |k, l| rho.elements()[(idx(k, nt - k), idx(l, mt - l))]);
            let unc = un.map(|v| Complex64::new(v, 0.0));
            let umc = um.map(|v| Complex64::new(v, 0.0));
            let rotated = &unc * sub * umc.transpose();
            for j in 0..=nt {
                for l in 0..=mt {
                    out[(idx(j, nt - j), idx(l, mt - l))] = rotated[(j, l)];
                }
            }
        }
    }
    DensityMatrix::new(2, c, out)
}

/// Local phase rotation `e^{−iφ n̂}` on one mode (1 or 2) of a two-mode state.
pub fn apply_local_phase(rho: &DensityMatrix, mode: usize, phi: f64) -> Result<DensityMatrix> {
    require_two_mode(rho)?;
    let c = rho.cutoff();
    let photons = |i: usize| {
        let (n1, n2) = (i / (c + 1), i % (c + 1));
        if mode == 1 {
            n1
        } else {
            n2
        }
    };
    if !(1..=2).contains(&mode) {
        return Err(Error::ParamDomain(format!("mode must be 1 or 2, got {mode}")));
    }
    let elements = DMatrix::from_fn(rho.dim(), rho.dim(), |i, j| {
        let dn = photons(i) as f64 - photons(j) as f64;
        rho.elements()[(i, j)] * Complex64::from_polar(1.0, -phi * dn)
    });
    DensityMatrix::new(2, c, elements)
}

/// Partial transposition of mode 1 or mode 2.
pub fn partial_transpose(rho: &DensityMatrix, mode: usize) -> Result<DensityMatrix> {
    require_two_mode(rho)?;
    if !(1..=2).contains(&mode) {
        return Err(Error::ParamDomain(format!("mode must be 1 or 2, got {mode}")));
    }
    let d = rho.cutoff() + 1;
    let elements = DMatrix::from_fn(rho.dim(), rho.dim(), |i, j| {
        let (m1, m2) = (i / d, i % d);
        let (n1, n2) = (j / d, j % d);
        let (r, c) = if mode == 1 {
            (n1 * d + m2, m1 * d + n2)
        } else {
            (m1 * d + n2, n1 * d + m2)
        };
        rho.elements()[(r, c)]
    });
    DensityMatrix::new(2, rho.cutoff(), elements)
}

/// `(‖ρ^{T₁}‖₁ − 1)/2` of the trace-normalized state.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    let pt = partial_transpose(&rho.normalized(), 1)?;
    let ev = hermitian_eigenvalues(pt.elements());
    let trace_norm: f64 = ev.iter().map(|l| l.abs()).sum();
    Ok(((trace_norm - 1.0) / 2.0).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityResult {
    pub negativity: f64,
    pub cutoff_used: usize,
    /// Change of the negativity between the last two cutoffs of the sweep.
    pub convergence_delta: f64,
    pub converged: bool,
    /// Negativity at every cutoff of the sweep, ascending.
    pub sweep: Vec<(usize, f64)>,
}

impl NegativityResult {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                delta: self.convergence_delta,
                tolerance: SWEEP_TOLERANCE,
            })
        }
    }
}

fn summarize(mut sweep: Vec<(usize, f64)>) -> Result<NegativityResult> {
    sweep.sort_by_key(|(c, _)| *c);
    let (cutoff_used, value) = *sweep
        .last()
        .ok_or_else(|| Error::ParamDomain("empty cutoff sweep".into()))?;
    let delta = if sweep.len() >= 2 {
        (value - sweep[sweep.len() - 2].1).abs()
    } else {
        0.0
    };
    Ok(NegativityResult {
        negativity: value,
        cutoff_used,
        convergence_delta: delta,
        converged: delta <= SWEEP_TOLERANCE,
        sweep,
    })
}

/// Negativity of `rho` truncated to each cutoff of the sweep.
pub fn negativity_sweep(rho: &DensityMatrix, cutoff_sweep: &[usize]) -> Result<NegativityResult> {
    require_two_mode(rho)?;
    let sweep = cutoff_sweep
        .iter()
        .map(|&c| {
            let (t, _) = rho.truncated(c)?;
            Ok((c, negativity(&t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(sweep)
}

/// Two-mode state in the 1,2 basis from the single-mode factors, with the
/// subtracted factor given in its own frame (x squeezed). It is turned by a
/// quarter period so that the two factors are squeezed along conjugate
/// quadratures, then the modes are mixed on the beamsplitter.
pub fn two_mode_from_branches(rho_s: &DensityMatrix, rho_c: &DensityMatrix) -> Result<DensityMatrix> {
    let plus = rho_s.phase_rotated(std::f64::consts::FRAC_PI_2)?;
    let pm = two_mode_assemble(&plus, rho_c)?;
    beamsplitter_rotate(&pm, BeamsplitterDirection::PlusMinusToOneTwo)
}

/// Fock matrix of an analytic two-mode state at `cutoff` photons per mode,
/// in the state's basis.
///
/// The factors are built at twice the cutoff so that every 1,2 Fock state
/// with `n₁, n₂ ≤ cutoff` is reached by the beamsplitter without truncation.
pub fn two_mode_density(state: &AnalyticTwoModeState, cutoff: usize) -> Result<DensityMatrix> {
    let inner = 2 * cutoff;
    let rho_s = single_mode_from_wigner(&state.factor_coeffs(Branch::Squeezed), Branch::Squeezed, inner)?;
    let rho_c = single_mode_from_wigner(&state.factor_coeffs(Branch::Subtracted), Branch::Subtracted, inner)?;
    let pm = two_mode_assemble(&rho_s, &rho_c)?;
    let full = match state.basis {
        Basis::PlusMinus => pm,
        Basis::OneTwo => beamsplitter_rotate(&pm, BeamsplitterDirection::PlusMinusToOneTwo)?,
    };
    Ok(full.truncated(cutoff)?.0)
}

/// Negativity of an analytic state (1,2 partition) over a cutoff sweep. The
/// state is built once at the largest cutoff and truncated for the others.
pub fn analytic_negativity(state: &AnalyticTwoModeState, cutoff_sweep: &[usize]) -> Result<NegativityResult> {
    let max = *cutoff_sweep
        .iter()
        .max()
        .ok_or_else(|| Error::ParamDomain("empty cutoff sweep".into()))?;
    let rho = two_mode_density(&state.with_basis(Basis::OneTwo), max)?;
    negativity_sweep(&rho, cutoff_sweep)
}
