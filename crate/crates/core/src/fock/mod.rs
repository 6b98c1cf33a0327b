//! Fock-basis density matrices, the ± ↔ 1,2 beamsplitter, partial
//! transposition and entanglement negativity.

mod oracle;
mod phase_space;
mod two_mode;

pub use oracle::{oracle_ideal_subtracted, oracle_ideal_tmss};
pub use phase_space::{
    single_mode_from_grid, single_mode_from_wigner, squeezed_vacuum, wigner_kernel_matrix,
    TRUNCATION_TOLERANCE,
};
pub use two_mode::{
    analytic_negativity, apply_local_phase, beamsplitter_rotate, negativity, negativity_sweep,
    partial_transpose, photon_number_leakage, two_mode_assemble, two_mode_density,
    two_mode_from_branches, BeamsplitterDirection, NegativityResult, DEFAULT_CUTOFF,
    DEFAULT_CUTOFF_SWEEP, SWEEP_TOLERANCE,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_map};

/// A one- or two-mode density matrix truncated at `cutoff` photons per mode.
///
/// Two-mode states use lexicographic ordering, index `n₁·(cutoff+1) + n₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    modes: usize,
    cutoff: usize,
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(modes: usize, cutoff: usize, elements: DMatrix<Complex64>) -> Result<Self> {
        if !(1..=2).contains(&modes) {
            return Err(Error::ParamDomain(format!("unsupported mode count {modes}")));
        }
        let dim = (cutoff + 1).pow(modes as u32);
        if elements.nrows() != dim || elements.ncols() != dim {
            return Err(Error::ParamDomain(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                elements.nrows(),
                elements.ncols()
            )));
        }
        Ok(Self {
            modes,
            cutoff,
            elements,
        })
    }

    pub fn vacuum(modes: usize, cutoff: usize) -> Self {
        let dim = (cutoff + 1).pow(modes as u32);
        let mut elements = DMatrix::zeros(dim, dim);
        elements[(0, 0)] = Complex64::new(1.0, 0.0);
        Self {
            modes,
            cutoff,
            elements,
        }
    }

    /// Pure state `|ψ⟩⟨ψ|`; the amplitudes are used as given, not renormalized.
    pub fn from_pure(modes: usize, cutoff: usize, amplitudes: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        Self::new(modes, cutoff, &v * v.adjoint())
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_elements(self) -> DMatrix<Complex64> {
        self.elements
    }

    pub fn index(&self, n1: usize, n2: usize) -> usize {
        n1 * (self.cutoff + 1) + n2
    }

    pub fn trace(&self) -> f64 {
        self.elements.diagonal().iter().map(|z| z.re).sum()
    }

    /// Probability mass lost to the Fock truncation.
    pub fn truncation_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.elements - self.elements.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.elements)
    }

    pub fn purity(&self) -> f64 {
        (&self.elements * &self.elements).trace().re
    }

    pub fn normalized(&self) -> Self {
        let t = self.trace();
        Self {
            elements: self.elements.unscale(t),
            ..self.clone()
        }
    }

    /// Diagonal of a single-mode state (photon-number distribution).
    pub fn photon_distribution(&self) -> Vec<f64> {
        self.elements.diagonal().iter().map(|z| z.re).collect()
    }

    /// Restricts the state to `cutoff` photons per mode. The dropped
    /// population is returned alongside.
    pub fn truncated(&self, cutoff: usize) -> Result<(Self, f64)> {
        if cutoff > self.cutoff {
            return Err(Error::CutoffMismatch(cutoff, self.cutoff));
        }
        let keep: Vec<usize> = match self.modes {
            1 => (0..=cutoff).collect(),
            _ => (0..=cutoff)
                .flat_map(|n1| (0..=cutoff).map(move |n2| n1 * (self.cutoff + 1) + n2))
                .collect(),
        };
        let elements = self.elements.select_rows(&keep).select_columns(&keep);
        let out = Self::new(self.modes, cutoff, elements)?;
        let dropped = self.trace() - out.trace();
        Ok((out, dropped))
    }

    /// Single-mode phase rotation `e^{−iφ n̂} ρ e^{iφ n̂}`.
    pub fn phase_rotated(&self, phi: f64) -> Result<Self> {
        if self.modes != 1 {
            return Err(Error::ModeCount {
                expected: 1,
                got: self.modes,
            });
        }
        let elements = DMatrix::from_fn(self.dim(), self.dim(), |m, n| {
            self.elements[(m, n)] * Complex64::from_polar(1.0, -phi * (m as f64 - n as f64))
        });
        Ok(Self { elements, ..*self })
    }

    /// Closest state with non-negative spectrum and unit trace (negative
    /// eigenvalues clipped).
    pub fn projected_physical(&self) -> Self {
        let herm = (&self.elements + self.elements.adjoint()).scale(0.5);
        let clipped = hermitian_map(&herm, |l| l.max(0.0));
        let t = clipped.trace().re;
        Self {
            elements: clipped.unscale(t),
            ..self.clone()
        }
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::CutoffMismatch(self.cutoff, other.cutoff));
        }
        let root = hermitian_map(&self.elements, |l| l.max(0.0).sqrt());
        let inner = &root * &other.elements * &root;
        let inner = (&inner + inner.adjoint()).scale(0.5);
        let tr: f64 = hermitian_eigenvalues(&inner)
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .sum();
        Ok(tr * tr)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// JSON layout: `{"modes", "cutoff", "dim", "elements": [[[re, im], …], …]}`.
#[derive(Serialize, Deserialize)]
struct DensityMatrixJson {
    modes: usize,
    cutoff: usize,
    dim: usize,
    elements: Vec<Vec<[f64; 2]>>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| {
                        let z = self.elements[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        DensityMatrixJson {
            modes: self.modes,
            cutoff: self.cutoff,
            dim: self.dim(),
            elements: rows,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = DensityMatrixJson::deserialize(deserializer)?;
        let dim = raw.dim;
        if raw.elements.len() != dim || raw.elements.iter().any(|r| r.len() != dim) {
            return Err(serde::de::Error::custom("ragged element matrix"));
        }
        let elements = DMatrix::from_fn(dim, dim, |i, j| {
            let [re, im] = raw.elements[i][j];
            Complex64::new(re, im)
        });
        DensityMatrix::new(raw.modes, raw.cutoff, elements).map_err(serde::de::Error::custom)
    }
}
