//! Synthetic homodyne data and the reconstructions run on it: filtered
//! back-projection, maximum likelihood, moment fits and the factorization
//! test.

mod dataset;
mod grid;
mod maxlik;
mod moments;
mod radon;
mod separability;

pub use dataset::{
    default_phases, fold_record, sample_homodyne, substream, DataBranch, QuadRecord,
    QuadratureDataset, DATASET_FORMAT_VERSION, PHASE_TOLERANCE,
};
pub use grid::{GridSpec, WignerGrid, GRID_FORMAT_VERSION};
pub use maxlik::{bin_probabilities, maxlik_reconstruct, MaxLikResult, MaxLikSettings, MIN_MAXLIK_CUTOFF};
pub use moments::{
    correct_for_losses, invert_moments, invert_params, moment_fit, BranchMoments, MomentFit,
    MomentFitSettings, RecoveredParams, MIN_BOOTSTRAP_RESAMPLES,
};
pub use radon::{radon_reconstruct, RadonSettings, MIN_RADON_PHASES, MIN_SAMPLES_PER_PHASE};
pub use separability::{
    independence_test, separability_test, FactorizationReport, MIN_SEPARABILITY_SAMPLES,
    PERMUTATIONS, SEPARABILITY_BINS, SIGNIFICANCE,
};
