//! Run configuration. Precedence: built-in defaults, then the JSON config
//! file, then command-line flags.

use std::path::{Path, PathBuf};

use photosub::fock::DEFAULT_CUTOFF;
use photosub::model::{s_from_db, ExperimentParams, AVERAGE_GAMMA, AVERAGE_XI};
use photosub::tomography::{GridSpec, MaxLikSettings, RadonSettings, MIN_BOOTSTRAP_RESAMPLES, MIN_MAXLIK_CUTOFF};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 20_070_601;

/// Named parameter points used by the Wigner cuts and the pipeline. All are
/// defined with the measured detector; `corrected` removes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "1.8db-r5")]
    Moderate,
    #[serde(rename = "1.3db-r10")]
    Weak,
    #[serde(rename = "3.2db-r10")]
    Strong,
    #[serde(rename = "vacuum")]
    Vacuum,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Moderate, Preset::Weak, Preset::Strong, Preset::Vacuum];

    pub fn label(self) -> &'static str {
        match self {
            Preset::Moderate => "1.8db-r5",
            Preset::Weak => "1.3db-r10",
            Preset::Strong => "3.2db-r10",
            Preset::Vacuum => "vacuum",
        }
    }

    pub fn measured_params(self) -> ExperimentParams {
        match self {
            Preset::Moderate => ExperimentParams::average_measured(s_from_db(1.8), 0.05),
            Preset::Weak => ExperimentParams::average_measured(s_from_db(1.3), 0.10),
            Preset::Strong => ExperimentParams::average_measured(s_from_db(3.2), 0.10),
            Preset::Vacuum => ExperimentParams {
                xi: 0.0,
                ..ExperimentParams::ideal(1.0)
            },
        }
    }

    pub fn params(self, corrected: bool) -> ExperimentParams {
        let p = self.measured_params();
        if corrected {
            p.corrected()
        } else {
            p
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub squeezing_db: Vec<f64>,
    pub reflectivities: Vec<f64>,
    pub xi: f64,
    pub gamma: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            squeezing_db: (1..=14).map(|k| 0.25 * k as f64).collect(),
            reflectivities: vec![0.03, 0.05, 0.10],
            xi: AVERAGE_XI,
            gamma: AVERAGE_GAMMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossoverConfig {
    pub xi_values: Vec<f64>,
    pub reflectivity: f64,
    pub gamma: f64,
    /// Scan range in dB; the first sign change of `N − N₀` is refined by
    /// bisection. The default range ends where the default cutoff still
    /// converges.
    pub db_min: f64,
    pub db_max: f64,
    pub db_step: f64,
    pub tolerance_db: f64,
}

impl Default for CrossoverConfig {
    fn default() -> Self {
        Self {
            xi_values: vec![AVERAGE_XI, 0.82],
            reflectivity: 0.03,
            gamma: AVERAGE_GAMMA,
            db_min: 0.25,
            db_max: 4.5,
            db_step: 0.25,
            tolerance_db: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutsConfig {
    pub presets: Vec<Preset>,
    pub grid: GridSpec,
}

impl Default for CutsConfig {
    fn default() -> Self {
        Self {
            presets: Preset::ALL.to_vec(),
            grid: GridSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    pub preset: Preset,
    /// Replaces the preset's parameters when given (measured detector).
    pub params: Option<ExperimentParams>,
    pub phases: usize,
    pub samples_per_phase: usize,
    pub radon: RadonSettings,
    /// Grid used to turn back-projected Wigner functions into density
    /// matrices; wider and finer than the exported grid.
    pub radon_rho_grid: GridSpec,
    pub maxlik: MaxLikSettings,
    pub moment_resamples: usize,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Moderate,
            params: None,
            phases: 12,
            samples_per_phase: 20_000,
            radon: RadonSettings::default(),
            radon_rho_grid: GridSpec::square(5.0, 101),
            maxlik: MaxLikSettings::default(),
            moment_resamples: 200,
        }
    }
}

impl TomographyConfig {
    pub fn measured_params(&self) -> ExperimentParams {
        self.params.unwrap_or_else(|| self.preset.measured_params())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Ideal detector (`η = 1`, `e = 0`) when true.
    pub corrected: bool,
    /// Photon-number cutoff per mode for negativities.
    pub cutoff: usize,
    pub sweep: SweepConfig,
    pub crossover: CrossoverConfig,
    pub cuts: CutsConfig,
    pub tomography: TomographyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            out: PathBuf::from("out"),
            corrected: true,
            cutoff: DEFAULT_CUTOFF,
            sweep: SweepConfig::default(),
            crossover: CrossoverConfig::default(),
            cuts: CutsConfig::default(),
            tomography: TomographyConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub cutoff: Option<usize>,
    pub uncorrected: bool,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(c) = o.cutoff {
            self.cutoff = c;
            self.tomography.maxlik.cutoff = c;
        }
        if o.uncorrected {
            self.corrected = false;
        }
    }

    /// Cutoffs at which every analytic negativity is evaluated; the value at
    /// the last one is reported.
    pub fn cutoff_sweep(&self) -> Vec<usize> {
        [self.cutoff - 4, self.cutoff - 2, self.cutoff, self.cutoff + 2].to_vec()
    }

    /// Applies the detector choice to a parameter set.
    pub fn detector(&self, params: ExperimentParams) -> ExperimentParams {
        if self.corrected {
            params.corrected()
        } else {
            ExperimentParams {
                eta: photosub::model::HOMODYNE_ETA,
                excess_noise: photosub::model::HOMODYNE_EXCESS_NOISE,
                ..params
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.cutoff < 6 {
            return bad(format!("cutoff must be at least 6, got {}", self.cutoff));
        }
        let s = &self.sweep;
        if s.squeezing_db.is_empty() || s.reflectivities.is_empty() {
            return bad("sweep needs at least one squeezing level and reflectivity".into());
        }
        for &db in &s.squeezing_db {
            if !(db > 0.0 && db.is_finite()) {
                return bad(format!("squeezing must be positive, got {db} dB"));
            }
            for &r in &s.reflectivities {
                ExperimentParams {
                    reflectivity: r,
                    xi: s.xi,
                    gamma: s.gamma,
                    ..ExperimentParams::ideal(s_from_db(db))
                }
                .validate()?;
            }
        }
        let c = &self.crossover;
        if !(c.db_min > 0.0 && c.db_max > c.db_min && c.db_step > 0.0 && c.tolerance_db > 0.0) {
            return bad(format!("bad crossover scan {}..{} step {}", c.db_min, c.db_max, c.db_step));
        }
        for &xi in &c.xi_values {
            ExperimentParams {
                reflectivity: c.reflectivity,
                xi,
                gamma: c.gamma,
                ..ExperimentParams::ideal(0.5)
            }
            .validate()?;
        }
        self.cuts.grid.validate()?;
        let t = &self.tomography;
        t.measured_params().validate()?;
        t.radon.grid.validate()?;
        t.radon_rho_grid.validate()?;
        if t.phases < photosub::tomography::MIN_RADON_PHASES || t.samples_per_phase == 0 {
            return bad(format!(
                "tomography needs at least {} phases and one sample per phase",
                photosub::tomography::MIN_RADON_PHASES
            ));
        }
        if t.maxlik.cutoff < MIN_MAXLIK_CUTOFF || t.maxlik.max_iterations == 0 {
            return bad(format!(
                "maxlik needs cutoff >= {MIN_MAXLIK_CUTOFF} and at least one iteration"
            ));
        }
        if t.moment_resamples < MIN_BOOTSTRAP_RESAMPLES {
            return bad(format!("need at least {MIN_BOOTSTRAP_RESAMPLES} bootstrap resamples"));
        }
        Ok(())
    }

    /// SHA-256 of the JSON serialization without the output directory, so
    /// the same run written to two places has one hash.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v.as_object_mut().expect("config is an object").remove("out");
        let bytes = serde_json::to_vec(&v).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 5, "cutoff": 12, "sweep": {"squeezing_db": [1.0]}}"#).unwrap();
        let cfg = RunConfig::load(Some(&path), &Overrides::default()).unwrap();
        assert_eq!((cfg.seed, cfg.cutoff), (5, 12));
        assert_eq!(cfg.sweep.reflectivities, SweepConfig::default().reflectivities);
        let o = Overrides {
            seed: Some(9),
            cutoff: Some(10),
            uncorrected: true,
            ..Overrides::default()
        };
        let cfg = RunConfig::load(Some(&path), &o).unwrap();
        assert_eq!((cfg.seed, cfg.cutoff, cfg.tomography.maxlik.cutoff), (9, 10, 10));
        assert!(!cfg.corrected);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        for text in [
            r#"{"sweep": {"reflectivities": [1.5]}}"#,
            r#"{"cutoff": 3}"#,
            r#"{"unknown_field": 1}"#,
            r#"{"tomography": {"phases": 3}}"#,
            r#"{"tomography": {"maxlik": {"cutoff": 6}}}"#,
            "not json",
        ] {
            std::fs::write(&path, text).unwrap();
            assert!(RunConfig::load(Some(&path), &Overrides::default()).is_err(), "{text}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.out = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn default_cutoff_sweep() {
        assert_eq!(RunConfig::default().cutoff_sweep(), vec![10, 12, 14, 16]);
    }
}
