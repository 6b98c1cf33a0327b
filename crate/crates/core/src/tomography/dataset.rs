use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{marginal, Branch, QuadCoeffs};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Phases closer than this are treated as the same setting.
pub const PHASE_TOLERANCE: f64 = 1e-9;

/// Which signal a homodyne record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataBranch {
    S,
    C,
    Mode1,
    Mode2,
    Joint,
}

impl From<Branch> for DataBranch {
    fn from(b: Branch) -> Self {
        match b {
            Branch::Squeezed => DataBranch::S,
            Branch::Subtracted => DataBranch::C,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadRecord {
    pub theta: f64,
    pub x: f64,
}

/// Phase-tagged homodyne samples, phases folded into `[0, π/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDataset {
    pub records: Vec<QuadRecord>,
    pub branch: DataBranch,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct DatasetSidecar {
    format_version: u32,
    branch: DataBranch,
    seed: u64,
    records: usize,
    #[serde(default)]
    provenance: serde_json::Value,
}

/// Maps `(θ, x)` to an equivalent record with `θ ∈ [0, π/2]`, using
/// `P(x; θ) = P(x; π−θ) = P(−x; π+θ)`.
pub fn fold_record(rec: QuadRecord) -> QuadRecord {
    let mut theta = rec.theta.rem_euclid(2.0 * PI);
    let mut x = rec.x;
    if theta >= PI {
        theta -= PI;
        x = -x;
    }
    if theta > FRAC_PI_2 {
        theta = PI - theta;
    }
    if (theta - PI).abs() < PHASE_TOLERANCE {
        theta = 0.0;
    }
    QuadRecord { theta, x }
}

impl QuadratureDataset {
    pub fn new(records: Vec<QuadRecord>, branch: DataBranch, seed: u64) -> Self {
        Self {
            records: records.into_iter().map(fold_record).collect(),
            branch,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Samples grouped by phase, phases ascending.
    pub fn by_phase(&self) -> Vec<(f64, Vec<f64>)> {
        let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
        for r in &self.records {
            match groups
                .iter_mut()
                .find(|(t, _)| (t - r.theta).abs() < PHASE_TOLERANCE)
            {
                Some((_, xs)) => xs.push(r.x),
                None => groups.push((r.theta, vec![r.x])),
            }
        }
        groups.sort_by(|a, b| a.0.total_cmp(&b.0));
        groups
    }

    /// Samples recorded at phase `theta` (after folding).
    pub fn at_phase(&self, theta: f64) -> Vec<f64> {
        let t = fold_record(QuadRecord { theta, x: 0.0 }).theta;
        self.records
            .iter()
            .filter(|r| (r.theta - t).abs() < PHASE_TOLERANCE)
            .map(|r| r.x)
            .collect()
    }

    fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// CSV with header `theta,x` (radians) plus a `.json` sidecar holding the
    /// branch tag, seed and `provenance`.
    pub fn write(&self, csv_path: &Path, provenance: serde_json::Value) -> Result<()> {
        let mut w = csv::Writer::from_path(csv_path)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        let side = DatasetSidecar {
            format_version: DATASET_FORMAT_VERSION,
            branch: self.branch,
            seed: self.seed,
            records: self.records.len(),
            provenance,
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(Self::sidecar_path(csv_path))?), &side)?;
        Ok(())
    }

    pub fn read(csv_path: &Path) -> Result<Self> {
        let side: DatasetSidecar =
            serde_json::from_reader(BufReader::new(File::open(Self::sidecar_path(csv_path))?))?;
        if side.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::Dataset(format!("unsupported dataset format {}", side.format_version)));
        }
        let mut r = csv::Reader::from_path(csv_path)?;
        let records = r.deserialize().collect::<std::result::Result<Vec<QuadRecord>, _>>()?;
        if records.len() != side.records {
            return Err(Error::Dataset(format!(
                "sidecar announces {} records, file has {}",
                side.records,
                records.len()
            )));
        }
        Ok(Self::new(records, side.branch, side.seed))
    }
}

/// RNG for substream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n_per_phase` independent draws from the closed-form marginal at each
/// phase. Phase `k` uses substream `k` of `seed`, so results do not depend on
/// thread scheduling.
pub fn sample_homodyne(
    coeffs: &QuadCoeffs,
    which: Branch,
    phases: &[f64],
    n_per_phase: usize,
    seed: u64,
) -> Result<QuadratureDataset> {
    coeffs.validate()?;
    if n_per_phase == 0 {
        return Err(Error::ParamDomain("n_per_phase must be >= 1".into()));
    }
    let records: Vec<QuadRecord> = phases
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, &theta)| {
            let dist = marginal(coeffs, which, theta);
            let mut rng = substream(seed, k as u64);
            (0..n_per_phase).map(move |_| QuadRecord {
                theta,
                x: dist.sample(&mut rng),
            })
        })
        .collect();
    Ok(QuadratureDataset::new(records, which.into(), seed))
}

/// `count` phases `kπ/(2(count−1))`, evenly covering `[0, π/2]`.
pub fn default_phases(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|k| k as f64 * FRAC_PI_2 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_lands_in_first_quadrant() {
        for (theta, x, t2, x2) in [
            (0.3, 1.0, 0.3, 1.0),
            (PI - 0.3, 1.0, 0.3, 1.0),
            (PI + 0.3, 1.0, 0.3, -1.0),
            (2.0 * PI - 0.3, 1.0, 0.3, -1.0),
            (-0.3, 1.0, 0.3, -1.0),
            (PI, 2.0, 0.0, -2.0),
        ] {
            let f = fold_record(QuadRecord { theta, x });
            assert!((f.theta - t2).abs() < 1e-12 && f.x == x2, "{theta}: {f:?}");
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let c = QuadCoeffs {
            a: 0.8,
            b: 1.5,
            sub_a: 0.2,
            sub_b: 0.4,
        };
        let phases = default_phases(4);
        let d1 = sample_homodyne(&c, Branch::Subtracted, &phases, 500, 11).unwrap();
        let d2 = sample_homodyne(&c, Branch::Subtracted, &phases, 500, 11).unwrap();
        let d3 = sample_homodyne(&c, Branch::Subtracted, &phases, 500, 12).unwrap();
        assert_eq!(d1, d2);
        assert_ne!(d1, d3);
        assert_eq!(d1.by_phase().len(), 4);
        assert_eq!(d1.at_phase(FRAC_PI_2).len(), 500);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = sample_homodyne(&QuadCoeffs::VACUUM, Branch::Squeezed, &[0.0, 1.0], 20, 5).unwrap();
        d.write(&path, serde_json::Value::Null).unwrap();
        let head = std::fs::read_to_string(&path).unwrap();
        assert!(head.starts_with("theta,x\n"));
        assert_eq!(QuadratureDataset::read(&path).unwrap(), d);
    }
}
