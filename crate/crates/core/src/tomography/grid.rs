use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhasePoint;

/// Version tag written into every grid sidecar.
pub const GRID_FORMAT_VERSION: u32 = 1;

/// Node layout of a square-symmetric phase-space grid: `nx` nodes evenly
/// spaced on `[−x_max, x_max]`, same for p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_max: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl GridSpec {
    /// Odd node counts put a node on the origin.
    pub fn square(half_width: f64, nodes: usize) -> Self {
        Self {
            x_max: half_width,
            p_max: half_width,
            nx: nodes,
            np: nodes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 || !(self.x_max > 0.0) || !(self.p_max > 0.0) {
            return Err(Error::ParamDomain(format!("bad grid spec {self:?}")));
        }
        Ok(())
    }

    pub fn step_x(&self) -> f64 {
        2.0 * self.x_max / (self.nx - 1) as f64
    }

    pub fn step_p(&self) -> f64 {
        2.0 * self.p_max / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.x_max + i as f64 * self.step_x()
    }

    pub fn p(&self, j: usize) -> f64 {
        -self.p_max + j as f64 * self.step_p()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(4.0, 65)
    }
}

/// A Wigner function sampled on a [`GridSpec`]; `values[(i, j)]` is the
/// value at `(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    spec: GridSpec,
    values: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    layout: String,
    #[serde(flatten)]
    spec: GridSpec,
    step_x: f64,
    step_p: f64,
    #[serde(default)]
    provenance: serde_json::Value,
}

impl WignerGrid {
    pub fn new(spec: GridSpec, values: DMatrix<f64>) -> Result<Self> {
        spec.validate()?;
        if values.nrows() != spec.nx || values.ncols() != spec.np {
            return Err(Error::ParamDomain(format!(
                "grid values are {}x{}, spec wants {}x{}",
                values.nrows(),
                values.ncols(),
                spec.nx,
                spec.np
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(PhasePoint) -> f64) -> Result<Self> {
        spec.validate()?;
        let values = DMatrix::from_fn(spec.nx, spec.np, |i, j| f(PhasePoint::new(spec.x(i), spec.p(j))));
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn step_x(&self) -> f64 {
        self.spec.step_x()
    }

    pub fn step_p(&self) -> f64 {
        self.spec.step_p()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.spec.nx).map(|i| self.spec.x(i))
    }

    pub fn ps(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.spec.np).map(|j| self.spec.p(j))
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Value at the node nearest to the origin.
    pub fn origin_value(&self) -> f64 {
        self.values[(self.spec.nx / 2, self.spec.np / 2)]
    }

    pub fn riemann_sum(&self) -> f64 {
        self.values.sum() * self.step_x() * self.step_p()
    }

    pub fn max_abs_diff(&self, f: impl Fn(PhasePoint) -> f64) -> f64 {
        let mut worst = 0.0f64;
        for (i, x) in self.xs().enumerate() {
            for (j, p) in self.ps().enumerate() {
                worst = worst.max((self.values[(i, j)] - f(PhasePoint::new(x, p))).abs());
            }
        }
        worst
    }

    pub fn min_value(&self) -> f64 {
        self.values.min()
    }

    fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Writes the values as a headerless CSV matrix (rows are x nodes) and
    /// the grid layout to a `.json` sidecar next to it. `provenance` is
    /// stored verbatim in the sidecar.
    pub fn write(&self, csv_path: &Path, provenance: serde_json::Value) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(csv_path)?;
        for i in 0..self.spec.nx {
            w.write_record(self.values.row(i).iter().map(|v| format!("{v:.10e}")))?;
        }
        w.flush()?;
        let side = Sidecar {
            format_version: GRID_FORMAT_VERSION,
            layout: "rows=x,cols=p".into(),
            spec: self.spec,
            step_x: self.step_x(),
            step_p: self.step_p(),
            provenance,
        };
        let f = BufWriter::new(File::create(Self::sidecar_path(csv_path))?);
        serde_json::to_writer_pretty(f, &side)?;
        Ok(())
    }

    pub fn read(csv_path: &Path) -> Result<Self> {
        let side: Sidecar = serde_json::from_reader(BufReader::new(File::open(Self::sidecar_path(csv_path))?))?;
        if side.format_version != GRID_FORMAT_VERSION {
            return Err(Error::Dataset(format!("unsupported grid format {}", side.format_version)));
        }
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(csv_path)?;
        let mut data = Vec::with_capacity(side.spec.nx * side.spec.np);
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != side.spec.np {
                return Err(Error::Dataset(format!("row {rows} has {} columns", rec.len())));
            }
            for field in rec.iter() {
                data.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Dataset(format!("bad value {field:?}: {e}")))?,
                );
            }
            rows += 1;
        }
        if rows != side.spec.nx {
            return Err(Error::Dataset(format!("expected {} rows, got {rows}", side.spec.nx)));
        }
        Self::new(side.spec, DMatrix::from_row_slice(side.spec.nx, side.spec.np, &data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{wigner_s, QuadCoeffs};

    #[test]
    fn default_grid_has_origin_node() {
        let spec = GridSpec::default();
        assert_eq!(spec.x(spec.nx / 2), 0.0);
        assert!((spec.step_x() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn vacuum_grid_normalizes() {
        let g = WignerGrid::from_fn(GridSpec::default(), |pt| wigner_s(&QuadCoeffs::VACUUM, pt)).unwrap();
        assert!((g.riemann_sum() - 1.0).abs() < 1e-6);
        assert!((g.origin_value() - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let spec = GridSpec {
            x_max: 2.0,
            p_max: 3.0,
            nx: 5,
            np: 7,
        };
        let g = WignerGrid::from_fn(spec, |pt| pt.x - 0.25 * pt.p).unwrap();
        g.write(&path, serde_json::json!({"seed": 3})).unwrap();
        let back = WignerGrid::read(&path).unwrap();
        assert_eq!(back.spec(), g.spec());
        assert!((back.values() - g.values()).abs().max() < 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(WignerGrid::new(GridSpec::square(1.0, 3), DMatrix::zeros(3, 4)).is_err());
        assert!(GridSpec::square(1.0, 1).validate().is_err());
    }
}
