//! File formats shared by the CLI and by external tooling.
//!
//! Every float in a CSV payload is written with 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly and makes reruns
//! byte-identical. Site labels in files are 1-based.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::SqueezingEllipse;
use crate::fluctuations::CovarianceMatrix;
use crate::meanfield::{InitialConditionSpec, MeanFieldState, SpaceTimeGrid};
use crate::network::NetworkParams;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed file: {0}")]
    Format(String),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> IoResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

fn open(path: &Path) -> IoResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

/// Serializes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> IoResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> IoResult<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

/// Persisted mean-field state: the amplitudes as `[re, im]` pairs together
/// with the generator settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConditionFile {
    pub t: f64,
    pub alphas: Vec<[f64; 2]>,
    #[serde(default)]
    pub spec: Option<InitialConditionSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl InitialConditionFile {
    pub fn from_state(s: &MeanFieldState, spec: Option<&InitialConditionSpec>) -> Self {
        Self {
            t: s.t,
            alphas: s.alphas.iter().map(|a| [a.re, a.im]).collect(),
            spec: spec.cloned(),
            seed: spec.map(|s| s.seed),
        }
    }

    pub fn to_state(&self, p: &NetworkParams) -> crate::Result<MeanFieldState> {
        MeanFieldState::new(p, self.t, self.alphas.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }
}

fn csv_writer<W: Write>(w: W, header: &[&str]) -> IoResult<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

/// Long format `t,l,phi,r2`, time-major.
pub fn write_spacetime<W: Write>(w: W, grid: &SpaceTimeGrid) -> IoResult<()> {
    let mut out = csv_writer(w, &["t", "l", "phi", "r2"])?;
    for (k, &t) in grid.times.iter().enumerate() {
        for l in 0..grid.phi.len() {
            out.write_record([fmt_f64(t), (l + 1).to_string(), fmt_f64(grid.phi[l][k]), fmt_f64(grid.r2[l][k])])?;
        }
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

/// One of the two space-time grids in long format `t,l,<column>`.
pub fn write_grid_column<W: Write>(w: W, times: &[f64], values: &[Vec<f64>], column: &str) -> IoResult<()> {
    let mut out = csv_writer(w, &["t", "l", column])?;
    for (k, &t) in times.iter().enumerate() {
        for (l, row) in values.iter().enumerate() {
            out.write_record([fmt_f64(t), (l + 1).to_string(), fmt_f64(row[k])])?;
        }
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

fn index_label(i: usize) -> (usize, &'static str) {
    (i / 2 + 1, if i % 2 == 0 { "q" } else { "p" })
}

/// Lower triangle of `C`, row-major, one entry per line:
/// `i,j,site_i,quad_i,site_j,quad_j,value` with 1-based `i`, `j`.
pub fn write_covariance<W: Write>(w: W, c: &CovarianceMatrix) -> IoResult<()> {
    let mut out = csv_writer(w, &["i", "j", "site_i", "quad_i", "site_j", "quad_j", "value"])?;
    let dim = c.matrix.nrows();
    for i in 0..dim {
        for j in 0..=i {
            let (si, qi) = index_label(i);
            let (sj, qj) = index_label(j);
            out.write_record([
                (i + 1).to_string(),
                (j + 1).to_string(),
                si.to_string(),
                qi.to_string(),
                sj.to_string(),
                qj.to_string(),
                fmt_f64(c.matrix[(i, j)]),
            ])?;
        }
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

/// Reads a file written by [`write_covariance`]; `t` is not stored in the
/// CSV and is supplied by the caller (usually from the sidecar).
pub fn read_covariance<R: Read>(r: R, t: f64) -> IoResult<CovarianceMatrix> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut entries = Vec::new();
    let mut dim = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        let parse_idx = |k: usize| -> IoResult<usize> {
            rec.get(k)
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&v| v >= 1)
                .ok_or_else(|| IoError::Format(format!("bad index in column {k}")))
        };
        let (i, j) = (parse_idx(0)?, parse_idx(1)?);
        let value: f64 = rec
            .get(6)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| IoError::Format("bad value column".into()))?;
        if j > i {
            return Err(IoError::Format(format!("entry ({i},{j}) is above the diagonal")));
        }
        dim = dim.max(i);
        entries.push((i - 1, j - 1, value));
    }
    if dim == 0 || dim % 2 != 0 || entries.len() != dim * (dim + 1) / 2 {
        return Err(IoError::Format(format!("{} entries do not form a lower triangle", entries.len())));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for (i, j, v) in entries {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(CovarianceMatrix { t, matrix: m })
}

/// Metadata written next to every covariance snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSidecar {
    pub params: NetworkParams,
    /// Start of the fluctuation window.
    pub t_i: f64,
    pub delta_t: f64,
    pub dt: f64,
    /// Time of this snapshot.
    pub t: f64,
    pub min_physicality_margin: f64,
    pub beyond_validated_horizon: bool,
}

pub fn write_covariance_files(
    csv_path: &Path,
    sidecar_path: &Path,
    c: &CovarianceMatrix,
    sidecar: &CovarianceSidecar,
) -> IoResult<()> {
    let mut w = create(csv_path)?;
    write_covariance(&mut w, c)?;
    w.flush().map_err(|source| IoError::Io { path: csv_path.display().to_string(), source })?;
    write_json(sidecar_path, sidecar)
}

pub fn read_covariance_files(csv_path: &Path, sidecar_path: &Path) -> IoResult<(CovarianceMatrix, CovarianceSidecar)> {
    let sidecar: CovarianceSidecar = read_json(sidecar_path)?;
    let c = read_covariance(open(csv_path)?, sidecar.t)?;
    Ok((c, sidecar))
}

/// `L,I2`.
pub fn write_mi_scan<W: Write>(w: W, scan: &BTreeMap<usize, f64>) -> IoResult<()> {
    let mut out = csv_writer(w, &["L", "I2"])?;
    for (l, i2) in scan {
        out.write_record([l.to_string(), fmt_f64(*i2)])?;
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

/// `l,lambda_min,lambda_max,theta`.
pub fn write_ellipses<W: Write>(w: W, ellipses: &[SqueezingEllipse]) -> IoResult<()> {
    let mut out = csv_writer(w, &["l", "lambda_min", "lambda_max", "theta"])?;
    for e in ellipses {
        out.write_record([e.site.to_string(), fmt_f64(e.lambda_min), fmt_f64(e.lambda_max), fmt_f64(e.theta)])?;
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

/// `l,psi`.
pub fn write_profile<W: Write>(w: W, column: &str, values: &[f64]) -> IoResult<()> {
    let mut out = csv_writer(w, &["l", column])?;
    for (l, v) in values.iter().enumerate() {
        out.write_record([(l + 1).to_string(), fmt_f64(*v)])?;
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

/// Writes a CSV file through `body`, mapping open errors to the path.
pub fn write_csv_file<F>(path: &Path, body: F) -> IoResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> IoResult<()>,
{
    let mut w = create(path)?;
    body(&mut w)?;
    w.flush().map_err(|source| IoError::Io { path: path.display().to_string(), source })
}
