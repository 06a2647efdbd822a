//! Runs one experiment over many seeds, one subdirectory per seed, and
//! tabulates regimes and mutual information across the ensemble.

use std::collections::BTreeMap;
use std::path::Path;

use chimera_core::io::{fmt_f64, write_json, IoError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig, IcSource};
use crate::error::CliError;
use crate::pipeline::{run, Manifest, OutDir};

pub const SWEEP_MANIFEST: &str = "sweep_manifest.json";

pub fn seed_dir_name(seed: u64) -> String {
    format!("seed_{seed}")
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self { count: v.len(), median: quantile(&v, 0.5), q1: quantile(&v, 0.25), q3: quantile(&v, 0.75) })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepManifest {
    pub tool: String,
    pub version: String,
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    pub failures: Vec<SeedFailure>,
    pub files: Vec<String>,
}

/// Runs `experiment` for every seed into `out/seed_<k>/` and writes
/// `sweep_summary.csv` and `sweep_stats.csv`. Returns
/// [`CliError::PartialSweep`] after writing everything if any seed failed.
pub fn seed_sweep(
    cfg: &ExperimentConfig,
    experiment: Experiment,
    seeds: &[u64],
    out: &Path,
) -> Result<SweepManifest, CliError> {
    if seeds.is_empty() {
        return Err(CliError::Config("a sweep needs at least one seed".into()));
    }
    if matches!(cfg.ic, IcSource::File { .. }) {
        return Err(CliError::Config("a seed sweep needs a generated initial condition".into()));
    }
    cfg.validate(experiment)?;
    let mut dir = OutDir::create(out)?;

    let results: Vec<(u64, Result<Manifest, CliError>)> = seeds
        .par_iter()
        .map(|&seed| {
            let seeded = cfg.clone().with_seed(seed);
            (seed, run(&seeded, experiment, &out.join(seed_dir_name(seed))))
        })
        .collect();

    let failures: Vec<SeedFailure> = results
        .iter()
        .filter_map(|(seed, r)| {
            r.as_ref().err().map(|e| SeedFailure { seed: *seed, kind: e.kind().into(), message: e.to_string() })
        })
        .collect();

    dir.csv("sweep_summary.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["seed", "status", "run", "V", "regime", "coherent_width", "L", "I2"])?;
        for (seed, r) in &results {
            match r {
                Ok(m) => {
                    for reg in &m.summary.regimes {
                        let mi = m.summary.mutual_information.iter().find(|x| x.run == reg.run);
                        out.write_record([
                            seed.to_string(),
                            "ok".to_string(),
                            reg.run.clone(),
                            fmt_f64(reg.coupling),
                            reg.regime.map(|x| x.to_string()).unwrap_or_default(),
                            reg.coherent_width.map(|x| x.to_string()).unwrap_or_default(),
                            mi.map(|x| x.partition.to_string()).unwrap_or_default(),
                            mi.map(|x| fmt_f64(x.i2)).unwrap_or_default(),
                        ])?;
                    }
                }
                Err(e) => {
                    out.write_record([seed.to_string(), format!("error:{}", e.kind())].into_iter().chain(
                        std::iter::repeat_n(String::new(), 6),
                    ))?;
                }
            }
        }
        out.flush().map_err(|e| IoError::Csv(e.into()))
    })?;

    // per run label: widths, MI values and regime counts over successful seeds
    let mut widths: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut mis: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut regimes: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (_, r) in &results {
        if let Ok(m) = r {
            for reg in &m.summary.regimes {
                if let Some(w) = reg.coherent_width {
                    widths.entry(reg.run.clone()).or_default().push(w as f64);
                }
                if let Some(x) = reg.regime {
                    *regimes.entry((reg.run.clone(), x.to_string())).or_default() += 1;
                }
            }
            for mi in &m.summary.mutual_information {
                mis.entry(mi.run.clone()).or_default().push(mi.i2);
            }
        }
    }
    dir.csv("sweep_stats.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run", "quantity", "count", "median", "q1", "q3"])?;
        for (name, values) in [("coherent_width", &widths), ("I2", &mis)] {
            for (run, v) in values {
                if let Some(q) = Quartiles::of(v) {
                    out.write_record([
                        run.clone(),
                        name.to_string(),
                        q.count.to_string(),
                        fmt_f64(q.median),
                        fmt_f64(q.q1),
                        fmt_f64(q.q3),
                    ])?;
                }
            }
        }
        for ((run, regime), count) in &regimes {
            out.write_record([run.clone(), format!("regime:{regime}"), count.to_string(), String::new(), String::new(), String::new()])?;
        }
        out.flush().map_err(|e| IoError::Csv(e.into()))
    })?;

    let manifest = SweepManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment,
        seeds: seeds.to_vec(),
        failures,
        files: dir.files().to_vec(),
    };
    write_json(&out.join(SWEEP_MANIFEST), &manifest)?;
    if manifest.failures.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::PartialSweep { failed: manifest.failures.iter().map(|f| f.seed).collect(), total: seeds.len() })
    }
}
