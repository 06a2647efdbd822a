//! The experiments. Each one reads an [`ExperimentConfig`], writes its data
//! files into an output directory and reports what it found.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chimera_core::analysis::{analyze, husimi_marginal, mi_scan_anchored, mutual_information, squeezing, Partition};
use chimera_core::fluctuations::{propagate_from_vacuum, CovarianceTrajectory, PHYSICALITY_TOLERANCE};
use chimera_core::io::{
    fmt_f64, read_covariance_files, read_json, write_covariance_files, write_csv_file, write_ellipses,
    write_grid_column, write_json, write_mi_scan, write_profile, write_spacetime, CovarianceSidecar,
    InitialConditionFile, IoError,
};
use chimera_core::linalg::uncertainty_margin;
use chimera_core::meanfield::{
    initial_conditions, integrate, run_and_classify, spacetime_grid, MeanFieldState, Regime, RegimeLabel,
};
use chimera_core::{analysis::weighted_correlation, NetworkParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig, IcSource, RegimeRun, DEFAULT_CHIMERA_T0};
use crate::error::CliError;

/// Output directory that remembers every file written into it.
#[derive(Debug)]
pub struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.display().to_string(), source })?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    fn claim(&mut self, name: &str) -> PathBuf {
        debug_assert!(!self.files.iter().any(|f| f == name), "{name} written twice");
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), IoError>,
    {
        let path = self.claim(name);
        write_csv_file(&path, |w| body(w))?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.claim(name);
        write_json(&path, value)?;
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

/// Regime found on one mean-field run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSummary {
    pub run: String,
    #[serde(rename = "V")]
    pub coupling: f64,
    pub t: f64,
    pub regime: Option<Regime>,
    pub coherent_width: Option<usize>,
    /// 1-based first site of the coherent block.
    pub coherent_start: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalitySummary {
    pub min_margin: f64,
    pub tolerance: f64,
    pub beyond_validated_horizon: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiSummary {
    pub run: String,
    #[serde(rename = "L")]
    pub partition: usize,
    pub t: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub regimes: Vec<RegimeSummary>,
    pub physicality: Option<PhysicalitySummary>,
    pub mutual_information: Vec<MiSummary>,
}

impl RunSummary {
    fn absorb(&mut self, other: RunSummary) {
        self.regimes.extend(other.regimes);
        self.mutual_information.extend(other.mutual_information);
        self.physicality = match (self.physicality.take(), other.physicality) {
            (Some(a), Some(b)) => Some(PhysicalitySummary {
                min_margin: a.min_margin.min(b.min_margin),
                tolerance: a.tolerance,
                beyond_validated_horizon: a.beyond_validated_horizon || b.beyond_validated_horizon,
            }),
            (a, b) => a.or(b),
        };
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub config: ExperimentConfig,
    pub wall_time_s: f64,
    pub summary: RunSummary,
    pub files: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";

/// Runs `experiment` into `out` and writes its manifest.
pub fn run(cfg: &ExperimentConfig, experiment: Experiment, out: &Path) -> Result<Manifest, CliError> {
    cfg.validate(experiment)?;
    let started = Instant::now();
    let mut dir = OutDir::create(out)?;
    let summary = match experiment {
        Experiment::Meanfield => meanfield(cfg, &mut dir, false)?,
        Experiment::ReproduceFig1 => meanfield(cfg, &mut dir, true)?,
        Experiment::Fluctuations => fluctuations(cfg, &mut dir)?,
        Experiment::Analyze => analyze_experiment(cfg, &mut dir)?,
        Experiment::ScanMi => scan_mi(cfg, &mut dir)?,
        Experiment::ReproduceFig2 => fig2(cfg, &mut dir)?,
        Experiment::ReproduceFig3 => fig3(cfg, &mut dir)?,
        Experiment::ReproduceFig4 => fig4(cfg, &mut dir)?,
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment,
        seed: cfg.seed(),
        config: ExperimentConfig { experiment: Some(experiment), ..cfg.clone() },
        wall_time_s: started.elapsed().as_secs_f64(),
        summary,
        files: dir.files().to_vec(),
    };
    write_json(&out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

fn initial_state(cfg: &ExperimentConfig, p: &NetworkParams) -> Result<(MeanFieldState, InitialConditionFile), CliError> {
    match &cfg.ic {
        IcSource::Generated(spec) => {
            let s = initial_conditions(p, spec)?;
            let file = InitialConditionFile::from_state(&s, Some(spec));
            Ok((s, file))
        }
        IcSource::File { path } => {
            let file: InitialConditionFile = read_json(path)?;
            let s = file.to_state(p).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Ok((s, file))
        }
    }
}

fn samples_per(interval: f64, dt: f64) -> usize {
    (interval / dt).round().max(1.0) as usize
}

fn regime_summary(run: &str, p: &NetworkParams, t: f64, label: Option<&RegimeLabel>) -> RegimeSummary {
    RegimeSummary {
        run: run.to_string(),
        coupling: p.coupling,
        t,
        regime: label.map(|l| l.regime),
        coherent_width: label.map(|l| l.coherent_width),
        coherent_start: label.and_then(|l| l.coherent_block).map(|b| b.start + 1),
    }
}

fn meanfield(cfg: &ExperimentConfig, out: &mut OutDir, figure: bool) -> Result<RunSummary, CliError> {
    let p = cfg.params;
    let (s0, ic_file) = initial_state(cfg, &p)?;
    out.json("ic.json", &ic_file)?;
    let t_end = cfg.t0.unwrap_or(DEFAULT_CHIMERA_T0);
    let every = samples_per(cfg.sample_interval, cfg.dt_mf);
    let window_start = t_end - cfg.classifier.window;
    let (traj, label) = if window_start > s0.t {
        // grid up to the classifier window, then the window itself at the
        // classifier's resolution, thinned back onto the grid spacing
        let mut traj = integrate(&p, &s0, window_start, cfg.dt_mf, every)?;
        let run = run_and_classify(&p, traj.last(), t_end, cfg.dt_mf, &cfg.classifier)?;
        let spacing = cfg.sample_interval;
        traj.states.extend(run.window.states.iter().skip(1).filter(|s| {
            let k = (s.t - window_start) / spacing;
            (k - k.round()).abs() < 1e-6 || s.t == t_end
        }).cloned());
        (traj, Some(run.label))
    } else {
        (integrate(&p, &s0, t_end, cfg.dt_mf, every)?, None)
    };
    let grid = spacetime_grid(&traj);
    if figure {
        out.csv("fig1_phi.csv", |w| write_grid_column(w, &grid.times, &grid.phi, "phi"))?;
        out.csv("fig1_r2.csv", |w| write_grid_column(w, &grid.times, &grid.r2, "r2"))?;
    } else {
        out.csv("spacetime.csv", |w| write_spacetime(w, &grid))?;
        out.json("final_state.json", &InitialConditionFile::from_state(traj.last(), None))?;
    }
    Ok(RunSummary {
        regimes: vec![regime_summary("run", &p, t_end, label.as_ref())],
        ..RunSummary::default()
    })
}

/// Mean field to `t0`, then vacuum fluctuations for `delta_t`.
struct FluctuationRun {
    name: String,
    params: NetworkParams,
    label: Option<RegimeLabel>,
    snapshot: MeanFieldState,
    covs: CovarianceTrajectory,
}

impl FluctuationRun {
    fn compute(cfg: &ExperimentConfig, name: &str, params: NetworkParams, t0: f64) -> Result<Self, CliError> {
        let (s0, _) = initial_state(cfg, &params)?;
        let (snapshot, label) = if t0 - s0.t >= cfg.classifier.window {
            let run = run_and_classify(&params, &s0, t0, cfg.dt_mf, &cfg.classifier)?;
            (run.last().clone(), Some(run.label))
        } else if t0 > s0.t {
            (integrate(&params, &s0, t0, cfg.dt_mf, usize::MAX)?.last().clone(), None)
        } else {
            (s0, None)
        };
        let covs = propagate_from_vacuum(&params, &snapshot, cfg.delta_t, cfg.dt_cov, cfg.cov_sample_interval)?;
        Ok(Self { name: name.to_string(), params, label, snapshot, covs })
    }

    fn summary(&self, partition: usize) -> Result<RunSummary, CliError> {
        let last = self.covs.last();
        let i2 = mutual_information(&self.params, last, Partition::new(partition, self.params.n)?)?;
        Ok(RunSummary {
            regimes: vec![regime_summary(&self.name, &self.params, self.snapshot.t, self.label.as_ref())],
            physicality: Some(PhysicalitySummary {
                min_margin: self.covs.min_margin,
                tolerance: PHYSICALITY_TOLERANCE,
                beyond_validated_horizon: self.covs.beyond_validated_horizon(),
            }),
            mutual_information: vec![MiSummary { run: self.name.clone(), partition, t: last.t, i2 }],
        })
    }

    fn sidecar(&self, cfg: &ExperimentConfig) -> CovarianceSidecar {
        CovarianceSidecar {
            params: self.params,
            t_i: self.snapshot.t,
            delta_t: cfg.delta_t,
            dt: cfg.dt_cov,
            t: self.covs.last().t,
            min_physicality_margin: self.covs.min_margin,
            beyond_validated_horizon: self.covs.beyond_validated_horizon(),
        }
    }

    fn write_snapshot(&self, out: &mut OutDir, name: &str) -> Result<(), CliError> {
        out.json(name, &InitialConditionFile::from_state(&self.snapshot, None))
    }

    fn write_covariance(&self, cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
        let csv = out.claim("covariance.csv");
        let sidecar = out.claim("covariance.json");
        write_covariance_files(&csv, &sidecar, self.covs.last(), &self.sidecar(cfg))?;
        let margins: Vec<(f64, f64)> =
            self.covs.covs.iter().map(|c| (c.t, uncertainty_margin(&c.matrix, self.params.hbar))).collect();
        out.csv("margins.csv", |w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["t", "min_eig"])?;
            for (t, m) in &margins {
                out.write_record([fmt_f64(*t), fmt_f64(*m)])?;
            }
            out.flush().map_err(|e| IoError::Csv(e.into()))
        })
    }
}

fn single_run(cfg: &ExperimentConfig, out: &mut OutDir, default_t0: Option<f64>) -> Result<FluctuationRun, CliError> {
    let (_, ic_file) = initial_state(cfg, &cfg.params)?;
    out.json("ic.json", &ic_file)?;
    let t0 = cfg.t0.or(default_t0).ok_or_else(|| CliError::Config("t0 is required".into()))?;
    let run = FluctuationRun::compute(cfg, "run", cfg.params, t0)?;
    run.write_snapshot(out, "snapshot.json")?;
    Ok(run)
}

fn fluctuations(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<RunSummary, CliError> {
    let run = single_run(cfg, out, None)?;
    run.write_covariance(cfg, out)?;
    run.summary(cfg.mi_partition())
}

fn write_analysis(out: &mut OutDir, record: &chimera_core::analysis::AnalysisRecord) -> Result<(), CliError> {
    out.json("analysis.json", record)?;
    out.csv("mi_scan.csv", |w| write_mi_scan(w, &record.mi_scan))?;
    out.csv("ellipses.csv", |w| write_ellipses(w, &record.ellipses))?;
    out.csv("psi.csv", |w| write_profile(w, "psi", &record.psi))
}

fn analyze_experiment(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<RunSummary, CliError> {
    if let Some(input) = &cfg.covariance {
        let (c, sidecar) = read_covariance_files(&input.csv, &input.sidecar)?;
        let p = sidecar.params;
        let record = analyze(&p, &c, None)?;
        write_analysis(out, &record)?;
        let partition = Partition::new(cfg.mi_partition(), p.n)?;
        return Ok(RunSummary {
            regimes: vec![],
            physicality: Some(PhysicalitySummary {
                min_margin: uncertainty_margin(&c.matrix, p.hbar),
                tolerance: PHYSICALITY_TOLERANCE,
                beyond_validated_horizon: sidecar.beyond_validated_horizon,
            }),
            mutual_information: vec![MiSummary {
                run: "input".into(),
                partition: cfg.mi_partition(),
                t: c.t,
                i2: mutual_information(&p, &c, partition)?,
            }],
        });
    }
    let run = single_run(cfg, out, None)?;
    run.write_covariance(cfg, out)?;
    let record = analyze(&run.params, run.covs.last(), run.label.clone())?;
    write_analysis(out, &record)?;
    run.summary(cfg.mi_partition())
}

fn scan_mi(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<RunSummary, CliError> {
    let run = single_run(cfg, out, None)?;
    let scan = mi_scan_anchored(&run.params, run.covs.last(), cfg.mi_anchor - 1)?;
    out.csv("mi_scan.csv", |w| write_mi_scan(w, &scan))?;
    run.summary(cfg.mi_partition())
}

fn fig2(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<RunSummary, CliError> {
    let run = single_run(cfg, out, Some(DEFAULT_CHIMERA_T0))?;
    let p = run.params;
    let last = run.covs.last();
    out.csv("fig2_ellipses.csv", |w| write_ellipses(w, &squeezing(&p, last)))?;
    let mean = run.covs.mean_field.last().expect("trajectory is never empty");
    let ellipses = squeezing(&p, last);
    let scale = (2.0 * p.hbar).sqrt();
    out.csv("fig2_husimi.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["l", "q", "p", "h_qq", "h_qp", "h_pp", "arrow"])?;
        for l in 0..p.n {
            let h = husimi_marginal(&p, last, l);
            let a = mean.alphas[l];
            out.write_record([
                (l + 1).to_string(),
                fmt_f64(scale * a.re),
                fmt_f64(scale * a.im),
                fmt_f64(h[0][0]),
                fmt_f64(h[0][1]),
                fmt_f64(h[1][1]),
                fmt_f64(ellipses[l].arrow_angle()),
            ])?;
        }
        out.flush().map_err(|e| IoError::Csv(e.into()))
    })?;
    run.summary(cfg.mi_partition())
}

fn regime_runs(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<Vec<FluctuationRun>, CliError> {
    let runs: Vec<RegimeRun> = cfg.regime_runs();
    let (_, ic_file) = initial_state(cfg, &cfg.params)?;
    out.json("ic.json", &ic_file)?;
    let results: Vec<FluctuationRun> = runs
        .par_iter()
        .map(|r| {
            let params = NetworkParams { coupling: r.coupling, ..cfg.params };
            FluctuationRun::compute(cfg, &r.label, params, r.t0)
        })
        .collect::<Result<_, _>>()?;
    for r in &results {
        r.write_snapshot(out, &format!("snapshot_{}.json", r.name))?;
    }
    Ok(results)
}

fn combined_summary(runs: &[FluctuationRun], partition: usize) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::default();
    for r in runs {
        summary.absorb(r.summary(partition)?);
    }
    Ok(summary)
}

fn fig3(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<RunSummary, CliError> {
    let runs = regime_runs(cfg, out)?;
    out.csv("fig3_phases.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run", "V", "l", "phi", "r2"])?;
        for r in &runs {
            for (l, a) in r.snapshot.alphas.iter().enumerate() {
                out.write_record([
                    r.name.clone(),
                    fmt_f64(r.params.coupling),
                    (l + 1).to_string(),
                    fmt_f64(chimera_core::meanfield::wrap_phase(a.arg())),
                    fmt_f64(a.norm_sqr()),
                ])?;
            }
        }
        out.flush().map_err(|e| IoError::Csv(e.into()))
    })?;
    out.csv("fig3_psi.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run", "V", "t", "l", "psi"])?;
        for r in &runs {
            for c in &r.covs.covs {
                for (l, psi) in weighted_correlation(&r.params, c).iter().enumerate() {
                    out.write_record([
                        r.name.clone(),
                        fmt_f64(r.params.coupling),
                        fmt_f64(c.t),
                        (l + 1).to_string(),
                        fmt_f64(*psi),
                    ])?;
                }
            }
        }
        out.flush().map_err(|e| IoError::Csv(e.into()))
    })?;
    combined_summary(&runs, cfg.mi_partition())
}

fn fig4(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<RunSummary, CliError> {
    let runs = regime_runs(cfg, out)?;
    let scans = runs
        .iter()
        .map(|r| mi_scan_anchored(&r.params, r.covs.last(), cfg.mi_anchor - 1))
        .collect::<Result<Vec<_>, _>>()?;
    let mut series = Vec::with_capacity(runs.len());
    for r in &runs {
        let part = Partition::new(cfg.mi_partition(), r.params.n)?;
        let values = r
            .covs
            .covs
            .iter()
            .map(|c| mutual_information(&r.params, c, part).map(|i2| (c.t, i2)))
            .collect::<Result<Vec<_>, _>>()?;
        series.push(values);
    }
    out.csv("fig4a_mi_scan.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run", "V", "L", "I2"])?;
        for (r, scan) in runs.iter().zip(&scans) {
            for (l, i2) in scan {
                out.write_record([r.name.clone(), fmt_f64(r.params.coupling), l.to_string(), fmt_f64(*i2)])?;
            }
        }
        out.flush().map_err(|e| IoError::Csv(e.into()))
    })?;
    out.csv("fig4b_mi_vs_t.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run", "V", "t", "I2"])?;
        for (r, values) in runs.iter().zip(&series) {
            for (t, i2) in values {
                out.write_record([r.name.clone(), fmt_f64(r.params.coupling), fmt_f64(*t), fmt_f64(*i2)])?;
            }
        }
        out.flush().map_err(|e| IoError::Csv(e.into()))
    })?;
    combined_summary(&runs, cfg.mi_partition())
}
