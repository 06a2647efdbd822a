//! Classical Stuart-Landau dynamics of the ring.
//!
//! Each amplitude obeys
//!
//! ```text
//! d alpha_l / dt = alpha_l (kappa1 - 2 kappa2 |alpha_l|^2) - i (V / 2d) sum_{m ~ l} alpha_m
//! ```
//!
//! where `m ~ l` runs over the distinct ring neighbours of `l`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParamError, Result};
use crate::network::{NetworkParams, Ring};
use crate::rk4;

/// Amplitudes above `DIVERGENCE_FACTOR * r0` abort an integration.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub t: f64,
    pub alphas: Vec<Complex64>,
}

impl MeanFieldState {
    pub fn new(p: &NetworkParams, t: f64, alphas: Vec<Complex64>) -> Result<Self> {
        if alphas.len() != p.n {
            return Err(ParamError::new(
                "alphas",
                format!("expected {} amplitudes, got {}", p.n, alphas.len()),
            )
            .into());
        }
        if !t.is_finite() || alphas.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(ParamError::new("alphas", "non-finite time or amplitude").into());
        }
        Ok(Self { t, alphas })
    }

    /// Every site at `r * exp(i phase)`.
    pub fn uniform(p: &NetworkParams, t: f64, r: f64, phase: f64) -> Self {
        Self { t, alphas: vec![Complex64::from_polar(r, phase); p.n] }
    }

    pub fn phases(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| wrap_phase(a.arg())).collect()
    }

    pub fn radii_squared(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiplies every amplitude by `exp(i theta)`.
    pub fn rotated(&self, theta: f64) -> Self {
        let u = Complex64::from_polar(1.0, theta);
        Self { t: self.t, alphas: self.alphas.iter().map(|a| a * u).collect() }
    }

    /// Relabels sites so that site `l` moves to `l + k`.
    pub fn shifted(&self, k: usize) -> Self {
        let mut alphas = self.alphas.clone();
        alphas.rotate_right(k % self.alphas.len());
        Self { t: self.t, alphas }
    }
}

/// Maps an angle onto `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        PI
    } else {
        w
    }
}

fn default_sigma() -> f64 {
    9.0
}

fn default_theta_range() -> f64 {
    24.0 * PI
}

/// Gaussian phase profile `phi_l = theta / (sqrt(2 pi) sigma) exp(-(l - mu)^2 / (2 sigma^2))`
/// on a circle of radius `r0`; see [`ThetaMode`] for how `theta` is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConditionSpec {
    /// Initial amplitude; the limit-cycle radius when absent.
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Centre in 1-based site units; `N / 2` when absent.
    #[serde(default)]
    pub mu: Option<f64>,
    /// `theta` is drawn uniformly from `(-theta_range, theta_range)`.
    #[serde(default = "default_theta_range")]
    pub theta_range: f64,
    #[serde(default)]
    pub theta_mode: ThetaMode,
    #[serde(default)]
    pub seed: u64,
}

/// Whether every site draws its own `theta` or all sites share one.
///
/// With a shared amplitude the phase profile is a smooth bump that the ring
/// always pulls into full synchrony. Independent draws leave the centre of the
/// bump (large envelope) effectively random and the tails (tiny envelope)
/// nearly in phase, which is the seed of a coherent/incoherent split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMode {
    #[default]
    PerSite,
    Shared,
}

impl Default for InitialConditionSpec {
    fn default() -> Self {
        Self {
            r0: None,
            sigma: default_sigma(),
            mu: None,
            theta_range: default_theta_range(),
            theta_mode: ThetaMode::default(),
            seed: 0,
        }
    }
}

impl InitialConditionSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if let Some(r0) = self.r0 {
            if !(r0.is_finite() && r0 > 0.0) {
                return Err(ParamError::new("r0", format!("must be > 0, got {r0}")));
            }
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(ParamError::new("sigma", format!("must be > 0, got {}", self.sigma)));
        }
        if !(self.theta_range.is_finite() && self.theta_range > 0.0) {
            return Err(ParamError::new("theta_range", format!("must be > 0, got {}", self.theta_range)));
        }
        if let Some(mu) = self.mu {
            if !mu.is_finite() {
                return Err(ParamError::new("mu", "must be finite"));
            }
        }
        Ok(())
    }

    /// The first amplitude `theta` this spec's seed selects.
    pub fn draw_theta(&self) -> f64 {
        self.draw_thetas(1)[0]
    }

    /// One `theta` per site, or the shared one repeated, for `n` sites.
    pub fn draw_thetas(&self, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut draw = || rng.random_range(-self.theta_range..self.theta_range);
        match self.theta_mode {
            ThetaMode::PerSite => (0..n).map(|_| draw()).collect(),
            ThetaMode::Shared => vec![draw(); n],
        }
    }
}

/// Initial state at `t = 0` drawn from `ic`.
pub fn initial_conditions(p: &NetworkParams, ic: &InitialConditionSpec) -> Result<MeanFieldState> {
    ic.validate()?;
    Ok(initial_conditions_with_thetas(p, ic, &ic.draw_thetas(p.n)))
}

/// Initial state for one explicit `theta` on every site, bypassing the draw.
pub fn initial_conditions_with_theta(p: &NetworkParams, ic: &InitialConditionSpec, theta: f64) -> MeanFieldState {
    initial_conditions_with_thetas(p, ic, &vec![theta; p.n])
}

/// Initial state with `thetas[l]` scaling the envelope at 0-based site `l`.
pub fn initial_conditions_with_thetas(p: &NetworkParams, ic: &InitialConditionSpec, thetas: &[f64]) -> MeanFieldState {
    assert_eq!(thetas.len(), p.n, "one theta per site");
    let r0 = ic.r0.unwrap_or_else(|| p.limit_cycle_radius());
    let mu = ic.mu.unwrap_or(p.n as f64 / 2.0);
    let norm = 1.0 / ((2.0 * PI).sqrt() * ic.sigma);
    let alphas = (1..=p.n)
        .zip(thetas)
        .map(|(l, theta)| {
            let x = l as f64 - mu;
            let phi = theta * norm * (-x * x / (2.0 * ic.sigma * ic.sigma)).exp();
            Complex64::from_polar(r0, phi)
        })
        .collect();
    MeanFieldState { t: 0.0, alphas }
}

/// Writes `sum_{m ~ l} alpha_m` for every `l` into `out`.
pub(crate) fn neighbor_sums(p: &NetworkParams, alphas: &[Complex64], out: &mut [Complex64]) {
    let n = alphas.len();
    if p.is_all_to_all() {
        let total: Complex64 = alphas.iter().sum();
        for (o, a) in out.iter_mut().zip(alphas) {
            *o = total - a;
        }
        return;
    }
    // Sliding window over l-d..=l+d (2d + 1 distinct sites), minus the centre.
    let d = p.d;
    let mut window: Complex64 = (0..=2 * d).map(|k| alphas[(n + k - d) % n]).sum();
    for l in 0..n {
        out[l] = window - alphas[l];
        window += alphas[(l + d + 1) % n] - alphas[(n + l - d) % n];
    }
}

pub(crate) fn rhs_into(p: &NetworkParams, alphas: &[Complex64], out: &mut [Complex64]) {
    neighbor_sums(p, alphas, out);
    let hop = Complex64::new(0.0, -p.hopping());
    for (o, a) in out.iter_mut().zip(alphas) {
        *o = a * (p.kappa1 - 2.0 * p.kappa2 * a.norm_sqr()) + hop * *o;
    }
}

/// Right-hand side of the amplitude equations at `s`.
pub fn mean_field_rhs(p: &NetworkParams, s: &MeanFieldState) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); p.n];
    rhs_into(p, &s.alphas, &mut out);
    out
}

/// A sampled mean-field run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldTrajectory {
    pub params: NetworkParams,
    pub states: Vec<MeanFieldState>,
}

impl MeanFieldTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> &MeanFieldState {
        &self.states[0]
    }

    pub fn last(&self) -> &MeanFieldState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.first().t
    }
}

pub(crate) fn check_divergence(p: &NetworkParams, t: f64, alphas: &[Complex64]) -> Result<()> {
    let limit = DIVERGENCE_FACTOR * p.limit_cycle_radius();
    for (site, a) in alphas.iter().enumerate() {
        let amplitude = a.norm();
        if !(amplitude <= limit) {
            return Err(Error::Divergence { t, site: site + 1, amplitude, limit });
        }
    }
    Ok(())
}

/// Integrates from `s0` to `t_end` with RK4 and recording every
/// `sample_every` steps. The step is shrunk slightly if needed so that the
/// run lands exactly on `t_end`; both endpoints are always recorded.
pub fn integrate(
    p: &NetworkParams,
    s0: &MeanFieldState,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<MeanFieldTrajectory> {
    p.validate()?;
    if s0.alphas.len() != p.n {
        return Err(ParamError::new("alphas", "initial state length differs from N").into());
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ParamError::new("dt", format!("must be > 0, got {dt}")).into());
    }
    if !(t_end > s0.t) {
        return Err(ParamError::new("t_end", format!("{t_end} is not after the start time {}", s0.t)).into());
    }
    let sample_every = sample_every.max(1);
    let steps = rk4::steps_for(t_end - s0.t, dt);
    let h = (t_end - s0.t) / steps as f64;

    let mut states = Vec::with_capacity(steps / sample_every + 2);
    states.push(s0.clone());
    let mut y = s0.alphas.clone();
    let mut scratch = vec![Complex64::new(0.0, 0.0); p.n];
    for k in 1..=steps {
        let t = s0.t + (k - 1) as f64 * h;
        y = rk4::step(&y, t, h, |_, a: &Vec<Complex64>| {
            rhs_into(p, a, &mut scratch);
            scratch.clone()
        });
        let t_next = if k == steps { t_end } else { s0.t + k as f64 * h };
        check_divergence(p, t_next, &y)?;
        if k % sample_every == 0 || k == steps {
            states.push(MeanFieldState { t: t_next, alphas: y.clone() });
        }
    }
    Ok(MeanFieldTrajectory { params: *p, states })
}

/// Settings of the chimera detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    /// Averaging window at the end of the trajectory, in `1/kappa1`.
    pub window: f64,
    /// Sites with time-averaged local order at or above this are synchronized.
    pub z_threshold: f64,
    /// Minimum contiguous block of each kind for a chimera.
    pub min_block: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { window: 10.0, z_threshold: 0.85, min_block: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Synchronized,
    Desynchronized,
    Chimera,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Synchronized => "Synchronized",
            Regime::Desynchronized => "Desynchronized",
            Regime::Chimera => "Chimera",
        })
    }
}

/// A contiguous run of sites on the ring, `start` 0-based, possibly wrapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteBlock {
    pub start: usize,
    pub len: usize,
}

impl SiteBlock {
    /// 0-based site just past the block (mod N).
    pub fn end(&self, n: usize) -> usize {
        (self.start + self.len) % n
    }

    pub fn contains(&self, site: usize, n: usize) -> bool {
        (site + n - self.start) % n < self.len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub regime: Regime,
    /// Per-site flag, indexed 0-based.
    pub synchronized: Vec<bool>,
    /// Time-averaged local order parameter per site.
    pub local_order: Vec<f64>,
    /// Width of the largest contiguous synchronized block.
    pub coherent_width: usize,
    pub coherent_block: Option<SiteBlock>,
    pub incoherent_block: Option<SiteBlock>,
}

/// Largest circular run of `value` in `mask`.
pub fn longest_run(mask: &[bool], value: bool) -> Option<SiteBlock> {
    let n = mask.len();
    if n == 0 || !mask.contains(&value) {
        return None;
    }
    if mask.iter().all(|&m| m == value) {
        return Some(SiteBlock { start: 0, len: n });
    }
    // Start scanning just after a site of the opposite kind so no run wraps.
    let origin = mask.iter().position(|&m| m != value).unwrap() + 1;
    let mut best: Option<SiteBlock> = None;
    let mut run_start = 0;
    let mut run_len = 0;
    for k in 0..n {
        let site = (origin + k) % n;
        if mask[site] == value {
            if run_len == 0 {
                run_start = site;
            }
            run_len += 1;
            if best.is_none_or(|b| run_len > b.len) {
                best = Some(SiteBlock { start: run_start, len: run_len });
            }
        } else {
            run_len = 0;
        }
    }
    best
}

/// Time-averaged local order `Z_l = |mean_{m ~ l} exp(i (phi_m - phi_l))|`
/// over the samples of `traj` in its final `window`.
pub fn local_order(traj: &MeanFieldTrajectory, window: f64) -> Result<Vec<f64>> {
    if traj.states.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    if traj.duration() < window * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "trajectory spans {} but the classifier window is {window}",
            traj.duration()
        )));
    }
    let p = &traj.params;
    let ring = Ring::new(p);
    let t_from = traj.last().t - window * (1.0 + 1e-9);
    let mut z = vec![0.0; p.n];
    let mut samples = 0usize;
    for s in traj.states.iter().filter(|s| s.t >= t_from) {
        let unit: Vec<Complex64> = s
            .alphas
            .iter()
            .map(|a| {
                let r = a.norm();
                if r > 0.0 {
                    a / r
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        for (l, zl) in z.iter_mut().enumerate() {
            let nbrs = ring.of(l);
            let sum: Complex64 = nbrs.iter().map(|&m| unit[m]).sum();
            *zl += sum.norm() / nbrs.len() as f64;
        }
        samples += 1;
    }
    for zl in &mut z {
        *zl /= samples as f64;
    }
    Ok(z)
}

/// Labels the final `window` of a trajectory as synchronized, desynchronized
/// or chimera.
pub fn classify(traj: &MeanFieldTrajectory, config: &ClassifierConfig) -> Result<RegimeLabel> {
    let local_order = local_order(traj, config.window)?;
    let synchronized: Vec<bool> = local_order.iter().map(|&z| z >= config.z_threshold).collect();
    let coherent_block = longest_run(&synchronized, true);
    let incoherent_block = longest_run(&synchronized, false);
    let regime = match (coherent_block, incoherent_block) {
        (Some(_), None) => Regime::Synchronized,
        (None, _) => Regime::Desynchronized,
        (Some(c), Some(i)) if c.len >= config.min_block && i.len >= config.min_block => Regime::Chimera,
        (Some(_), Some(_)) => {
            let n_sync = synchronized.iter().filter(|&&s| s).count();
            if 2 * n_sync >= synchronized.len() {
                Regime::Synchronized
            } else {
                Regime::Desynchronized
            }
        }
    };
    Ok(RegimeLabel {
        regime,
        synchronized,
        local_order,
        coherent_width: coherent_block.map_or(0, |b| b.len),
        coherent_block,
        incoherent_block,
    })
}

/// Samples per unit time used for the classifier window by [`run_and_classify`].
const CLASSIFIER_SAMPLES_PER_UNIT: f64 = 10.0;

/// A run's final window and the regime detected on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedRun {
    pub window: MeanFieldTrajectory,
    pub label: RegimeLabel,
}

impl ClassifiedRun {
    pub fn last(&self) -> &MeanFieldState {
        self.window.last()
    }
}

/// Integrates `s0` to `t_end` and classifies the last `config.window` of it,
/// sampled ten times per unit time. Only the window is kept.
pub fn run_and_classify(
    p: &NetworkParams,
    s0: &MeanFieldState,
    t_end: f64,
    dt: f64,
    config: &ClassifierConfig,
) -> Result<ClassifiedRun> {
    let window_start = t_end - config.window;
    if window_start < s0.t - 1e-9 {
        return Err(Error::InsufficientData(format!(
            "run from {} to {t_end} is shorter than the classifier window {}",
            s0.t, config.window
        )));
    }
    let start = if window_start > s0.t + 1e-9 {
        integrate(p, s0, window_start, dt, usize::MAX)?.last().clone()
    } else {
        s0.clone()
    };
    let every = ((1.0 / CLASSIFIER_SAMPLES_PER_UNIT) / dt).round().max(1.0) as usize;
    let window = integrate(p, &start, t_end, dt, every)?;
    let label = classify(&window, config)?;
    Ok(ClassifiedRun { window, label })
}

/// Phase and squared amplitude of every site at every sample, indexed
/// `[site][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    pub times: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub r2: Vec<Vec<f64>>,
}

pub fn spacetime_grid(traj: &MeanFieldTrajectory) -> SpaceTimeGrid {
    let n = traj.params.n;
    let mut phi = vec![Vec::with_capacity(traj.states.len()); n];
    let mut r2 = vec![Vec::with_capacity(traj.states.len()); n];
    for s in &traj.states {
        for (l, a) in s.alphas.iter().enumerate() {
            phi[l].push(wrap_phase(a.arg()));
            r2[l].push(a.norm_sqr());
        }
    }
    SpaceTimeGrid { times: traj.times(), phi, r2 }
}
