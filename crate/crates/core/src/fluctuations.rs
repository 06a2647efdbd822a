//! Gaussian quantum fluctuations about a mean-field trajectory.
//!
//! In the frame co-moving with `alpha(t)` the linearized master equation
//! has a Gaussian Wigner function whose covariance `C` (quadrature order
//! `q1, p1, ..., qN, pN`, units of `hbar`) obeys the Lyapunov equation
//!
//! ```text
//! dC/dt = A(t) C + C A(t)^T + B(t)
//! ```
//!
//! The drift `A` is the quadrature Jacobian of the amplitude equations,
//! i.e. of
//!
//! ```text
//! d(da_l)/dt = (kappa1 - 4 kappa2 |alpha_l|^2) da_l - 2 kappa2 alpha_l^2 da_l^* - i (V / 2d) sum_{m ~ l} da_m
//! ```
//!
//! with `da = (dq + i dp) / sqrt(2 hbar)`, and `B` is diagonal with
//! `hbar (kappa1 + 4 kappa2 |alpha_l|^2)` on both quadratures of site `l`.
//!
//! [`moment_oracle`] integrates the same dynamics through the complex
//! normally ordered moments `<da_l da_m>` and `<da_l^+ da_m>`; it shares no
//! code with the quadrature route beyond the mean-field right-hand side.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, ParamError, Result};
use crate::linalg::{max_asymmetry, symmetrize, uncertainty_margin};
use crate::meanfield::{check_divergence, integrate, rhs_into, MeanFieldState, MeanFieldTrajectory};
use crate::network::{NetworkParams, Ring};
use crate::rk4;

/// Uncertainty-relation violations down to this margin are treated as
/// rounding; anything below is an error.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-9;

/// Fluctuation horizon (in `1/kappa1`) covered by the validated regime.
pub const VALIDATED_HORIZON: f64 = 0.5;

/// Quadrature covariance at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub t: f64,
    pub matrix: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// 2x2 marginal of 0-based site `l`.
    pub fn site_block(&self, l: usize) -> [[f64; 2]; 2] {
        let m = &self.matrix;
        [[m[(2 * l, 2 * l)], m[(2 * l, 2 * l + 1)]], [m[(2 * l + 1, 2 * l)], m[(2 * l + 1, 2 * l + 1)]]]
    }

    /// Conjugates by the site permutation `l -> l + k`.
    pub fn shifted(&self, k: usize) -> Self {
        let n = self.modes();
        let dim = 2 * n;
        let src = |i: usize| {
            let site = i / 2;
            2 * ((site + n - k % n) % n) + i % 2
        };
        Self { t: self.t, matrix: DMatrix::from_fn(dim, dim, |i, j| self.matrix[(src(i), src(j))]) }
    }
}

/// `(hbar / 2) I`, the covariance of a product of coherent states.
pub fn vacuum_covariance(p: &NetworkParams, t: f64) -> CovarianceMatrix {
    CovarianceMatrix { t, matrix: DMatrix::identity(2 * p.n, 2 * p.n) * (0.5 * p.hbar) }
}

/// Drift and diffusion at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    pub t: f64,
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
}

/// Local 2x2 drift block of a site with amplitude `alpha`.
pub fn site_drift(p: &NetworkParams, alpha: Complex64) -> [[f64; 2]; 2] {
    let gain = p.kappa1 - 4.0 * p.kappa2 * alpha.norm_sqr();
    let sq = alpha * alpha;
    let (u, v) = (2.0 * p.kappa2 * sq.re, 2.0 * p.kappa2 * sq.im);
    [[gain - u, -v], [-v, gain + u]]
}

/// Diffusion coefficient shared by both quadratures of a site.
pub fn site_diffusion(p: &NetworkParams, alpha: Complex64) -> f64 {
    p.hbar * (p.kappa1 + 4.0 * p.kappa2 * alpha.norm_sqr())
}

pub fn drift_diffusion(p: &NetworkParams, s: &MeanFieldState) -> DriftDiffusion {
    let dim = 2 * p.n;
    let ring = Ring::new(p);
    let hop = p.hopping();
    let mut drift = DMatrix::zeros(dim, dim);
    let mut diffusion = DMatrix::zeros(dim, dim);
    for (l, &alpha) in s.alphas.iter().enumerate() {
        let b = site_drift(p, alpha);
        for (i, row) in b.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                drift[(2 * l + i, 2 * l + j)] = x;
            }
        }
        for &m in ring.of(l) {
            drift[(2 * l, 2 * m + 1)] = hop;
            drift[(2 * l + 1, 2 * m)] = -hop;
        }
        let diff = site_diffusion(p, alpha);
        diffusion[(2 * l, 2 * l)] = diff;
        diffusion[(2 * l + 1, 2 * l + 1)] = diff;
    }
    DriftDiffusion { t: s.t, drift, diffusion }
}

/// `A C + C A^T + B` without forming `A`: only the site blocks and the
/// neighbour columns contribute.
fn lyapunov_rhs(p: &NetworkParams, ring: &Ring, alphas: &[Complex64], c: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = c.nrows();
    let hop = p.hopping();
    // K = C A^T, built column by column.
    let mut k = DMatrix::zeros(dim, dim);
    let mut q_sum = DVector::zeros(dim);
    let mut p_sum = DVector::zeros(dim);
    for (l, &alpha) in alphas.iter().enumerate() {
        q_sum.fill(0.0);
        p_sum.fill(0.0);
        for &m in ring.of(l) {
            q_sum += c.column(2 * m);
            p_sum += c.column(2 * m + 1);
        }
        let b = site_drift(p, alpha);
        let cq = c.column(2 * l);
        let cp = c.column(2 * l + 1);
        k.set_column(2 * l, &(cq * b[0][0] + cp * b[0][1] + &p_sum * hop));
        k.set_column(2 * l + 1, &(cq * b[1][0] + cp * b[1][1] - &q_sum * hop));
    }
    let mut out = &k + k.transpose();
    for (l, &alpha) in alphas.iter().enumerate() {
        let diff = site_diffusion(p, alpha);
        out[(2 * l, 2 * l)] += diff;
        out[(2 * l + 1, 2 * l + 1)] += diff;
    }
    out
}

/// Covariance samples along a mean-field segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTrajectory {
    pub covs: Vec<CovarianceMatrix>,
    /// Mean field re-integrated jointly with the covariance, at the same
    /// sample times.
    pub mean_field: Vec<MeanFieldState>,
    /// Smallest `min eig(C + i hbar Omega / 2)` over all samples.
    pub min_margin: f64,
    pub dt: f64,
}

impl CovarianceTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.covs.iter().map(|c| c.t).collect()
    }

    pub fn last(&self) -> &CovarianceMatrix {
        self.covs.last().expect("trajectory is never empty")
    }

    /// `true` when the covered span exceeds the validated horizon.
    pub fn beyond_validated_horizon(&self) -> bool {
        let span = self.last().t - self.covs[0].t;
        span > VALIDATED_HORIZON * (1.0 + 1e-9)
    }
}

/// Whether the mean field evolves during propagation or is held at its
/// initial value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficients {
    Evolving,
    Frozen,
}

fn check_initial(p: &NetworkParams, c0: &CovarianceMatrix) -> Result<f64> {
    let dim = 2 * p.n;
    if c0.matrix.nrows() != dim || c0.matrix.ncols() != dim {
        return Err(ParamError::new("C0", format!("expected {dim}x{dim} covariance")).into());
    }
    if max_asymmetry(&c0.matrix) > 1e-10 {
        return Err(ParamError::new("C0", "covariance is not symmetric").into());
    }
    let margin = uncertainty_margin(&c0.matrix, p.hbar);
    if margin < -PHYSICALITY_TOLERANCE {
        return Err(Error::Physicality { t: c0.t, min_eigenvalue: margin });
    }
    Ok(margin)
}

/// Splits each gap of `times` into equal RK4 steps of size `dt`.
fn step_plan(times: &[f64], dt: f64) -> Result<Vec<(usize, f64)>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ParamError::new("dt", format!("must be > 0, got {dt}")).into());
    }
    if times.len() < 2 {
        return Err(Error::Sampling("segment needs at least two samples".into()));
    }
    times
        .windows(2)
        .map(|w| {
            let gap = w[1] - w[0];
            if !(gap > 0.0) {
                return Err(Error::Sampling(format!("sample times not increasing at t = {}", w[0])));
            }
            let steps = (gap / dt).round();
            if steps < 1.0 || (steps * dt - gap).abs() > 1e-9 * gap.max(1.0) {
                return Err(Error::Sampling(format!("dt = {dt} does not divide sample spacing {gap}")));
            }
            Ok((steps as usize, gap / steps))
        })
        .collect()
}

/// Shared driver: advances `(alpha, state)` jointly over the sample grid of
/// `segment`, converting to a covariance at every sample.
fn drive<S, D, F>(
    p: &NetworkParams,
    segment: &MeanFieldTrajectory,
    initial: S,
    dt: f64,
    coefficients: Coefficients,
    mut deriv: D,
    to_cov: F,
) -> Result<CovarianceTrajectory>
where
    S: rk4::OdeState,
    D: FnMut(&[Complex64], &S) -> S,
    F: Fn(&S) -> DMatrix<f64>,
{
    let times = segment.times();
    let plan = step_plan(&times, dt)?;
    let s0 = segment.first();
    let mut scratch = vec![Complex64::new(0.0, 0.0); p.n];
    let mut y = (s0.alphas.clone(), initial);

    let c_first = CovarianceMatrix { t: s0.t, matrix: to_cov(&y.1) };
    let mut min_margin = uncertainty_margin(&c_first.matrix, p.hbar);
    let mut covs = vec![c_first];
    let mut mean_field = vec![s0.clone()];

    for (k, &(steps, h)) in plan.iter().enumerate() {
        for step in 0..steps {
            let t = times[k] + step as f64 * h;
            y = rk4::step(&y, t, h, |_, (alphas, state): &(Vec<Complex64>, S)| {
                let dalpha = match coefficients {
                    Coefficients::Evolving => {
                        rhs_into(p, alphas, &mut scratch);
                        scratch.clone()
                    }
                    Coefficients::Frozen => vec![Complex64::new(0.0, 0.0); alphas.len()],
                };
                (dalpha, deriv(alphas, state))
            });
        }
        let t = times[k + 1];
        check_divergence(p, t, &y.0)?;
        let matrix = to_cov(&y.1);
        let margin = uncertainty_margin(&matrix, p.hbar);
        if !(margin >= -PHYSICALITY_TOLERANCE) {
            return Err(Error::Physicality { t, min_eigenvalue: margin });
        }
        min_margin = min_margin.min(margin);
        covs.push(CovarianceMatrix { t, matrix });
        mean_field.push(MeanFieldState { t, alphas: y.0.clone() });
    }
    Ok(CovarianceTrajectory { covs, mean_field, min_margin, dt })
}

/// Propagates `c0` along `segment` by RK4 on the Lyapunov equation, with
/// the mean field integrated in the same RK4 state so that stage values of
/// `alpha` are exact rather than interpolated. `c0.t` is taken to be the
/// segment start; covariances are reported at the segment's sample times.
pub fn propagate_covariance(
    p: &NetworkParams,
    segment: &MeanFieldTrajectory,
    c0: &CovarianceMatrix,
    dt: f64,
) -> Result<CovarianceTrajectory> {
    propagate_with(p, segment, c0, dt, Coefficients::Evolving)
}

/// The standard experiment: coherent state at `s_i` (vacuum fluctuations),
/// mean field and covariance advanced together for `delta_t`, sampled every
/// `sample_interval` (and at the end).
pub fn propagate_from_vacuum(
    p: &NetworkParams,
    s_i: &MeanFieldState,
    delta_t: f64,
    dt: f64,
    sample_interval: f64,
) -> Result<CovarianceTrajectory> {
    if !(delta_t.is_finite() && delta_t > 0.0) {
        return Err(ParamError::new("delta_t", format!("must be > 0, got {delta_t}")).into());
    }
    if !(sample_interval.is_finite() && sample_interval > 0.0) {
        return Err(ParamError::new("sample_interval", format!("must be > 0, got {sample_interval}")).into());
    }
    let every = (sample_interval / dt).round().max(1.0) as usize;
    let segment = integrate(p, s_i, s_i.t + delta_t, dt, every)?;
    propagate_covariance(p, &segment, &vacuum_covariance(p, s_i.t), dt)
}

pub fn propagate_with(
    p: &NetworkParams,
    segment: &MeanFieldTrajectory,
    c0: &CovarianceMatrix,
    dt: f64,
    coefficients: Coefficients,
) -> Result<CovarianceTrajectory> {
    p.validate()?;
    check_initial(p, c0)?;
    let ring = Ring::new(p);
    drive(
        p,
        segment,
        c0.matrix.clone(),
        dt,
        coefficients,
        |alphas, c: &DMatrix<f64>| {
            let mut dc = lyapunov_rhs(p, &ring, alphas, c);
            symmetrize(&mut dc);
            dc
        },
        |c| {
            let mut c = c.clone();
            symmetrize(&mut c);
            c
        },
    )
}

/// Holds the mean field at `s` and propagates `c0` over `sample_times`
/// (which must start at `s.t`).
pub fn propagate_frozen(
    p: &NetworkParams,
    s: &MeanFieldState,
    c0: &CovarianceMatrix,
    sample_times: &[f64],
    dt: f64,
) -> Result<CovarianceTrajectory> {
    let segment = MeanFieldTrajectory {
        params: *p,
        states: sample_times.iter().map(|&t| MeanFieldState { t, alphas: s.alphas.clone() }).collect(),
    };
    propagate_with(p, &segment, c0, dt, Coefficients::Frozen)
}

/// RK4 on `dC/dt = A(t) C + C A(t)^T + B(t)` for arbitrary dense
/// coefficients, returning `C(t1)`.
pub fn propagate_lyapunov<F>(c0: &DMatrix<f64>, t0: f64, t1: f64, dt: f64, mut coefficients: F) -> DMatrix<f64>
where
    F: FnMut(f64) -> (DMatrix<f64>, DMatrix<f64>),
{
    let steps = rk4::steps_for(t1 - t0, dt);
    let h = (t1 - t0) / steps as f64;
    let mut c = c0.clone();
    for k in 0..steps {
        c = rk4::step(&c, t0 + k as f64 * h, h, |t, c: &DMatrix<f64>| {
            let (a, b) = coefficients(t);
            let ac = &a * c;
            &ac + ac.transpose() + b
        });
        symmetrize(&mut c);
    }
    c
}

// --- complex-moment route -------------------------------------------------

type CMatrix = DMatrix<Complex64>;

fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Normally ordered moments `M_lm = <da_l da_m>`, `N_lm = <da_l^+ da_m>`
/// from a quadrature covariance.
pub fn moments_from_covariance(c: &DMatrix<f64>, hbar: f64) -> (CMatrix, CMatrix) {
    let n = c.nrows() / 2;
    let q = |i: usize| 2 * i;
    let pq = |i: usize| 2 * i + 1;
    let mut m = CMatrix::zeros(n, n);
    let mut nn = CMatrix::zeros(n, n);
    for l in 0..n {
        for k in 0..n {
            let (cqq, cpp) = (c[(q(l), q(k))], c[(pq(l), pq(k))]);
            let (cqp, cpq) = (c[(q(l), pq(k))], c[(pq(l), q(k))]);
            let delta = if l == k { 0.5 } else { 0.0 };
            m[(l, k)] = Complex64::new((cqq - cpp) / (2.0 * hbar), (cqp + cpq) / (2.0 * hbar));
            nn[(l, k)] = Complex64::new((cqq + cpp) / (2.0 * hbar) - delta, (cqp - cpq) / (2.0 * hbar));
        }
    }
    (m, nn)
}

/// Inverse of [`moments_from_covariance`].
pub fn covariance_from_moments(m: &CMatrix, nn: &CMatrix, hbar: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let mut c = DMatrix::zeros(2 * n, 2 * n);
    for l in 0..n {
        for k in 0..n {
            let delta = if l == k { 1.0 } else { 0.0 };
            let (mm, nlk) = (m[(l, k)], nn[(l, k)]);
            c[(2 * l, 2 * k)] = 0.5 * hbar * (2.0 * mm.re + 2.0 * nlk.re + delta);
            c[(2 * l + 1, 2 * k + 1)] = 0.5 * hbar * (-2.0 * mm.re + 2.0 * nlk.re + delta);
            c[(2 * l, 2 * k + 1)] = hbar * (mm.im + nlk.im);
            c[(2 * l + 1, 2 * k)] = hbar * (mm.im - nlk.im);
        }
    }
    symmetrize(&mut c);
    c
}

/// Independent cross-check of [`propagate_covariance`]: integrates the
/// moment equations
///
/// ```text
/// dM/dt = G M + M G^T + H N + (H N)^T + H
/// dN/dt = G* N + N G^T + H* M + M* H + 2 kappa1 I
/// ```
///
/// with `G = diag(kappa1 - 4 kappa2 |alpha|^2) - i (V/2d) K`, `K` the
/// adjacency matrix and `H = diag(-2 kappa2 alpha^2)`, then converts back
/// to quadratures.
pub fn moment_oracle(
    p: &NetworkParams,
    segment: &MeanFieldTrajectory,
    c0: &CovarianceMatrix,
    dt: f64,
) -> Result<CovarianceTrajectory> {
    p.validate()?;
    check_initial(p, c0)?;
    let n = p.n;
    let ring = Ring::new(p);
    let mut adjacency = CMatrix::zeros(n, n);
    for l in 0..n {
        for &m in ring.of(l) {
            adjacency[(l, m)] = Complex64::new(0.0, -p.hopping());
        }
    }
    let hbar = p.hbar;
    let noise = CMatrix::identity(n, n) * cplx(2.0 * p.kappa1);
    drive(
        p,
        segment,
        moments_from_covariance(&c0.matrix, hbar),
        dt,
        Coefficients::Evolving,
        |alphas, (m, nn): &(CMatrix, CMatrix)| {
            let mut g = adjacency.clone();
            let mut h = CMatrix::zeros(n, n);
            for (l, a) in alphas.iter().enumerate() {
                g[(l, l)] = cplx(p.kappa1 - 4.0 * p.kappa2 * a.norm_sqr());
                h[(l, l)] = a * a * (-2.0 * p.kappa2);
            }
            let gt = g.transpose();
            let hn = &h * nn;
            let dm = &g * m + m * &gt + &hn + hn.transpose() + &h;
            let dn = g.conjugate() * nn + nn * &gt + h.conjugate() * m + m.conjugate() * &h + &noise;
            (dm, dn)
        },
        |(m, nn)| covariance_from_moments(m, nn, hbar),
    )
}
