mod common;

use approx::assert_relative_eq;
use chimera_core::analysis::{husimi_marginal, renyi2_entropy};
use chimera_core::fluctuations::{
    drift_diffusion, moment_oracle, propagate_covariance, propagate_frozen, vacuum_covariance, CovarianceMatrix,
};
use chimera_core::meanfield::{integrate, mean_field_rhs, MeanFieldState};
use chimera_core::NetworkParams;
use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn params(n: usize, d: usize, coupling: f64) -> NetworkParams {
    NetworkParams { n, d, coupling, kappa1: 1.0, kappa2: 0.2, hbar: 1.0 }.validate().unwrap()
}

fn squeezed_start(p: &NetworkParams) -> CovarianceMatrix {
    let dim = 2 * p.n;
    let h = DMatrix::from_fn(dim, dim, |i, j| 0.15 * ((i * 7 + j * 3) as f64).sin());
    let nu: Vec<f64> = (0..p.n).map(|l| 1.0 + 0.3 * l as f64).collect();
    CovarianceMatrix { t: 0.0, matrix: gaussian_state(p.hbar, &h, &nu) }
}

#[test]
fn frozen_coefficients_match_matrix_exponential() {
    let p = params(3, 2, 1.3);
    let s = scrambled_state(&p, 0.0);
    let dd = drift_diffusion(&p, &s);
    for c0 in [vacuum_covariance(&p, 0.0), squeezed_start(&p)] {
        let run = propagate_frozen(&p, &s, &c0, &[0.0, 0.15, 0.3], 1e-3).unwrap();
        let exact = lyapunov_closed_form(&dd.drift, &dd.diffusion, &c0.matrix, 0.3);
        let err = rel_frobenius(&run.last().matrix, &exact);
        assert!(err <= 1e-8, "relative error {err:e}");
        let mid = lyapunov_closed_form(&dd.drift, &dd.diffusion, &c0.matrix, 0.15);
        assert!(rel_frobenius(&run.covs[1].matrix, &mid) <= 1e-8);
    }
}

#[test]
fn drift_is_the_mean_field_jacobian() {
    for p in [params(7, 2, 0.9), params(5, 3, 1.6), params(12, 4, 1.2)] {
        let s = scrambled_state(&p, 0.0);
        let fd = mean_field_jacobian_fd(&p, &s.alphas, 1e-5);
        let a = drift_diffusion(&p, &s).drift;
        let err = (&a - &fd).amax();
        assert!(err <= 1e-6, "N={} d={}: max deviation {err:e}", p.n, p.d);
    }
}

#[test]
fn diffusion_is_diagonal_and_grows_with_amplitude() {
    let p = params(5, 1, 1.0);
    let s = scrambled_state(&p, 0.0);
    let b = drift_diffusion(&p, &s).diffusion;
    for (l, a) in s.alphas.iter().enumerate() {
        let expect = p.hbar * (p.kappa1 + 4.0 * p.kappa2 * a.norm_sqr());
        assert_relative_eq!(b[(2 * l, 2 * l)], expect, max_relative = 1e-14);
        assert_relative_eq!(b[(2 * l + 1, 2 * l + 1)], expect, max_relative = 1e-14);
    }
    assert_eq!(b.iter().filter(|x| **x != 0.0).count(), 2 * p.n);
}

#[test]
fn moment_equations_agree_with_quadrature_propagation() {
    let cases = [(params(3, 2, 1.2), 0.1), (params(3, 2, 1.2), 0.5), (params(8, 3, 0.8), 0.3)];
    for (p, delta_t) in cases {
        let s = scrambled_state(&p, 2.0);
        let segment = integrate(&p, &s, s.t + delta_t, 1e-3, 50).unwrap();
        for c0 in [vacuum_covariance(&p, s.t), CovarianceMatrix { t: s.t, ..squeezed_start(&p) }] {
            let quad = propagate_covariance(&p, &segment, &c0, 1e-3).unwrap();
            let moments = moment_oracle(&p, &segment, &c0, 1e-3).unwrap();
            assert_eq!(quad.covs.len(), moments.covs.len());
            for (a, b) in quad.covs.iter().zip(&moments.covs) {
                assert_eq!(a.t, b.t);
                let err = rel_frobenius(&a.matrix, &b.matrix);
                assert!(err <= 1e-8, "N={} t={}: {err:e}", p.n, a.t);
            }
        }
    }
}

#[test]
fn uniform_state_follows_closed_form() {
    let p = NetworkParams::ring50(1.2);
    let r0 = p.limit_cycle_radius();
    assert_relative_eq!(r0, 2.5f64.sqrt(), max_relative = 1e-15);
    let s0 = MeanFieldState::uniform(&p, 0.0, r0, 0.0);
    for (rate, a) in mean_field_rhs(&p, &s0).iter().zip(&s0.alphas) {
        let expect = Complex64::new(0.0, -p.coupling) * a;
        assert!((rate - expect).norm() <= 1e-14);
    }
    let traj = integrate(&p, &s0, 10.0, 1e-3, 100).unwrap();
    for s in &traj.states {
        let exact = Complex64::from_polar(r0, -p.coupling * s.t);
        let worst = s.alphas.iter().map(|a| (a - exact).norm() / r0).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "t={}: {worst:e}", s.t);
    }
}

#[test]
fn integrator_is_fourth_order() {
    // a single uncoupled-amplitude site relaxing onto the limit cycle
    let p = params(5, 1, 0.7);
    let s0 = scrambled_state(&p, 0.0);
    let reference = integrate(&p, &s0, 4.0, 1e-4, usize::MAX).unwrap();
    let err = |dt: f64| {
        let run = integrate(&p, &s0, 4.0, dt, usize::MAX).unwrap();
        max_abs_diff(&run.last().alphas, &reference.last().alphas)
    };
    let (coarse, fine) = (err(0.1), err(0.05));
    let ratio = coarse / fine;
    assert!((12.0..20.0).contains(&ratio), "error ratio {ratio} ({coarse:e} / {fine:e})");
}

#[test]
fn uncoupled_sites_relax_to_limit_cycle() {
    let p = NetworkParams::ring50(0.0);
    let alphas = (0..p.n).map(|l| Complex64::from_polar(0.5, 0.7 * l as f64)).collect();
    let s0 = MeanFieldState { t: 0.0, alphas };
    let end = integrate(&p, &s0, 50.0, 1e-2, usize::MAX).unwrap();
    let r0 = 2.5f64.sqrt();
    for (a, a0) in end.last().alphas.iter().zip(&s0.alphas) {
        assert!((a.norm() - r0).abs() <= 1e-6);
        // no coupling and no frequency: phases stay put
        assert!((a / a0).arg().abs() <= 1e-9);
    }
}

/// Husimi function of a zero-mean single-mode Gaussian by brute-force
/// convolution of the Wigner function with the coherent-state kernel on a
/// grid, returning the second moments of the result.
fn convolved_moments(w: [[f64; 2]; 2], hbar: f64) -> [[f64; 2]; 2] {
    let gauss = |cov: [[f64; 2]; 2]| {
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        let inv = [[cov[1][1] / det, -cov[0][1] / det], [-cov[1][0] / det, cov[0][0] / det]];
        let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
        move |x: f64, y: f64| {
            norm * (-0.5 * (inv[0][0] * x * x + (inv[0][1] + inv[1][0]) * x * y + inv[1][1] * y * y)).exp()
        }
    };
    let wigner = gauss(w);
    let kernel = gauss([[0.5 * hbar, 0.0], [0.0, 0.5 * hbar]]);
    let (h, half) = (0.125, 72i64);
    let n = (2 * half + 1) as usize;
    let x = |i: usize| (i as i64 - half) as f64 * h;
    let wv: Vec<f64> = (0..n * n).map(|k| wigner(x(k / n), x(k % n))).collect();
    // kernel depends on the index difference only
    let m = 2 * n - 1;
    let kv: Vec<f64> = (0..m * m)
        .map(|k| {
            let (a, b) = ((k / m) as i64 - (n as i64 - 1), (k % m) as i64 - (n as i64 - 1));
            kernel(a as f64 * h, b as f64 * h)
        })
        .collect();
    let mut mom = [[0.0; 2]; 2];
    let mut mass = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut husimi = 0.0;
            for k in 0..n {
                let row = (i + n - 1 - k) * m + (j + n - 1);
                let wrow = &wv[k * n..(k + 1) * n];
                for (l, &wkl) in wrow.iter().enumerate() {
                    husimi += wkl * kv[row - l];
                }
            }
            husimi *= h * h;
            let (q, pq) = (x(i), x(j));
            mass += husimi;
            mom[0][0] += husimi * q * q;
            mom[0][1] += husimi * q * pq;
            mom[1][1] += husimi * pq * pq;
        }
    }
    mom[1][0] = mom[0][1];
    for row in &mut mom {
        for v in row.iter_mut() {
            *v /= mass;
        }
    }
    mom
}

#[test]
fn husimi_marginal_is_a_kernel_convolution() {
    let p = params(3, 1, 1.0);
    let (c, s) = (0.4f64.cos(), 0.4f64.sin());
    let tilted = [
        [0.25 * c * c + s * s, (0.25 - 1.0) * c * s],
        [(0.25 - 1.0) * c * s, 0.25 * s * s + c * c],
    ];
    for w in [[[0.25, 0.0], [0.0, 1.0]], tilted] {
        let mut cov = vacuum_covariance(&p, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                cov.matrix[(2 + a, 2 + b)] = w[a][b] * p.hbar;
            }
        }
        let got = husimi_marginal(&p, &cov, 1);
        let brute = convolved_moments(w, p.hbar);
        for a in 0..2 {
            for b in 0..2 {
                assert!((got[a][b] - brute[a][b]).abs() <= 1e-6, "{a}{b}: {} vs {}", got[a][b], brute[a][b]);
            }
        }
    }
    let mut cov = vacuum_covariance(&p, 0.0);
    cov.matrix[(0, 0)] = 0.25;
    assert_eq!(husimi_marginal(&p, &cov, 0), [[0.75, 0.0], [0.0, 1.0]]);
}

#[test]
fn entropy_of_thermal_and_vacuum_modes() {
    let p = params(3, 1, 1.0);
    let vacuum = vacuum_covariance(&p, 0.0);
    assert_eq!(renyi2_entropy(&p, &vacuum.matrix).unwrap(), 0.0);
    // tr rho^2 = 1 / (2 nbar + 1) for a thermal mode
    for nbar in [0.5, 2.0] {
        let c = DMatrix::identity(2, 2) * (0.5 * p.hbar * (2.0 * nbar + 1.0));
        assert_relative_eq!(renyi2_entropy(&p, &c).unwrap(), (2.0 * nbar + 1.0).ln(), max_relative = 1e-14);
    }
}
