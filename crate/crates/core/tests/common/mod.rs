//! Reference computations shared by the integration suites. Nothing here
//! calls into the propagation code of the crate.

#![allow(dead_code)]

use chimera_core::meanfield::MeanFieldState;
use chimera_core::NetworkParams;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// `||a - b||_F / ||b||_F`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Quadrature map of `alpha -> alpha exp(i theta)` on every site.
pub fn phase_rotation(modes: usize, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut r = DMatrix::zeros(2 * modes, 2 * modes);
    for l in 0..modes {
        r[(2 * l, 2 * l)] = c;
        r[(2 * l, 2 * l + 1)] = -s;
        r[(2 * l + 1, 2 * l)] = s;
        r[(2 * l + 1, 2 * l + 1)] = c;
    }
    r
}

/// `C(t) = e^{At} C0 e^{A^T t} + int_0^t e^{As} B e^{A^T s} ds` for constant
/// `A`, `B`, from one exponential of the augmented vectorized generator
/// `[[I (x) A + A (x) I, vec B], [0, 0]]`.
pub fn lyapunov_closed_form(a: &DMatrix<f64>, b: &DMatrix<f64>, c0: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let m = n * n;
    let id = DMatrix::<f64>::identity(n, n);
    let gen = id.kronecker(a) + a.kronecker(&id);
    let mut aug = DMatrix::zeros(m + 1, m + 1);
    aug.view_mut((0, 0), (m, m)).copy_from(&(gen * t));
    let vec_b = DVector::from_column_slice(b.as_slice());
    aug.view_mut((0, m), (m, 1)).copy_from(&(vec_b * t));
    let e = aug.exp();
    let vec_c0 = DVector::from_column_slice(c0.as_slice());
    let vec_c = e.view((0, 0), (m, m)) * vec_c0 + e.view((0, m), (m, 1));
    DMatrix::from_column_slice(n, n, vec_c.as_slice())
}

/// Central-difference Jacobian of the mean-field vector field in
/// `(Re alpha_1, Im alpha_1, Re alpha_2, ...)` coordinates, written out
/// from the equations of motion rather than the crate's right-hand side.
pub fn mean_field_jacobian_fd(p: &NetworkParams, alphas: &[Complex64], h: f64) -> DMatrix<f64> {
    let n = p.n;
    let field = |a: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|l| {
                let mut sum = Complex64::new(0.0, 0.0);
                for m in neighbours(p, l) {
                    sum += a[m];
                }
                a[l] * (p.kappa1 - 2.0 * p.kappa2 * a[l].norm_sqr())
                    - Complex64::new(0.0, p.coupling / (2.0 * p.d as f64)) * sum
            })
            .collect()
    };
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for m in 0..n {
        for (part, dir) in [(0, Complex64::new(h, 0.0)), (1, Complex64::new(0.0, h))] {
            let mut plus = alphas.to_vec();
            let mut minus = alphas.to_vec();
            plus[m] += dir;
            minus[m] -= dir;
            let (fp, fm) = (field(&plus), field(&minus));
            for l in 0..n {
                let d = (fp[l] - fm[l]) / (2.0 * h);
                jac[(2 * l, 2 * m + part)] = d.re;
                jac[(2 * l + 1, 2 * m + part)] = d.im;
            }
        }
    }
    jac
}

/// Distinct sites within ring distance `d` of `l`, excluding `l`.
pub fn neighbours(p: &NetworkParams, l: usize) -> Vec<usize> {
    let n = p.n;
    (0..n)
        .filter(|&m| {
            let dist = (m + n - l) % n;
            m != l && dist.min(n - dist) <= p.d
        })
        .collect()
}

/// A deterministic, non-uniform state for small-ring checks.
pub fn scrambled_state(p: &NetworkParams, t: f64) -> MeanFieldState {
    let alphas = (0..p.n)
        .map(|l| {
            let x = l as f64 + 1.0;
            Complex64::from_polar(0.6 + 0.9 * (0.37 * x).sin().abs(), 2.3 * x + 0.4 * x * x)
        })
        .collect();
    MeanFieldState { t, alphas }
}

/// Covariance of a mixed Gaussian state: `(hbar/2) S diag(nu) S^T` with
/// `S = exp(Omega H)` symplectic for symmetric `H` and every `nu >= 1`.
pub fn gaussian_state(hbar: f64, h: &DMatrix<f64>, nu: &[f64]) -> DMatrix<f64> {
    let modes = nu.len();
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for l in 0..modes {
        omega[(2 * l, 2 * l + 1)] = 1.0;
        omega[(2 * l + 1, 2 * l)] = -1.0;
    }
    let sym = (h + h.transpose()) * 0.5;
    let s = (omega * sym).exp();
    let d = DMatrix::from_diagonal(&DVector::from_iterator(2 * modes, nu.iter().flat_map(|&v| [v, v])));
    let c = &s * d * s.transpose() * (0.5 * hbar);
    (&c + c.transpose()) * 0.5
}
