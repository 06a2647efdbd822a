//! Classic fixed-step fourth-order Runge-Kutta over any linear state type.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// A state that can be combined linearly, `self += a * x`.
pub trait OdeState: Clone {
    fn add_scaled(&mut self, a: f64, x: &Self);
}

impl OdeState for Vec<Complex64> {
    fn add_scaled(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        for (y, dx) in self.iter_mut().zip(x) {
            *y += dx * a;
        }
    }
}

impl OdeState for DMatrix<f64> {
    fn add_scaled(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.shape(), x.shape());
        for (y, dx) in self.iter_mut().zip(x.iter()) {
            *y += a * dx;
        }
    }
}

impl OdeState for DMatrix<Complex64> {
    fn add_scaled(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.shape(), x.shape());
        for (y, dx) in self.iter_mut().zip(x.iter()) {
            *y += dx * a;
        }
    }
}

impl<A: OdeState, B: OdeState> OdeState for (A, B) {
    fn add_scaled(&mut self, a: f64, x: &Self) {
        self.0.add_scaled(a, &x.0);
        self.1.add_scaled(a, &x.1);
    }
}

impl<A: OdeState, B: OdeState, C: OdeState> OdeState for (A, B, C) {
    fn add_scaled(&mut self, a: f64, x: &Self) {
        self.0.add_scaled(a, &x.0);
        self.1.add_scaled(a, &x.1);
        self.2.add_scaled(a, &x.2);
    }
}

/// Advances `y` from `t` to `t + h` with one RK4 step of `dy/dt = f(t, y)`.
pub fn step<S, F>(y: &S, t: f64, h: f64, mut f: F) -> S
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let k1 = f(t, y);
    let mut probe = y.clone();
    probe.add_scaled(0.5 * h, &k1);
    let k2 = f(t + 0.5 * h, &probe);
    probe = y.clone();
    probe.add_scaled(0.5 * h, &k2);
    let k3 = f(t + 0.5 * h, &probe);
    probe = y.clone();
    probe.add_scaled(h, &k3);
    let k4 = f(t + h, &probe);

    let mut out = y.clone();
    out.add_scaled(h / 6.0, &k1);
    out.add_scaled(h / 3.0, &k2);
    out.add_scaled(h / 3.0, &k3);
    out.add_scaled(h / 6.0, &k4);
    out
}

/// Number of equal steps of size at most `dt` covering `span`. A span within
/// `1e-9` relative of a multiple of `dt` uses exactly that multiple.
pub fn steps_for(span: f64, dt: f64) -> usize {
    let ratio = span / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        ratio.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(dt: f64) -> f64 {
        // y' = -2 t y, y(0) = 1  =>  y(1) = exp(-1)
        let n = steps_for(1.0, dt);
        let h = 1.0 / n as f64;
        let mut y = vec![Complex64::new(1.0, 0.0)];
        for k in 0..n {
            y = step(&y, k as f64 * h, h, |t, y| vec![y[0] * (-2.0 * t)]);
        }
        (y[0].re - (-1.0f64).exp()).abs()
    }

    #[test]
    fn fourth_order_convergence() {
        let e1 = integrate(0.1);
        let e2 = integrate(0.05);
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn step_counts() {
        assert_eq!(steps_for(0.5, 1e-3), 500);
        assert_eq!(steps_for(10.0, 1e-2), 1000);
        assert_eq!(steps_for(1.05, 0.1), 11);
        assert_eq!(steps_for(1.0, 0.3), 4);
    }
}
