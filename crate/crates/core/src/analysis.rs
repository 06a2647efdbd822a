//! Quantum signatures read off a quadrature covariance matrix.
//!
//! All entropies use the purity convention `S2 = 1/2 ln det(2C / hbar)`, so
//! a product of coherent states has `S2 = 0`. Mutual information is
//! independent of that choice since the constants cancel.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, Result};
use crate::fluctuations::CovarianceMatrix;
use crate::linalg::{logdet_spd, principal_submatrix, quadrature_indices};
use crate::meanfield::RegimeLabel;
use crate::network::{NetworkParams, Ring};

/// `Psi_l = (V / 2d) sum_{m ~ l} C(p_l, p_m)`, one value per site.
pub fn weighted_correlation(p: &NetworkParams, c: &CovarianceMatrix) -> Vec<f64> {
    let ring = Ring::new(p);
    let hop = p.hopping();
    (0..p.n)
        .map(|l| hop * ring.of(l).iter().map(|&m| c.matrix[(2 * l + 1, 2 * m + 1)]).sum::<f64>())
        .collect()
}

/// Eigen-decomposition of one site's 2x2 marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingEllipse {
    /// 1-based site label.
    pub site: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Angle of the minor axis from the `+q` axis, in `(-pi/2, pi/2]`.
    pub theta: f64,
}

impl SqueezingEllipse {
    pub fn is_squeezed(&self, hbar: f64) -> bool {
        self.lambda_min < 0.5 * hbar
    }

    /// Direction perpendicular to the squeezed one, as drawn in phase-space
    /// arrow plots.
    pub fn arrow_angle(&self) -> f64 {
        wrap_axial(self.theta + FRAC_PI_2)
    }
}

/// Maps an axis direction onto `(-pi/2, pi/2]`.
pub fn wrap_axial(theta: f64) -> f64 {
    let w = (theta + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if w <= -FRAC_PI_2 {
        FRAC_PI_2
    } else {
        w
    }
}

/// Ellipse of the symmetric matrix `[[a, b], [b, c]]`.
pub fn ellipse(site: usize, block: [[f64; 2]; 2]) -> SqueezingEllipse {
    let (a, b, c) = (block[0][0], 0.5 * (block[0][1] + block[1][0]), block[1][1]);
    let mean = 0.5 * (a + c);
    let half_gap = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let theta = if half_gap <= 1e-14 * mean.abs().max(f64::MIN_POSITIVE) {
        0.0
    } else {
        // major axis at psi, minor axis perpendicular
        let psi = 0.5 * (2.0 * b).atan2(a - c);
        wrap_axial(psi + FRAC_PI_2)
    };
    SqueezingEllipse { site, lambda_min: mean - half_gap, lambda_max: mean + half_gap, theta }
}

pub fn squeezing(p: &NetworkParams, c: &CovarianceMatrix) -> Vec<SqueezingEllipse> {
    (0..p.n).map(|l| ellipse(l + 1, c.site_block(l))).collect()
}

/// Circular variance of axial directions (period `pi`): `0` when all
/// angles agree, near `1` when they are uniformly spread.
pub fn axial_circular_variance(thetas: &[f64]) -> f64 {
    if thetas.is_empty() {
        return 0.0;
    }
    let sum: Complex64 = thetas.iter().map(|&t| Complex64::from_polar(1.0, 2.0 * t)).sum();
    1.0 - sum.norm() / thetas.len() as f64
}

/// Site marginal of the Husimi function: the Wigner marginal smoothed by
/// the coherent-state kernel, which adds `hbar / 2` to each quadrature.
pub fn husimi_marginal(p: &NetworkParams, c: &CovarianceMatrix, site: usize) -> [[f64; 2]; 2] {
    let mut b = c.site_block(site);
    b[0][0] += 0.5 * p.hbar;
    b[1][1] += 0.5 * p.hbar;
    b
}

/// `S2 = 1/2 ln det(2 C_sub / hbar)` for the covariance of any subset of modes.
pub fn renyi2_entropy(p: &NetworkParams, c_sub: &DMatrix<f64>) -> Result<f64> {
    // scaling first makes the vacuum block exactly the identity
    Ok(0.5 * logdet_spd(&(c_sub * (2.0 / p.hbar)))?)
}

/// Alice holds the first `size` sites (1..=L), Bob the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub size: usize,
}

impl Partition {
    pub fn new(size: usize, n: usize) -> Result<Self, ParamError> {
        if size == 0 || size >= n {
            return Err(ParamError::new("L", format!("Alice size {size} outside 1..={}", n - 1)));
        }
        Ok(Self { size })
    }
}

fn contiguous_sites(start: usize, len: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..len).map(move |k| (start + k) % n)
}

struct Blocks {
    alice: DMatrix<f64>,
    bob: DMatrix<f64>,
}

fn split(c: &DMatrix<f64>, start: usize, size: usize) -> Blocks {
    let n = c.nrows() / 2;
    let alice = quadrature_indices(contiguous_sites(start, size, n));
    let bob = quadrature_indices(contiguous_sites(start + size, n - size, n));
    Blocks { alice: principal_submatrix(c, &alice), bob: principal_submatrix(c, &bob) }
}

/// `I2 = 1/2 ln(det C_A det C_B / det C)`.
pub fn mutual_information(p: &NetworkParams, c: &CovarianceMatrix, part: Partition) -> Result<f64> {
    mutual_information_anchored(p, c, 0, part.size)
}

/// Mutual information between the `size` contiguous sites starting at
/// 0-based `start` (wrapping) and the rest of the ring.
pub fn mutual_information_anchored(p: &NetworkParams, c: &CovarianceMatrix, start: usize, size: usize) -> Result<f64> {
    Partition::new(size, p.n)?;
    let total = logdet_spd(&c.matrix)?;
    mi_from_total(c, start, size, total)
}

fn mi_from_total(c: &CovarianceMatrix, start: usize, size: usize, logdet_total: f64) -> Result<f64> {
    let blocks = split(&c.matrix, start, size);
    Ok(0.5 * (logdet_spd(&blocks.alice)? + logdet_spd(&blocks.bob)? - logdet_total))
}

/// `S2(A) + S2(B) - S2(AB)`, the entropy form of the same quantity.
pub fn mutual_information_from_entropies(p: &NetworkParams, c: &CovarianceMatrix, part: Partition) -> Result<f64> {
    let blocks = split(&c.matrix, 0, part.size);
    Ok(renyi2_entropy(p, &blocks.alice)? + renyi2_entropy(p, &blocks.bob)? - renyi2_entropy(p, &c.matrix)?)
}

/// `I2` for every anchored partition `L = 1..N-1`.
pub fn mi_scan(p: &NetworkParams, c: &CovarianceMatrix) -> Result<BTreeMap<usize, f64>> {
    mi_scan_anchored(p, c, 0)
}

/// Same as [`mi_scan`] with Alice starting at 0-based site `start`.
pub fn mi_scan_anchored(p: &NetworkParams, c: &CovarianceMatrix, start: usize) -> Result<BTreeMap<usize, f64>> {
    let total = logdet_spd(&c.matrix)?;
    (1..p.n)
        .into_par_iter()
        .map(|size| mi_from_total(c, start, size, total).map(|i2| (size, i2)))
        .collect()
}

/// Everything the analysis stage reports for one covariance snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub t: f64,
    pub psi: Vec<f64>,
    pub ellipses: Vec<SqueezingEllipse>,
    pub s2_total: f64,
    pub mi_scan: BTreeMap<usize, f64>,
    pub regime: Option<RegimeLabel>,
}

pub fn analyze(p: &NetworkParams, c: &CovarianceMatrix, regime: Option<RegimeLabel>) -> Result<AnalysisRecord> {
    Ok(AnalysisRecord {
        t: c.t,
        psi: weighted_correlation(p, c),
        ellipses: squeezing(p, c),
        s2_total: renyi2_entropy(p, &c.matrix)?,
        mi_scan: mi_scan(p, c)?,
        regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluctuations::vacuum_covariance;
    use approx::assert_relative_eq;

    fn p(n: usize, d: usize) -> NetworkParams {
        NetworkParams { n, d, ..NetworkParams::ring50(1.2) }
    }

    #[test]
    fn vacuum_psi_vanishes() {
        let p = p(10, 3);
        assert!(weighted_correlation(&p, &vacuum_covariance(&p, 0.0)).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_neighbour_entry() {
        let p = p(10, 3);
        let mut c = vacuum_covariance(&p, 0.0);
        // sites 2 and 4 (0-based), momentum rows
        c.matrix[(5, 9)] = 0.3;
        c.matrix[(9, 5)] = 0.3;
        let psi = weighted_correlation(&p, &c);
        assert_relative_eq!(psi[2], 1.2 * 0.3 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(psi[4], 1.2 * 0.3 / 6.0, epsilon = 1e-15);
        assert_eq!(psi[3], 0.0);
    }

    #[test]
    fn vacuum_ellipses_are_circles() {
        let p = p(6, 1);
        for e in squeezing(&p, &vacuum_covariance(&p, 0.0)) {
            assert_eq!((e.lambda_min, e.lambda_max, e.theta), (0.5, 0.5, 0.0));
            assert!(!e.is_squeezed(p.hbar));
        }
    }

    #[test]
    fn q_squeezed_diagonal_marginal() {
        let e = ellipse(1, [[0.25, 0.0], [0.0, 1.0]]);
        assert_eq!((e.lambda_min, e.lambda_max, e.theta), (0.25, 1.0, 0.0));
        assert!(e.is_squeezed(1.0));
        let e = ellipse(1, [[1.0, 0.0], [0.0, 0.25]]);
        assert_relative_eq!(e.theta, FRAC_PI_2);
        assert_relative_eq!(e.arrow_angle(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rotated_ellipse_angle() {
        for &phi in &[0.3, -1.2, 1.5, -0.1] {
            let (c, s) = (f64::cos(phi), f64::sin(phi));
            // variance 0.2 along (c, s), 0.9 perpendicular
            let a = 0.2 * c * c + 0.9 * s * s;
            let b = (0.2 - 0.9) * c * s;
            let d = 0.2 * s * s + 0.9 * c * c;
            let e = ellipse(1, [[a, b], [b, d]]);
            assert_relative_eq!(e.lambda_min, 0.2, epsilon = 1e-13);
            assert_relative_eq!(e.lambda_max, 0.9, epsilon = 1e-13);
            assert_relative_eq!(e.theta, wrap_axial(phi), epsilon = 1e-12);
        }
    }

    #[test]
    fn husimi_adds_half_quantum() {
        let mut pp = p(4, 1);
        pp.hbar = 2.0;
        let mut c = vacuum_covariance(&pp, 0.0);
        assert_eq!(husimi_marginal(&pp, &c, 1), [[2.0, 0.0], [0.0, 2.0]]);
        c.matrix[(0, 0)] = 0.5;
        c.matrix[(1, 1)] = 2.0;
        // diag(hbar/4, hbar) -> diag(3 hbar/4, 3 hbar/2)
        assert_eq!(husimi_marginal(&pp, &c, 0), [[1.5, 0.0], [0.0, 3.0]]);
    }

    #[test]
    fn thermal_mode_entropy() {
        let pp = p(2, 1);
        let c = DMatrix::identity(2, 2) * (pp.hbar * (0.5 + 0.5));
        assert_relative_eq!(renyi2_entropy(&pp, &c).unwrap(), 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn entropy_is_hbar_independent() {
        let m = DMatrix::from_row_slice(2, 2, &[0.8, 0.1, 0.1, 0.6]);
        let mut pp = p(2, 1);
        let s1 = renyi2_entropy(&pp, &m).unwrap();
        pp.hbar = 3.7;
        let s2 = renyi2_entropy(&pp, &(m * 3.7)).unwrap();
        assert_relative_eq!(s1, s2, epsilon = 1e-13);
    }

    #[test]
    fn vacuum_mutual_information_vanishes() {
        let pp = p(12, 3);
        let c = vacuum_covariance(&pp, 0.0);
        assert_eq!(renyi2_entropy(&pp, &c.matrix).unwrap().abs(), 0.0);
        for (_, i2) in mi_scan(&pp, &c).unwrap() {
            assert!(i2.abs() < 1e-12);
        }
    }

    #[test]
    fn partition_bounds() {
        assert!(Partition::new(0, 10).is_err());
        assert!(Partition::new(10, 10).is_err());
        assert!(Partition::new(9, 10).is_ok());
    }

    #[test]
    fn block_diagonal_has_no_mutual_information() {
        let pp = p(4, 1);
        let mut c = vacuum_covariance(&pp, 0.0);
        // correlate sites 0,1 among themselves and 2,3 among themselves
        for (i, j) in [(0, 2), (1, 3), (4, 6), (5, 7)] {
            c.matrix[(i, j)] = 0.1;
            c.matrix[(j, i)] = 0.1;
        }
        let i2 = mutual_information(&pp, &c, Partition::new(2, 4).unwrap()).unwrap();
        assert!(i2.abs() < 1e-14);
        assert!(mutual_information(&pp, &c, Partition::new(1, 4).unwrap()).unwrap() > 0.0);
    }

    #[test]
    fn circular_variance_limits() {
        assert!(axial_circular_variance(&[0.4, 0.4, 0.4]).abs() < 1e-15);
        // perpendicular axes cancel
        assert!((axial_circular_variance(&[0.0, FRAC_PI_2]) - 1.0).abs() < 1e-15);
        // pi/2 and -pi/2 describe the same axis
        assert!(axial_circular_variance(&[FRAC_PI_2, -FRAC_PI_2 + 1e-12]).abs() < 1e-12);
    }
}
