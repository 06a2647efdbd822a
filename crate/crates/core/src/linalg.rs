//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `ln det m` for symmetric positive definite `m`, accumulated as
/// `2 sum ln L_ii` from the Cholesky factor so that large blocks neither
/// overflow nor underflow.
pub fn logdet_spd(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::SingularMatrix(format!("{}x{} block has no Cholesky factor", m.nrows(), m.ncols())))?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::SingularMatrix(format!("pivot {i} is {d}")));
        }
        acc += d.ln();
    }
    Ok(2.0 * acc)
}

/// Rows and columns of `m` selected by `idx`, in that order.
pub fn principal_submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Quadrature indices `(2l, 2l+1)` of the given 0-based sites.
pub fn quadrature_indices(sites: impl IntoIterator<Item = usize>) -> Vec<usize> {
    sites.into_iter().flat_map(|l| [2 * l, 2 * l + 1]).collect()
}

/// Block-diagonal symplectic form with `[[0, 1], [-1, 0]]` per mode.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for l in 0..modes {
        omega[(2 * l, 2 * l + 1)] = 1.0;
        omega[(2 * l + 1, 2 * l)] = -1.0;
    }
    omega
}

/// Smallest eigenvalue of the Hermitian matrix `C + i (hbar / 2) Omega`.
/// Nonnegative exactly when `C` is the covariance of a quantum state.
pub fn uncertainty_margin(c: &DMatrix<f64>, hbar: f64) -> f64 {
    let modes = c.nrows() / 2;
    let omega = symplectic_form(modes);
    let h = DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| Complex64::new(c[(i, j)], 0.5 * hbar * omega[(i, j)]));
    SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Replaces `m` by `(m + m^T) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logdet_of_half_identity_does_not_underflow() {
        let m = DMatrix::identity(2000, 2000) * 1e-3;
        // det = 1e-6000 underflows f64; the log does not.
        assert_relative_eq!(logdet_spd(&m).unwrap(), 2000.0 * (1e-3f64).ln(), max_relative = 1e-12);
    }

    #[test]
    fn logdet_matches_lu_determinant() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        assert_relative_eq!(logdet_spd(&m).unwrap(), m.determinant().ln(), epsilon = 1e-13);
    }

    #[test]
    fn indefinite_matrix_is_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(logdet_spd(&m), Err(Error::SingularMatrix(_))));
        assert!(logdet_spd(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn vacuum_saturates_uncertainty() {
        let c = DMatrix::identity(6, 6) * 0.5;
        assert!(uncertainty_margin(&c, 1.0).abs() < 1e-14);
        // Squeezed below the bound in both quadratures: unphysical.
        let c = DMatrix::identity(2, 2) * 0.4;
        assert_relative_eq!(uncertainty_margin(&c, 1.0), -0.1, epsilon = 1e-12);
    }

    #[test]
    fn symmetrize_averages() {
        let mut m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 1.0]);
        assert_eq!(max_asymmetry(&m), 2.0);
        symmetrize(&mut m);
        assert_eq!(m[(0, 1)], 3.0);
        assert_eq!(max_asymmetry(&m), 0.0);
    }
}
