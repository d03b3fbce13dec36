//! Single-mode Gaussian ergotropy and the local transforms acting on the
//! battery mode (mode 0) of a larger state.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::gaussian::{
    check_phase_space, mean_energy, omega_left, omega_right, williamson_decompose,
    CovarianceMatrix, HamiltonianMatrix, SymplecticTransform, BONA_FIDE_TOL,
    DEFAULT_SYMPLECTIC_TOL,
};

#[derive(Clone, Debug)]
pub struct ExtractionResult {
    pub ergotropy: f64,
    /// `S_W`, mapping the battery state to its passive counterpart.
    pub transform: SymplecticTransform,
    pub passive_cm: CovarianceMatrix,
    /// Symplectic eigenvalue of the battery state.
    pub s: f64,
    /// Symplectic eigenvalue of the battery Hamiltonian.
    pub h: f64,
}

fn check_single_mode(m: &DMatrix<f64>) -> Result<()> {
    if check_phase_space(m)? != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: m.nrows(),
        });
    }
    Ok(())
}

fn single_mode_nu(m: &DMatrix<f64>) -> f64 {
    (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)])
        .max(0.0)
        .sqrt()
}

/// `1/2 tr[h sigma] - s h`, clamped at 0.
pub fn ergotropy(sigma_s: &CovarianceMatrix, h_s: &HamiltonianMatrix) -> Result<f64> {
    check_single_mode(sigma_s.matrix())?;
    check_single_mode(h_s.matrix())?;
    let s = single_mode_nu(sigma_s.matrix());
    if s < 1.0 - BONA_FIDE_TOL {
        return Err(Error::Unphysical(s));
    }
    let h = single_mode_nu(h_s.matrix());
    let w = mean_energy(h_s, sigma_s)? - s * h;
    if w < -1e-10 {
        log::warn!("negative ergotropy {w:.3e} clamped to 0");
    }
    Ok(w.max(0.0))
}

/// `S_W = -Omega S_H S_sigma^T Omega`, with `S_H`, `S_sigma` the Williamson
/// transforms of `h_S` and `sigma_S`.
pub fn extraction_transform(
    sigma_s: &CovarianceMatrix,
    h_s: &HamiltonianMatrix,
) -> Result<SymplecticTransform> {
    check_single_mode(sigma_s.matrix())?;
    check_single_mode(h_s.matrix())?;
    let ws = williamson_decompose(sigma_s.matrix())?;
    let wh = williamson_decompose(h_s.matrix())?;
    let m = wh.transform.matrix() * ws.transform.matrix().transpose();
    let sw = -omega_right(&omega_left(&m));
    SymplecticTransform::new(sw, DEFAULT_SYMPLECTIC_TOL)
}

/// Ergotropy together with the extracting transform and passive state.
pub fn extract(sigma_s: &CovarianceMatrix, h_s: &HamiltonianMatrix) -> Result<ExtractionResult> {
    let ergo = ergotropy(sigma_s, h_s)?;
    let transform = extraction_transform(sigma_s, h_s)?;
    let p = transform.matrix() * sigma_s.matrix() * transform.matrix().transpose();
    let passive_cm = CovarianceMatrix::new((&p + p.transpose()) * 0.5)?;
    Ok(ExtractionResult {
        ergotropy: ergo,
        transform,
        passive_cm,
        s: single_mode_nu(sigma_s.matrix()),
        h: single_mode_nu(h_s.matrix()),
    })
}

/// `[[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]`.
///
/// Half-angle convention: `theta = 2 pi` is a rotation by `pi`, not the
/// identity.
pub fn theta_rotation(theta: f64) -> SymplecticTransform {
    let (s, c) = (0.5 * theta).sin_cos();
    SymplecticTransform::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
}

/// [`theta_rotation`] carried to physical quadratures of an oscillator with
/// mass `m` and frequency `w`: `N^{-1} R N` with `N = diag(sqrt(m w),
/// 1/sqrt(m w))`. It commutes with that oscillator's Hamiltonian matrix.
pub fn theta_rotation_physical(theta: f64, mass: f64, omega: f64) -> SymplecticTransform {
    let k = (mass * omega).sqrt();
    let r = theta_rotation(theta).into_matrix();
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[r[(0, 0)], r[(0, 1)] / (k * k), r[(1, 0)] * k * k, r[(1, 1)]],
    );
    SymplecticTransform::from_matrix_unchecked(m)
}

/// `(L (+) I) sigma (L (+) I)^T` for a `2x2` transform `L` on mode 0. The
/// other modes' block is copied untouched.
pub fn apply_local_battery(
    s_full: &CovarianceMatrix,
    local: &SymplecticTransform,
) -> Result<CovarianceMatrix> {
    if local.matrix().nrows() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: local.matrix().nrows(),
        });
    }
    let l = Matrix2::new(
        local.matrix()[(0, 0)],
        local.matrix()[(0, 1)],
        local.matrix()[(1, 0)],
        local.matrix()[(1, 1)],
    );
    let mut m = s_full.matrix().clone();
    let n = m.nrows();
    for j in 2..n {
        let (a, b) = (m[(0, j)], m[(1, j)]);
        let (x, y) = (l[(0, 0)] * a + l[(0, 1)] * b, l[(1, 0)] * a + l[(1, 1)] * b);
        m[(0, j)] = x;
        m[(1, j)] = y;
        m[(j, 0)] = x;
        m[(j, 1)] = y;
    }
    let block = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let nb = l * block * l.transpose();
    m[(0, 0)] = nb[(0, 0)];
    m[(1, 1)] = nb[(1, 1)];
    let off = 0.5 * (nb[(0, 1)] + nb[(1, 0)]);
    m[(0, 1)] = off;
    m[(1, 0)] = off;
    Ok(CovarianceMatrix::from_matrix_unchecked(m))
}
