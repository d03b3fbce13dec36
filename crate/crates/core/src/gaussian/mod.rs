//! Gaussian-state algebra on covariance matrices.
//!
//! Modes are ordered `(Q0, P0, Q1, P1, ...)`. A covariance matrix holds the
//! anticommutator moments `sigma = <{r, r^T}>`, so the vacuum is the identity.
//! A Hamiltonian matrix `H` carries the factor one half, `H_op = r^T H r`, and
//! its normal-mode frequencies are twice its symplectic eigenvalues.

mod entropy;
mod williamson;

pub use entropy::{
    ln_two_sinh, mutual_information, relative_entropy_to_thermal, von_neumann_entropy,
    ThermalReference,
};
pub use williamson::{
    normal_mode_frequencies, symplectic_eigenvalues, thermal_cm, thermal_nu, williamson_decompose,
    WilliamsonResult,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default tolerance on `||S Omega S^T - Omega||_max`.
pub const DEFAULT_SYMPLECTIC_TOL: f64 = 1e-8;
/// Relative asymmetry accepted for symmetric matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Symplectic eigenvalues above `1 - BONA_FIDE_TOL` count as physical.
pub const BONA_FIDE_TOL: f64 = 1e-9;

/// The symplectic form `Omega = (+) [[0, 1], [-1, 0]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

pub fn symplectic_form(n_modes: usize) -> Result<SymplecticForm> {
    if n_modes == 0 {
        return Err(Error::ZeroModes);
    }
    Ok(SymplecticForm {
        n_modes,
        matrix: omega_matrix(n_modes),
    })
}

pub(crate) fn omega_matrix(n_modes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        m[(2 * j, 2 * j + 1)] = 1.0;
        m[(2 * j + 1, 2 * j)] = -1.0;
    }
    m
}

/// `Omega * m` without forming `Omega`.
pub(crate) fn omega_left(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.nrows() / 2 {
        out.row_mut(2 * j).copy_from(&m.row(2 * j + 1));
        out.row_mut(2 * j + 1).copy_from(&(-m.row(2 * j)));
    }
    out
}

/// `m * Omega` without forming `Omega`.
pub(crate) fn omega_right(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() / 2 {
        out.column_mut(2 * j).copy_from(&(-m.column(2 * j + 1)));
        out.column_mut(2 * j + 1).copy_from(&m.column(2 * j));
    }
    out
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).amax() / scale
}

/// Checks that `m` is a square, even-dimensional, symmetric matrix and
/// returns its mode count.
pub(crate) fn check_phase_space(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::ZeroModes);
    }
    if !m.nrows().is_multiple_of(2) {
        return Err(Error::OddDimension(m.nrows()));
    }
    let asym = relative_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(m.nrows() / 2)
}

fn check_square_even(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::ZeroModes);
    }
    if !m.nrows().is_multiple_of(2) {
        return Err(Error::OddDimension(m.nrows()));
    }
    Ok(m.nrows() / 2)
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.nrows()), b.shape()).copy_from(b);
    m
}

/// Covariance matrix of a zero-mean Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    /// Accepts a symmetric `2M x 2M` matrix. Tiny asymmetry is symmetrized away.
    /// Does not check the uncertainty principle; see [`Self::new_bona_fide`].
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_phase_space(&matrix)?;
        Ok(Self(symmetrize(&matrix)))
    }

    pub fn new_bona_fide(matrix: DMatrix<f64>) -> Result<Self> {
        let s = Self::new(matrix)?;
        let nu_min = s.min_symplectic_eigenvalue()?;
        if nu_min < 1.0 - BONA_FIDE_TOL {
            return Err(Error::Unphysical(nu_min));
        }
        Ok(s)
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        Self(matrix)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self(DMatrix::identity(2 * n_modes, 2 * n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.0)
    }

    pub fn min_symplectic_eigenvalue(&self) -> Result<f64> {
        Ok(self.symplectic_eigenvalues()?[0])
    }

    /// `self (+) other`, with `self`'s modes first.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        Self(block_diag(&self.0, &other.0))
    }

    /// The `2x2` block of mode `j`.
    pub fn mode_block(&self, j: usize) -> Result<CovarianceMatrix> {
        sub_block(self, &[j])
    }
}

/// Quadratic Hamiltonian matrix, `H_op = r^T H r`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix(DMatrix<f64>);

impl HamiltonianMatrix {
    /// Accepts a symmetric positive-semidefinite `2M x 2M` matrix.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_phase_space(&matrix)?;
        let m = symmetrize(&matrix);
        let scale = m.amax();
        let min_eig = m.symmetric_eigenvalues().min();
        if min_eig < -1e-12 * scale {
            return Err(Error::NotPositiveSemidefinite(min_eig));
        }
        Ok(Self(m))
    }

    /// Skips the positivity check. Used for interaction pieces, which are
    /// indefinite on their own.
    pub fn new_indefinite(matrix: DMatrix<f64>) -> Result<Self> {
        check_phase_space(&matrix)?;
        Ok(Self(symmetrize(&matrix)))
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        Self(matrix)
    }

    /// `1/2 diag(m w^2, 1/m)`.
    pub fn single_oscillator(mass: f64, omega: f64) -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = 0.5 * mass * omega * omega;
        m[(1, 1)] = 0.5 / mass;
        Self(m)
    }

    pub fn zero(n_modes: usize) -> Self {
        Self(DMatrix::zeros(2 * n_modes, 2 * n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn direct_sum(&self, other: &HamiltonianMatrix) -> HamiltonianMatrix {
        Self(block_diag(&self.0, &other.0))
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.0)
    }
}

/// Real symplectic matrix, `S Omega S^T = Omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticTransform(DMatrix<f64>);

impl SymplecticTransform {
    pub fn new(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_square_even(&matrix)?;
        let defect = symplectic_defect(&matrix);
        if !(defect <= tol) {
            return Err(Error::SymplecticDefect { defect, tol });
        }
        Ok(Self(matrix))
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        Self(matrix)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self(DMatrix::identity(2 * n_modes, 2 * n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `||S Omega S^T - Omega||_max`.
    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.0)
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &SymplecticTransform) -> SymplecticTransform {
        Self(&self.0 * &other.0)
    }

    /// `S^{-1} = -Omega S^T Omega`.
    pub fn inverse(&self) -> SymplecticTransform {
        Self(-omega_left(&omega_right(&self.0.transpose())))
    }

    pub fn direct_sum(&self, other: &SymplecticTransform) -> SymplecticTransform {
        Self(block_diag(&self.0, &other.0))
    }
}

pub fn symplectic_defect(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows() / 2;
    let sos = omega_right(s) * s.transpose();
    (sos - omega_matrix(n)).amax()
}

/// `1/2 tr(H sigma)`.
pub fn mean_energy(h: &HamiltonianMatrix, s: &CovarianceMatrix) -> Result<f64> {
    if h.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: s.dim(),
        });
    }
    Ok(0.5 * h.matrix().component_mul(s.matrix()).sum())
}

/// Principal sub-block on `modes`, in the order given.
pub fn sub_block(s: &CovarianceMatrix, modes: &[usize]) -> Result<CovarianceMatrix> {
    let n = s.n_modes();
    if let Some(&bad) = modes.iter().find(|&&j| j >= n) {
        return Err(Error::ModeOutOfRange {
            index: bad,
            n_modes: n,
        });
    }
    if modes.is_empty() {
        return Err(Error::ZeroModes);
    }
    let idx: Vec<usize> = modes.iter().flat_map(|&j| [2 * j, 2 * j + 1]).collect();
    let m = DMatrix::from_fn(idx.len(), idx.len(), |a, b| s.matrix()[(idx[a], idx[b])]);
    Ok(CovarianceMatrix(m))
}

/// Congruence `S sigma S^T`, re-symmetrized.
pub fn evolve_cm(s: &CovarianceMatrix, t: &SymplecticTransform) -> Result<CovarianceMatrix> {
    if s.dim() != t.matrix().nrows() {
        return Err(Error::DimensionMismatch {
            expected: t.matrix().nrows(),
            found: s.dim(),
        });
    }
    let m = t.matrix() * s.matrix() * t.matrix().transpose();
    Ok(CovarianceMatrix(symmetrize(&m)))
}
