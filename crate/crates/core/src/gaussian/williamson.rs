use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{
    check_phase_space, omega_left, symmetrize, CovarianceMatrix, HamiltonianMatrix,
    SymplecticTransform, DEFAULT_SYMPLECTIC_TOL,
};
use crate::error::{Error, Result};

/// Williamson normal form `m = S (+)_j nu_j I_2 S^T`.
#[derive(Clone, Debug)]
pub struct WilliamsonResult {
    pub transform: SymplecticTransform,
    /// Ascending.
    pub symplectic_eigenvalues: Vec<f64>,
}

/// Returns `R` with `m = R R^T`. Cholesky when possible, otherwise an
/// eigen square root for semidefinite input.
fn psd_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.l());
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let scale = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if min < -1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    let roots = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    let mut r = eig.eigenvectors;
    for (j, mut col) in r.column_iter_mut().enumerate() {
        col *= roots[j];
    }
    Ok(r)
}

/// The `M` positive eigenvalues of `i Omega m`, ascending.
///
/// Uses the factorization `m = R R^T`: the nonzero spectrum of `i Omega m`
/// matches that of the antisymmetric `K = R^T Omega R`, whose singular values
/// come in equal pairs.
pub fn symplectic_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = check_phase_space(m)?;
    let r = psd_factor(&symmetrize(m))?;
    let k = r.tr_mul(&omega_left(&r));
    let g = symmetrize(&k.tr_mul(&k));
    let mut e: Vec<f64> = g
        .symmetric_eigenvalues()
        .iter()
        .map(|&x| x.max(0.0))
        .collect();
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure);
    }
    e.sort_by(f64::total_cmp);
    Ok((0..n)
        .map(|j| (0.5 * (e[2 * j] + e[2 * j + 1])).sqrt())
        .collect())
}

fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.axpy(-c, b, 1.0);
        }
    }
}

/// Williamson decomposition of a symmetric positive-definite matrix.
///
/// With `m = L L^T`, the antisymmetric `A = L^{-1} Omega L^{-T}` has an
/// orthogonal real Schur form with `2x2` blocks `[[0, b], [-b, 0]]`,
/// `b = 1/nu`. Canonical pairs `(u, -A u / b)` are extracted from the
/// eigenvectors of `A^T A`, with re-orthogonalization inside degenerate
/// clusters, and `S = L O D^{-1/2}`.
pub fn williamson_decompose(m: &DMatrix<f64>) -> Result<WilliamsonResult> {
    let n = check_phase_space(m)?;
    let m = symmetrize(m);
    let l = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l();

    // A = L^{-1} Omega L^{-T} via two triangular solves.
    let x = l
        .solve_lower_triangular(&omega_left(&DMatrix::identity(2 * n, 2 * n)))
        .ok_or(Error::NotPositiveDefinite)?;
    let a = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::NotPositiveDefinite)?
        .transpose();
    let a = (&a - a.transpose()) * 0.5;

    let p = symmetrize(&a.tr_mul(&a));
    let eig = SymmetricEigen::try_new(p, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(2 * n);
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &idx in &order {
        if basis.len() == 2 * n {
            break;
        }
        let mut u: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        orthogonalize(&mut u, &basis);
        let norm = u.norm();
        if norm < 0.5 {
            continue;
        }
        u /= norm;
        let au = &a * &u;
        let b = au.norm();
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Williamson("singular symplectic block".into()));
        }
        let mut w = au / (-b);
        orthogonalize(&mut w, &basis);
        w.axpy(-u.dot(&w), &u, 1.0);
        let wn = w.norm();
        if wn < 0.5 {
            return Err(Error::Williamson("lost canonical partner vector".into()));
        }
        w /= wn;
        pairs.push((1.0 / b, basis.len()));
        basis.push(u);
        basis.push(w);
    }
    if basis.len() != 2 * n {
        return Err(Error::Williamson(format!(
            "built {} of {} canonical vectors",
            basis.len(),
            2 * n
        )));
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut o = DMatrix::zeros(2 * n, 2 * n);
    let mut nus = Vec::with_capacity(n);
    for (j, &(nu, at)) in pairs.iter().enumerate() {
        let scale = 1.0 / nu.sqrt();
        o.column_mut(2 * j).copy_from(&(&basis[at] * scale));
        o.column_mut(2 * j + 1).copy_from(&(&basis[at + 1] * scale));
        nus.push(nu);
    }
    let s = l * o;
    let transform = SymplecticTransform::new(s, williamson_tol(&m))?;
    Ok(WilliamsonResult {
        transform,
        symplectic_eigenvalues: nus,
    })
}

/// Symplecticity tolerance scaled by the conditioning of the input; stays at
/// the default for well-conditioned matrices.
fn williamson_tol(m: &DMatrix<f64>) -> f64 {
    let eig = m.symmetric_eigenvalues();
    let cond = eig.max() / eig.min();
    DEFAULT_SYMPLECTIC_TOL.max(cond * 1e-14)
}

/// Normal-mode frequencies `2 h_j` of a Hamiltonian matrix, ascending.
pub fn normal_mode_frequencies(h: &HamiltonianMatrix) -> Result<Vec<f64>> {
    Ok(h.symplectic_eigenvalues()?
        .into_iter()
        .map(|x| 2.0 * x)
        .collect())
}

/// Thermal symplectic eigenvalue `coth(beta w / 2)`.
pub fn thermal_nu(beta: f64, omega: f64) -> f64 {
    1.0 + 2.0 / (beta * omega).exp_m1()
}

/// Covariance matrix of the Gibbs state `exp(-beta H_op) / Z`.
///
/// With `h = S D S^T` (Williamson), the phase-space map `r -> S^T r` brings
/// the Hamiltonian to independent oscillators, so the state is
/// `S^{-T} W S^{-1}` with `W = (+) coth(beta w_j / 2) I_2`, and
/// `S^{-T} = Omega^T S Omega`.
pub fn thermal_cm(h: &HamiltonianMatrix, beta: f64) -> Result<CovarianceMatrix> {
    if !(beta > 0.0) {
        return Err(Error::NonPositiveBeta(beta));
    }
    let wr = williamson_decompose(h.matrix()).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::ZeroFrequencyMode,
        other => other,
    })?;
    let s = wr.transform.matrix();
    let mut sw = -omega_left(s);
    for (j, &hj) in wr.symplectic_eigenvalues.iter().enumerate() {
        let omega = 2.0 * hj;
        if !(omega > 0.0) {
            return Err(Error::ZeroFrequencyMode);
        }
        let nu = thermal_nu(beta, omega);
        if !nu.is_finite() {
            return Err(Error::ZeroFrequencyMode);
        }
        sw.column_mut(2 * j).scale_mut(nu);
        sw.column_mut(2 * j + 1).scale_mut(nu);
    }
    // (Omega^T S) W (Omega^T S)^T with Omega^T = -Omega.
    let t = -omega_left(s);
    let sigma = sw * t.transpose();
    Ok(CovarianceMatrix::from_matrix_unchecked(symmetrize(&sigma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::mean_energy;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn reconstruct(w: &WilliamsonResult) -> DMatrix<f64> {
        let n = w.symplectic_eigenvalues.len();
        let d = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            if i == j {
                w.symplectic_eigenvalues[i / 2]
            } else {
                0.0
            }
        });
        w.transform.matrix() * d * w.transform.matrix().transpose()
    }

    #[test]
    fn oscillator_eigenvalue() {
        let h = HamiltonianMatrix::single_oscillator(1.0, 2.0);
        let e = symplectic_eigenvalues(h.matrix()).unwrap();
        assert_relative_eq!(e[0], 1.0, epsilon = 1e-14);
        let s = DMatrix::from_diagonal(&dvector![1.5 / 2.0, 1.5 * 2.0]);
        assert_relative_eq!(symplectic_eigenvalues(&s).unwrap()[0], 1.5, epsilon = 1e-14);
        let vac = DMatrix::identity(2, 2);
        assert_relative_eq!(
            symplectic_eigenvalues(&vac).unwrap()[0],
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn eigenvalues_of_semidefinite_input() {
        // Free particle: H = 1/2 diag(0, 1) has symplectic eigenvalue 0.
        let h = DMatrix::from_diagonal(&dvector![0.0, 0.5, 1.0, 1.0]);
        let e = symplectic_eigenvalues(&h).unwrap();
        assert!(e[0].abs() < 1e-12);
        assert_relative_eq!(e[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_reject_asymmetric() {
        let mut m = DMatrix::identity(2, 2);
        m[(1, 0)] = 0.5;
        assert!(matches!(
            symplectic_eigenvalues(&m),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn identity_decomposition() {
        let w = williamson_decompose(&DMatrix::identity(6, 6)).unwrap();
        assert_relative_eq!(
            w.transform.matrix().clone(),
            DMatrix::identity(6, 6),
            epsilon = 1e-12
        );
        for nu in w.symplectic_eigenvalues {
            assert_relative_eq!(nu, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn thermal_oscillator_decomposition() {
        // m = nu diag(1/(m w), m w) with m = 1, w = 2, nu = 1.5.
        let m = DMatrix::from_diagonal(&dvector![1.5 / 2.0, 1.5 * 2.0]);
        let w = williamson_decompose(&m).unwrap();
        assert_relative_eq!(w.symplectic_eigenvalues[0], 1.5, epsilon = 1e-14);
        let expected = DMatrix::from_diagonal(&dvector![1.0 / 2f64.sqrt(), 2f64.sqrt()]);
        assert_relative_eq!(w.transform.matrix().clone(), expected, epsilon = 1e-13);
    }

    #[test]
    fn rejects_indefinite_or_singular() {
        let m = DMatrix::from_diagonal(&dvector![1.0, 0.0]);
        assert!(matches!(
            williamson_decompose(&m),
            Err(Error::NotPositiveDefinite)
        ));
        let m = DMatrix::from_diagonal(&dvector![1.0, -2.0]);
        assert!(matches!(
            williamson_decompose(&m),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn correlated_two_mode_reconstruction() {
        // Two-mode squeezed thermal state.
        let (c, s) = (1.3f64.cosh(), 1.3f64.sinh());
        let nu = 1.7;
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c,
            ],
        ) * nu;
        let w = williamson_decompose(&m).unwrap();
        assert_relative_eq!(reconstruct(&w), m, max_relative = 1e-10, epsilon = 1e-12);
        for x in &w.symplectic_eigenvalues {
            assert_relative_eq!(*x, nu, epsilon = 1e-12);
        }
        assert!(w.transform.defect() < 1e-12);
    }

    #[test]
    fn thermal_single_mode() {
        let h = HamiltonianMatrix::single_oscillator(1.0, 2.0);
        let s = thermal_cm(&h, 10.0).unwrap();
        let nu = 1.0 / (10.0f64).tanh();
        assert_relative_eq!(s.matrix()[(0, 0)], nu / 2.0, epsilon = 1e-14);
        assert_relative_eq!(s.matrix()[(1, 1)], 2.0 * nu, epsilon = 1e-14);
        assert!(s.matrix()[(0, 1)].abs() < 1e-14);
        assert_relative_eq!(mean_energy(&h, &s).unwrap(), 1.0, epsilon = 1e-6);
        let cold = thermal_cm(&h, 500.0).unwrap();
        assert_relative_eq!(
            cold.matrix().clone(),
            DMatrix::from_diagonal(&dvector![0.5, 2.0]),
            epsilon = 1e-14
        );
        assert!(matches!(
            thermal_cm(&h, 0.0),
            Err(Error::NonPositiveBeta(_))
        ));
    }

    #[test]
    fn thermal_rejects_zero_mode() {
        let h = HamiltonianMatrix::new(DMatrix::from_diagonal(&dvector![0.0, 0.5])).unwrap();
        assert!(matches!(thermal_cm(&h, 1.0), Err(Error::ZeroFrequencyMode)));
    }

    #[test]
    fn thermal_coupled_pair_matches_normal_modes() {
        // Two unit-mass oscillators with q-q coupling: potential
        // 1/2 q^T K q, K = [[a, c], [c, b]]. Normal modes of K, each
        // thermalized independently, give <{q,q}> = U diag(coth/w) U^T.
        let (a, b, c) = (4.0, 1.0, 0.8);
        let mut h = DMatrix::zeros(4, 4);
        h[(0, 0)] = 0.5 * a;
        h[(2, 2)] = 0.5 * b;
        h[(0, 2)] = 0.5 * c;
        h[(2, 0)] = 0.5 * c;
        h[(1, 1)] = 0.5;
        h[(3, 3)] = 0.5;
        let beta = 1.3;
        let s = thermal_cm(&HamiltonianMatrix::new(h).unwrap(), beta).unwrap();
        let k = DMatrix::from_row_slice(2, 2, &[a, c, c, b]);
        let eig = k.symmetric_eigen();
        let qq = DMatrix::from_fn(2, 2, |i, j| {
            (0..2)
                .map(|m| {
                    let w = eig.eigenvalues[m].sqrt();
                    eig.eigenvectors[(i, m)] * eig.eigenvectors[(j, m)] * thermal_nu(beta, w) / w
                })
                .sum::<f64>()
        });
        let pp = DMatrix::from_fn(2, 2, |i, j| {
            (0..2)
                .map(|m| {
                    let w = eig.eigenvalues[m].sqrt();
                    eig.eigenvectors[(i, m)] * eig.eigenvectors[(j, m)] * thermal_nu(beta, w) * w
                })
                .sum::<f64>()
        });
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(s.matrix()[(2 * i, 2 * j)], qq[(i, j)], epsilon = 1e-12);
                assert_relative_eq!(
                    s.matrix()[(2 * i + 1, 2 * j + 1)],
                    pp[(i, j)],
                    epsilon = 1e-12
                );
                assert!(s.matrix()[(2 * i, 2 * j + 1)].abs() < 1e-12);
            }
        }
    }
}
