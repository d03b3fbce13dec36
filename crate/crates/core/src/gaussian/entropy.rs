use super::{
    check_phase_space, mean_energy, normal_mode_frequencies, sub_block, CovarianceMatrix,
    HamiltonianMatrix, BONA_FIDE_TOL,
};
use crate::error::{Error, Result};

/// Relative entropies between `-REL_ENTROPY_TOL` and 0 are rounded to 0.
pub const REL_ENTROPY_TOL: f64 = 1e-7;

fn entropy_term(nu: f64) -> Result<f64> {
    if nu < 1.0 - BONA_FIDE_TOL {
        return Err(Error::Unphysical(nu));
    }
    if nu <= 1.0 + 1e-12 {
        return Ok(0.0);
    }
    let a = 0.5 * (nu + 1.0);
    let b = 0.5 * (nu - 1.0);
    Ok(a * a.ln() - b * b.ln())
}

/// Von Neumann entropy (nats) from the symplectic spectrum.
pub fn von_neumann_entropy(s: &CovarianceMatrix) -> Result<f64> {
    s.symplectic_eigenvalues()?
        .into_iter()
        .map(entropy_term)
        .sum()
}

/// `S(A) + S(B) - S(AB)` for a partition of all modes into `a` and `b`.
pub fn mutual_information(s: &CovarianceMatrix, a: &[usize], b: &[usize]) -> Result<f64> {
    let n = s.n_modes();
    let mut seen = vec![false; n];
    for &j in a.iter().chain(b) {
        if j >= n {
            return Err(Error::ModeOutOfRange {
                index: j,
                n_modes: n,
            });
        }
        if seen[j] {
            return Err(Error::InvalidPartition(format!("mode {j} appears twice")));
        }
        seen[j] = true;
    }
    if let Some(j) = seen.iter().position(|&x| !x) {
        return Err(Error::InvalidPartition(format!("mode {j} not covered")));
    }
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let sa = von_neumann_entropy(&sub_block(s, a)?)?;
    let sb = von_neumann_entropy(&sub_block(s, b)?)?;
    let sab = von_neumann_entropy(s)?;
    Ok(sa + sb - sab)
}

/// `ln(2 sinh x)` for `x > 0`, stable for large `x`.
pub fn ln_two_sinh(x: f64) -> f64 {
    x + (-(-2.0 * x).exp_m1()).ln()
}

/// Gibbs state of a fixed Hamiltonian, with its normal modes precomputed so
/// many relative entropies can be taken against it.
#[derive(Clone, Debug)]
pub struct ThermalReference {
    hamiltonian: HamiltonianMatrix,
    beta: f64,
    frequencies: Vec<f64>,
    /// `sum_j ln(2 sinh(beta w_j / 2)) = -ln Z`.
    neg_log_z: f64,
}

impl ThermalReference {
    pub fn new(h: HamiltonianMatrix, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::NonPositiveBeta(beta));
        }
        check_phase_space(h.matrix())?;
        let frequencies = normal_mode_frequencies(&h)?;
        let scale = frequencies.last().copied().unwrap_or(0.0);
        if frequencies
            .iter()
            .any(|&w| !(w > 1e-12 * scale.max(1e-300)))
        {
            return Err(Error::ZeroFrequencyMode);
        }
        let neg_log_z = frequencies
            .iter()
            .map(|&w| ln_two_sinh(0.5 * beta * w))
            .sum();
        Ok(Self {
            hamiltonian: h,
            beta,
            frequencies,
            neg_log_z,
        })
    }

    /// Gibbs state of `H_a (+) H_b` at a common temperature, reusing both
    /// normal-mode spectra.
    pub fn direct_sum(&self, other: &ThermalReference) -> Result<Self> {
        if self.beta != other.beta {
            return Err(Error::param(
                "beta",
                "direct sum needs a common temperature",
            ));
        }
        let mut frequencies = self.frequencies.clone();
        frequencies.extend_from_slice(&other.frequencies);
        frequencies.sort_by(f64::total_cmp);
        Ok(Self {
            hamiltonian: self.hamiltonian.direct_sum(&other.hamiltonian),
            beta: self.beta,
            frequencies,
            neg_log_z: self.neg_log_z + other.neg_log_z,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hamiltonian(&self) -> &HamiltonianMatrix {
        &self.hamiltonian
    }

    /// Normal-mode frequencies, ascending.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// `-ln Z`.
    pub fn neg_log_partition(&self) -> f64 {
        self.neg_log_z
    }

    /// `D(rho || tau) = beta E(rho) - S(rho) + ln Z`.
    pub fn relative_entropy(&self, s: &CovarianceMatrix) -> Result<f64> {
        Ok(self.relative_entropy_and_entropy(s)?.0)
    }

    /// `(D(rho || tau), S(rho))` from a single symplectic spectrum.
    pub fn relative_entropy_and_entropy(&self, s: &CovarianceMatrix) -> Result<(f64, f64)> {
        let e = mean_energy(&self.hamiltonian, s)?;
        let entropy = von_neumann_entropy(s)?;
        let d = self.beta * e - entropy - self.neg_log_z;
        if d < -REL_ENTROPY_TOL {
            return Err(Error::NegativeRelativeEntropy(d));
        }
        Ok((d.max(0.0), entropy))
    }
}

/// Quantum relative entropy of `s` to the Gibbs state of `h` at `beta`.
pub fn relative_entropy_to_thermal(
    s: &CovarianceMatrix,
    h: &HamiltonianMatrix,
    beta: f64,
) -> Result<f64> {
    ThermalReference::new(h.clone(), beta)?.relative_entropy(s)
}
