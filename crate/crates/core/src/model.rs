//! Discrete Caldeira-Leggett model: a battery oscillator (mode 0) coupled
//! through its position to `N` bath oscillators (modes `1..=N`).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::HamiltonianMatrix;

/// Allowed range for the multiplicative rescale of the last spacing.
pub const TAIL_RESCALE_RANGE: (f64, f64) = (0.1, 10.0);

/// How the discrete bath frequencies are placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencySampling {
    /// `w_k = a0 tan(pi k / (2(N+1)))`: dense at low frequency, with a tail
    /// that reaches far above the cutoff.
    #[default]
    Tan,
    /// `w_k = a0 tanh(pi k / (2(N+1)))`: bounded by `a0`.
    Tanh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    /// Battery mass.
    pub m0: f64,
    /// Bare battery frequency.
    pub omega0: f64,
    /// Number of bath oscillators.
    pub n_bath: usize,
    /// Frequency scale of the bath sample.
    pub a0: f64,
    /// Damping rate.
    pub gamma: f64,
    /// Lorentz-Drude cutoff.
    pub omega_d: f64,
    /// Inverse temperature.
    pub beta: f64,
    /// Bath masses; all 1 when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    /// Rescale the last spacing so the discrete `w_R^2` hits `2 gamma w_D`.
    pub tail_match: bool,
    pub sampling: FrequencySampling,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            m0: 1.0,
            omega0: 2.0,
            n_bath: 150,
            a0: 1.03,
            gamma: 1.0,
            omega_d: 4.0,
            beta: 10.0,
            masses: None,
            tail_match: true,
            sampling: FrequencySampling::Tan,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m0", self.m0),
            ("omega0", self.omega0),
            ("a0", self.a0),
            ("omega_d", self.omega_d),
            ("beta", self.beta),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::param(
                "gamma",
                format!("must be non-negative and finite, got {}", self.gamma),
            ));
        }
        if self.n_bath == 0 {
            return Err(Error::param("n_bath", "must be at least 1"));
        }
        if let Some(m) = &self.masses {
            if m.len() != self.n_bath {
                return Err(Error::param(
                    "masses",
                    format!("expected {} entries, got {}", self.n_bath, m.len()),
                ));
            }
            if let Some(bad) = m.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::param(
                    "masses",
                    format!("must be positive, got {bad}"),
                ));
            }
        }
        Ok(())
    }

    /// Battery plus bath.
    pub fn n_modes(&self) -> usize {
        self.n_bath + 1
    }

    /// Mass of bath oscillator `k` (1-based).
    pub fn bath_mass(&self, k: usize) -> f64 {
        self.masses.as_ref().map_or(1.0, |m| m[k - 1])
    }

    /// Continuum renormalization frequency squared, `2 gamma w_D`.
    pub fn omega_r_sq_continuum(&self) -> f64 {
        2.0 * self.gamma * self.omega_d
    }
}

/// Frequencies, spacings and couplings of one discrete bath.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BathSample {
    pub omegas: Vec<f64>,
    /// Unadjusted spacings, `D_1 = w_1`, `D_k = w_k - w_{k-1}`.
    pub deltas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub masses: Vec<f64>,
    /// `sum_k g_k^2 / (m0 m_k w_k^2)`.
    pub omega_r_sq: f64,
    /// Factor applied to the last spacing inside `g_N` (1 when off).
    pub tail_rescale: f64,
}

impl BathSample {
    pub fn build(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let (omegas, deltas) = sample_frequencies(spec)?;
        let (couplings, tail_rescale) = sample_couplings(spec, &omegas, &deltas)?;
        let masses: Vec<f64> = (1..=spec.n_bath).map(|k| spec.bath_mass(k)).collect();
        let omega_r_sq = omega_r_sq_from_couplings(spec.m0, &masses, &omegas, &couplings);
        Ok(Self {
            omegas,
            deltas,
            couplings,
            masses,
            omega_r_sq,
            tail_rescale,
        })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Poincare recurrence scale of the finite bath, `2 pi / min_k D_k`.
    pub fn recurrence_estimate(&self) -> f64 {
        let d = self.deltas.iter().copied().fold(f64::INFINITY, f64::min);
        2.0 * PI / d
    }
}

/// `sum_k g_k^2 / (m0 m_k w_k^2)`.
pub fn omega_r_sq_from_couplings(m0: f64, masses: &[f64], omegas: &[f64], g: &[f64]) -> f64 {
    omegas
        .iter()
        .zip(masses)
        .zip(g)
        .map(|((w, m), g)| g * g / (m0 * m * w * w))
        .sum()
}

pub fn sample_frequencies(spec: &ModelSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    if spec.n_bath == 0 {
        return Err(Error::param("n_bath", "must be at least 1"));
    }
    if !(spec.a0 > 0.0) {
        return Err(Error::param("a0", "must be positive"));
    }
    let n = spec.n_bath;
    let omegas: Vec<f64> = (1..=n)
        .map(|k| {
            let x = 0.5 * PI * k as f64 / (n + 1) as f64;
            match spec.sampling {
                FrequencySampling::Tan => spec.a0 * x.tan(),
                FrequencySampling::Tanh => spec.a0 * x.tanh(),
            }
        })
        .collect();
    let deltas = omegas
        .iter()
        .enumerate()
        .map(|(i, &w)| if i == 0 { w } else { w - omegas[i - 1] })
        .collect();
    Ok((omegas, deltas))
}

/// `g_k^2 / (m0 m_k w_k^2)` per unit spacing.
fn coupling_weight(spec: &ModelSpec, w: f64) -> f64 {
    let r = w / spec.omega_d;
    4.0 * spec.gamma / (PI * (1.0 + r * r))
}

/// Couplings `g_k` and the last-spacing rescale factor.
pub fn sample_couplings(
    spec: &ModelSpec,
    omegas: &[f64],
    deltas: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let n = omegas.len();
    if n == 0 || deltas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: deltas.len(),
        });
    }
    let mut eff = deltas.to_vec();
    let mut rescale = 1.0;
    if spec.tail_match && spec.gamma > 0.0 {
        let partial: f64 = (0..n - 1)
            .map(|k| coupling_weight(spec, omegas[k]) * deltas[k])
            .sum();
        let last = coupling_weight(spec, omegas[n - 1]) * deltas[n - 1];
        rescale = (spec.omega_r_sq_continuum() - partial) / last;
        if !(rescale >= TAIL_RESCALE_RANGE.0 && rescale <= TAIL_RESCALE_RANGE.1) {
            return Err(Error::PathologicalTail(rescale));
        }
        eff[n - 1] *= rescale;
    }
    let g = (0..n)
        .map(|i| {
            let w = omegas[i];
            let mk = spec.bath_mass(i + 1);
            (coupling_weight(spec, w) * spec.m0 * mk * w * w * eff[i]).sqrt()
        })
        .collect();
    Ok((g, rescale))
}

/// Lorentz-Drude spectral density `2 m0 gamma w / (1 + (w/w_D)^2)`.
pub fn spectral_density(omega: f64, spec: &ModelSpec) -> f64 {
    let r = omega / spec.omega_d;
    2.0 * spec.m0 * spec.gamma * omega / (1.0 + r * r)
}

/// Battery block `1/2 diag(m0 w0^2, 1/m0)`.
pub fn battery_hamiltonian(spec: &ModelSpec) -> HamiltonianMatrix {
    HamiltonianMatrix::single_oscillator(spec.m0, spec.omega0)
}

/// Free bath, `(+)_k 1/2 diag(m_k w_k^2, 1/m_k)`.
pub fn bath_hamiltonian(bath: &BathSample) -> HamiltonianMatrix {
    let n = bath.len();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        let (m, w) = (bath.masses[k], bath.omegas[k]);
        h[(2 * k, 2 * k)] = 0.5 * m * w * w;
        h[(2 * k + 1, 2 * k + 1)] = 0.5 / m;
    }
    HamiltonianMatrix::from_matrix_unchecked(h)
}

/// The two pieces of the interaction: `C1` holds the `Q0 Q_k` couplings and
/// `C2` the counter-term, so `V(lambda) = lambda C1 + lambda^2 C2`.
pub fn interaction_parts(spec: &ModelSpec, bath: &BathSample) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = 2 * (bath.len() + 1);
    let mut c1 = DMatrix::zeros(dim, dim);
    let mut c2 = DMatrix::zeros(dim, dim);
    for (k, &g) in bath.couplings.iter().enumerate() {
        c1[(0, 2 * (k + 1))] = -0.5 * g;
        c1[(2 * (k + 1), 0)] = -0.5 * g;
    }
    c2[(0, 0)] = 0.5 * spec.m0 * bath.omega_r_sq;
    (c1, c2)
}

/// Interaction `lambda^2 m0 w_R^2 Q0^2 / 2 - lambda Q0 sum_k g_k Q_k`.
pub fn interaction_matrix(spec: &ModelSpec, bath: &BathSample, lambda: f64) -> HamiltonianMatrix {
    let (c1, c2) = interaction_parts(spec, bath);
    HamiltonianMatrix::from_matrix_unchecked(c1 * lambda + c2 * (lambda * lambda))
}

/// Decoupled `H_S (+) H_B`.
pub fn free_hamiltonian(spec: &ModelSpec, bath: &BathSample) -> HamiltonianMatrix {
    battery_hamiltonian(spec).direct_sum(&bath_hamiltonian(bath))
}

/// Full Hamiltonian matrix at coupling strength `lambda`.
pub fn build_hamiltonian(spec: &ModelSpec, bath: &BathSample, lambda: f64) -> HamiltonianMatrix {
    let h0 = free_hamiltonian(spec, bath).into_matrix();
    let v = interaction_matrix(spec, bath, lambda).into_matrix();
    HamiltonianMatrix::from_matrix_unchecked(h0 + v)
}

/// Switch-off protocol `lambda(t) = (1 - t/t_d)^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub t_d: f64,
    pub exponent: u32,
}

impl Protocol {
    pub fn new(t_d: f64, exponent: u32) -> Result<Self> {
        if !(t_d >= 0.0) || !t_d.is_finite() {
            return Err(Error::param(
                "t_d",
                format!("must be non-negative, got {t_d}"),
            ));
        }
        if exponent == 0 {
            return Err(Error::param("exponent", "must be at least 1"));
        }
        Ok(Self { t_d, exponent })
    }

    pub fn quench() -> Self {
        Self {
            t_d: 0.0,
            exponent: 11,
        }
    }

    pub fn is_quench(&self) -> bool {
        self.t_d == 0.0
    }
}

/// `lambda(t)`. For a quench the only valid time is 0, which returns the
/// pre-quench value 1.
pub fn protocol_value(p: &Protocol, t: f64) -> Result<f64> {
    if p.is_quench() {
        if t == 0.0 {
            return Ok(1.0);
        }
        return Err(Error::TimeOutOfRange { t, t_d: p.t_d });
    }
    if !(t >= 0.0 && t <= p.t_d) {
        return Err(Error::TimeOutOfRange { t, t_d: p.t_d });
    }
    Ok((1.0 - t / p.t_d).powi(p.exponent as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tanh_sample_values() {
        let spec = ModelSpec {
            sampling: FrequencySampling::Tanh,
            ..ModelSpec::default()
        };
        let (w, d) = sample_frequencies(&spec).unwrap();
        assert_relative_eq!(w[0], 0.0107143169, epsilon = 1e-9);
        assert_relative_eq!(w[149], 0.9429, epsilon = 5e-5);
        assert!(w[149] < spec.a0 * (PI / 2.0).tanh());
        assert_eq!(d[0], w[0]);
        assert!(d.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn tanh_sample_rejected_by_tail_bound() {
        let spec = ModelSpec {
            sampling: FrequencySampling::Tanh,
            ..ModelSpec::default()
        };
        assert!(matches!(BathSample::build(&spec), Err(Error::PathologicalTail(f)) if f > 10.0));
    }

    #[test]
    fn tan_sample_default() {
        let spec = ModelSpec::default();
        let bath = BathSample::build(&spec).unwrap();
        assert_relative_eq!(bath.omegas[0], 0.010715, epsilon = 5e-7);
        assert!(bath.omegas.windows(2).all(|p| p[1] > p[0]));
        assert_relative_eq!(bath.omega_r_sq, 8.0, epsilon = 1e-10);
        assert!(bath.tail_rescale > 0.1 && bath.tail_rescale < 10.0);
        assert!(bath.couplings.iter().all(|&g| g > 0.0));
        assert_relative_eq!(
            bath.recurrence_estimate(),
            2.0 * PI / bath.omegas[0],
            epsilon = 1e-9
        );
    }

    #[test]
    fn decoupled_limit() {
        let spec = ModelSpec {
            gamma: 0.0,
            ..ModelSpec::default()
        };
        let bath = BathSample::build(&spec).unwrap();
        assert!(bath.couplings.iter().all(|&g| g == 0.0));
        assert_eq!(bath.omega_r_sq, 0.0);
        assert_eq!(bath.tail_rescale, 1.0);
    }

    #[test]
    fn toy_bath_recomputes_omega_r() {
        let spec = ModelSpec {
            n_bath: 3,
            m0: 1.7,
            tail_match: false,
            masses: Some(vec![1.0, 2.0, 0.5]),
            ..ModelSpec::default()
        };
        let bath = BathSample::build(&spec).unwrap();
        let by_hand: f64 = (0..3)
            .map(|k| {
                let w = bath.omegas[k];
                let j = spectral_density(w, &spec);
                // g^2 = 2 m_k w_k J(w_k) D_k / pi
                let g2 = 2.0 * bath.masses[k] * w * j * bath.deltas[k] / PI;
                g2 / (spec.m0 * bath.masses[k] * w * w)
            })
            .sum();
        assert_relative_eq!(bath.omega_r_sq, by_hand, max_relative = 1e-12);
    }

    #[test]
    fn spectral_density_values() {
        let spec = ModelSpec::default();
        assert_eq!(spectral_density(0.0, &spec), 0.0);
        assert_relative_eq!(spectral_density(4.0, &spec), 4.0, epsilon = 1e-15);
        let big = 1e8;
        assert_relative_eq!(
            spectral_density(big, &spec),
            2.0 * 16.0 / big,
            max_relative = 1e-10
        );
    }

    #[test]
    fn one_bath_mode_expansion() {
        // N = 1 with m = w = g = 1: r^T H r must expand to
        // P0^2/2 + (w0^2 + wR^2) Q0^2/2 + P1^2/2 + Q1^2/2 - Q0 Q1.
        let spec = ModelSpec {
            n_bath: 1,
            m0: 1.0,
            omega0: 1.5,
            ..ModelSpec::default()
        };
        let bath = BathSample {
            omegas: vec![1.0],
            deltas: vec![1.0],
            couplings: vec![1.0],
            masses: vec![1.0],
            omega_r_sq: 1.0,
            tail_rescale: 1.0,
        };
        let h = build_hamiltonian(&spec, &bath, 1.0).into_matrix();
        let r = [0.3, -0.7, 1.1, 0.4];
        let quad: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| r[i] * h[(i, j)] * r[j])
            .sum();
        let (q0, p0, q1, p1) = (r[0], r[1], r[2], r[3]);
        let expected =
            0.5 * p0 * p0 + 0.5 * (1.5f64.powi(2) + 1.0) * q0 * q0 + 0.5 * p1 * p1 + 0.5 * q1 * q1
                - q0 * q1;
        assert_relative_eq!(quad, expected, epsilon = 1e-14);
    }

    #[test]
    fn hamiltonian_split_and_positivity() {
        let spec = ModelSpec::default();
        let bath = BathSample::build(&spec).unwrap();
        let h0 = build_hamiltonian(&spec, &bath, 0.0);
        assert_eq!(h0, free_hamiltonian(&spec, &bath));
        assert_eq!(
            interaction_matrix(&spec, &bath, 0.0).into_matrix(),
            DMatrix::zeros(302, 302)
        );
        for lambda in [0.0, 0.3, 0.77, 1.0] {
            let h = build_hamiltonian(&spec, &bath, lambda).into_matrix();
            let sum = h0.matrix() + interaction_matrix(&spec, &bath, lambda).matrix();
            assert!((&h - sum).amax() < 1e-14);
            let min = h.symmetric_eigenvalues().min();
            assert!(min >= -1e-10, "lambda {lambda}: min eigenvalue {min}");
        }
        let h = build_hamiltonian(&spec, &bath, 1.0).into_matrix();
        assert_relative_eq!(h[(0, 0)], 0.5 * (4.0 + 8.0), epsilon = 1e-9);
        assert_eq!(h[(0, 2)], -0.5 * bath.couplings[0]);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn protocol_values() {
        let p = Protocol::new(2.0, 11).unwrap();
        assert_eq!(protocol_value(&p, 0.0).unwrap(), 1.0);
        assert_eq!(protocol_value(&p, 2.0).unwrap(), 0.0);
        assert_relative_eq!(
            protocol_value(&p, 1.0).unwrap(),
            2f64.powi(-11),
            epsilon = 1e-18
        );
        assert!(protocol_value(&p, 2.5).is_err());
        assert!(protocol_value(&p, -0.1).is_err());
        let q = Protocol::quench();
        assert_eq!(protocol_value(&q, 0.0).unwrap(), 1.0);
        assert!(Protocol::new(-1.0, 11).is_err());
    }

    #[test]
    fn validation_names_fields() {
        let spec = ModelSpec {
            beta: -1.0,
            ..ModelSpec::default()
        };
        match spec.validate() {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "beta"),
            other => panic!("unexpected {other:?}"),
        }
        let spec = ModelSpec {
            masses: Some(vec![1.0; 3]),
            ..ModelSpec::default()
        };
        assert!(spec.validate().is_err());
    }
}
