//! Charge-discharge cycles: disconnect the battery from its bath with a
//! protocol, extract the ergotropy, reconnect by a quench and let the joint
//! system charge the battery autonomously.
//!
//! The tripartite cycle reconnects to a fresh thermal copy `B'` of the bath,
//! the bipartite one to the bath `B` it was disconnected from. The
//! "long-time" limit of the charging stroke is a time average over the last
//! `window` fraction of `[0, t_charge]`.

use std::fmt;

use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{propagate_protocol, propagator_const, ProtocolStepper, StepperConfig};
use crate::extraction::{apply_local_battery, extract, theta_rotation_physical, ExtractionResult};
use crate::gaussian::{
    evolve_cm, mean_energy, sub_block, thermal_cm, von_neumann_entropy, CovarianceMatrix,
    HamiltonianMatrix, SymplecticTransform, ThermalReference,
};
use crate::model::{
    bath_hamiltonian, battery_hamiltonian, build_hamiltonian, free_hamiltonian, interaction_matrix,
    BathSample, ModelSpec, Protocol,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Tripartite,
    Bipartite,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Tripartite => "tripartite",
            Scenario::Bipartite => "bipartite",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tripartite" => Ok(Scenario::Tripartite),
            "bipartite" => Ok(Scenario::Bipartite),
            _ => Err(Error::param(
                "scenario",
                format!("expected tripartite or bipartite, got {s:?}"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleConfig {
    pub scenario: Scenario,
    pub t_d: f64,
    /// Phase of the extra battery rotation after extraction (bipartite only).
    pub theta: f64,
    pub t_charge: f64,
    /// Fraction of `[0, t_charge]`, counted from the end, that is averaged.
    pub window: f64,
    pub sample_count: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Tripartite,
            t_d: 0.0,
            theta: 0.0,
            t_charge: 150.0,
            window: 0.2,
            sample_count: 400,
        }
    }
}

impl CycleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_d >= 0.0) || !self.t_d.is_finite() {
            return Err(Error::param(
                "t_d",
                format!("must be non-negative, got {}", self.t_d),
            ));
        }
        if !self.theta.is_finite() {
            return Err(Error::param("theta", "must be finite"));
        }
        if !(self.t_charge > 0.0) || !self.t_charge.is_finite() {
            return Err(Error::param(
                "t_charge",
                format!("must be positive, got {}", self.t_charge),
            ));
        }
        if !(self.window > 0.0 && self.window <= 1.0) {
            return Err(Error::param(
                "window",
                format!("must lie in (0, 1], got {}", self.window),
            ));
        }
        if self.sample_count < 2 {
            return Err(Error::param("sample_count", "must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleFlag {
    /// `t_charge` reaches the bath's recurrence estimate.
    BeyondRecurrence,
    /// `W_d + W_c <= 0`, so no efficiency is reported.
    EtaUndefined,
}

impl CycleFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CycleFlag::BeyondRecurrence => "beyond_recurrence",
            CycleFlag::EtaUndefined => "eta_undefined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReport {
    pub scenario: Scenario,
    pub t_d: f64,
    pub theta: Option<f64>,
    pub w_d: f64,
    pub w_c: f64,
    pub ergotropy: f64,
    /// `W_d + W_c - ergotropy`.
    pub w_diss: f64,
    pub q: f64,
    /// `-beta Q`.
    pub sigma: f64,
    pub eta: Option<f64>,
    pub i_td: f64,
    pub de_b_disc: f64,
    pub de_b_charge: f64,
    pub first_law_residual: f64,
    pub second_law_value: f64,
    pub interaction_identity_residual: f64,
    /// Symplectic defect of the disconnect propagator.
    pub symplectic_defect: f64,
    pub protocol_steps: usize,
    /// Relative change of the total energy over the charging stroke.
    pub energy_drift: f64,
    /// Largest entropy change over the unitary strokes.
    pub entropy_drift: f64,
    pub flags: Vec<CycleFlag>,
}

impl CycleReport {
    /// `|Sigma - D|`, the gap between the heat and relative-entropy routes.
    pub fn second_law_gap(&self) -> f64 {
        (self.sigma - self.second_law_value).abs()
    }

    /// `max(1% of D, beta * first_law_residual) + 1e-6`.
    pub fn second_law_allowance(&self, beta: f64) -> f64 {
        (0.01 * self.second_law_value.abs()).max(beta * self.first_law_residual) + 1e-6
    }

    /// Whether the two second-law routes agree within the allowance.
    pub fn second_law_agrees(&self, beta: f64) -> bool {
        self.second_law_gap() <= self.second_law_allowance(beta)
    }

    pub fn flags_string(&self) -> String {
        self.flags
            .iter()
            .map(CycleFlag::as_str)
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn half_trace(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    0.5 * a.component_mul(b).sum()
}

fn block2(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// `exp(2 Omega H tau)` sampled on `sample_count` equally spaced times in
/// `[0, t_charge]` for `H = H_S (+) H_B + V`, with the late-window averages
/// of the Heisenberg-picture energy observables `S^T X S` precomputed. Any
/// initial state's late-window energies are then single trace products.
#[derive(Clone, Debug)]
pub struct ChargingFlow {
    times: Vec<f64>,
    window_start: usize,
    /// Rows 0 and 1 of `S(t_i)` for every sample.
    battery_rows: Vec<DMatrix<f64>>,
    obs_battery: DMatrix<f64>,
    obs_bath: DMatrix<f64>,
    obs_interaction: DMatrix<f64>,
    hamiltonian: HamiltonianMatrix,
    final_transform: SymplecticTransform,
    /// Largest `||S^T H S - H||_F / ||H||_F` over the window samples.
    conservation_defect: f64,
}

impl ChargingFlow {
    /// `v` may couple the battery (mode 0) to the bath but must not act
    /// inside the bath.
    pub fn new(
        h_s: &HamiltonianMatrix,
        h_b: &HamiltonianMatrix,
        v: &HamiltonianMatrix,
        t_charge: f64,
        window: f64,
        sample_count: usize,
    ) -> Result<Self> {
        CycleConfig {
            t_charge,
            window,
            sample_count,
            ..CycleConfig::default()
        }
        .validate()?;
        if h_s.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: h_s.dim(),
            });
        }
        let n = h_s.dim() + h_b.dim();
        if v.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.dim(),
            });
        }
        let vm = v.matrix();
        if vm.view((2, 2), (n - 2, n - 2)).amax() != 0.0 {
            return Err(Error::param("v", "interaction acts inside the bath"));
        }
        let h = HamiltonianMatrix::new(h_s.direct_sum(h_b).into_matrix() + vm)?;
        let dtau = t_charge / (sample_count - 1) as f64;
        let times: Vec<f64> = (0..sample_count).map(|i| i as f64 * dtau).collect();
        let start_time = (1.0 - window) * t_charge;
        let window_start = times
            .iter()
            .position(|&t| t >= start_time * (1.0 - 1e-12))
            .unwrap_or(sample_count - 1);
        let step = propagator_const(&h, dtau)?.into_matrix();

        let mut battery_rows = Vec::with_capacity(sample_count);
        let mut r = DMatrix::<f64>::identity(n, n).rows(0, 2).into_owned();
        battery_rows.push(r.clone());
        for _ in 1..sample_count {
            r = &r * &step;
            battery_rows.push(r.clone());
        }

        let mut s = matrix_power(&step, window_start);
        let hs = h_s.matrix();
        let hb = h_b.matrix();
        let v_ss = vm.view((0, 0), (2, 2)).into_owned();
        let v_sb = vm.view((0, 2), (2, n - 2)).into_owned();
        let h_norm = h.matrix().norm();
        let mut obs_battery = DMatrix::zeros(n, n);
        let mut obs_bath = DMatrix::zeros(n, n);
        let mut obs_interaction = DMatrix::zeros(n, n);
        let mut conservation_defect: f64 = 0.0;
        let count = sample_count - window_start;
        for i in window_start..sample_count {
            if i > window_start {
                s = &s * &step;
            }
            let rs = s.rows(0, 2);
            let rb = s.rows(2, n - 2);
            let o_s = rs.transpose() * hs * rs;
            let o_b = rb.transpose() * (hb * rb);
            let t = &v_sb * rb;
            let rst = rs.transpose();
            let o_v = &rst * &v_ss * rs + &rst * &t + t.transpose() * rs;
            let dev = (&o_s + &o_b + &o_v - h.matrix()).norm() / h_norm;
            conservation_defect = conservation_defect.max(dev);
            obs_battery += o_s;
            obs_bath += o_b;
            obs_interaction += o_v;
        }
        let c = 1.0 / count as f64;
        let final_transform = SymplecticTransform::from_matrix_unchecked(s);
        Ok(Self {
            times,
            window_start,
            battery_rows,
            obs_battery: obs_battery * c,
            obs_bath: obs_bath * c,
            obs_interaction: obs_interaction * c,
            hamiltonian: h,
            final_transform,
            conservation_defect,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn window_start(&self) -> usize {
        self.window_start
    }

    pub fn hamiltonian(&self) -> &HamiltonianMatrix {
        &self.hamiltonian
    }

    /// Propagator at `t_charge`.
    pub fn final_transform(&self) -> &SymplecticTransform {
        &self.final_transform
    }

    pub fn conservation_defect(&self) -> f64 {
        self.conservation_defect
    }

    fn check_dim(&self, s: &CovarianceMatrix) -> Result<()> {
        if s.dim() != self.hamiltonian.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.hamiltonian.dim(),
                found: s.dim(),
            });
        }
        Ok(())
    }

    /// Battery block of `S(t_i) sigma0 S(t_i)^T`.
    pub fn battery_block(&self, i: usize, sigma0: &CovarianceMatrix) -> Result<Matrix2<f64>> {
        self.check_dim(sigma0)?;
        let r = &self.battery_rows[i];
        let b = r * sigma0.matrix() * r.transpose();
        let mut m = block2(&b);
        let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        m[(0, 1)] = off;
        m[(1, 0)] = off;
        Ok(m)
    }

    /// Late-window average of the battery block.
    pub fn late_battery_mean(&self, sigma0: &CovarianceMatrix) -> Result<Matrix2<f64>> {
        let mut acc = Matrix2::zeros();
        for i in self.window_start..self.times.len() {
            acc += self.battery_block(i, sigma0)?;
        }
        Ok(acc / (self.times.len() - self.window_start) as f64)
    }

    /// Late-window averages of the battery, bath and interaction energies.
    pub fn late_energies(&self, sigma0: &CovarianceMatrix) -> Result<LateEnergies> {
        self.check_dim(sigma0)?;
        let m = sigma0.matrix();
        Ok(LateEnergies {
            battery: half_trace(&self.obs_battery, m),
            bath: half_trace(&self.obs_bath, m),
            interaction: half_trace(&self.obs_interaction, m),
        })
    }

    /// The state at `t_charge`.
    pub fn final_state(&self, sigma0: &CovarianceMatrix) -> Result<CovarianceMatrix> {
        self.check_dim(sigma0)?;
        evolve_cm(sigma0, &self.final_transform)
    }
}

/// `m^k` by repeated squaring.
fn matrix_power(m: &DMatrix<f64>, mut k: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LateEnergies {
    pub battery: f64,
    pub bath: f64,
    pub interaction: f64,
}

impl LateEnergies {
    pub fn total(&self) -> f64 {
        self.battery + self.bath + self.interaction
    }
}

/// Relative deviation of a battery CM from a reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanForceDeviation {
    /// `|s_QQ / r_QQ - 1|`.
    pub q: f64,
    /// `|s_PP / r_PP - 1|`.
    pub p: f64,
    /// `|s_QP| / sqrt(s_QQ s_PP)`.
    pub off_diagonal: f64,
}

impl MeanForceDeviation {
    pub fn new(s: &Matrix2<f64>, reference: &CovarianceMatrix) -> Self {
        let r = reference.matrix();
        Self {
            q: (s[(0, 0)] / r[(0, 0)] - 1.0).abs(),
            p: (s[(1, 1)] / r[(1, 1)] - 1.0).abs(),
            off_diagonal: s[(0, 1)].abs() / (s[(0, 0)] * s[(1, 1)]).sqrt(),
        }
    }

    /// Larger of the two diagonal deviations.
    pub fn diagonal(&self) -> f64 {
        self.q.max(self.p)
    }
}

#[derive(Clone, Debug)]
pub struct ChargingTrace {
    pub times: Vec<f64>,
    pub battery: Vec<Matrix2<f64>>,
    pub late_mean: Matrix2<f64>,
    /// Against the battery block of the finite-bath thermal state.
    pub discrete: MeanForceDeviation,
    /// Against the continuum mean-force state.
    pub continuum: MeanForceDeviation,
}

/// Battery CM along the charging stroke started from `initial`, with the
/// late-window mean compared against the two mean-force references.
pub fn charging_trace(
    flow: &ChargingFlow,
    initial: &CovarianceMatrix,
    discrete_mf: &CovarianceMatrix,
    continuum_mf: &CovarianceMatrix,
) -> Result<ChargingTrace> {
    let battery = (0..flow.times.len())
        .map(|i| flow.battery_block(i, initial))
        .collect::<Result<Vec<_>>>()?;
    let window = &battery[flow.window_start..];
    let late_mean = window.iter().sum::<Matrix2<f64>>() / window.len() as f64;
    Ok(ChargingTrace {
        times: flow.times.clone(),
        battery,
        discrete: MeanForceDeviation::new(&late_mean, discrete_mf),
        continuum: MeanForceDeviation::new(&late_mean, continuum_mf),
        late_mean,
    })
}

/// `|1/2 tr[V sigma_th] - late mean of 1/2 tr[V sigma(t)]|`, relative to
/// `max(1, |1/2 tr[V sigma_th]|)`.
pub fn audit_interaction_identity(
    flow: &ChargingFlow,
    initial: &CovarianceMatrix,
    v: &HamiltonianMatrix,
    sigma_th: &CovarianceMatrix,
) -> Result<f64> {
    let reference = mean_energy(v, sigma_th)?;
    let late = flow.late_energies(initial)?.interaction;
    Ok((reference - late).abs() / reference.abs().max(1.0))
}

/// `(m0 w_R^2 / 4) [sigma_p]_QQ`: the coupling energy of a passive battery
/// state joined to an uncorrelated thermal bath.
pub fn connect_work_tripartite(
    spec: &ModelSpec,
    bath: &BathSample,
    passive: &CovarianceMatrix,
) -> f64 {
    0.25 * spec.m0 * bath.omega_r_sq * passive.matrix()[(0, 0)]
}

/// Coupling energy `1/2 tr[V sigma_W]` of a correlated battery-bath state:
/// `(m0 w_R^2 / 4) sigma_QQ - 1/2 sum_k g_k sigma_{Q0 Qk}`.
pub fn connect_work_bipartite(
    spec: &ModelSpec,
    bath: &BathSample,
    sigma_w: &CovarianceMatrix,
) -> Result<f64> {
    let n = bath.len();
    if sigma_w.n_modes() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * (n + 1),
            found: sigma_w.dim(),
        });
    }
    let m = sigma_w.matrix();
    let corr: f64 = bath
        .couplings
        .iter()
        .enumerate()
        .map(|(k, g)| g * m[(0, 2 * (k + 1))])
        .sum();
    Ok(0.25 * spec.m0 * bath.omega_r_sq * m[(0, 0)] - 0.5 * corr)
}

/// Everything about the disconnect and extraction strokes at one `t_d`,
/// shared by the tripartite cycle and all bipartite phases.
#[derive(Clone, Debug)]
pub struct DisconnectOutcome {
    pub t_d: f64,
    pub w_d: f64,
    pub sigma_td: CovarianceMatrix,
    pub i_td: f64,
    pub de_b_disc: f64,
    pub extraction: ExtractionResult,
    pub symplectic_defect: f64,
    pub protocol_steps: usize,
    /// Entropy of `sigma_SB(t_d)`.
    pub entropy: f64,
}

/// Cached per-model data for running many cycles.
#[derive(Clone, Debug)]
pub struct CycleEngine {
    spec: ModelSpec,
    bath: BathSample,
    stepper_cfg: StepperConfig,
    exponent: u32,
    charge: CycleConfig,
    h_s: HamiltonianMatrix,
    h_b: HamiltonianMatrix,
    h0: HamiltonianMatrix,
    v: HamiltonianMatrix,
    sigma_th: CovarianceMatrix,
    tau_b: CovarianceMatrix,
    thermal_sb: ThermalReference,
    /// Gibbs state of `H_SB' (+) H_B` with modes ordered `(S, B', B)`.
    thermal_tri: ThermalReference,
    stepper: ProtocolStepper,
    flow: ChargingFlow,
    e_th: f64,
    e_b_th: f64,
    e_v_th: f64,
    e_b_tau: f64,
    entropy_th: f64,
    entropy_tau_b: f64,
    beyond_recurrence: bool,
}

impl CycleEngine {
    /// `charge` supplies `t_charge`, `window` and `sample_count`; its
    /// scenario, `t_d` and `theta` are ignored.
    pub fn new(
        spec: &ModelSpec,
        stepper_cfg: &StepperConfig,
        exponent: u32,
        charge: &CycleConfig,
    ) -> Result<Self> {
        spec.validate()?;
        stepper_cfg.validate()?;
        charge.validate()?;
        Protocol::new(1.0, exponent)?;
        let bath = BathSample::build(spec)?;
        let h_s = battery_hamiltonian(spec);
        let h_b = bath_hamiltonian(&bath);
        let h0 = free_hamiltonian(spec, &bath);
        let v = interaction_matrix(spec, &bath, 1.0);
        let h_sb = build_hamiltonian(spec, &bath, 1.0);
        let sigma_th = thermal_cm(&h_sb, spec.beta)?;
        let tau_b = thermal_cm(&h_b, spec.beta)?;
        let thermal_sb = ThermalReference::new(h_sb.clone(), spec.beta)?;
        let thermal_b = ThermalReference::new(h_b.clone(), spec.beta)?;
        let thermal_tri = thermal_sb.direct_sum(&thermal_b)?;
        let stepper = ProtocolStepper::new(spec, &bath);
        let flow = ChargingFlow::new(
            &h_s,
            &h_b,
            &v,
            charge.t_charge,
            charge.window,
            charge.sample_count,
        )?;
        let bath_modes: Vec<usize> = (1..=bath.len()).collect();
        let e_th = mean_energy(&h_sb, &sigma_th)?;
        let e_b_th = mean_energy(&h_b, &sub_block(&sigma_th, &bath_modes)?)?;
        let e_v_th = mean_energy(&v, &sigma_th)?;
        let e_b_tau = mean_energy(&h_b, &tau_b)?;
        let entropy_th = von_neumann_entropy(&sigma_th)?;
        let entropy_tau_b = von_neumann_entropy(&tau_b)?;
        let recurrence = bath.recurrence_estimate();
        let beyond_recurrence = charge.t_charge >= recurrence;
        if beyond_recurrence {
            log::warn!(
                "t_charge = {} reaches the recurrence estimate {recurrence:.1}",
                charge.t_charge
            );
        }
        Ok(Self {
            spec: spec.clone(),
            bath,
            stepper_cfg: stepper_cfg.clone(),
            exponent,
            charge: charge.clone(),
            h_s,
            h_b,
            h0,
            v,
            sigma_th,
            tau_b,
            thermal_sb,
            thermal_tri,
            stepper,
            flow,
            e_th,
            e_b_th,
            e_v_th,
            e_b_tau,
            entropy_th,
            entropy_tau_b,
            beyond_recurrence,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn bath(&self) -> &BathSample {
        &self.bath
    }

    pub fn flow(&self) -> &ChargingFlow {
        &self.flow
    }

    /// Thermal state of the coupled model.
    pub fn thermal_state(&self) -> &CovarianceMatrix {
        &self.sigma_th
    }

    pub fn interaction(&self) -> &HamiltonianMatrix {
        &self.v
    }

    pub fn battery_hamiltonian(&self) -> &HamiltonianMatrix {
        &self.h_s
    }

    /// Thermal state of a fresh, uncoupled bath.
    pub fn bath_thermal_state(&self) -> &CovarianceMatrix {
        &self.tau_b
    }

    fn base_flags(&self) -> Vec<CycleFlag> {
        if self.beyond_recurrence {
            vec![CycleFlag::BeyondRecurrence]
        } else {
            vec![]
        }
    }

    /// Disconnect with the protocol of length `t_d`, then extract.
    pub fn disconnect(&self, t_d: f64) -> Result<DisconnectOutcome> {
        let protocol = Protocol::new(t_d, self.exponent)?;
        let scale = self.e_v_th.abs();
        let run = propagate_protocol(
            &self.stepper,
            &protocol,
            &self.stepper_cfg,
            Some((&self.h0, &self.sigma_th, scale)),
        )?;
        let sigma_td = evolve_cm(&self.sigma_th, &run.transform)?;
        let w_d = mean_energy(&self.h0, &sigma_td)? - self.e_th;
        let bath_modes: Vec<usize> = (1..=self.bath.len()).collect();
        let sigma_b = sub_block(&sigma_td, &bath_modes)?;
        let sigma_s = sub_block(&sigma_td, &[0])?;
        let entropy = von_neumann_entropy(&sigma_td)?;
        let i_td = von_neumann_entropy(&sigma_s)? + von_neumann_entropy(&sigma_b)? - entropy;
        let de_b_disc = mean_energy(&self.h_b, &sigma_b)? - self.e_b_th;
        let extraction = extract(&sigma_s, &self.h_s)?;
        Ok(DisconnectOutcome {
            t_d,
            w_d,
            sigma_td,
            i_td,
            de_b_disc,
            extraction,
            symplectic_defect: run.defect,
            protocol_steps: run.n_steps,
            entropy,
        })
    }

    /// The joint `(S, B', B)` state right after reconnecting to the fresh
    /// bath `B'`.
    fn tripartite_state(&self, sigma_ext: &CovarianceMatrix) -> CovarianceMatrix {
        let nb = 2 * self.bath.len();
        let n = 2 + 2 * nb;
        let e = sigma_ext.matrix();
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (2, 2))
            .copy_from(&e.view((0, 0), (2, 2)));
        m.view_mut((2, 2), (nb, nb)).copy_from(self.tau_b.matrix());
        m.view_mut((2 + nb, 2 + nb), (nb, nb))
            .copy_from(&e.view((2, 2), (nb, nb)));
        m.view_mut((0, 2 + nb), (2, nb))
            .copy_from(&e.view((0, 2), (2, nb)));
        m.view_mut((2 + nb, 0), (nb, 2))
            .copy_from(&e.view((2, 0), (nb, 2)));
        CovarianceMatrix::from_matrix_unchecked(m)
    }

    pub fn tripartite(&self, d: &DisconnectOutcome) -> Result<CycleReport> {
        let ex = &d.extraction;
        let sigma_ext = apply_local_battery(&d.sigma_td, &ex.transform)?;
        let passive = sub_block(&sigma_ext, &[0])?;
        let w_c = connect_work_tripartite(&self.spec, &self.bath, &passive);
        let sigma0 = passive.direct_sum(&self.tau_b);
        let late = self.flow.late_energies(&sigma0)?;
        let de_b_charge = late.bath - self.e_b_tau;
        let full = self.tripartite_state(&sigma_ext);
        let second_law_value = self.thermal_tri.relative_entropy(&full)?;
        let identity = (self.e_v_th - late.interaction).abs() / self.e_v_th.abs().max(1.0);

        let entropy_ext = von_neumann_entropy(&sigma_ext)?;
        let entropy0 = von_neumann_entropy(&passive)? + self.entropy_tau_b;
        let (energy_drift, entropy_end) = self.charging_drift(&sigma0)?;
        let entropy_drift = (d.entropy - self.entropy_th)
            .abs()
            .max((entropy_ext - d.entropy).abs())
            .max((entropy_end - entropy0).abs());
        Ok(self.report(
            Scenario::Tripartite,
            None,
            d,
            w_c,
            de_b_charge,
            second_law_value,
            identity,
            energy_drift,
            entropy_drift,
        ))
    }

    pub fn bipartite(&self, d: &DisconnectOutcome, theta: f64) -> Result<CycleReport> {
        let ex = &d.extraction;
        let rot = theta_rotation_physical(theta, self.spec.m0, self.spec.omega0);
        let local = rot.compose(&ex.transform);
        let sigma_w = apply_local_battery(&d.sigma_td, &local)?;
        let w_c = connect_work_bipartite(&self.spec, &self.bath, &sigma_w)?;
        let late = self.flow.late_energies(&sigma_w)?;
        let bath_modes: Vec<usize> = (1..=self.bath.len()).collect();
        let e_b_w = mean_energy(&self.h_b, &sub_block(&sigma_w, &bath_modes)?)?;
        let de_b_charge = late.bath - e_b_w;
        let (second_law_value, entropy_w) =
            self.thermal_sb.relative_entropy_and_entropy(&sigma_w)?;
        let identity = audit_interaction_identity(&self.flow, &sigma_w, &self.v, &self.sigma_th)?;
        let (energy_drift, entropy_end) = self.charging_drift(&sigma_w)?;
        let entropy_drift = (d.entropy - self.entropy_th)
            .abs()
            .max((entropy_w - d.entropy).abs())
            .max((entropy_end - entropy_w).abs());
        Ok(self.report(
            Scenario::Bipartite,
            Some(theta),
            d,
            w_c,
            de_b_charge,
            second_law_value,
            identity,
            energy_drift,
            entropy_drift,
        ))
    }

    /// Relative total-energy change and final entropy over the charging
    /// stroke.
    fn charging_drift(&self, sigma0: &CovarianceMatrix) -> Result<(f64, f64)> {
        let h = self.flow.hamiltonian();
        let e0 = mean_energy(h, sigma0)?;
        let end = self.flow.final_state(sigma0)?;
        let e1 = mean_energy(h, &end)?;
        Ok(((e1 - e0).abs() / e0.abs(), von_neumann_entropy(&end)?))
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        scenario: Scenario,
        theta: Option<f64>,
        d: &DisconnectOutcome,
        w_c: f64,
        de_b_charge: f64,
        second_law_value: f64,
        interaction_identity_residual: f64,
        energy_drift: f64,
        entropy_drift: f64,
    ) -> CycleReport {
        let ergotropy = d.extraction.ergotropy;
        let w_diss = d.w_d + w_c - ergotropy;
        let de_bath = d.de_b_disc + de_b_charge;
        let q = -de_bath;
        let invested = d.w_d + w_c;
        let mut flags = self.base_flags();
        let eta = if invested > 0.0 {
            Some(ergotropy / invested)
        } else {
            flags.push(CycleFlag::EtaUndefined);
            None
        };
        CycleReport {
            scenario,
            t_d: d.t_d,
            theta,
            w_d: d.w_d,
            w_c,
            ergotropy,
            w_diss,
            q,
            sigma: -self.spec.beta * q,
            eta,
            i_td: d.i_td,
            de_b_disc: d.de_b_disc,
            de_b_charge,
            first_law_residual: (w_diss - de_bath).abs(),
            second_law_value,
            interaction_identity_residual,
            symplectic_defect: d.symplectic_defect,
            protocol_steps: d.protocol_steps,
            energy_drift,
            entropy_drift,
            flags,
        }
    }

    /// One cycle as described by `cfg` (its charging fields must match the
    /// engine's).
    pub fn run(&self, cfg: &CycleConfig) -> Result<CycleReport> {
        cfg.validate()?;
        if cfg.t_charge != self.charge.t_charge
            || cfg.window != self.charge.window
            || cfg.sample_count != self.charge.sample_count
        {
            return Err(Error::param(
                "cycle",
                "charging settings differ from the engine's",
            ));
        }
        let d = self.disconnect(cfg.t_d)?;
        match cfg.scenario {
            Scenario::Tripartite => self.tripartite(&d),
            Scenario::Bipartite => self.bipartite(&d, cfg.theta),
        }
    }

    /// Battery trace of the bipartite charging stroke after a quench
    /// disconnection and extraction (no extra rotation).
    pub fn quench_trace(&self, continuum_mf: &CovarianceMatrix) -> Result<ChargingTrace> {
        let d = self.disconnect(0.0)?;
        let sigma_w = apply_local_battery(&d.sigma_td, &d.extraction.transform)?;
        let discrete = sub_block(&self.sigma_th, &[0])?;
        charging_trace(&self.flow, &sigma_w, &discrete, continuum_mf)
    }
}

/// Disconnect work, state at `t_d` and battery-bath mutual information for a
/// single protocol, without any caching.
pub fn disconnect_work(
    spec: &ModelSpec,
    protocol: &Protocol,
    stepper_cfg: &StepperConfig,
) -> Result<(f64, CovarianceMatrix, f64)> {
    let bath = BathSample::build(spec)?;
    let h_sb = build_hamiltonian(spec, &bath, 1.0);
    let h0 = free_hamiltonian(spec, &bath);
    let sigma_th = thermal_cm(&h_sb, spec.beta)?;
    let stepper = ProtocolStepper::new(spec, &bath);
    let scale = mean_energy(&interaction_matrix(spec, &bath, 1.0), &sigma_th)?.abs();
    let run = propagate_protocol(
        &stepper,
        protocol,
        stepper_cfg,
        Some((&h0, &sigma_th, scale)),
    )?;
    let sigma_td = evolve_cm(&sigma_th, &run.transform)?;
    let w_d = mean_energy(&h0, &sigma_td)? - mean_energy(&h_sb, &sigma_th)?;
    let bath_modes: Vec<usize> = (1..=bath.len()).collect();
    let i_td = crate::gaussian::mutual_information(&sigma_td, &[0], &bath_modes)?;
    Ok((w_d, sigma_td, i_td))
}

pub fn run_tripartite_cycle(
    cfg: &CycleConfig,
    spec: &ModelSpec,
    stepper_cfg: &StepperConfig,
    exponent: u32,
) -> Result<CycleReport> {
    let cfg = CycleConfig {
        scenario: Scenario::Tripartite,
        ..cfg.clone()
    };
    CycleEngine::new(spec, stepper_cfg, exponent, &cfg)?.run(&cfg)
}

pub fn run_bipartite_cycle(
    cfg: &CycleConfig,
    spec: &ModelSpec,
    stepper_cfg: &StepperConfig,
    exponent: u32,
) -> Result<CycleReport> {
    let cfg = CycleConfig {
        scenario: Scenario::Bipartite,
        ..cfg.clone()
    };
    CycleEngine::new(spec, stepper_cfg, exponent, &cfg)?.run(&cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub scenarios: Vec<Scenario>,
    pub td: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub scenario: Scenario,
    pub t_d: f64,
    pub theta: Option<f64>,
    /// The report, or the error message of a failed cell.
    pub outcome: std::result::Result<CycleReport, String>,
}

/// Bipartite extremes over the phase grid at one `t_d`. `theta_low`
/// minimizes the dissipated work (largest efficiency), `theta_high`
/// maximizes it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaExtrema {
    pub t_d: f64,
    pub theta_low: f64,
    pub eta_max: Option<f64>,
    pub w_diss_min: f64,
    pub theta_high: f64,
    pub eta_min: Option<f64>,
    pub w_diss_max: f64,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    pub extrema: Vec<ThetaExtrema>,
}

impl SweepTable {
    pub fn reports(&self) -> impl Iterator<Item = &CycleReport> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(|c| c.outcome.is_err())
    }

    pub fn of(&self, scenario: Scenario) -> impl Iterator<Item = &CycleReport> {
        self.reports().filter(move |r| r.scenario == scenario)
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() || self.td.is_empty() {
            return Err(Error::param("grid", "scenarios and td must be non-empty"));
        }
        if self.scenarios.contains(&Scenario::Bipartite) && self.theta.is_empty() {
            return Err(Error::param("theta_grid", "bipartite sweeps need phases"));
        }
        Ok(())
    }
}

fn cells_at(engine: &CycleEngine, grid: &SweepGrid, t_d: f64) -> Vec<SweepCell> {
    let d = engine.disconnect(t_d);
    let mut cells = vec![];
    for &scenario in &grid.scenarios {
        let phases: Vec<Option<f64>> = match scenario {
            Scenario::Tripartite => vec![None],
            Scenario::Bipartite => grid.theta.iter().map(|&t| Some(t)).collect(),
        };
        for theta in phases {
            let outcome = match &d {
                Err(e) => Err(e.to_string()),
                Ok(d) => match theta {
                    None => engine.tripartite(d),
                    Some(th) => engine.bipartite(d, th),
                }
                .map_err(|e| e.to_string()),
            };
            if let Err(msg) = &outcome {
                log::error!("{scenario} cell t_d={t_d} theta={theta:?} failed: {msg}");
            }
            cells.push(SweepCell {
                scenario,
                t_d,
                theta,
                outcome,
            });
        }
    }
    cells
}

fn extrema_at(t_d: f64, cells: &[SweepCell]) -> Option<ThetaExtrema> {
    let bi: Vec<&CycleReport> = cells
        .iter()
        .filter(|c| c.scenario == Scenario::Bipartite)
        .filter_map(|c| c.outcome.as_ref().ok())
        .collect();
    let lo = bi.iter().min_by(|a, b| a.w_diss.total_cmp(&b.w_diss))?;
    let hi = bi.iter().max_by(|a, b| a.w_diss.total_cmp(&b.w_diss))?;
    Some(ThetaExtrema {
        t_d,
        theta_low: lo.theta.unwrap_or(0.0),
        eta_max: lo.eta,
        w_diss_min: lo.w_diss,
        theta_high: hi.theta.unwrap_or(0.0),
        eta_min: hi.eta,
        w_diss_max: hi.w_diss,
    })
}

/// All cells of `grid`, in grid order (`t_d` outer, then scenario, then
/// phase). Durations run in parallel on the current rayon pool; a failed
/// cell is recorded and the sweep goes on.
pub fn sweep(engine: &CycleEngine, grid: &SweepGrid) -> Result<SweepTable> {
    grid.validate()?;
    let per_td: Vec<Vec<SweepCell>> = grid
        .td
        .par_iter()
        .map(|&t_d| cells_at(engine, grid, t_d))
        .collect();
    let extrema = grid
        .td
        .iter()
        .zip(&per_td)
        .filter_map(|(&t_d, cells)| extrema_at(t_d, cells))
        .collect();
    Ok(SweepTable {
        cells: per_td.into_iter().flatten().collect(),
        extrema,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn small_spec() -> ModelSpec {
        ModelSpec {
            n_bath: 12,
            ..ModelSpec::default()
        }
    }

    fn fast_stepper() -> StepperConfig {
        StepperConfig {
            dt: 1e-2,
            min_steps: 50,
            ..StepperConfig::default()
        }
    }

    fn charge() -> CycleConfig {
        CycleConfig {
            t_charge: 20.0,
            sample_count: 60,
            ..CycleConfig::default()
        }
    }

    fn engine(spec: &ModelSpec) -> CycleEngine {
        CycleEngine::new(spec, &fast_stepper(), 11, &charge()).unwrap()
    }

    #[test]
    fn connect_work_tripartite_arithmetic() {
        let spec = ModelSpec::default();
        let bath = BathSample::build(&spec).unwrap();
        let passive =
            CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::dvector![0.5, 2.0])).unwrap();
        assert_relative_eq!(
            connect_work_tripartite(&spec, &bath, &passive),
            1.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn quench_disconnect_work_is_minus_interaction_energy() {
        let e = engine(&small_spec());
        let d = e.disconnect(0.0).unwrap();
        let v = mean_energy(e.interaction(), e.thermal_state()).unwrap();
        assert_relative_eq!(d.w_d, -v, epsilon = 1e-12);
        assert!(d.w_d > 0.0);
        assert_eq!(d.de_b_disc, 0.0);
        assert_eq!(d.protocol_steps, 0);
    }

    #[test]
    fn decoupled_model_does_no_work() {
        let spec = ModelSpec {
            gamma: 0.0,
            ..small_spec()
        };
        let e = engine(&spec);
        for t_d in [0.0, 0.7] {
            let d = e.disconnect(t_d).unwrap();
            assert!(d.w_d.abs() < 1e-12, "{}", d.w_d);
            let r = e.tripartite(&d).unwrap();
            assert!(r.w_c.abs() < 1e-15);
            assert!(r.ergotropy < 1e-12);
            assert_eq!(r.eta, None);
            assert!(r.flags.contains(&CycleFlag::EtaUndefined));
            assert!(r.interaction_identity_residual < 1e-15);
        }
    }

    #[test]
    fn dissipated_work_and_efficiency_definitions() {
        let e = engine(&small_spec());
        let d = e.disconnect(0.5).unwrap();
        for r in [e.tripartite(&d).unwrap(), e.bipartite(&d, 1.3).unwrap()] {
            assert_eq!(r.w_diss, r.w_d + r.w_c - r.ergotropy);
            assert_eq!(r.eta, Some(r.ergotropy / (r.w_d + r.w_c)));
            assert!(r.eta.unwrap() <= 1.0 + 1e-6);
            assert!(r.w_diss >= -1e-6);
            assert_eq!(r.sigma, -e.spec().beta * r.q);
        }
    }

    #[test]
    fn relative_entropy_equals_beta_times_dissipated_work() {
        // Entropy is unchanged by every stroke and the reference Gibbs state
        // has the initial free energy, so D = beta W_diss in both scenarios.
        let e = engine(&small_spec());
        let beta = e.spec().beta;
        for t_d in [0.0, 0.9] {
            let d = e.disconnect(t_d).unwrap();
            let tri = e.tripartite(&d).unwrap();
            assert_relative_eq!(tri.second_law_value, beta * tri.w_diss, epsilon = 1e-8);
            for theta in [0.0, 2.0, 5.0] {
                let bi = e.bipartite(&d, theta).unwrap();
                assert_relative_eq!(bi.second_law_value, beta * bi.w_diss, epsilon = 1e-8);
                assert!(bi.second_law_agrees(beta));
            }
        }
    }

    #[test]
    fn zeroed_correlations_give_tripartite_connect_work() {
        let spec = small_spec();
        let e = engine(&spec);
        let d = e.disconnect(0.4).unwrap();
        let mut m = apply_local_battery(&d.sigma_td, &d.extraction.transform)
            .unwrap()
            .into_matrix();
        let n = m.nrows();
        for j in 2..n {
            for i in 0..2 {
                m[(i, j)] = 0.0;
                m[(j, i)] = 0.0;
            }
        }
        let cut = CovarianceMatrix::new(m).unwrap();
        let bi = connect_work_bipartite(&spec, e.bath(), &cut).unwrap();
        let tri = connect_work_tripartite(&spec, e.bath(), &d.extraction.passive_cm);
        assert!((bi - tri).abs() < 1e-9, "{bi} vs {tri}");
        // And the full bipartite value is the interaction energy.
        let sigma_w = apply_local_battery(&d.sigma_td, &d.extraction.transform).unwrap();
        assert_relative_eq!(
            connect_work_bipartite(&spec, e.bath(), &sigma_w).unwrap(),
            mean_energy(e.interaction(), &sigma_w).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn product_state_is_phase_independent() {
        let e = engine(&small_spec());
        let mut d = e.disconnect(0.3).unwrap();
        let mut m = d.sigma_td.matrix().clone();
        for j in 2..m.nrows() {
            for i in 0..2 {
                m[(i, j)] = 0.0;
                m[(j, i)] = 0.0;
            }
        }
        d.sigma_td = CovarianceMatrix::new(m).unwrap();
        let base = e.bipartite(&d, 0.0).unwrap().w_c;
        for k in 1..8 {
            let w = e.bipartite(&d, 2.0 * PI * k as f64 / 8.0).unwrap().w_c;
            assert!((w - base).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_state_is_stationary_under_charging() {
        let e = engine(&small_spec());
        let tau = e.thermal_state();
        let b0 = sub_block(tau, &[0]).unwrap();
        let tr = charging_trace(e.flow(), tau, &b0, &b0).unwrap();
        for b in &tr.battery {
            assert!((b - block2(b0.matrix())).amax() < 1e-10);
        }
        assert!(tr.discrete.diagonal() < 1e-10);
        let r = audit_interaction_identity(e.flow(), tau, e.interaction(), tau).unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn charging_conserves_energy() {
        let e = engine(&small_spec());
        assert!(e.flow().conservation_defect() < 1e-10);
        let d = e.disconnect(0.0).unwrap();
        let r = e.bipartite(&d, 0.4).unwrap();
        assert!(r.energy_drift < 1e-8);
        assert!(r.entropy_drift < 1e-7);
        // Late-window energies of the total Hamiltonian equal the initial one.
        let sigma_w = apply_local_battery(
            &d.sigma_td,
            &theta_rotation_physical(0.4, 1.0, 2.0).compose(&d.extraction.transform),
        )
        .unwrap();
        let late = e.flow().late_energies(&sigma_w).unwrap();
        let e0 = mean_energy(e.flow().hamiltonian(), &sigma_w).unwrap();
        assert_relative_eq!(late.total(), e0, max_relative = 1e-10);
    }

    #[test]
    fn flow_samples_match_direct_propagation() {
        let e = engine(&small_spec());
        let flow = e.flow();
        let i = 37;
        let t = flow.times()[i];
        let s = propagator_const(flow.hamiltonian(), t).unwrap();
        let sigma0 = apply_local_battery(
            e.thermal_state(),
            &extract(
                &sub_block(e.thermal_state(), &[0]).unwrap(),
                e.battery_hamiltonian(),
            )
            .unwrap()
            .transform,
        )
        .unwrap();
        let direct = evolve_cm(&sigma0, &s).unwrap();
        let b = flow.battery_block(i, &sigma0).unwrap();
        assert!((b - block2(direct.matrix())).amax() < 1e-9);
        assert_relative_eq!(flow.times()[flow.times().len() - 1], 20.0, epsilon = 1e-12);
        assert_eq!(flow.window_start(), 48);
    }

    #[test]
    fn matrix_power_matches_repeated_product() {
        let m = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, -0.2, 1.05]);
        let mut p = DMatrix::identity(2, 2);
        for _ in 0..13 {
            p = &p * &m;
        }
        assert!((matrix_power(&m, 13) - p).amax() < 1e-14);
        assert_eq!(matrix_power(&m, 0), DMatrix::identity(2, 2));
    }

    #[test]
    fn sweep_is_ordered_and_matches_direct_runs() {
        let spec = small_spec();
        let e = engine(&spec);
        let grid = SweepGrid {
            scenarios: vec![Scenario::Tripartite, Scenario::Bipartite],
            td: vec![0.6, 0.0],
            theta: vec![0.0, 3.0],
        };
        let table = sweep(&e, &grid).unwrap();
        let keys: Vec<(Scenario, f64, Option<f64>)> = table
            .cells
            .iter()
            .map(|c| (c.scenario, c.t_d, c.theta))
            .collect();
        assert_eq!(
            keys,
            vec![
                (Scenario::Tripartite, 0.6, None),
                (Scenario::Bipartite, 0.6, Some(0.0)),
                (Scenario::Bipartite, 0.6, Some(3.0)),
                (Scenario::Tripartite, 0.0, None),
                (Scenario::Bipartite, 0.0, Some(0.0)),
                (Scenario::Bipartite, 0.0, Some(3.0)),
            ]
        );
        let cfg = CycleConfig {
            scenario: Scenario::Bipartite,
            t_d: 0.6,
            theta: 3.0,
            ..charge()
        };
        assert_eq!(
            table.cells[2].outcome.as_ref().unwrap(),
            &e.run(&cfg).unwrap()
        );
        assert_eq!(table.extrema.len(), 2);
        let ex = &table.extrema[1];
        assert!(ex.w_diss_min <= ex.w_diss_max);
        assert!(ex.eta_max >= ex.eta_min);
    }

    #[test]
    fn failed_cells_are_recorded() {
        let e = engine(&small_spec());
        let grid = SweepGrid {
            scenarios: vec![Scenario::Tripartite],
            td: vec![0.0, -1.0],
            theta: vec![],
        };
        let table = sweep(&e, &grid).unwrap();
        assert_eq!(table.cells.len(), 2);
        assert!(table.cells[0].outcome.is_ok());
        assert_eq!(table.failures().count(), 1);
    }

    #[test]
    fn recurrence_flag() {
        let spec = small_spec();
        let bath = BathSample::build(&spec).unwrap();
        let cfg = CycleConfig {
            t_charge: bath.recurrence_estimate() * 1.01,
            sample_count: 20,
            ..CycleConfig::default()
        };
        let e = CycleEngine::new(&spec, &fast_stepper(), 11, &cfg).unwrap();
        let r = e.tripartite(&e.disconnect(0.0).unwrap()).unwrap();
        assert!(r.flags.contains(&CycleFlag::BeyondRecurrence));
        assert_eq!(r.flags_string(), "beyond_recurrence");
    }

    #[test]
    fn config_validation() {
        assert!(CycleConfig::default().validate().is_ok());
        for bad in [
            CycleConfig {
                window: 0.0,
                ..CycleConfig::default()
            },
            CycleConfig {
                window: 1.5,
                ..CycleConfig::default()
            },
            CycleConfig {
                t_charge: 0.0,
                ..CycleConfig::default()
            },
            CycleConfig {
                sample_count: 1,
                ..CycleConfig::default()
            },
            CycleConfig {
                t_d: f64::NAN,
                ..CycleConfig::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert_eq!(
            "bipartite".parse::<Scenario>().unwrap(),
            Scenario::Bipartite
        );
        assert!("both".parse::<Scenario>().is_err());
    }
}
