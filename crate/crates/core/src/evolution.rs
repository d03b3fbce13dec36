//! Symplectic propagators `S(t) = exp(2 Omega H t)`.
//!
//! Constant Hamiltonians use a dense Pade exponential. The switch-off
//! protocol uses the first-order product of per-step exponentials with the
//! coupling frozen at each step's left endpoint; the per-step exponentials
//! are applied as truncated Taylor series of the sparse generator.
//!
//! Both work in balanced coordinates `q -> s q`, `p -> p / s` with
//! `s = sqrt(m w)` per mode, which turns the free dynamics into unit-scale
//! rotations and keeps the generator norm near the largest frequency.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    evolve_cm, mean_energy, omega_left, CovarianceMatrix, HamiltonianMatrix, SymplecticTransform,
    DEFAULT_SYMPLECTIC_TOL,
};
use crate::model::{free_hamiltonian, interaction_parts, BathSample, ModelSpec, Protocol};

const TAYLOR_TOL: f64 = 1.0 / (1u64 << 56) as f64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperConfig {
    /// Largest step of the product formula.
    pub dt: f64,
    /// Fewest factors per protocol; short protocols use `t_d / min_steps`.
    pub min_steps: usize,
    /// Halve the step until the disconnect work settles.
    pub refine: bool,
    pub sympl_tol: f64,
    /// Relative tolerance on the disconnect work between successive halvings.
    pub work_tol: f64,
    pub max_halvings: u32,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            min_steps: 10_000,
            refine: false,
            sympl_tol: DEFAULT_SYMPLECTIC_TOL,
            work_tol: 1e-4,
            max_halvings: 12,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt", self.dt),
            ("sympl_tol", self.sympl_tol),
            ("work_tol", self.work_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if self.min_steps == 0 {
            return Err(Error::param("min_steps", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of product-formula factors for a protocol of length `t_d`:
    /// the step is `min(dt, t_d / min_steps)`.
    pub fn base_steps(&self, t_d: f64) -> usize {
        ((t_d / self.dt).ceil() as usize).max(self.min_steps)
    }
}

/// Per-mode balancing scales `sqrt(m w)`.
fn balance_scales(spec: &ModelSpec, bath: &BathSample) -> Vec<f64> {
    let mut d = Vec::with_capacity(2 * (bath.len() + 1));
    let mut push = |s: f64| {
        d.push(s);
        d.push(1.0 / s);
    };
    push((spec.m0 * spec.omega0).sqrt());
    for k in 0..bath.len() {
        push((bath.masses[k] * bath.omegas[k]).sqrt());
    }
    d
}

/// `D m D^{-1}` for `D = diag(d)`.
fn balance(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * d[i] / d[j])
}

/// `D^{-1} m D`.
fn unbalance(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * d[j] / d[i])
}

/// Balancing scales from the diagonal of a Hamiltonian matrix; modes with a
/// vanishing diagonal entry are left unscaled.
fn balance_from_hamiltonian(h: &DMatrix<f64>) -> Vec<f64> {
    let n = h.nrows() / 2;
    let mut d = Vec::with_capacity(2 * n);
    for j in 0..n {
        let (a, b) = (h[(2 * j, 2 * j)], h[(2 * j + 1, 2 * j + 1)]);
        let s = if a > 0.0 && b > 0.0 {
            (a / b).sqrt().sqrt()
        } else {
            1.0
        };
        d.push(s);
        d.push(1.0 / s);
    }
    d
}

/// `exp(2 Omega H t)` by Pade scaling-and-squaring.
pub fn propagator_const(h: &HamiltonianMatrix, t: f64) -> Result<SymplecticTransform> {
    propagator_const_tol(h, t, DEFAULT_SYMPLECTIC_TOL)
}

pub fn propagator_const_tol(
    h: &HamiltonianMatrix,
    t: f64,
    sympl_tol: f64,
) -> Result<SymplecticTransform> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("must be non-negative, got {t}")));
    }
    let n = h.n_modes();
    if t == 0.0 {
        return Ok(SymplecticTransform::identity(n));
    }
    let d = balance_from_hamiltonian(h.matrix());
    let a = balance(&(omega_left(h.matrix()) * (2.0 * t)), &d);
    let s = unbalance(&a.exp(), &d);
    SymplecticTransform::new(s, sympl_tol)
}

/// Row-compressed generator `2 Omega (H0 + lambda C1 + lambda^2 C2)` in
/// balanced coordinates. One sparsity pattern, three value arrays.
#[derive(Clone, Debug)]
pub struct ProtocolStepper {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    v0: Vec<f64>,
    v1: Vec<f64>,
    v2: Vec<f64>,
    scales: Vec<f64>,
    /// Column sums of |A0|, |A1|, |A2| (balanced), for norm bounds.
    col_abs: [Vec<f64>; 3],
}

/// Outcome of a protocol propagation.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub transform: SymplecticTransform,
    pub n_steps: usize,
    pub dt: f64,
    pub halvings: u32,
    pub defect: f64,
    /// Relative change of the disconnect work at the last halving.
    pub work_change: Option<f64>,
}

impl ProtocolStepper {
    pub fn new(spec: &ModelSpec, bath: &BathSample) -> Self {
        let scales = balance_scales(spec, bath);
        let h0 = free_hamiltonian(spec, bath).into_matrix();
        let (c1, c2) = interaction_parts(spec, bath);
        let a0 = balance(&(omega_left(&h0) * 2.0), &scales);
        let a1 = balance(&(omega_left(&c1) * 2.0), &scales);
        let a2 = balance(&(omega_left(&c2) * 2.0), &scales);
        let dim = h0.nrows();
        let mut row_ptr = vec![0];
        let (mut cols, mut v0, mut v1, mut v2) = (vec![], vec![], vec![], vec![]);
        for i in 0..dim {
            for j in 0..dim {
                if a0[(i, j)] != 0.0 || a1[(i, j)] != 0.0 || a2[(i, j)] != 0.0 {
                    cols.push(j);
                    v0.push(a0[(i, j)]);
                    v1.push(a1[(i, j)]);
                    v2.push(a2[(i, j)]);
                }
            }
            row_ptr.push(cols.len());
        }
        let col_abs = [&a0, &a1, &a2].map(|a| {
            (0..dim)
                .map(|j| a.column(j).iter().map(|x| x.abs()).sum())
                .collect()
        });
        Self {
            dim,
            row_ptr,
            cols,
            v0,
            v1,
            v2,
            scales,
            col_abs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    fn values(&self, lambda: f64) -> Vec<f64> {
        let l2 = lambda * lambda;
        (0..self.v0.len())
            .map(|k| self.v0[k] + lambda * self.v1[k] + l2 * self.v2[k])
            .collect()
    }

    /// Upper bound on the induced 1-norm of the balanced generator.
    fn norm_bound(&self, lambda: f64) -> f64 {
        let l = lambda.abs();
        (0..self.dim)
            .map(|j| self.col_abs[0][j] + l * self.col_abs[1][j] + l * l * self.col_abs[2][j])
            .fold(0.0, f64::max)
    }

    /// One Taylor term in transposed storage: `dst[:, i] = scale * sum_j
    /// A_ij src[:, j]`, then `acc[:, i] += dst[:, i]`. Columns of the buffers
    /// are rows of the propagator, so every update is a contiguous axpy.
    fn taylor_term(&self, vals: &[f64], scale: f64, src: &[f64], dst: &mut [f64], acc: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let out = &mut dst[i * n..(i + 1) * n];
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            if lo == hi {
                out.fill(0.0);
            } else {
                let c = scale * vals[lo];
                let x = &src[self.cols[lo] * n..(self.cols[lo] + 1) * n];
                if hi - lo >= 2 {
                    let d = scale * vals[lo + 1];
                    let y = &src[self.cols[lo + 1] * n..(self.cols[lo + 1] + 1) * n];
                    for ((o, &a), &b) in out.iter_mut().zip(x).zip(y) {
                        *o = c * a + d * b;
                    }
                } else {
                    for (o, &a) in out.iter_mut().zip(x) {
                        *o = c * a;
                    }
                }
                for k in lo + 2..hi {
                    let c = scale * vals[k];
                    let x = &src[self.cols[k] * n..(self.cols[k] + 1) * n];
                    for (o, &a) in out.iter_mut().zip(x) {
                        *o += c * a;
                    }
                }
            }
            for (a, &o) in acc[i * n..(i + 1) * n].iter_mut().zip(out.iter()) {
                *a += o;
            }
        }
    }

    /// `T <- T exp(h A)^T`, i.e. the propagator `S <- exp(h A) S` in
    /// transposed storage. The series is cut once the a-priori remainder
    /// bound `x^(K+1)/(K+1)!`, `x = h ||A||_1 <= 1`, drops below 2^-56.
    fn step(&self, vals: &[f64], h: f64, norm: f64, t: &mut [f64], bufs: &mut [Vec<f64>; 2]) {
        let substeps = (h * norm).ceil().max(1.0) as usize;
        let h = h / substeps as f64;
        let x = h * norm;
        let mut order = 1;
        let mut bound = x;
        while bound * x / (order + 1) as f64 > TAYLOR_TOL && order < 40 {
            order += 1;
            bound *= x / order as f64;
        }
        for _ in 0..substeps {
            let [term, next] = bufs;
            term.copy_from_slice(t);
            for k in 1..=order {
                self.taylor_term(vals, h / k as f64, term, next, t);
                std::mem::swap(term, next);
            }
        }
    }

    /// Ordered product of `n_steps` left-endpoint factors over `[0, t_d]`.
    pub fn product(&self, protocol: &Protocol, n_steps: usize) -> SymplecticTransform {
        let n = self.dim;
        if protocol.is_quench() {
            return SymplecticTransform::identity(n / 2);
        }
        let h = protocol.t_d / n_steps as f64;
        let mut t = DMatrix::<f64>::identity(n, n).as_slice().to_vec();
        let mut bufs = [vec![0.0; n * n], vec![0.0; n * n]];
        for i in 0..n_steps {
            let lambda = (1.0 - i as f64 / n_steps as f64).powi(protocol.exponent as i32);
            let vals = self.values(lambda);
            let norm = self.norm_bound(lambda);
            self.step(&vals, h, norm, &mut t, &mut bufs);
        }
        let s_bal = DMatrix::from_vec(n, n, t).transpose();
        SymplecticTransform::from_matrix_unchecked(unbalance(&s_bal, &self.scales))
    }
}

/// `1/2 tr[H0 S sigma S^T]`, the decoupled energy after the protocol.
fn final_free_energy(
    h0: &HamiltonianMatrix,
    sigma_th: &CovarianceMatrix,
    s: &SymplecticTransform,
) -> Result<f64> {
    mean_energy(h0, &evolve_cm(sigma_th, s)?)
}

/// Runs the product formula with the configured step and, when refinement is
/// on, halves the step until the disconnect work changes by less than
/// `work_tol * max(|W_d|, work_scale)`.
pub fn propagate_protocol(
    stepper: &ProtocolStepper,
    protocol: &Protocol,
    cfg: &StepperConfig,
    refine_ctx: Option<(&HamiltonianMatrix, &CovarianceMatrix, f64)>,
) -> Result<ProtocolRun> {
    cfg.validate()?;
    if protocol.is_quench() {
        return Ok(ProtocolRun {
            transform: SymplecticTransform::identity(stepper.dim / 2),
            n_steps: 0,
            dt: 0.0,
            halvings: 0,
            defect: 0.0,
            work_change: None,
        });
    }
    let mut n_steps = cfg.base_steps(protocol.t_d);
    let mut s = stepper.product(protocol, n_steps);
    let mut halvings = 0;
    let mut work_change = None;
    if cfg.refine {
        let (h0, sigma_th, scale) = refine_ctx.ok_or_else(|| {
            Error::param("refine", "step refinement needs the thermal state and H0")
        })?;
        let mut e_prev = final_free_energy(h0, sigma_th, &s)?;
        loop {
            if halvings == cfg.max_halvings {
                return Err(Error::RefinementNotConverged(halvings));
            }
            halvings += 1;
            n_steps *= 2;
            let s_fine = stepper.product(protocol, n_steps);
            let e = final_free_energy(h0, sigma_th, &s_fine)?;
            let change = (e - e_prev).abs() / e.abs().max(scale).max(f64::MIN_POSITIVE);
            log::debug!(
                "t_d={} steps={} work change {:.3e}",
                protocol.t_d,
                n_steps,
                change
            );
            s = s_fine;
            e_prev = e;
            work_change = Some(change);
            if change < cfg.work_tol {
                break;
            }
        }
    }
    let defect = s.defect();
    if !(defect <= cfg.sympl_tol) {
        return Err(Error::SymplecticDefect {
            defect,
            tol: cfg.sympl_tol,
        });
    }
    Ok(ProtocolRun {
        transform: s,
        n_steps,
        dt: protocol.t_d / n_steps as f64,
        halvings,
        defect,
        work_change,
    })
}

/// Disconnect propagator for `protocol` on the model.
///
/// With refinement on, the thermal state of the coupled model is built here;
/// callers that already hold it should use [`propagate_protocol`].
pub fn propagator_protocol(
    spec: &ModelSpec,
    bath: &BathSample,
    protocol: &Protocol,
    cfg: &StepperConfig,
) -> Result<SymplecticTransform> {
    let stepper = ProtocolStepper::new(spec, bath);
    if cfg.refine && !protocol.is_quench() {
        let h = crate::model::build_hamiltonian(spec, bath, 1.0);
        let sigma = crate::gaussian::thermal_cm(&h, spec.beta)?;
        let h0 = free_hamiltonian(spec, bath);
        let v = crate::model::interaction_matrix(spec, bath, 1.0);
        let scale = mean_energy(&v, &sigma)?.abs();
        return Ok(
            propagate_protocol(&stepper, protocol, cfg, Some((&h0, &sigma, scale)))?.transform,
        );
    }
    Ok(propagate_protocol(&stepper, protocol, cfg, None)?.transform)
}

/// `S sigma S^T`.
pub fn evolve(s: &CovarianceMatrix, t: &SymplecticTransform) -> Result<CovarianceMatrix> {
    evolve_cm(s, t)
}

/// Embeds per-factor transforms acting on disjoint mode sets into one
/// transform over all modes.
pub fn embed_factors(
    n_modes: usize,
    factors: &[(&SymplecticTransform, &[usize])],
) -> Result<SymplecticTransform> {
    let mut owner = vec![false; n_modes];
    let mut s = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for (t, modes) in factors {
        if t.n_modes() != modes.len() {
            return Err(Error::DimensionMismatch {
                expected: t.n_modes(),
                found: modes.len(),
            });
        }
        for &j in modes.iter() {
            if j >= n_modes {
                return Err(Error::ModeOutOfRange { index: j, n_modes });
            }
            if owner[j] {
                return Err(Error::InvalidPartition(format!("mode {j} in two factors")));
            }
            owner[j] = true;
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&j| [2 * j, 2 * j + 1]).collect();
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate() {
                s[(ia, ib)] = t.matrix()[(a, b)];
            }
        }
    }
    for (j, covered) in owner.iter().enumerate() {
        if !covered {
            s[(2 * j, 2 * j)] = 1.0;
            s[(2 * j + 1, 2 * j + 1)] = 1.0;
        }
    }
    Ok(SymplecticTransform::from_matrix_unchecked(s))
}

/// Evolves a state whose modes split into an interacting set and a free set,
/// each under its own constant Hamiltonian, for time `t`.
pub fn evolve_with_free_bath(
    s: &CovarianceMatrix,
    h_active: &HamiltonianMatrix,
    active_modes: &[usize],
    h_free: &HamiltonianMatrix,
    free_modes: &[usize],
    t: f64,
) -> Result<CovarianceMatrix> {
    if active_modes.len() + free_modes.len() != s.n_modes() {
        return Err(Error::InvalidPartition(format!(
            "{} + {} modes do not cover {}",
            active_modes.len(),
            free_modes.len(),
            s.n_modes()
        )));
    }
    let sa = propagator_const(h_active, t)?;
    let sf = propagator_const(h_free, t)?;
    let full = embed_factors(s.n_modes(), &[(&sa, active_modes), (&sf, free_modes)])?;
    evolve_cm(s, &full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{thermal_cm, von_neumann_entropy, williamson_decompose};
    use crate::model::build_hamiltonian;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn small_model() -> (ModelSpec, BathSample) {
        let spec = ModelSpec {
            n_bath: 12,
            ..ModelSpec::default()
        };
        let bath = BathSample::build(&spec).unwrap();
        (spec, bath)
    }

    /// Independent route: normal modes from the Williamson form of H.
    fn normal_mode_propagator(h: &HamiltonianMatrix, t: f64) -> DMatrix<f64> {
        let w = williamson_decompose(h.matrix()).unwrap();
        let s = w.transform.matrix();
        let n = h.n_modes();
        let mut r = DMatrix::zeros(2 * n, 2 * n);
        for (j, &hj) in w.symplectic_eigenvalues.iter().enumerate() {
            let (sn, cs) = (2.0 * hj * t).sin_cos();
            r[(2 * j, 2 * j)] = cs;
            r[(2 * j, 2 * j + 1)] = sn;
            r[(2 * j + 1, 2 * j)] = -sn;
            r[(2 * j + 1, 2 * j + 1)] = cs;
        }
        let o = crate::gaussian::omega_matrix(n);
        let s_inv_t = o.transpose() * s * &o;
        s_inv_t * r * s.transpose()
    }

    #[test]
    fn free_rotation() {
        let h = HamiltonianMatrix::single_oscillator(1.0, 1.0);
        assert_eq!(
            propagator_const(&h, 0.0).unwrap().into_matrix(),
            DMatrix::identity(2, 2)
        );
        let s = propagator_const(&h, std::f64::consts::FRAC_PI_2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_relative_eq!(s.into_matrix(), expected, epsilon = 1e-14);
    }

    #[test]
    fn group_law_and_normal_modes() {
        let (spec, bath) = small_model();
        let h = build_hamiltonian(&spec, &bath, 1.0);
        let (t1, t2) = (0.37, 1.91);
        let a = propagator_const(&h, t1).unwrap();
        let b = propagator_const(&h, t2).unwrap();
        let ab = propagator_const(&h, t1 + t2).unwrap();
        let diff = (a.compose(&b).into_matrix() - ab.matrix()).amax();
        assert!(diff < 1e-9 * ab.matrix().amax(), "group law {diff}");
        let nm = normal_mode_propagator(&h, t1 + t2);
        let diff = (nm - ab.matrix()).amax() / ab.matrix().amax();
        assert!(diff < 1e-9, "normal-mode route {diff}");
    }

    #[test]
    fn thermal_state_is_stationary() {
        let (spec, bath) = small_model();
        let h = build_hamiltonian(&spec, &bath, 1.0);
        let tau = thermal_cm(&h, spec.beta).unwrap();
        let s = propagator_const(&h, 7.3).unwrap();
        let out = evolve(&tau, &s).unwrap();
        assert!((out.matrix() - tau.matrix()).amax() < 1e-8);
        let s0 = von_neumann_entropy(&tau).unwrap();
        let s1 = von_neumann_entropy(&out).unwrap();
        assert!((s0 - s1).abs() <= 1e-7 * s0.max(1.0));
    }

    #[test]
    fn constant_protocol_matches_exponential() {
        // With every coupling weight frozen at 1, the product formula is exact.
        let (spec, bath) = small_model();
        let stepper = ProtocolStepper::new(&spec, &bath);
        let h = build_hamiltonian(&spec, &bath, 1.0);
        let t = 0.8;
        let n_steps = 200;
        let vals = stepper.values(1.0);
        let norm = stepper.norm_bound(1.0);
        let n = stepper.dim();
        let mut tr = DMatrix::<f64>::identity(n, n).as_slice().to_vec();
        let mut bufs = [vec![0.0; n * n], vec![0.0; n * n]];
        for _ in 0..n_steps {
            stepper.step(&vals, t / n_steps as f64, norm, &mut tr, &mut bufs);
        }
        let s = unbalance(&DMatrix::from_vec(n, n, tr).transpose(), &stepper.scales);
        let exact = propagator_const(&h, t).unwrap();
        let diff = (s - exact.matrix()).amax() / exact.matrix().amax();
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn product_of_one_step_equals_exponential_at_lambda_one() {
        let (spec, bath) = small_model();
        let stepper = ProtocolStepper::new(&spec, &bath);
        let p = Protocol::new(0.05, 11).unwrap();
        let s = stepper.product(&p, 1);
        let exact = propagator_const(&build_hamiltonian(&spec, &bath, 1.0), 0.05).unwrap();
        assert!((s.matrix() - exact.matrix()).amax() < 1e-12);
    }

    #[test]
    fn protocol_propagator_symplectic_and_converging() {
        let (spec, bath) = small_model();
        let stepper = ProtocolStepper::new(&spec, &bath);
        let p = Protocol::new(2.0, 11).unwrap();
        let h = build_hamiltonian(&spec, &bath, 1.0);
        let tau = thermal_cm(&h, spec.beta).unwrap();
        let h0 = free_hamiltonian(&spec, &bath);
        let e = |n: usize| final_free_energy(&h0, &tau, &stepper.product(&p, n)).unwrap();
        let (e1, e2, e4) = (e(500), e(1000), e(2000));
        assert!(stepper.product(&p, 500).defect() < 1e-10);
        // Successive differences must shrink at least twofold per halving.
        let r = (e1 - e2).abs() / (e2 - e4).abs();
        assert!(r >= 1.9, "ratio {r}");
    }

    #[test]
    fn refinement_reports_halvings() {
        let (spec, bath) = small_model();
        let stepper = ProtocolStepper::new(&spec, &bath);
        let p = Protocol::new(1.0, 11).unwrap();
        let h = build_hamiltonian(&spec, &bath, 1.0);
        let tau = thermal_cm(&h, spec.beta).unwrap();
        let h0 = free_hamiltonian(&spec, &bath);
        let cfg = StepperConfig {
            dt: 0.05,
            min_steps: 1,
            refine: true,
            work_tol: 1e-3,
            ..StepperConfig::default()
        };
        let run = propagate_protocol(&stepper, &p, &cfg, Some((&h0, &tau, 1.0))).unwrap();
        assert!(run.halvings >= 1);
        assert!(run.work_change.unwrap() < 1e-3);
        let strict = StepperConfig {
            max_halvings: 1,
            work_tol: 1e-14,
            ..cfg
        };
        assert!(matches!(
            propagate_protocol(&stepper, &p, &strict, Some((&h0, &tau, 1.0))),
            Err(Error::RefinementNotConverged(1))
        ));
    }

    #[test]
    fn quench_is_identity() {
        let (spec, bath) = small_model();
        let s = propagator_protocol(&spec, &bath, &Protocol::quench(), &StepperConfig::default())
            .unwrap();
        assert_eq!(s, SymplecticTransform::identity(13));
    }

    #[test]
    fn free_bath_factorization() {
        // Modes: 0 (battery), 1 (free), 2 (coupled to 0).
        let mut ha = DMatrix::from_diagonal(&dvector![2.0, 0.5, 0.8, 0.5]);
        ha[(0, 2)] = -0.3;
        ha[(2, 0)] = -0.3;
        let ha = HamiltonianMatrix::new(ha).unwrap();
        let hf = HamiltonianMatrix::single_oscillator(1.0, 1.7);
        let sigma = CovarianceMatrix::new(DMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                2.0 + i as f64 * 0.1
            } else if (i + j) % 3 == 0 {
                0.05
            } else {
                0.0
            }
        }))
        .unwrap();
        let t = 3.1;
        let out = evolve_with_free_bath(&sigma, &ha, &[0, 2], &hf, &[1], t).unwrap();
        assert_eq!(
            evolve_with_free_bath(&sigma, &ha, &[0, 2], &hf, &[1], 0.0).unwrap(),
            sigma
        );

        // Direct exponential of the assembled block Hamiltonian.
        let mut full = DMatrix::zeros(6, 6);
        let map = [0usize, 1, 4, 5];
        for a in 0..4 {
            for b in 0..4 {
                full[(map[a], map[b])] = ha.matrix()[(a, b)];
            }
        }
        full.view_mut((2, 2), (2, 2)).copy_from(hf.matrix());
        let s = propagator_const(&HamiltonianMatrix::new(full).unwrap(), t).unwrap();
        let direct = evolve(&sigma, &s).unwrap();
        assert!((out.matrix() - direct.matrix()).amax() < 1e-10);

        let e0 = mean_energy(&hf, &crate::gaussian::sub_block(&sigma, &[1]).unwrap()).unwrap();
        let e1 = mean_energy(&hf, &crate::gaussian::sub_block(&out, &[1]).unwrap()).unwrap();
        assert_relative_eq!(e0, e1, epsilon = 1e-12);
        assert!(evolve_with_free_bath(&sigma, &ha, &[0, 1], &hf, &[1], t).is_err());
    }
}
