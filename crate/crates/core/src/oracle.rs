//! Continuum stationary moments of the damped battery, used as an
//! independent check on the finite-bath results.
//!
//! With `gt(w) = 2 gamma / (1 - i w / w_D)` and
//! `alpha(w) = w0^2 - w^2 - i w gt(w)`:
//!
//! ```text
//! <Q0^2> = 1/(pi m0) int_0^inf  w   Re gt(w) coth(beta w / 2) / |alpha|^2 dw
//! <P0^2> = m0/pi     int_0^inf  w^3 Re gt(w) coth(beta w / 2) / |alpha|^2 dw
//! ```
//!
//! The range beyond `omega_max` is integrated exactly after `u = 1/w`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::model::ModelSpec;
use crate::quadrature::integrate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Split point between the direct and the inverted range; `50 w_D` when
    /// absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            omega_max: None,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_intervals: 5000,
        }
    }
}

impl OracleConfig {
    pub fn omega_max_for(&self, spec: &ModelSpec) -> f64 {
        self.omega_max.unwrap_or(50.0 * spec.omega_d)
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        let w = self.omega_max_for(spec);
        if !(w > spec.omega_d) {
            return Err(Error::param(
                "omega_max",
                format!("must exceed omega_d = {}, got {w}", spec.omega_d),
            ));
        }
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::param("abs_tol", "tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MeanForceCM {
    pub q2: f64,
    pub p2: f64,
    pub q2_error: f64,
    pub p2_error: f64,
    /// `diag(2 <Q^2>, 2 <P^2>)`.
    pub cm: CovarianceMatrix,
}

/// Fourier transform of the damping kernel, `2 gamma / (1 - i w / w_D)`.
pub fn gamma_tilde(omega: f64, spec: &ModelSpec) -> Complex64 {
    Complex64::new(2.0 * spec.gamma, 0.0) / Complex64::new(1.0, -omega / spec.omega_d)
}

/// `w coth(beta w / 2)`, finite at `w = 0`.
fn w_coth(omega: f64, beta: f64) -> f64 {
    if omega == 0.0 {
        return 2.0 / beta;
    }
    let x = beta * omega;
    if x < 1e-6 {
        // w (2/x + x/6) to second order.
        return 2.0 / beta + omega * x / 6.0;
    }
    omega * (1.0 + 2.0 / x.exp_m1())
}

fn abs_alpha_sq(omega: f64, spec: &ModelSpec) -> f64 {
    let g = gamma_tilde(omega, spec);
    let re = spec.omega0 * spec.omega0 - omega * omega + omega * g.im;
    let im = -omega * g.re;
    re * re + im * im
}

/// `w Re gt(w) coth(beta w/2) / |alpha(w)|^2`, the position-moment kernel.
fn q_kernel(omega: f64, spec: &ModelSpec) -> f64 {
    let r = omega / spec.omega_d;
    let re_g = 2.0 * spec.gamma / (1.0 + r * r);
    w_coth(omega, spec.beta) * re_g / abs_alpha_sq(omega, spec)
}

/// Location of the minimum of `|alpha|^2` on `[0, 3 w0]`.
fn resonance(spec: &ModelSpec) -> f64 {
    let hi = 3.0 * spec.omega0;
    let n = 4000;
    let (mut best, mut at) = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let w = hi * i as f64 / n as f64;
        let v = abs_alpha_sq(w, spec);
        if v < best {
            best = v;
            at = w;
        }
    }
    // Golden-section polish on the bracketing cell.
    let step = hi / n as f64;
    let (mut a, mut b) = ((at - step).max(0.0), (at + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if abs_alpha_sq(c, spec) < abs_alpha_sq(d, spec) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn validate_spec(spec: &ModelSpec) -> Result<()> {
    for (name, v) in [
        ("beta", spec.beta),
        ("omega0", spec.omega0),
        ("omega_d", spec.omega_d),
        ("gamma", spec.gamma),
        ("m0", spec.m0),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    Ok(())
}

/// `int_0^inf w^power_extra * q_kernel(w) dw` with `power_extra` 0 or 2.
fn moment_integral(spec: &ModelSpec, cfg: &OracleConfig, power_extra: i32) -> Result<(f64, f64)> {
    let w_max = cfg.omega_max_for(spec);
    let mut breaks = vec![0.0, resonance(spec), spec.omega0, spec.omega_d, w_max];
    breaks.retain(|&x| x <= w_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let f = |w: f64| w.powi(power_extra) * q_kernel(w, spec);
    let head = integrate(f, &breaks, cfg.abs_tol, cfg.rel_tol, cfg.max_intervals)?;
    // Beyond w_max: w = 1/u, dw = du / u^2.
    let g = |u: f64| {
        let w = 1.0 / u;
        f(w) * w * w
    };
    let tail = integrate(
        g,
        &[0.0, 1.0 / w_max],
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_intervals,
    )?;
    Ok((head.value + tail.value, head.error + tail.error))
}

/// Continuum `<Q0^2>` and `<P0^2>` in the stationary state.
pub fn stationary_moments(spec: &ModelSpec, cfg: &OracleConfig) -> Result<MeanForceCM> {
    validate_spec(spec)?;
    cfg.validate(spec)?;
    let (iq, eq) = moment_integral(spec, cfg, 0)?;
    let (ip, ep) = moment_integral(spec, cfg, 2)?;
    let q2 = iq / (PI * spec.m0);
    let p2 = ip * spec.m0 / PI;
    let cm = CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::dvector![
        2.0 * q2,
        2.0 * p2
    ]))?;
    Ok(MeanForceCM {
        q2,
        p2,
        q2_error: eq / (PI * spec.m0),
        p2_error: ep * spec.m0 / PI,
        cm,
    })
}

/// Mean-force covariance matrix `diag(2<Q^2>, 2<P^2>)`.
pub fn mean_force_cm(spec: &ModelSpec, cfg: &OracleConfig) -> Result<MeanForceCM> {
    let mf = stationary_moments(spec, cfg)?;
    let nu = (4.0 * mf.q2 * mf.p2).sqrt();
    if nu < 1.0 - crate::gaussian::BONA_FIDE_TOL {
        return Err(Error::Unphysical(nu));
    }
    Ok(mf)
}
