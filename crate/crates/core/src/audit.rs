//! Per-cell thermodynamic checks over a finished sweep.

use serde::Serialize;

use crate::cycles::{CycleReport, SweepTable};

/// Work below this is counted as a violation of `W_diss >= 0`.
pub const W_DISS_FLOOR: f64 = -1e-6;
/// First-law residual allowed, relative to `max(|W_diss|, ergotropy at t_d = 0)`.
pub const FIRST_LAW_REL: f64 = 0.01;
pub const IDENTITY_TOL: f64 = 0.02;
pub const SYMPLECTIC_TOL: f64 = 1e-7;
pub const ENTROPY_DRIFT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: &'static str,
    pub threshold: f64,
    pub cells: usize,
    pub violations: usize,
    /// Largest normalized value seen; the check passes while it stays at or
    /// below `threshold` (for `w_diss_nonnegative`, the smallest `W_diss`).
    pub worst: f64,
}

impl AuditCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Tally {
    check: AuditCheck,
    lower_bound: bool,
}

impl Tally {
    fn new(name: &'static str, threshold: f64, lower_bound: bool) -> Self {
        let worst = if lower_bound { f64::INFINITY } else { 0.0 };
        Self {
            check: AuditCheck {
                name,
                threshold,
                cells: 0,
                violations: 0,
                worst,
            },
            lower_bound,
        }
    }

    fn add(&mut self, value: f64, ok: bool) {
        let c = &mut self.check;
        c.cells += 1;
        if !ok {
            c.violations += 1;
        }
        c.worst = if self.lower_bound {
            c.worst.min(value)
        } else {
            c.worst.max(value)
        };
    }
}

/// Runs every check over the successful cells. `ergotropy0` is the
/// ergotropy after a quench disconnection, the scale of the first-law check.
pub fn audit_reports<'a>(
    reports: impl IntoIterator<Item = &'a CycleReport>,
    ergotropy0: f64,
    beta: f64,
) -> Vec<AuditCheck> {
    let mut w = Tally::new("w_diss_nonnegative", W_DISS_FLOOR, true);
    let mut first = Tally::new("first_law", FIRST_LAW_REL, false);
    let mut second = Tally::new("second_law_agreement", 1.0, false);
    let mut ident = Tally::new("interaction_identity", IDENTITY_TOL, false);
    let mut sympl = Tally::new("symplectic_defect", SYMPLECTIC_TOL, false);
    let mut drift = Tally::new("entropy_drift", ENTROPY_DRIFT_TOL, false);
    for r in reports {
        w.add(r.w_diss, r.w_diss >= W_DISS_FLOOR);
        let rel = r.first_law_residual / r.w_diss.abs().max(ergotropy0);
        first.add(rel, rel <= FIRST_LAW_REL);
        // Gap over its allowance, so values up to 1 pass.
        second.add(
            r.second_law_gap() / r.second_law_allowance(beta),
            r.second_law_agrees(beta),
        );
        ident.add(
            r.interaction_identity_residual,
            r.interaction_identity_residual <= IDENTITY_TOL,
        );
        sympl.add(r.symplectic_defect, r.symplectic_defect <= SYMPLECTIC_TOL);
        let e = r.entropy_drift.abs();
        drift.add(e, e <= ENTROPY_DRIFT_TOL);
    }
    [w, first, second, ident, sympl, drift]
        .into_iter()
        .map(|t| t.check)
        .collect()
}

pub fn audit_table(table: &SweepTable, ergotropy0: f64, beta: f64) -> Vec<AuditCheck> {
    audit_reports(table.reports(), ergotropy0, beta)
}
