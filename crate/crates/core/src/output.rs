//! CSV tables and the JSON run manifest.
//!
//! Floats are written as `{:.16e}` (17 significant digits, round-trip exact);
//! missing values are empty fields.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::audit::AuditCheck;
use crate::config::RunConfig;
use crate::cycles::{ChargingTrace, CycleReport, SweepCell, SweepTable, ThetaExtrema};
use crate::error::Result;
use crate::model::{protocol_value, BathSample, ModelSpec, Protocol};
use crate::oracle::{MeanForceCM, OracleConfig};

pub const SWEEP_COLUMNS: [&str; 17] = [
    "scenario",
    "t_d",
    "theta",
    "W_d",
    "W_c",
    "ergotropy",
    "W_diss",
    "Q",
    "Sigma",
    "eta",
    "I_td",
    "dE_B_disc",
    "dE_B_charge",
    "first_law_residual",
    "second_law_value",
    "interaction_identity_residual",
    "flags",
];

pub const TRACE_COLUMNS: [&str; 6] = [
    "t",
    "sigma_S_11",
    "sigma_S_22",
    "sigma_S_12",
    "mf_q2_ref",
    "mf_p2_ref",
];

pub const EXTREMA_COLUMNS: [&str; 7] = [
    "t_d",
    "theta_low",
    "eta_max",
    "W_diss_min",
    "theta_high",
    "eta_min",
    "W_diss_max",
];

pub const ORACLE_COLUMNS: [&str; 10] = [
    "m0",
    "omega0",
    "gamma",
    "omega_d",
    "beta",
    "omega_max",
    "q2",
    "p2",
    "q2_error",
    "p2_error",
];

pub const PROTOCOL_COLUMNS: [&str; 3] = ["t_d", "t", "lambda"];

pub const AUDIT_COLUMNS: [&str; 6] = [
    "check",
    "threshold",
    "cells",
    "violations",
    "worst",
    "passed",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn report_row(r: &CycleReport) -> Vec<String> {
    vec![
        r.scenario.to_string(),
        fmt_f64(r.t_d),
        fmt_opt(r.theta),
        fmt_f64(r.w_d),
        fmt_f64(r.w_c),
        fmt_f64(r.ergotropy),
        fmt_f64(r.w_diss),
        fmt_f64(r.q),
        fmt_f64(r.sigma),
        fmt_opt(r.eta),
        fmt_f64(r.i_td),
        fmt_f64(r.de_b_disc),
        fmt_f64(r.de_b_charge),
        fmt_f64(r.first_law_residual),
        fmt_f64(r.second_law_value),
        fmt_f64(r.interaction_identity_residual),
        r.flags_string(),
    ]
}

fn cell_row(c: &SweepCell) -> Vec<String> {
    match &c.outcome {
        Ok(r) => report_row(r),
        Err(_) => {
            let mut row = vec![String::new(); SWEEP_COLUMNS.len()];
            row[0] = c.scenario.to_string();
            row[1] = fmt_f64(c.t_d);
            row[2] = fmt_opt(c.theta);
            row[SWEEP_COLUMNS.len() - 1] = "failed".into();
            row
        }
    }
}

fn write_rows<W: Write>(
    out: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per cell; failed cells keep their coordinates and the `failed`
/// flag with every value empty.
pub fn write_sweep_csv<W: Write>(out: W, table: &SweepTable) -> Result<()> {
    write_rows(out, &SWEEP_COLUMNS, table.cells.iter().map(cell_row))
}

pub fn write_reports_csv<W: Write>(out: W, reports: &[CycleReport]) -> Result<()> {
    write_rows(out, &SWEEP_COLUMNS, reports.iter().map(report_row))
}

pub fn write_extrema_csv<W: Write>(out: W, extrema: &[ThetaExtrema]) -> Result<()> {
    write_rows(
        out,
        &EXTREMA_COLUMNS,
        extrema.iter().map(|e| {
            vec![
                fmt_f64(e.t_d),
                fmt_f64(e.theta_low),
                fmt_opt(e.eta_max),
                fmt_f64(e.w_diss_min),
                fmt_f64(e.theta_high),
                fmt_opt(e.eta_min),
                fmt_f64(e.w_diss_max),
            ]
        }),
    )
}

/// Battery CM entries along the charging stroke. The reference columns hold
/// the continuum mean-force entries `2<Q0^2>` and `2<P0^2>`, on the same
/// scale as `sigma_S_11` and `sigma_S_22`.
pub fn write_trace_csv<W: Write>(out: W, trace: &ChargingTrace, mf: &MeanForceCM) -> Result<()> {
    let (q_ref, p_ref) = (fmt_f64(2.0 * mf.q2), fmt_f64(2.0 * mf.p2));
    write_rows(
        out,
        &TRACE_COLUMNS,
        trace.times.iter().zip(&trace.battery).map(|(&t, b)| {
            vec![
                fmt_f64(t),
                fmt_f64(b[(0, 0)]),
                fmt_f64(b[(1, 1)]),
                fmt_f64(b[(0, 1)]),
                q_ref.clone(),
                p_ref.clone(),
            ]
        }),
    )
}

pub fn write_oracle_csv<W: Write>(
    out: W,
    rows: &[(ModelSpec, OracleConfig, MeanForceCM)],
) -> Result<()> {
    write_rows(
        out,
        &ORACLE_COLUMNS,
        rows.iter().map(|(s, c, mf)| {
            vec![
                fmt_f64(s.m0),
                fmt_f64(s.omega0),
                fmt_f64(s.gamma),
                fmt_f64(s.omega_d),
                fmt_f64(s.beta),
                fmt_f64(c.omega_max_for(s)),
                fmt_f64(mf.q2),
                fmt_f64(mf.p2),
                fmt_f64(mf.q2_error),
                fmt_f64(mf.p2_error),
            ]
        }),
    )
}

/// `lambda(t)` on `samples` equally spaced times per duration; a quench
/// contributes the single point `(0, 1)`.
pub fn write_protocol_csv<W: Write>(
    out: W,
    td_grid: &[f64],
    exponent: u32,
    samples: usize,
) -> Result<()> {
    let mut rows = vec![];
    for &t_d in td_grid {
        let p = Protocol::new(t_d, exponent)?;
        let n = if p.is_quench() { 1 } else { samples.max(2) };
        for i in 0..n {
            let t = if n == 1 {
                0.0
            } else {
                t_d * i as f64 / (n - 1) as f64
            };
            let lambda = protocol_value(&p, t)?;
            rows.push(vec![fmt_f64(t_d), fmt_f64(t), fmt_f64(lambda)]);
        }
    }
    write_rows(out, &PROTOCOL_COLUMNS, rows.into_iter())
}

pub fn write_audit_csv<W: Write>(out: W, checks: &[AuditCheck]) -> Result<()> {
    write_rows(
        out,
        &AUDIT_COLUMNS,
        checks.iter().map(|c| {
            vec![
                c.name.to_string(),
                fmt_f64(c.threshold),
                c.cells.to_string(),
                c.violations.to_string(),
                fmt_f64(c.worst),
                c.passed().to_string(),
            ]
        }),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub omega_r_sq: f64,
    pub omega_r_sq_continuum: f64,
    pub tail_rescale: f64,
    pub recurrence_estimate: f64,
    pub lowest_bath_frequency: f64,
    pub highest_bath_frequency: f64,
}

impl DerivedQuantities {
    pub fn new(spec: &ModelSpec, bath: &BathSample) -> Self {
        Self {
            omega_r_sq: bath.omega_r_sq,
            omega_r_sq_continuum: spec.omega_r_sq_continuum(),
            tail_rescale: bath.tail_rescale,
            recurrence_estimate: bath.recurrence_estimate(),
            lowest_bath_frequency: bath.omegas.first().copied().unwrap_or(0.0),
            highest_bath_frequency: bath.omegas.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellStatus {
    pub scenario: String,
    pub t_d: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&SweepCell> for CellStatus {
    fn from(c: &SweepCell) -> Self {
        Self {
            scenario: c.scenario.to_string(),
            t_d: c.t_d,
            theta: c.theta,
            ok: c.outcome.is_ok(),
            error: c.outcome.as_ref().err().cloned(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub derived: DerivedQuantities,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellStatus>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<AuditCheck>,
    pub files: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, bath: &BathSample) -> Self {
        Self {
            tool: "clbattery".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            derived: DerivedQuantities::new(&config.model, bath),
            cells: vec![],
            checks: vec![],
            files: vec![],
            wall_clock_seconds: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{CycleFlag, Scenario};

    fn report() -> CycleReport {
        CycleReport {
            scenario: Scenario::Bipartite,
            t_d: 0.5,
            theta: Some(0.25),
            w_d: 0.1,
            w_c: 0.2,
            ergotropy: 0.05,
            w_diss: 0.25,
            q: -0.24,
            sigma: 2.4,
            eta: None,
            i_td: 0.3,
            de_b_disc: -0.01,
            de_b_charge: 0.25,
            first_law_residual: 0.01,
            second_law_value: 2.5,
            interaction_identity_residual: 1e-3,
            symplectic_defect: 0.0,
            protocol_steps: 10,
            energy_drift: 0.0,
            entropy_drift: 0.0,
            flags: vec![CycleFlag::EtaUndefined],
        }
    }

    #[test]
    fn sweep_rows_follow_the_schema() {
        let failed = SweepCell {
            scenario: Scenario::Tripartite,
            t_d: 1.0,
            theta: None,
            outcome: Err("boom".into()),
        };
        let ok = SweepCell {
            scenario: Scenario::Bipartite,
            t_d: 0.5,
            theta: Some(0.25),
            outcome: Ok(report()),
        };
        let table = SweepTable {
            cells: vec![ok, failed],
            extrema: vec![],
        };
        let mut buf = vec![];
        write_sweep_csv(&mut buf, &table).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, SWEEP_COLUMNS);
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(&rows[0][0], "bipartite");
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.5);
        assert_eq!(&rows[0][9], "");
        assert_eq!(&rows[0][16], "eta_undefined");
        assert_eq!(rows[0][6].parse::<f64>().unwrap(), 0.25);
        assert_eq!(&rows[1][2], "");
        assert_eq!(&rows[1][3], "");
        assert_eq!(&rows[1][16], "failed");
    }

    #[test]
    fn protocol_rows_hit_the_endpoints() {
        let mut buf = vec![];
        write_protocol_csv(&mut buf, &[0.0, 2.0], 11, 5).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<Vec<f64>> = rdr
            .records()
            .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0], vec![0.0, 0.0, 1.0]);
        assert_eq!(rows[1], vec![2.0, 0.0, 1.0]);
        assert_eq!(rows[5], vec![2.0, 2.0, 0.0]);
        assert_eq!(rows[3][2], 0.5f64.powi(11));
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1 + 0.2, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
    }
}
