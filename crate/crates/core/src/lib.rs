//! Gaussian covariance-matrix simulation of a Caldeira-Leggett quantum
//! battery: a harmonic battery strongly coupled to a discrete harmonic bath,
//! driven through disconnect, extraction, reconnection and charging strokes.

// `!(x > 0.0)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod config;
pub mod cycles;
pub mod error;
pub mod evolution;
pub mod extraction;
pub mod gaussian;
pub mod model;
pub mod oracle;
pub mod output;
pub mod quadrature;

pub use config::{parse_config, RunConfig};
pub use cycles::{sweep, CycleConfig, CycleEngine, CycleReport, Scenario, SweepGrid, SweepTable};
pub use error::{Error, Result};
pub use evolution::{propagator_const, propagator_protocol, StepperConfig};
pub use extraction::{apply_local_battery, ergotropy, extract, ExtractionResult};
pub use gaussian::{
    mean_energy, mutual_information, relative_entropy_to_thermal, sub_block,
    symplectic_eigenvalues, symplectic_form, thermal_cm, von_neumann_entropy, williamson_decompose,
    CovarianceMatrix, HamiltonianMatrix, SymplecticForm, SymplecticTransform, ThermalReference,
    WilliamsonResult,
};
pub use model::{BathSample, FrequencySampling, ModelSpec, Protocol};
pub use oracle::{mean_force_cm, MeanForceCM, OracleConfig};
