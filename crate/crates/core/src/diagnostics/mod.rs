//! Scalar diagnostics of a measure trajectory: entropy dissipation,
//! distances to equilibrium, monotone monitors and condensation predictors.

mod bec;
mod dissipation;
mod monitor;

pub use bec::{bec_alpha, bec_constants, bec_predict, entropy_floor, t_eps, BecConstants, BecPrediction};
pub use dissipation::{entropy_dissipation, entropy_dissipation_table, gamma_pair, Dissipation, DEFAULT_GAMMA_CAP};
pub use monitor::{
    distance_report, monitor_monotone, DiagnosticsRecord, DistanceReport, EquilibriumReference, MonitorSpec,
    MonotoneReport, Snapshot, Violation,
};
