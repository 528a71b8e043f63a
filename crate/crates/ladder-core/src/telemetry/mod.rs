//! Synthetic firm-month telemetry panels and the S1-S5 estimators.

pub mod event_study;
pub mod hazard;
pub mod mixture;
pub mod ols;
pub mod panel;
pub mod pipeline;
pub mod rd;

pub use event_study::{event_study, EventStudyFit, Outcome};
pub use hazard::{cascade_hazard, exp_hazard_mle, patch_hazard, HazardFit, PatchHazardFit, Spell};
pub use mixture::{fit_gmm, plateau_test, PlateauReport};
pub use panel::{build_panel, FirmMeta, Panel, PanelOptions, PanelRow};
pub use pipeline::{run_telemetry, TelemetryEstimates, TelemetryRun};
pub use rd::{adoption_rd, RdFit, RdRow};
