//! Numerical toolkit for a two-reset "release ladder" impulse-control model:
//! a firm's private quality state diffuses, cheap patches and costly pivots
//! reset it at free boundaries, and disclosures arrive on a controllable
//! Cox clock with posted silence windows.
//!
//! The crate solves the free-boundary system, simulates event streams,
//! computes the downstream adoption cutoff, bounds the levered-financing
//! wedge, and runs panel estimators on synthetic telemetry.

pub mod adoption;
pub mod belief;
pub mod cli;
pub mod financing;
pub mod ladder;
pub mod model;
pub mod sim;
pub mod telemetry;

pub use ladder::{solve_ladder, LadderSolution};
pub use model::{FlowPayoff, ModelParams, ScenarioConfig};
pub use sim::{run_batch, simulate_path, SimPath};
