//! Transportation mode identification from GPS trajectories, posed as joint
//! regression of change-point coordinates and segment class probabilities.
//!
//! Pipeline: [`ingest`] (GeoLife parsing, trips, targets) and [`synth`]
//! (seeded synthetic trips) produce [`ingest::Trip`]s; [`models`] holds the
//! TrajYOLO / TrajSSD networks built on the small [`tensor`] engine;
//! [`train`] fits them and [`eval`] scores the decoded predictions.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod geo;
pub mod ingest;
pub mod models;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
