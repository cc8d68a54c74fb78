//! Route-month flight delay panels and the panel instrumental-variables
//! machinery used to estimate them.
//!
//! The crate is organized along the data flow:
//!
//! * [`ingest`] parses and validates flights, traffic and reference tables;
//! * [`panel`] aggregates them into (city pair, month) observations;
//! * [`instruments`] builds distance-filtered Hausman-type instruments;
//! * [`estimators`] runs OLS, two-step efficient GMM and LIML with two-way
//!   fixed effects and Newey-West covariance;
//! * [`diagnostics`] holds the identification and specification tests;
//! * [`synthlab`] generates data with known parameters and test oracles.

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod ingest;
pub mod instruments;
pub mod linalg;
pub mod panel;
pub mod synthlab;

pub use error::{Error, Result};
pub use estimators::{
    EstimationProblem, EstimationResult, Estimator, FixedEffectsImpl, FixedEffectsSpec,
};
pub use ingest::{CityId, CityPair, FlightRecord, TrafficRecord, YearMonth};
pub use panel::{Panel, PanelObservation};
