//! Core library for integrated predictive-prescriptive optimization on
//! newsvendor and two-stage shipment problems: shared data model, synthetic
//! data generation, least-squares prediction, baseline prescriptors, the
//! bilevel model with its KKT single-level reformulation, and progressive
//! hedging decomposition.

pub mod datagen;
pub mod error;
pub mod io;
pub mod ippo;
pub mod linalg;
pub mod pha;
pub mod prescriptors;
pub mod regression;
pub mod scenario;

pub use error::{Error, Result};
