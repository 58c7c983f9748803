//! Reproducibility analysis of CT lung-nodule radiomic features across
//! reconstruction conditions (dose, kernel, slice thickness).

pub mod compat;
pub mod error;
pub mod features;
pub mod filter;
pub mod manifest;
pub mod model;
pub mod nrrd;
pub mod phantom;
pub mod report;
pub mod rng;
pub mod sim;
pub mod store;
pub mod study;
pub mod volumetry;

pub use error::{Error, Result};
