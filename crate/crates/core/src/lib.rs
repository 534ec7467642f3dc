//! Fixed-point computation and contraction-class certification for self-maps on
//! one-dimensional b-metric spaces.

pub mod classify;
pub mod config;
pub mod corpus;
pub mod error;
pub mod expr;
pub mod map;
pub mod orbit;
pub mod probe;
pub mod report;
pub mod run;
pub mod space;

pub use error::{ContractaError, Result};
