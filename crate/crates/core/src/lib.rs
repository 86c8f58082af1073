//! Coordination kernel for component-based systems.
//!
//! Atomic components synchronise through connectors filtered by priorities.
//! The [`engine`] executes a flattened [`model::SystemModel`]; the
//! [`verifier`] checks it for deadlocks and safety violations.

pub mod dsl;
pub mod genom;
pub mod engine;
pub mod fixtures;
pub mod model;
pub mod verifier;

pub use model::*;
