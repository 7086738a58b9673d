//! Discovery of related tables and join paths in a data lake.
//!
//! Attributes are profiled into name, value, format, embedding and numeric
//! domain evidence, sketched into LSH forests, and compared against a target
//! table to rank the lake's datasets by relatedness.

pub mod config;
pub mod error;
pub mod eval;
pub mod hashing;
pub mod index;
pub mod ingest;
pub mod joins;
pub mod profile;
pub mod relatedness;

pub use config::Config;
pub use error::{Error, Result};
