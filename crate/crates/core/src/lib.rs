//! Learning-augmented online routing with untrusted predictions.

pub mod bench;
pub mod cover;
pub mod error;
pub mod gen;
pub mod instance;
pub mod metric;
pub mod policy;
pub mod sim;
pub mod tour;
