//! Separation-rank toolkit: exact polynomial oracle, certified bound engine,
//! and depth/width planner for mixer and linearized-attention networks.

pub mod arch;
pub mod bounds;
pub mod error;
pub mod oracle;
pub mod planner;
pub mod poly;

pub use error::Error;
