//! Robust partitioning and real-time operation of networked microgrids.

pub mod fixtures;
pub mod lindistflow;
pub mod mfrt;
pub mod netmodel;
pub mod rpop;

pub use optcore;
