pub mod base;
pub mod cones;
pub mod config;
pub mod error;
pub mod incoherence;
pub mod linalg;
pub mod profile;
pub mod report;
pub mod skew;
pub mod splitting;
pub mod suites;
