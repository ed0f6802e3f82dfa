//! Command-line replay, benchmarks and the streaming session service.

pub mod bench;
pub mod replay;
pub mod service;
