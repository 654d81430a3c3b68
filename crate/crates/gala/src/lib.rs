//! Cost profiling, verification and table emission for packed-HE linear
//! layers, on top of `gala-core`.

pub mod bench;
pub mod cli;
pub mod config;
pub mod network;
pub mod profiler;
pub mod report;
pub mod verify;
