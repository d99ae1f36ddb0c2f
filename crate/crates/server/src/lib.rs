//! HTTP service and terminal front ends for the engine.

pub mod api;
pub mod config;
