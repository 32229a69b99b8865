pub mod barbot_reference;
pub mod cli_reporting;
pub mod convex_slice;
pub mod decay_domains;
pub mod frame_integration;
pub mod pseudo_hyperbolic_core;
pub mod vortex_solver;
