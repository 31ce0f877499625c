//! Proportional-fair scheduling for SC-FDMA uplinks shared with underlay
//! device-to-device pairs.

pub mod channel;
pub mod model;
pub mod rng;
pub mod scheduler;
pub mod sim;
pub mod waterfill;
