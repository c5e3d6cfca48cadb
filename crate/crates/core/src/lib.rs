//! Context-aware energy-saving resource allocation for a deadline-constrained
//! non-real-time (NRT) user moving across base stations that also carry random
//! real-time background traffic.
//!
//! The crate is `no_std` (it needs `alloc`). It contains the channel and
//! traffic generators, the BS power model, the capped water-filling solver,
//! the perfect-information optimizer, the context-driven parameter estimator
//! and the per-slot allocation policies. File formats, the CLI and the
//! parallel Monte Carlo driver live in `nrtsave-sim`.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod config;
pub mod energy;
pub mod error;
pub mod estimation;
pub mod math;
pub mod offline;
pub mod policy;
pub mod seed;
pub mod traffic;
pub mod trial;
pub mod waterfill;

pub use config::{BackgroundConfig, Geometry, PowerConfig, ScenarioConfig};
pub use error::{ConfigError, Error};
pub use policy::{AllocationDecision, PolicyKind};
