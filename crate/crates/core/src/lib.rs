//! Latency of coupled versus decoupled UL/DL access under flexible TDD.
//!
//! Two traffic classes share the radio heads: short-TTI packets with strict
//! non-preemptive priority and long-TTI packets whose duration follows a
//! rate-adaptation table under block Rayleigh fading. Coupled access is a
//! single server; decoupled access lets both queues use two servers.
//!
//! * [`traffic_channel`]: channel, rate table, service moments, utilization.
//! * [`analytic`]: mean sojourn formulas, residual-time CDFs, cycle time.
//! * [`desim`]: slot-aligned discrete-event simulator.
//! * [`experiments`]: config files, CSV output and the CLI commands.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod desim;
pub mod error;
pub mod experiments;
pub mod rng;
pub mod traffic_channel;

pub use error::{Error, Result};
