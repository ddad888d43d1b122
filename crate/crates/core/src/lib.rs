//! Simulation and planning library for heterogeneous MAV swarms, where a few
//! well-localized AMAVs act as mobile observers for many BMAVs that can only
//! dead-reckon.

// `!(x > 0.0)` checks are deliberate: they reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod geometry;
pub mod grouping;
pub mod linalg;
pub mod metrics;
pub mod navigation;
pub mod noise;
pub mod planning;
pub mod simulator;

pub use error::{Error, Result};
