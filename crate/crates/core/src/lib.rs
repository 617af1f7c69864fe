//! Locally convex curves on the 2-sphere through their lifted Frenet frames.

// `!(x > 0.0)` is deliberate: NaN must fail these guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bruhat;
pub mod convexity;
pub mod curves;
pub mod deform;
pub mod error;
pub mod families;
pub mod harness;
pub mod rotations;

pub use error::{Error, Result};
