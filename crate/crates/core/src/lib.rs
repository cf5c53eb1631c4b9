//! Heat-load model for district heating substations.
//!
//! The load is split into space heating, hot water and piping loss. Each
//! component is a small physical model whose unobserved drivers (indoor
//! setpoint, share of active households, hot-water activity) are mixtures
//! gated by hour of day, day type and season. Expert knowledge enters as
//! possibility weights on the gates during MAP fitting.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod components;
pub mod config;
pub mod contexts;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod gates;
pub mod learning;
pub mod model;

pub use error::{Error, Result};
