//! Curiosity-aware bilateral bargaining.
//!
//! Agents whose utility depends on the information exchanged during a
//! bargaining negotiate the price of one good under four protocol variants.
//! The crate provides the engines, executable incentive probes and a Monte
//! Carlo welfare harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod commands;
pub mod config;
pub mod experiments;
pub mod incentives;
pub mod model;
pub mod protocol;
pub mod report;
