//! Hierarchical edge-caching game: content providers (leaders) pay edge
//! devices (followers) to cache content securely, devices respond with
//! caching qualities under storage limits, and providers compete through
//! per-content budgets. The crate provides closed-form and knapsack device
//! responses, an exact budgeted payment allocator, best-response dynamics
//! with potential-function verification, and a seeded experiment harness.
//!
//! Start from the runnable examples (`cargo run --example <name>`): each
//! major capability has one. The `edge-games` binary wires the same
//! library into `generate`, `run`, `sweep-scale`, `sweep-cost`, `verify`,
//! and `reproduce-figures` subcommands.

pub mod chart;
pub mod cp_optimizer;
pub mod domain;
pub mod ed_response;
pub mod error;
pub mod experiments;
pub mod game_dynamics;
pub mod verification;

pub use error::{Error, Result};
