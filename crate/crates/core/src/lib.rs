//! Catalytic-space algorithms over an instrumented, restorable memory arena.

pub mod arena;
pub mod docs;
pub mod error;
pub mod field;
pub mod grid;
pub mod hitting;
pub mod metrics;
pub mod stconn;
pub mod testkit;
pub mod verify;
pub mod walkflow;

pub use error::{Error, Result};
