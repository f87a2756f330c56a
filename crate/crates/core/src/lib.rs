//! Heat-bath Glauber dynamics for the two-dimensional Ising model: a
//! simulator built on the monotone grand coupling, censoring schedules, an
//! exact oracle for tiny systems, Peierls contours and the experiment drivers
//! that tie them together.

pub mod config;
pub mod contours;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod gibbs;
pub mod lattice;
pub mod schedules;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};

/// Version string recorded in CSV metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
