//! Discrete-event packet routing simulator for LEO satellite constellations.
//!
//! The crate is organized bottom-up: [`orbit`] places satellites and gateways,
//! [`topology`] matches links, [`channel`] assigns link rates, [`engine`] moves
//! packets, [`routing`] decides next hops, and [`postlearn`] analyzes trained
//! models. [`io`] holds configuration, output files and charts.

pub mod channel;
pub mod engine;
pub mod error;
pub mod geo;
pub mod io;
pub mod orbit;
pub mod postlearn;
pub mod rng;
pub mod routing;
pub mod topology;

pub use error::{Error, Result};
