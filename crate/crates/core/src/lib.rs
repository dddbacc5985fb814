//! Velocity-jump particle simulation of nutrient taxis and the doubly
//! degenerate cross-diffusion system obtained in its parabolic limit.

pub mod config;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kinetic;
pub mod pde;
pub mod profile;
pub mod report;
pub mod snapshot;
pub mod turning;
pub mod velocity;

pub use config::SimConfig;
pub use error::Error;
