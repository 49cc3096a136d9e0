//! Control of a tilting parent plane through a swarm of mobile robots.
//!
//! The swarm couples to the plane only through a two-dimensional abstract
//! state (mass moment and swarm inertia). Parent controllers choose a desired
//! abstract state; per-member laws drive the swarm onto it using a handful of
//! swarm-wide sums.
//!
//! Module map:
//!
//! - [`plant`]: plane dynamics, friction, member models
//! - [`abstraction`]: abstract and auxiliary states, Jacobian pseudo-inverse
//! - [`control`]: LQR/PD and ARISE parent controllers, manifold, member laws
//! - [`stability`]: gain-condition auditors, bound calculators, Lyapunov monitor
//! - [`atlas`]: constraint-region classification of abstract states
//! - [`sim`]: fixed-step closed-loop simulation, metrics, sweeps
//! - [`config`]: JSON scenario and atlas configuration

pub mod abstraction;
pub mod atlas;
pub mod config;
pub mod control;
pub mod error;
pub mod parallel;
pub mod plant;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
