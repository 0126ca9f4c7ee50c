//! Prescribed-time control toolkit.
//!
//! Builds time-varying controllers for Euler-Lagrange systems out of
//! conventional asymptotically-stable controllers by time-scale mapping, and
//! verifies the construction by simulation: a trajectory of the conventional
//! closed loop, warped onto a finite interval, must coincide with the
//! directly simulated trajectory under the synthesized controller.

pub mod assess;
pub mod cli;
pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod lyapunov;
pub mod plot;
pub mod scenario;
pub mod sim;
pub mod timewarp;
pub mod verify;

pub use error::{Error, Result};
