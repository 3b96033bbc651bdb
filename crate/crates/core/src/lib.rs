//! Simulation of transitionless quantum driving for one-step generation of
//! a two-atom qutrit entangled state in a bimodal optical cavity.
//!
//! Units: the cavity coupling g is 1; rates are in units of g and times in
//! units of 1/g.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod model;
pub mod pulses;
pub mod verify;

pub use error::{Error, Result};
