//! Steady-state simulation of emergency control in a DC power grid whose
//! control center has lost contact with part of the network.
//!
//! [`grid`] holds the network model and droop/DC-flow physics, [`partition`]
//! splits a damaged grid into controllable and uncontrollable areas,
//! [`milp`] is the optimization engine, [`control`] builds and reads the
//! control-center models, [`cascade`] simulates local protection relays in
//! islands left alone, and [`scenario`] runs random studies.

pub mod cascade;
pub mod control;
pub mod grid;
pub mod milp;
pub mod partition;
pub mod scenario;
