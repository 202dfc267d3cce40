//! Learned symbolic abstractions and safety controllers for systems with
//! unknown state-dependent drift.
//!
//! The pipeline: a Gaussian process bounds the drift ([`gp`]), the bounds
//! feed a grid abstraction ([`abstraction`]), a safety game yields a
//! controller ([`synthesis`]), and that controller drives data collection
//! without leaving the safe set ([`explore`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abstraction;
pub mod bench_acc;
pub mod config;
pub mod explore;
pub mod gp;
pub mod io;
pub mod plant;
pub mod synthesis;
pub mod tsys;

pub use config::ConfigFile;
pub use explore::{run, ExplorationRun, RunConfig, Termination};
