//! PAC exploration over linearly combined ensembles of tabular MDP models.
//!
//! The true environment is approximated by a state-dependent convex
//! combination of `K` known base models, with weights `W φ(s, a)` for an
//! unknown column-stochastic `K × d` matrix `W` and a known feature map `φ`.
//! The [`learner`] module finds a near-optimal policy by optimistic model
//! selection over a shrinking version space of plausible `W`; [`selection`]
//! wraps it to choose among nested partition feature maps.

pub mod ensemble;
pub mod error;
pub mod hard;
pub mod harness;
pub mod io;
pub mod learner;
pub mod mdp;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
