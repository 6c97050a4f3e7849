//! Sliced optimal-transport distances between meta-measures.
//!
//! A *meta-measure* is an empirical measure whose atoms are themselves
//! empirical measures on `R^d`. This crate provides:
//!
//! - closed-form 1D Wasserstein distances via quantile functions ([`ot1d`]),
//! - exact and entropic discrete OT on explicit cost matrices ([`discrete_ot`]),
//! - the reference Wasserstein-over-Wasserstein distance ([`wow`]),
//! - Gaussian-process slicing of quantile functions ([`gp_slicer`]),
//! - the sliced-quantile (SQW) and double-sliced (DSW) Monte Carlo
//!   estimators ([`sqw_dsw`]),
//! - application pipelines for shapes, point-cloud batches and image
//!   patches ([`mmspace`], [`patches`], [`harness`]).
//!
//! Every stochastic routine draws from counter-based substreams of a single
//! master seed ([`rng::SeedStream`]), so results are bit-identical for any
//! rayon pool size.

pub mod discrete_ot;
pub mod error;
pub mod gp_slicer;
pub mod harness;
pub mod measures;
pub mod mmspace;
pub mod ot1d;
pub mod patches;
pub mod rng;
pub mod sphere;
pub mod sqw_dsw;
pub mod stats;
pub mod wow;

pub use error::{Error, Result};
pub use measures::{EmpiricalMeasure, MetaMeasure};
pub use ot1d::{Interpolation, Quantile1D};
pub use sqw_dsw::{DistanceEstimate, SlicingConfig};
