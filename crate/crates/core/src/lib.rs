//! Derivative-free direct search on Riemannian manifolds.
//!
//! The crate provides the pieces needed to run and study polling-based
//! direct search on embedded manifolds:
//!
//! - [`geometry`]: unit spheres, spheres embedded in a larger ambient space,
//!   and linear subspaces, with tangent projections, retractions and
//!   tangent-space bases.
//! - [`euclidean_pss`]: positive spanning sets of `R^m` and exact
//!   cosine/complexity measures.
//! - [`tangent_pss`]: intrinsic and projected polling sets on tangent spaces.
//! - [`solver`]: the direct-search loop with sufficient decrease and
//!   expansion/contraction of the step size.
//! - [`sphere_analysis`]: closed-form and enumerated cosine measures of the
//!   projected `±basis` polling set on the sphere.
//! - [`benchmark`]: the problem grid, data profiles and head-to-head tables.
//! - [`cli`]: the `rds` command-line entry point.

pub mod benchmark;
pub mod cli;
pub mod error;
pub mod euclidean_pss;
pub mod geometry;
pub mod linalg;
pub mod rng;
pub mod solver;
pub mod sphere_analysis;
pub mod tangent_pss;

pub use error::{Error, Result};
