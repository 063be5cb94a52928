//! Numerical laboratory for infinity-harmonic potentials on planar convex rings.
//!
//! A convex ring is a bounded convex domain with a compact convex set removed;
//! the potential solves the infinity-Laplace equation with value 0 on the outer
//! boundary and 1 on the inner one. This crate discretizes the ring on a uniform
//! grid, solves the equation with a monotone midrange scheme (plus a p-Laplacian
//! solver for continuation cross-checks), traces ascending and descending
//! streamlines of the gradient flow, detects the points where streamlines merge,
//! and evaluates a battery of quantitative predicates (flux inequalities,
//! gradient bounds, level-set convexity, merge criteria) with machine-readable
//! verdicts.
//!
//! Module map:
//! - [`geometry`]: convex bodies, rings, distances, diameters, high ridges, stadiums.
//! - [`field`]: grids, scalar/vector fields, interpolation, level curves.
//! - [`solver`]: the midrange infinity-Laplacian solver and the p-Laplacian solver.
//! - [`flow`]: streamline tracing, merge detection, merge trees.
//! - [`checks`]: verdict-producing numerical predicates.
//! - [`io`]: domain specs, field snapshots, streamline CSV, report JSON.
//! - [`render`]: deterministic SVG figures.

pub mod checks;
pub mod error;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod render;
pub mod solver;
pub mod vec2;

pub use error::{Error, Result};
pub use vec2::Vec2;
