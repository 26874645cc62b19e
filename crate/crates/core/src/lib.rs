//! Numerical analysis on the Sierpiński gasket.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: the three contractions, cell words, nested level graphs and
//!   quadrature for the uniform self-similar measure.
//! - [`expr`]: a small expression language in `x`, `y` used to enter functions.
//! - [`energy`]: graph energies, graph Laplacians, harmonic and multiharmonic
//!   functions, and a discrete Poisson solver.
//! - [`fractal`]: α-fractal functions built by an exact level cascade, the
//!   fractal operator and its inverse.
//! - [`constraints`]: scaling selection that keeps fractal perturbations in a
//!   prescribed range or on one side of the original function.
//! - [`approx`]: best uniform and best one-sided approximation from
//!   (fractal) multiharmonic spaces, backed by a dense simplex solver.
//! - [`dimension`]: oscillations, box counts and dimension bounds for graphs.
//! - [`export`]: PLY / CSV / JSON writers.

pub mod approx;
pub mod constraints;
pub mod dimension;
pub mod energy;
pub mod export;
pub mod expr;
pub mod fractal;
pub mod geometry;

mod error;

pub use error::Error;
pub use geometry::{
    apply_map, build_level_graph, integrate, invert_map, sample, LevelGraph, Point2, Quadrature,
    SGFunction, Word,
};

pub type Result<T, E = Error> = std::result::Result<T, E>;
