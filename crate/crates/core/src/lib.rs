//! Multiscale topology optimization of functionally graded hyperelastic
//! structures.
//!
//! - [`fem`]: Neo-Hookean finite elements and the adaptive Newton solver
//! - [`micro`]: spectral-density microstructure reconstruction and blending
//! - [`homog`]: periodic homogenization of pixel microstructures
//! - [`gp`]: design-of-experiments datasets and Gaussian-process surrogates
//! - [`topopt`]: network-parameterized optimization with adjoint gradients
//! - [`io`]: graymaps, CSV tables and JSON artifacts

pub mod error;
pub mod fem;
pub mod gp;
pub mod linalg;
pub mod homog;
pub mod io;
pub mod micro;
pub mod topopt;

pub use error::{Error, Result};
