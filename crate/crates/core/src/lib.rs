//! Explainable-AI algorithms re-expressed as matrix computations and run on a
//! data-decomposed parallel engine.
//!
//! * [`distill`]: closed-form convolutional surrogate and block contribution
//!   factors.
//! * [`shapley`]: exact Shapley values (permutation, subset and matrix forms).
//! * [`intgrad`]: integrated gradients by trapezoidal quadrature or
//!   Vandermonde interpolation.
//! * [`fourier`] and [`parallel`]: the row/column-decomposed 2-D DFT and the
//!   worker engine it runs on.
//! * [`linalg`]: dense matrices, block multiplication, spectral division and
//!   the Vandermonde solver.
//! * [`models`]: differentiable toy models and seeded fixtures.

pub mod distill;
pub mod fourier;
pub mod intgrad;
pub mod linalg;
pub mod models;
pub mod parallel;
pub mod shapley;

pub use linalg::{BlockSpec, ComplexMatrix, Matrix, RealMatrix};
pub use models::{DifferentiableModel, Model};
pub use num_complex::Complex64;
