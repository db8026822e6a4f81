//! Discretization and fast solution of the integral fractional Laplacian
//! `(-Δ)^{α/2}` on regular and occluded Cartesian grids.
//!
//! The discrete operator comes from windowed singularity subtraction followed
//! by the trapezoidal rule on the grid lattice. It is translation invariant,
//! so it is applied by zero-padded FFT convolution. Linear systems are solved
//! with conjugate gradients preconditioned by the finite-difference Laplacian
//! that sits inside the operator.
//!
//! Module map:
//!
//! * [`grid`]: grids, occlusion masks, fields and field I/O
//! * [`kernel`]: window, normalizing constant, lattice sums, stencil table
//! * [`fastop`]: the operator `M` (FFT apply and a dense oracle)
//! * [`precond`]: exact solves with `σI + γ(-Δ_h)`
//! * [`krylov`]: preconditioned conjugate gradients
//! * [`timestepper`]: Crank–Nicolson for the fractional heat equation
//! * [`analytic`]: closed-form reference cases
//! * [`analysis`]: error norms, rate fits, Richardson estimates
//! * [`cli`]: the `fraclap` command line

pub mod analysis;
pub mod analytic;
pub mod cli;
mod error;
pub mod fastop;
pub mod grid;
pub mod kernel;
pub mod krylov;
pub mod precond;
pub mod timestepper;

pub use error::{Error, Result};
pub use fastop::FracLapOperator;
pub use grid::{Field, Grid};
pub use kernel::{KernelTable, OperatorConstants, WindowSpec};
pub use krylov::{pcg, LinearOperator, PcgOptions, SolveReport};
pub use precond::PoissonPreconditioner;
