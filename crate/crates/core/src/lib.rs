#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Float methods come from `num_traits::Float` (libm). Whenever std is linked
// into the build, its inherent f64 methods shadow the trait, hence the
// `allow(unused_imports)` on each of those imports.

//! Numerical laboratory for the singular semilinear Dirichlet problem
//!
//! ```text
//!     ½Δu = u^{-α}  in D,      u = φ  on ∂D,      0 < α < 1,
//! ```
//!
//! with solutions constructed above a fixed positive harmonic minorant `h₀`
//! that vanishes on a boundary cap.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical piece:
//!
//! * [`geometry`]: the solving ball, the flat-bottom excursion box and its
//!   dyadic strips.
//! * [`kernels`]: Green and Poisson kernels of the ball for the `½Δ` generator
//!   and singularity-aware quadrature.
//! * [`problem`]: the nonlinearity, the minorant `h₀`, the majorant `K` and
//!   admissible boundary data.
//! * [`stochastic`]: walk-on-spheres estimators, discretised Brownian paths,
//!   rejection-conditioned paths and the excursion bookkeeping.
//! * [`solver`]: the grid realisation of the fixed-point operator and the
//!   damped Picard iteration, plus a Monte Carlo point evaluator.
//! * [`analysis`]: the verification experiments built on top of the above.
//!
//! IO, configuration and parallel batch execution live in the `sbvp-lab`
//! companion crate.

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod math;
pub mod problem;
pub mod solver;
pub mod stochastic;

pub use error::{Error, Result};
pub use geometry::{BallDomain, BoxDomain, CapSet, DyadicStrips, Point, StripBox};
pub use kernels::QuadratureSpec;
pub use problem::{BoundaryData, H0Table, MinorantH0, Nonlinearity, SingularMajorant};
pub use solver::{BallGrid, GridField, PicardOptions, SolveReport};
pub use stochastic::{McEstimate, PathConfig, RngStream};
