//! The fixed-point construction on a lattice, plus a Monte Carlo evaluator of
//! the same operator used as an independent oracle.

mod fixed_point;
mod grid;
mod linear;
mod oracle;

pub use fixed_point::{fit_eps_disc, DiscreteProblem, DiscretisationError, PicardOptions, SolveReport, LINEAR_TOL};
pub use grid::{BallGrid, BoundaryArm, GridField, LatticeField};
pub use linear::{pcg, CgReport};
pub use oracle::{mc_t_at_point, mc_t_with};
