//! Walk-on-spheres evaluation of `Tu(x)`, independent of the grid solve except
//! through the interpolated `u`.

use rand::Rng;

use super::fixed_point::DiscreteProblem;
use super::grid::{GridField, LatticeField};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::problem::Reaction;
use crate::stochastic::{wos_feynman_kac, McEstimate, PathConfig};

/// `Tu(x) = E_x φ(X_τ) − E_x ∫₀^τ f(u(X_s)) ds` by walk on spheres, with `u`
/// interpolated trilinearly from the grid.
pub fn mc_t_at_point<F, R>(prob: &DiscreteProblem, u: &GridField, f: &F, x: Point, n: u64, cfg: &PathConfig, rng: &mut R) -> Result<McEstimate>
where
    F: Reaction + ?Sized,
    R: Rng + ?Sized,
{
    let lattice = prob.interpolant(u);
    mc_t_with(prob, &lattice, f, x, n, cfg, rng)
}

/// [`mc_t_at_point`] with a prebuilt interpolant.
pub fn mc_t_with<F, R>(prob: &DiscreteProblem, u: &LatticeField, f: &F, x: Point, n: u64, cfg: &PathConfig, rng: &mut R) -> Result<McEstimate>
where
    F: Reaction + ?Sized,
    R: Rng + ?Sized,
{
    let ball = prob.grid().ball;
    let mut f_max: f64 = 0.0;
    let acc = wos_feynman_kac(
        &ball,
        x,
        |xi| prob.boundary_value(xi),
        |y| {
            let v = u.eval(y);
            let fy = f.f(v).map_err(|e| match e {
                Error::ConeBreach { value, .. } => Error::ConeBreach {
                    value,
                    location: Some(y),
                },
                other => other,
            })?;
            f_max = f_max.max(fy);
            Ok(fy)
        },
        n,
        cfg,
        rng,
    )?;
    // stopping in the shell: φ moves by at most Lip·ε, and the unsampled
    // occupation is at most sup f times the exit time from the shell
    let bias = cfg.eps_shell * (prob.boundary_lipschitz() + f_max * 2.0 * ball.radius / 3.0);
    Ok(acc.finish(bias))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BallDomain, CapSet};
    use crate::problem::{BoundaryData, MinorantH0, NoReaction, Nonlinearity, Perturbation};
    use crate::solver::BallGrid;
    use crate::stochastic::{wos_harmonic, RngStream};
    use alloc::sync::Arc;
    use core::f64::consts::FRAC_PI_4;

    fn setup() -> DiscreteProblem {
        let ball = BallDomain::unit();
        let h0 = MinorantH0::new(ball, CapSet::new(FRAC_PI_4).unwrap(), Point::new(0.0, 0.0, 0.5)).unwrap();
        let phi = BoundaryData::new(0.5, 0.05, Perturbation::Constant).unwrap();
        DiscreteProblem::new(Arc::new(BallGrid::new(ball, 0.125).unwrap()), &h0, &phi).unwrap()
    }

    #[test]
    fn zero_reaction_is_the_harmonic_estimate() {
        let p = setup();
        let cfg = PathConfig::new(1e-3, 1e-5, 100_000).unwrap();
        let u = p.harmonic().clone();
        let x = Point::new(0.1, 0.2, -0.3);
        let a = mc_t_at_point(&p, &u, &NoReaction, x, 2000, &cfg, &mut RngStream::new(1, 0)).unwrap();
        let b = wos_harmonic(&p.grid().ball, x, |xi| p.boundary_value(xi), 2000, &cfg, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(a.mean, b.mean);
    }

    #[test]
    fn large_constant_decouples() {
        let p = setup();
        let cfg = PathConfig::new(1e-3, 1e-5, 100_000).unwrap();
        let big = 1e4;
        let u = GridField::constant(p.grid().clone(), big).unwrap();
        let nl = Nonlinearity::new(0.5, 1.0).unwrap();
        let x = Point::new(0.0, 0.3, 0.0);
        let a = mc_t_at_point(&p, &u, &nl, x, 4000, &cfg, &mut RngStream::new(2, 0)).unwrap();
        let b = wos_harmonic(&p.grid().ball, x, |xi| p.boundary_value(xi), 4000, &cfg, &mut RngStream::new(2, 0)).unwrap();
        let slack = big.powf(-0.5) * (1.0 - x.norm2()) / 3.0;
        assert!((a.mean - b.mean).abs() <= 3.0 * b.stderr + slack);
    }
}
