//! Discretised Brownian paths with exact Gaussian increments.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};

/// Time stepping and absorption for paths and walks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    /// Time step (the largest one when adaptive).
    pub dt: f64,
    /// Walks stop, and adaptive paths are absorbed, within this distance of the boundary.
    pub eps_shell: f64,
    pub max_steps: u64,
    /// Test for a boundary crossing between samples with the Brownian-bridge
    /// probability `exp(−2 d₀ d₁ / Δt)`.
    pub bridge: bool,
    /// `Some(κ)`: step with `Δt = min(dt, κ·dist²)` and absorb in the shell.
    pub adaptive: Option<f64>,
}

impl PathConfig {
    pub fn new(dt: f64, eps_shell: f64, max_steps: u64) -> Result<Self> {
        if !(dt > 0.0) || !(eps_shell > 0.0) || max_steps == 0 {
            return Err(Error::invalid("dt, eps_shell and max_steps must be positive"));
        }
        Ok(Self {
            dt,
            eps_shell,
            max_steps,
            bridge: false,
            adaptive: None,
        })
    }

    pub fn with_bridge(mut self, on: bool) -> Self {
        self.bridge = on;
        self
    }

    pub fn with_adaptive(mut self, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::invalid("adaptive step factor must lie in (0, 1]"));
        }
        self.adaptive = Some(kappa);
        Ok(self)
    }
}

/// How a path ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    /// Exit position, on the boundary.
    pub exit: Point,
    pub exit_time: f64,
    pub steps: u64,
    /// The step limit was reached before exit.
    pub truncated: bool,
}

#[inline]
fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Point {
    Point::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

/// Simulate Brownian motion from `x` until it leaves `domain`, calling
/// `visit(t, X_t)` at every sample including the start and the exit point.
pub fn em_path<D, R>(domain: &D, x: Point, cfg: &PathConfig, rng: &mut R, mut visit: impl FnMut(f64, Point)) -> Result<PathOutcome>
where
    D: Domain + ?Sized,
    R: Rng + ?Sized,
{
    if !domain.contains(x) {
        return Err(Error::Exterior { point: x });
    }
    let mut t = 0.0;
    let mut p = x;
    let mut d = domain.boundary_distance(p);
    visit(t, p);
    for step in 0..cfg.max_steps {
        let dt = match cfg.adaptive {
            Some(kappa) => {
                if d <= cfg.eps_shell {
                    let exit = domain.nearest_boundary_point(p);
                    visit(t, exit);
                    return Ok(PathOutcome {
                        exit,
                        exit_time: t,
                        steps: step,
                        truncated: false,
                    });
                }
                cfg.dt.min(kappa * d * d)
            }
            None => cfg.dt,
        };
        let y = p + gaussian(rng) * dt.sqrt();
        t += dt;
        let inside = domain.contains(y);
        let d_next = if inside { domain.boundary_distance(y) } else { 0.0 };
        let crossed = !inside || (cfg.bridge && rng.random::<f64>() < (-2.0 * d * d_next / dt).exp());
        if crossed {
            let exit = domain.nearest_boundary_point(y);
            visit(t, exit);
            return Ok(PathOutcome {
                exit,
                exit_time: t,
                steps: step + 1,
                truncated: false,
            });
        }
        p = y;
        d = d_next;
        visit(t, p);
    }
    Ok(PathOutcome {
        exit: p,
        exit_time: t,
        steps: cfg.max_steps,
        truncated: true,
    })
}

/// [`em_path`] with the samples collected into `out` (cleared first).
pub fn em_path_collect<D, R>(domain: &D, x: Point, cfg: &PathConfig, rng: &mut R, out: &mut Vec<(f64, Point)>) -> Result<PathOutcome>
where
    D: Domain + ?Sized,
    R: Rng + ?Sized,
{
    out.clear();
    em_path(domain, x, cfg, rng, |t, p| out.push((t, p)))
}
