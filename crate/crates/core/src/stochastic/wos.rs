//! Walk on spheres.
//!
//! From `x` jump to a uniform point on the largest sphere inside the domain
//! until within `ε_shell` of the boundary, then stop at the nearest boundary
//! point. Occupation integrals add, per step, `(r²/3)·g(Y)` with `Y` drawn from
//! the normalised Green density of the step ball, which in three dimensions has
//! radial law `r·Beta(2, 2)` and uniform direction.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::estimate::{McAccumulator, McEstimate};
use super::paths::PathConfig;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, DIM};

#[inline]
pub(crate) fn uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> Point {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Point::new(s * phi.cos(), s * phi.sin(), z)
}

/// Beta(2, 2) as the median of three uniforms.
#[inline]
fn beta22<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    let c: f64 = rng.random();
    a.max(b).min(a.min(b).max(c))
}

struct Walk {
    exit: Point,
    occupation: f64,
    truncated: bool,
}

fn walk<D, R, G>(domain: &D, x: Point, cfg: &PathConfig, rng: &mut R, g: &mut G) -> Result<Walk>
where
    D: Domain + ?Sized,
    R: Rng + ?Sized,
    G: FnMut(Point) -> Result<f64>,
{
    let mut p = x;
    let mut occupation = 0.0;
    for _ in 0..cfg.max_steps {
        let r = domain.boundary_distance(p);
        if r <= cfg.eps_shell {
            return Ok(Walk {
                exit: domain.nearest_boundary_point(p),
                occupation,
                truncated: false,
            });
        }
        let y = p + uniform_direction(rng) * (r * beta22(rng));
        occupation += r * r / DIM as f64 * g(y)?;
        p += uniform_direction(rng) * r;
    }
    Ok(Walk {
        exit: domain.nearest_boundary_point(p),
        occupation,
        truncated: true,
    })
}

fn check_start<D: Domain + ?Sized>(domain: &D, x: Point, n: u64) -> Result<()> {
    if !domain.contains(x) {
        return Err(Error::Exterior { point: x });
    }
    if n < 2 {
        return Err(Error::invalid("need at least two paths"));
    }
    Ok(())
}

/// `E_x φ(X_τ)`. The bias from stopping in the shell is at most `ω_φ(ε_shell)`;
/// `bias_bound` reports `ε_shell`, i.e. the bound per unit Lipschitz constant.
pub fn wos_harmonic<D, R>(domain: &D, x: Point, phi: impl Fn(Point) -> f64, n: u64, cfg: &PathConfig, rng: &mut R) -> Result<McEstimate>
where
    D: Domain + ?Sized,
    R: Rng + ?Sized,
{
    check_start(domain, x, n)?;
    let mut acc = McAccumulator::new();
    let mut none = |_: Point| Ok(0.0);
    for _ in 0..n {
        let w = walk(domain, x, cfg, rng, &mut none)?;
        acc.truncated += w.truncated as u64;
        acc.push(phi(w.exit));
    }
    Ok(acc.finish(cfg.eps_shell))
}

/// `E_x ∫₀^τ g(X_s) ds`. The contribution of the final shell is not sampled;
/// see [`occupation_shell_bias`] for a bound to attach.
pub fn wos_occupation<D, R>(domain: &D, x: Point, mut g: impl FnMut(Point) -> f64, n: u64, cfg: &PathConfig, rng: &mut R) -> Result<McEstimate>
where
    D: Domain + ?Sized,
    R: Rng + ?Sized,
{
    check_start(domain, x, n)?;
    let mut acc = McAccumulator::new();
    let mut g = |y: Point| Ok(g(y));
    for _ in 0..n {
        let w = walk(domain, x, cfg, rng, &mut g)?;
        acc.truncated += w.truncated as u64;
        acc.push(w.occupation);
    }
    Ok(acc.finish(0.0))
}

/// `E_x φ(X_τ) − E_x ∫₀^τ g(X_s) ds` on shared walks; errors raised by `g`
/// abort the estimate.
pub fn wos_feynman_kac<D, R>(
    domain: &D,
    x: Point,
    phi: impl Fn(Point) -> f64,
    mut g: impl FnMut(Point) -> Result<f64>,
    n: u64,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<McAccumulator>
where
    D: Domain + ?Sized,
    R: Rng + ?Sized,
{
    check_start(domain, x, n)?;
    let mut acc = McAccumulator::new();
    for _ in 0..n {
        let w = walk(domain, x, cfg, rng, &mut g)?;
        acc.truncated += w.truncated as u64;
        acc.push(phi(w.exit) - w.occupation);
    }
    Ok(acc)
}

/// Bound on the occupation integral left out by stopping in the shell, for
/// `|g| ≤ c·dist^{-α}` on a domain of diameter `diameter`:
/// `c·diameter·ε^{1−α}/(1−α)`.
pub fn occupation_shell_bias(c: f64, alpha: f64, eps_shell: f64, diameter: f64) -> f64 {
    c * diameter * eps_shell.powf(1.0 - alpha) / (1.0 - alpha)
}
