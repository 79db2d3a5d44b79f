//! Expected lifetime integral of Brownian motion from `x₁` conditioned to be
//! killed at `x₂`:
//! `∫_B K(y) G(x₁, y) G(y, x₂) / G(x₁, x₂) dy`.
//!
//! The integrand has poles at both points. It is split with the partition of
//! unity `w₁ = |y − x₂|⁴ / (|y − x₁|⁴ + |y − x₂|⁴)`, `w₂ = 1 − w₁`, and each
//! piece is integrated in coordinates centred at its own pole, where the other
//! pole is cancelled by the weight.

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{BallDomain, CapSet, Domain, Point};
use crate::kernels::{green_ball_unchecked, integrate_about, QuadratureSpec, Window};
use crate::problem::MinorantH0;

pub fn lemma43_integral(ball: &BallDomain, x1: Point, x2: Point, k: impl Fn(Point) -> f64, q: &QuadratureSpec) -> Result<f64> {
    for x in [x1, x2] {
        if !ball.contains(x) {
            return Err(Error::Exterior { point: x });
        }
    }
    if x1 == x2 {
        return Err(Error::CoincidentPoints { point: x1 });
    }
    let g12 = green_ball_unchecked(ball, x1, x2);
    let piece = |a: Point, b: Point| {
        integrate_about(ball, a, &Window::full(), q, |y| {
            let da = (y - a).norm2().powi(2);
            let db = (y - b).norm2().powi(2);
            if da == 0.0 || db == 0.0 {
                return 0.0;
            }
            let w = db / (da + db);
            w * k(y) * green_ball_unchecked(ball, a, y) * green_ball_unchecked(ball, y, b)
        })
    };
    Ok((piece(x1, x2) + piece(x2, x1)) / g12)
}

/// [`lemma43_integral`] at `q` and `q.refined()`; an unstable pair is reported.
pub fn lemma43_check(ball: &BallDomain, x1: Point, x2: Point, k: impl Fn(Point) -> f64, q: &QuadratureSpec) -> Result<f64> {
    let coarse = lemma43_integral(ball, x1, x2, &k, q)?;
    let fine = lemma43_integral(ball, x1, x2, &k, &q.refined())?;
    let scale = fine.abs().max(coarse.abs()).max(1e-12);
    if (coarse - fine).abs() <= q.tolerance * scale {
        Ok(fine)
    } else {
        Err(Error::QuadratureUnstable {
            coarse,
            refined: fine,
            tolerance: q.tolerance,
        })
    }
}

/// The cap-adjacent region `{x ∈ B : dist(x, ∂B) ≤ 1/2, polar angle ≤ θ_A}`,
/// the ball's counterpart of `Q̄₁ ∩ D` over the cap.
pub fn in_cap_region(h0: &MinorantH0, x: Point) -> bool {
    h0.ball.contains(x) && h0.ball.boundary_distance(x) <= 0.5 * h0.ball.radius && CapSet::polar_angle(&h0.ball, x) <= h0.cap.half_angle
}

/// A random point of the cap-adjacent region with depth log-uniform in
/// `[min_depth, R/2]` and polar angle uniform in solid angle.
pub fn sample_cap_region<R: Rng + ?Sized>(h0: &MinorantH0, min_depth: f64, rng: &mut R) -> Point {
    let big_r = h0.ball.radius;
    let (lo, hi) = (min_depth.ln(), (0.5 * big_r).ln());
    let depth = (lo + (hi - lo) * rng.random::<f64>()).exp();
    let cos_max = h0.cap.half_angle.cos();
    let cos_psi = 1.0 - (1.0 - cos_max) * rng.random::<f64>();
    let psi = cos_psi.clamp(-1.0, 1.0).acos();
    let az = 2.0 * core::f64::consts::PI * rng.random::<f64>();
    let axis = CapSet::axis();
    let (e1, e2) = axis.orthonormal_frame();
    let dir = axis * psi.cos() + (e1 * az.cos() + e2 * az.sin()) * psi.sin();
    h0.ball.center + dir * (big_r - depth)
}
