//! Green and Poisson kernels of the ball for the generator `½Δ`, and the
//! quadrature that integrates against them.
//!
//! With the `½Δ` normalisation the Green function is the occupation density of
//! Brownian motion killed on leaving the ball:
//! `E_x ∫₀^τ g(X_s) ds = ∫ G(x, y) g(y) dy`. In three dimensions
//!
//! ```text
//!     G(x, y) = (1/2π) (1/|x − y| − R / √(|x|²|y|² − 2R² x·y + R⁴))
//! ```
//!
//! (coordinates relative to the center), which is twice the Green function of
//! `Δ` and symmetric in `x, y` by construction.
//!
//! Volume integrals are done in spherical coordinates centered on the pole, so
//! the `|x − y|^{-1}` singularity is absorbed by the `ρ²` Jacobian. Angular and
//! radial panels are graded geometrically toward the nearest boundary point,
//! which resolves integrands that blow up like `dist(y, ∂B)^{-α}`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{BallDomain, Domain, Point, DIM};
use crate::math::{graded_breakpoints, GaussLegendre};

/// Green function of `½Δ` on the ball, with the interior checks.
pub fn green_ball(ball: &BallDomain, x: Point, y: Point) -> Result<f64> {
    if !ball.contains(x) {
        return Err(Error::Exterior { point: x });
    }
    if !ball.contains(y) {
        return Err(Error::Exterior { point: y });
    }
    if x == y {
        return Err(Error::CoincidentPoints { point: x });
    }
    Ok(green_ball_unchecked(ball, x, y))
}

/// [`green_ball`] without validation; the caller guarantees `x ≠ y`, both inside.
#[inline]
pub fn green_ball_unchecked(ball: &BallDomain, x: Point, y: Point) -> f64 {
    let r = ball.radius;
    let xr = x - ball.center;
    let yr = y - ball.center;
    let direct = (x - y).norm();
    let image2 = xr.norm2() * yr.norm2() - 2.0 * r * r * xr.dot(yr) + r.powi(4);
    let image = r / image2.max(0.0).sqrt();
    (1.0 / direct - image) / (2.0 * PI)
}

/// Poisson kernel of the ball: the density of the exit position `X_τ` on `∂B`
/// with respect to surface measure.
pub fn poisson_kernel_ball(ball: &BallDomain, x: Point, xi: Point) -> Result<f64> {
    if !ball.contains(x) {
        return Err(Error::Exterior { point: x });
    }
    Ok(poisson_kernel_unchecked(ball, x, xi))
}

#[inline]
pub fn poisson_kernel_unchecked(ball: &BallDomain, x: Point, xi: Point) -> f64 {
    let r = ball.radius;
    let s2 = (x - ball.center).norm2();
    let d = (x - xi).norm();
    (r * r - s2) / (4.0 * PI * r * d * d * d)
}

/// Node counts and grading for the pole-centered quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss-Legendre nodes per panel (polar angle and radius).
    pub gl_order: usize,
    /// Trapezoid nodes in azimuth.
    pub azimuth_nodes: usize,
    /// Halvings of the last radial panel toward `∂B`.
    pub boundary_levels: u32,
    /// Relative tolerance of the node-doubling check.
    pub tolerance: f64,
    /// Run every checked integral twice (nodes doubled) and report disagreement.
    pub verify: bool,
    rule: GaussLegendre,
}

impl QuadratureSpec {
    pub fn new(gl_order: usize, azimuth_nodes: usize, boundary_levels: u32, tolerance: f64) -> Result<Self> {
        if gl_order == 0 || gl_order > 64 {
            return Err(Error::invalid("gl_order must lie in 1..=64"));
        }
        if azimuth_nodes < 4 {
            return Err(Error::invalid("azimuth_nodes must be at least 4"));
        }
        if !(tolerance > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        Ok(Self {
            gl_order,
            azimuth_nodes,
            boundary_levels,
            tolerance,
            verify: false,
            rule: GaussLegendre::new(gl_order),
        })
    }

    pub fn with_verify(mut self, verify: bool) -> Self {
        self.verify = verify;
        self
    }

    /// Doubled node counts and two more boundary levels.
    pub fn refined(&self) -> Self {
        let mut q = Self::new(
            2 * self.gl_order,
            2 * self.azimuth_nodes,
            self.boundary_levels + 2,
            self.tolerance,
        )
        .expect("refining a valid spec");
        q.verify = false;
        q
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    /// Coarse/refined agreement within the relative tolerance.
    pub(crate) fn check(&self, coarse: f64, refined: f64) -> Result<f64> {
        let scale = refined.abs().max(coarse.abs()).max(1e-12);
        if (coarse - refined).abs() <= self.tolerance * scale {
            Ok(refined)
        } else {
            Err(Error::QuadratureUnstable {
                coarse,
                refined,
                tolerance: self.tolerance,
            })
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::new(8, 32, 14, 1e-3).expect("default quadrature spec")
    }
}

/// Restriction of a volume integral to part of the ball.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Window {
    /// Keep `r_lo ≤ |y − c| ≤ r_hi`.
    pub shell: Option<(f64, f64)>,
    /// Keep `|y − pole| ≤ ρ_max`.
    pub max_radius: Option<f64>,
}

impl Window {
    pub fn full() -> Self {
        Self::default()
    }

    /// Boundary layer `{y : dist(y, ∂B) < width}`.
    pub fn boundary_shell(ball: &BallDomain, width: f64) -> Self {
        Self {
            shell: Some(((ball.radius - width).max(0.0), ball.radius)),
            max_radius: None,
        }
    }

    /// Ball `{y : |y − pole| < r}`.
    pub fn around_pole(r: f64) -> Self {
        Self {
            shell: None,
            max_radius: Some(r),
        }
    }
}

/// Ray `pole + ρω`, `ρ ∈ [0, L]`: the pieces kept by `window`, each flagged with
/// whether it ends on `∂B`.
fn ray_intervals(s_cos: f64, s2: f64, length: f64, window: &Window, out: &mut Vec<(f64, f64, bool)>) {
    out.clear();
    let mut lo = 0.0;
    let mut hi = length;
    if let Some(rmax) = window.max_radius {
        hi = hi.min(rmax);
    }
    // |y − c|² = ρ² + 2ρ s cosθ + s²
    let roots = |r: f64| -> Option<(f64, f64)> {
        let disc = s_cos * s_cos - s2 + r * r;
        if disc < 0.0 {
            None
        } else {
            let sq = disc.sqrt();
            Some((-s_cos - sq, -s_cos + sq))
        }
    };
    let mut pieces: [(f64, f64); 2] = [(lo, hi), (0.0, -1.0)];
    if let Some((r_lo, r_hi)) = window.shell {
        if let Some((_, b)) = roots(r_hi) {
            // inside the r_hi sphere between the roots; the pole side starts at ρ = 0 or a
            let (a, _) = roots(r_hi).unwrap();
            lo = lo.max(a);
            hi = hi.min(b);
        } else {
            return;
        }
        pieces[0] = (lo, hi);
        if r_lo > 0.0 {
            if let Some((a, b)) = roots(r_lo) {
                pieces = [(lo, hi.min(a)), (lo.max(b), hi)];
            }
        }
    }
    for (a, b) in pieces {
        if b > a {
            out.push((a, b, b >= length));
        }
    }
}

/// `∫_{B ∩ window} f(y) dy` in spherical coordinates centered at `pole`.
///
/// `f` may be singular like `|y − pole|^{-1}` at the pole and like
/// `dist(y, ∂B)^{-α}`, `α < 1`, at the boundary.
pub fn integrate_about(
    ball: &BallDomain,
    pole: Point,
    window: &Window,
    q: &QuadratureSpec,
    mut f: impl FnMut(Point) -> f64,
) -> f64 {
    let r = ball.radius;
    let v = pole - ball.center;
    let s = v.norm();
    let depth = (r - s).max(0.0);
    let axis = if s > 0.0 {
        v * (1.0 / s)
    } else {
        Point::axis(DIM - 1)
    };
    let (e1, e2) = axis.orthonormal_frame();
    let rule = q.rule();
    let m = q.azimuth_nodes;
    let dphi = 2.0 * PI / m as f64;
    let (sin_phi, cos_phi): (Vec<f64>, Vec<f64>) = (0..m)
        .map(|j| {
            let p = (j as f64 + 0.5) * dphi;
            (p.sin(), p.cos())
        })
        .unzip();

    let mut theta_bps = Vec::new();
    let theta_scale = if s > 1e-12 * r { Some(0.5 * depth / r) } else { None };
    graded_breakpoints(0.0, PI, theta_scale, None, &mut theta_bps);

    let mut intervals = Vec::new();
    let mut radial_bps = Vec::new();
    let mut panels: Vec<Vec<f64>> = Vec::new();
    let mut total = 0.0;
    for tw in theta_bps.windows(2) {
        let (t0, t1) = (tw[0], tw[1]);
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t0 + t1);
        for (tn, tw) in rule.nodes().iter().zip(rule.weights()) {
            let theta = mid + half * tn;
            let (st, ct) = (theta.sin(), theta.cos());
            let s_cos = s * ct;
            let length = -s_cos + (r * r - s * s * st * st).max(0.0).sqrt();
            ray_intervals(s_cos, s * s, length, window, &mut intervals);
            if intervals.is_empty() {
                continue;
            }
            panels.clear();
            for &(a, b, on_boundary) in &intervals {
                let w_a = if a == 0.0 { Some(0.5 * depth.max(1e-12 * r)) } else { None };
                let w_b = if on_boundary {
                    Some((b - a) * libm::ldexp(1.0, -(q.boundary_levels as i32)))
                } else {
                    None
                };
                graded_breakpoints(a, b, w_a, w_b, &mut radial_bps);
                panels.push(radial_bps.clone());
            }
            let mut ring = 0.0;
            for j in 0..m {
                let dir = (e1 * cos_phi[j] + e2 * sin_phi[j]) * st + axis * ct;
                for bps in &panels {
                    ring += rule.integrate_panels(bps, |rho| rho * rho * f(pole + dir * rho));
                }
            }
            total += tw * half * st * ring * dphi;
        }
    }
    total
}

/// `∫_{∂B} f(ξ) dσ(ξ)` with polar panels graded toward the direction of `focus`
/// (an interior point whose Poisson kernel makes the integrand peaked).
pub fn integrate_sphere(ball: &BallDomain, focus: Point, q: &QuadratureSpec, mut f: impl FnMut(Point) -> f64) -> f64 {
    let r = ball.radius;
    let v = focus - ball.center;
    let s = v.norm();
    let axis = if s > 0.0 {
        v * (1.0 / s)
    } else {
        Point::axis(DIM - 1)
    };
    let (e1, e2) = axis.orthonormal_frame();
    let rule = q.rule();
    let m = q.azimuth_nodes;
    let dphi = 2.0 * PI / m as f64;
    let mut bps = Vec::new();
    let scale = if s > 1e-12 * r { Some(0.5 * (r - s) / r) } else { None };
    graded_breakpoints(0.0, PI, scale, None, &mut bps);
    let polar = rule.integrate_panels(&bps, |theta| {
        let (st, ct) = (theta.sin(), theta.cos());
        let mut ring = 0.0;
        for j in 0..m {
            let p = (j as f64 + 0.5) * dphi;
            let dir = (e1 * p.cos() + e2 * p.sin()) * st + axis * ct;
            ring += f(ball.center + dir * r);
        }
        ring * dphi * st
    });
    polar * r * r
}

/// Poisson integral `∫ P(x, ξ) φ(ξ) dσ(ξ) = E_x φ(X_τ)` of boundary data `φ`.
pub fn harmonic_extension(
    ball: &BallDomain,
    phi: impl Fn(Point) -> f64,
    x: Point,
    q: &QuadratureSpec,
) -> Result<f64> {
    if !ball.contains(x) {
        return Err(Error::Exterior { point: x });
    }
    let eval = |q: &QuadratureSpec| {
        integrate_sphere(ball, x, q, |xi| poisson_kernel_unchecked(ball, x, xi) * phi(xi))
    };
    let coarse = eval(q);
    if q.verify {
        q.check(coarse, eval(&q.refined()))
    } else {
        Ok(coarse)
    }
}

/// `∫_B G(x, y) g(y) dy = E_x ∫₀^τ g(X_s) ds` for `|g| ≲ dist(·, ∂B)^{-α}`.
pub fn green_integral(ball: &BallDomain, x: Point, g: impl Fn(Point) -> f64, q: &QuadratureSpec) -> Result<f64> {
    green_integral_over(ball, x, &Window::full(), g, q)
}

/// [`green_integral`] restricted to `window`.
pub fn green_integral_over(
    ball: &BallDomain,
    x: Point,
    window: &Window,
    g: impl Fn(Point) -> f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    if !ball.contains(x) {
        return Err(Error::Exterior { point: x });
    }
    let eval = |q: &QuadratureSpec| {
        integrate_about(ball, x, window, q, |y| {
            if y == x {
                0.0
            } else {
                green_ball_unchecked(ball, x, y) * g(y)
            }
        })
    };
    let coarse = eval(q);
    if q.verify {
        q.check(coarse, eval(&q.refined()))
    } else {
        Ok(coarse)
    }
}

/// Expected exit time `E_x τ = (R² − |x − c|²)/3` under `½Δ`.
pub fn expected_exit_time(ball: &BallDomain, x: Point) -> f64 {
    (ball.radius * ball.radius - (x - ball.center).norm2()) / DIM as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_interior(rng: &mut ChaCha8Rng, ball: &BallDomain, max_frac: f64) -> Point {
        loop {
            let p = Point::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if p.norm() < max_frac {
                return ball.center + p * ball.radius;
            }
        }
    }

    #[test]
    fn green_closed_form_example() {
        let ball = BallDomain::unit();
        let g = green_ball(&ball, Point::ORIGIN, Point::new(0.5, 0.0, 0.0)).unwrap();
        assert_relative_eq!(g, 1.0 / (2.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn green_matches_radial_two_point_solve() {
        // G(0, y) is radial; it solves ½Δ_y G = 0 away from 0 with G(R) = 0 and
        // flux −1 through small spheres, i.e. G(0, y) = (1/|y| − 1/R)/2π.
        // Cross-check with a shooting solve of w'' + 2w'/r = 0, w(1) = 0, r² w'(r) = −1/2π.
        let ball = BallDomain::unit();
        let n = 20000;
        let (r0, r1) = (0.5, 1.0);
        let h = (r1 - r0) / n as f64;
        // integrate backward from r = 1 with w(1) = 0, w'(1) = −1/(2π)
        let mut w = 0.0;
        let mut dw = -1.0 / (2.0 * PI);
        let mut r = r1;
        for _ in 0..n {
            // RK2 on (w, w') for w'' = −2w'/r
            let k1w = dw;
            let k1d = -2.0 * dw / r;
            let mw = w - 0.5 * h * k1w;
            let md = dw - 0.5 * h * k1d;
            let mr = r - 0.5 * h;
            let _ = mw;
            w -= h * md;
            dw -= h * (-2.0 * md / mr);
            r -= h;
        }
        let g = green_ball(&ball, Point::ORIGIN, Point::new(0.0, r0, 0.0)).unwrap();
        assert_relative_eq!(g, w, epsilon = 1e-6);
    }

    #[test]
    fn green_is_symmetric_and_positive() {
        let ball = BallDomain::new(Point::new(0.2, -0.1, 0.3), 1.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = random_interior(&mut rng, &ball, 0.999);
            let y = random_interior(&mut rng, &ball, 0.999);
            let a = green_ball(&ball, x, y).unwrap();
            let b = green_ball(&ball, y, x).unwrap();
            assert!(a > 0.0);
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn green_vanishes_at_boundary() {
        let ball = BallDomain::unit();
        let x = Point::new(0.1, 0.2, -0.3);
        let mut prev = f64::INFINITY;
        for k in 1..12 {
            let t = 1.0 - libm::ldexp(1.0, -k);
            let g = green_ball(&ball, x, Point::new(0.0, t, 0.0)).unwrap();
            assert!(g < prev);
            prev = g;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn green_rejects_bad_arguments() {
        let ball = BallDomain::unit();
        assert!(matches!(
            green_ball(&ball, Point::ORIGIN, Point::ORIGIN),
            Err(Error::CoincidentPoints { .. })
        ));
        assert!(matches!(
            green_ball(&ball, Point::ORIGIN, Point::new(1.0, 0.0, 0.0)),
            Err(Error::Exterior { .. })
        ));
    }

    #[test]
    fn poisson_kernel_center_and_normalisation() {
        let ball = BallDomain::unit();
        let xi = Point::new(0.0, 0.6, 0.8);
        assert_relative_eq!(
            poisson_kernel_ball(&ball, Point::ORIGIN, xi).unwrap(),
            1.0 / ball.surface_area(),
            epsilon = 1e-15
        );
        let q = QuadratureSpec::default();
        for x in [Point::ORIGIN, Point::new(0.3, -0.2, 0.5), Point::new(0.0, 0.0, 0.99)] {
            let mass = integrate_sphere(&ball, x, &q, |xi| poisson_kernel_unchecked(&ball, x, xi));
            assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
        }
        assert!(poisson_kernel_ball(&ball, Point::new(1.1, 0.0, 0.0), xi).is_err());
    }

    #[test]
    fn harmonic_extension_examples() {
        let ball = BallDomain::unit();
        let q = QuadratureSpec::default().with_verify(true);
        let one = harmonic_extension(&ball, |_| 1.0, Point::new(0.1, 0.5, -0.7), &q).unwrap();
        assert_relative_eq!(one, 1.0, epsilon = 1e-9);
        let z = harmonic_extension(&ball, |xi| xi.0[2], Point::new(0.0, 0.0, 0.3), &q).unwrap();
        assert_relative_eq!(z, 0.3, epsilon = 1e-9);
        let odd = harmonic_extension(&ball, |xi| xi.0[2], Point::ORIGIN, &q).unwrap();
        assert!(odd.abs() < 1e-12);
        // x² − y² is harmonic
        let p = Point::new(0.4, -0.3, 0.5);
        let quad = harmonic_extension(&ball, |xi| xi.0[0] * xi.0[0] - xi.0[1] * xi.0[1], p, &q).unwrap();
        assert_relative_eq!(quad, 0.16 - 0.09, epsilon = 1e-9);
    }

    #[test]
    fn harmonic_extension_reports_unresolved_data() {
        let ball = BallDomain::unit();
        let q = QuadratureSpec::new(2, 4, 2, 1e-9).unwrap().with_verify(true);
        let res = harmonic_extension(&ball, |xi| (20.0 * xi.0[0]).sin(), Point::new(0.0, 0.0, 0.95), &q);
        assert!(matches!(res, Err(Error::QuadratureUnstable { .. })));
    }

    #[test]
    fn green_integral_of_one_is_exit_time() {
        let ball = BallDomain::unit();
        let q = QuadratureSpec::default().with_verify(true);
        assert_relative_eq!(
            green_integral(&ball, Point::ORIGIN, |_| 1.0, &q).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            green_integral(&ball, Point::new(0.8, 0.0, 0.0), |_| 1.0, &q).unwrap(),
            0.12,
            max_relative = 1e-6
        );
        assert_eq!(green_integral(&ball, Point::new(0.1, 0.1, 0.1), |_| 0.0, &q).unwrap(), 0.0);
    }

    #[test]
    fn green_integral_normalisation_on_shifted_ball() {
        let ball = BallDomain::new(Point::new(1.0, 2.0, -1.0), 2.0).unwrap();
        let q = QuadratureSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..6 {
            let x = random_interior(&mut rng, &ball, 0.995);
            let got = green_integral(&ball, x, |_| 1.0, &q).unwrap();
            assert_relative_eq!(got, expected_exit_time(&ball, x), max_relative = 1e-6);
        }
    }

    #[test]
    fn green_integral_resolves_boundary_singularity() {
        // g = dist^{-1/2} is radial; from the center,
        // ∫ G(0,y) (1 − |y|)^{-1/2} dy = 2 ∫_0^1 (r − r²)(1 − r)^{-1/2} dr = 2·(4/15) = 8/15
        let ball = BallDomain::unit();
        let q = QuadratureSpec::default();
        let got = green_integral(&ball, Point::ORIGIN, |y| (1.0 - y.norm()).powf(-0.5), &q).unwrap();
        assert_relative_eq!(got, 8.0 / 15.0, max_relative = 1e-4);
    }

    #[test]
    fn windows_split_the_integral() {
        let ball = BallDomain::unit();
        let q = QuadratureSpec::default();
        let x = Point::new(0.2, -0.3, 0.1);
        let total = green_integral(&ball, x, |_| 1.0, &q).unwrap();
        let shell = green_integral_over(&ball, x, &Window::boundary_shell(&ball, 0.25), |_| 1.0, &q).unwrap();
        let core = green_integral_over(
            &ball,
            x,
            &Window {
                shell: Some((0.0, 0.75)),
                max_radius: None,
            },
            |_| 1.0,
            &q,
        )
        .unwrap();
        assert_relative_eq!(shell + core, total, max_relative = 1e-6);
        // ∫_{B(x,r)} G(x,y) dy ≈ r²/2·... leading term (1/2π)·2π r² = r² for small r
        let r = 1e-3;
        let small = green_integral_over(&ball, x, &Window::around_pole(r), |_| 1.0, &q).unwrap();
        assert_relative_eq!(small, r * r, max_relative = 1e-2);
    }
}
