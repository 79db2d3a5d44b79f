//! Domains: the ball used for solving, the flat-bottom box used for excursion
//! experiments, the dyadic strips `Q_k` near the bottom face and the boundary
//! cap on which `h₀` vanishes.
//!
//! Everything here is three-dimensional; coordinates are written
//! `x = (x̃, x³)` with `x̃` the lateral part.

use core::f64::consts::PI;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub const DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point(pub [f64; DIM]);

impl Point {
    pub const ORIGIN: Point = Point([0.0; DIM]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    /// Unit vector along axis `i`.
    pub fn axis(i: usize) -> Self {
        let mut p = [0.0; DIM];
        p[i] = 1.0;
        Point(p)
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Lateral part `x̃` length, i.e. `|(x¹, x²)|`.
    #[inline]
    pub fn lateral_norm(self) -> f64 {
        (self.0[0] * self.0[0] + self.0[1] * self.0[1]).sqrt()
    }

    #[inline]
    pub fn height(self) -> f64 {
        self.0[DIM - 1]
    }

    pub fn cross(self, o: Point) -> Point {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Point([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    /// Orthonormal pair completing `self` (assumed unit) to a right-handed frame.
    pub fn orthonormal_frame(self) -> (Point, Point) {
        let helper = if self.0[0].abs() < 0.9 {
            Point::axis(0)
        } else {
            Point::axis(1)
        };
        let e1 = helper.cross(self);
        let e1 = e1 * (1.0 / e1.norm());
        let e2 = self.cross(e1);
        (e1, e2)
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for Point {
    #[inline]
    fn add_assign(&mut self, o: Point) {
        *self = *self + o;
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

/// A bounded domain that random walks and paths can run in.
pub trait Domain {
    /// True iff `x` is strictly inside.
    fn contains(&self, x: Point) -> bool;

    /// Euclidean distance to the boundary, without the interior check.
    fn boundary_distance(&self, x: Point) -> f64;

    /// A nearest point of the boundary.
    fn nearest_boundary_point(&self, x: Point) -> Point;

    /// Euclidean distance to the boundary; exterior and boundary points are rejected.
    fn dist_to_boundary(&self, x: Point) -> Result<f64> {
        if self.contains(x) {
            Ok(self.boundary_distance(x))
        } else {
            Err(Error::Exterior { point: x })
        }
    }
}

/// Open ball `B(center, R)`; it satisfies the interior-ball condition with `r₀ = R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallDomain {
    pub center: Point,
    pub radius: f64,
}

impl BallDomain {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::invalid("ball radius must be positive and finite"));
        }
        Ok(Self { center, radius })
    }

    pub fn unit() -> Self {
        Self {
            center: Point::ORIGIN,
            radius: 1.0,
        }
    }

    /// Radial projection onto `∂B` (the center maps to the north pole).
    pub fn project_to_boundary(&self, x: Point) -> Point {
        let v = x - self.center;
        let r = v.norm();
        if r == 0.0 {
            return self.center + Point::axis(DIM - 1) * self.radius;
        }
        self.center + v * (self.radius / r)
    }

    pub fn surface_area(&self) -> f64 {
        4.0 * PI * self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.radius.powi(3)
    }
}

impl Domain for BallDomain {
    fn contains(&self, x: Point) -> bool {
        (x - self.center).norm2() < self.radius * self.radius
    }

    fn boundary_distance(&self, x: Point) -> f64 {
        self.radius - (x - self.center).norm()
    }

    fn nearest_boundary_point(&self, x: Point) -> Point {
        self.project_to_boundary(x)
    }
}

/// `{x : |x¹| < w, |x²| < w, 0 < x³ < H}`: a box whose bottom face is the flat
/// graph `Γ ≡ 0`, so the vertical distance is `δ(x) = x³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub half_width: f64,
    pub height: f64,
}

impl BoxDomain {
    pub fn new(half_width: f64, height: f64) -> Result<Self> {
        if !(half_width > 0.0 && height > 0.0) || !(half_width.is_finite() && height.is_finite()) {
            return Err(Error::invalid("box half-width and height must be positive"));
        }
        Ok(Self { half_width, height })
    }

    /// Vertical distance to the bottom face.
    #[inline]
    pub fn vertical_distance(&self, x: Point) -> f64 {
        x.height()
    }

    /// Bottom-face center, the anchor `y₀` of the dyadic strips.
    pub fn anchor(&self) -> Point {
        Point::ORIGIN
    }
}

impl Domain for BoxDomain {
    fn contains(&self, x: Point) -> bool {
        let [a, b, c] = x.0;
        a.abs() < self.half_width && b.abs() < self.half_width && c > 0.0 && c < self.height
    }

    fn boundary_distance(&self, x: Point) -> f64 {
        let [a, b, c] = x.0;
        let lateral = (self.half_width - a.abs()).min(self.half_width - b.abs());
        lateral.min(c).min(self.height - c)
    }

    fn nearest_boundary_point(&self, x: Point) -> Point {
        let [a, b, c] = x.0;
        let w = self.half_width;
        let faces = [
            (w - a.abs(), Point::new(w.copysign(a), b, c)),
            (w - b.abs(), Point::new(a, w.copysign(b), c)),
            (c, Point::new(a, b, 0.0)),
            (self.height - c, Point::new(a, b, self.height)),
        ];
        faces
            .iter()
            .min_by(|p, q| p.0.total_cmp(&q.0))
            .map(|f| f.1)
            .unwrap_or(x)
    }
}

/// Which part of `∂Q` a path left through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StripExit {
    /// The bottom face, i.e. `∂D`.
    Bottom,
    /// The top level `{δ = a}`.
    Top,
    /// The lateral wall `{|x̃ − ỹ₀| = r}`.
    Side,
}

/// `Q(y₀, a, r) = {x ∈ D : δ(x) < a, |x̃ − ỹ₀| < r}` for the flat-bottom box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripBox {
    pub anchor: Point,
    pub height: f64,
    pub radius: f64,
}

impl StripBox {
    pub fn new(anchor: Point, height: f64, radius: f64) -> Result<Self> {
        if !(height > 0.0 && radius > 0.0) {
            return Err(Error::invalid("strip box height and radius must be positive"));
        }
        Ok(Self {
            anchor,
            height,
            radius,
        })
    }

    #[inline]
    pub fn depth(&self, x: Point) -> f64 {
        x.height() - self.anchor.height()
    }

    #[inline]
    pub fn lateral_offset(&self, x: Point) -> f64 {
        (x - self.anchor).lateral_norm()
    }

    /// Nearest face and the distance to it.
    pub fn nearest_face(&self, x: Point) -> (StripExit, f64) {
        let d = self.depth(x);
        let bottom = d;
        let top = self.height - d;
        let side = self.radius - self.lateral_offset(x);
        if bottom <= top && bottom <= side {
            (StripExit::Bottom, bottom)
        } else if top <= side {
            (StripExit::Top, top)
        } else {
            (StripExit::Side, side)
        }
    }
}

impl Domain for StripBox {
    fn contains(&self, x: Point) -> bool {
        let d = self.depth(x);
        d > 0.0 && d < self.height && self.lateral_offset(x) < self.radius
    }

    fn boundary_distance(&self, x: Point) -> f64 {
        self.nearest_face(x).1
    }

    fn nearest_boundary_point(&self, x: Point) -> Point {
        let mut p = x;
        match self.nearest_face(x).0 {
            StripExit::Bottom => p.0[DIM - 1] = self.anchor.height(),
            StripExit::Top => p.0[DIM - 1] = self.anchor.height() + self.height,
            StripExit::Side => {
                let off = x - self.anchor;
                let lat = off.lateral_norm();
                if lat > 0.0 {
                    for i in 0..DIM - 1 {
                        p.0[i] = self.anchor.0[i] + off.0[i] * (self.radius / lat);
                    }
                }
            }
        }
        p
    }
}

/// Nested strips `Q_k = Q(y₀, 2^{-k}, 1)` for `k = 1..=k_max`, with top levels
/// `U_k = {δ = 2^{-k}}` and lateral walls `S_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicStrips {
    pub anchor: Point,
    pub k_max: u32,
    /// Lateral radius of every strip (1 in the usual normalisation).
    pub radius: f64,
}

impl DyadicStrips {
    pub fn new(anchor: Point, k_max: u32) -> Result<Self> {
        if k_max == 0 || k_max > 60 {
            return Err(Error::invalid("k_max must lie in 1..=60"));
        }
        Ok(Self {
            anchor,
            k_max,
            radius: 1.0,
        })
    }

    /// Height `2^{-k}` of `Q_k`, i.e. the depth of the level `U_k`.
    #[inline]
    pub fn level_depth(k: u32) -> f64 {
        libm::ldexp(1.0, -(k as i32))
    }

    /// `Q_k` as a region; `k = 0` gives the unit-height outer box `Q(y₀, 1, 1)`.
    pub fn q(&self, k: u32) -> StripBox {
        StripBox {
            anchor: self.anchor,
            height: Self::level_depth(k),
            radius: self.radius,
        }
    }

    /// The unique `k ≥ 1` with `x ∈ Q_k \ Q_{k+1}`, or `None` when `x ∉ Q_1`.
    pub fn strip_index(&self, x: Point) -> Option<u32> {
        let d = x.height() - self.anchor.height();
        let lateral = (x - self.anchor).lateral_norm();
        if !(d > 0.0 && d < 0.5 && lateral < self.radius) {
            return None;
        }
        // 2^{-(k+1)} ≤ d < 2^{-k}
        // frexp: d = m·2^e with m ∈ [0.5, 1), so 2^{e-1} ≤ d < 2^e
        let (_, exp) = libm::frexp(d);
        Some((-exp) as u32)
    }

    /// True iff `x ∈ U_k` up to `tol` in depth.
    pub fn on_level(&self, x: Point, k: u32, tol: f64) -> bool {
        let d = x.height() - self.anchor.height();
        (d - Self::level_depth(k)).abs() <= tol && (x - self.anchor).lateral_norm() <= self.radius
    }
}

/// Closed boundary cap `A = {ξ ∈ ∂B : angle(ξ − c, −e₃) ≤ θ_A}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapSet {
    pub half_angle: f64,
}

impl CapSet {
    pub fn new(half_angle: f64) -> Result<Self> {
        if !(half_angle > 0.0 && half_angle < PI) {
            return Err(Error::invalid("cap angle must lie in (0, π)"));
        }
        Ok(Self { half_angle })
    }

    /// Unit axis of the cap, `−e₃`.
    pub fn axis() -> Point {
        -Point::axis(DIM - 1)
    }

    /// Polar angle `ψ ∈ [0, π]` of `x − c` measured from the cap axis.
    pub fn polar_angle(ball: &BallDomain, x: Point) -> f64 {
        let v = x - ball.center;
        let r = v.norm();
        if r == 0.0 {
            return 0.0;
        }
        (v.dot(Self::axis()) / r).clamp(-1.0, 1.0).acos()
    }

    pub fn contains(&self, ball: &BallDomain, xi: Point) -> bool {
        Self::polar_angle(ball, xi) <= self.half_angle
    }

    /// Geodesic distance along `∂B` from the boundary point with polar angle `ψ` to `A`.
    #[inline]
    pub fn geodesic_distance_at(&self, radius: f64, psi: f64) -> f64 {
        radius * (psi - self.half_angle).max(0.0)
    }

    pub fn geodesic_distance(&self, ball: &BallDomain, xi: Point) -> f64 {
        self.geodesic_distance_at(ball.radius, Self::polar_angle(ball, xi))
    }

    /// Center of the cap on `∂B`.
    pub fn pole(&self, ball: &BallDomain) -> Point {
        ball.center + Self::axis() * ball.radius
    }
}
