//! Problem data: the nonlinearity `f(z) = z^{-α}`, the harmonic minorant `h₀`
//! vanishing on the cap `A`, the singular majorant `K = h₀^{-α} ∨ M₀` and the
//! boundary data `φ`.
//!
//! `h₀ = λ·P[g]` where `P[g]` is the Poisson integral of the boundary profile
//! `g = geodesic distance to A` and `λ` normalises `h₀(x₀) = 1/2`. Because `g`
//! is axisymmetric about the cap axis, the surface integral reduces to a single
//! integral over the polar angle with a complete elliptic integral in the
//! azimuthal direction, which is evaluated to near machine precision.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{BallDomain, CapSet, Domain, Point};
use crate::math::{elliptic_e_complement, fit_line, graded_about, GaussLegendre, LineFit};

/// Something that can play the role of `f` in `½Δu = f(u)`.
pub trait Reaction {
    /// `f(z)`; a non-positive argument is a cone breach.
    fn f(&self, z: f64) -> Result<f64>;
}

/// The reaction `f ≡ 0`, which makes the fixed-point operator constant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoReaction;

impl Reaction for NoReaction {
    fn f(&self, _z: f64) -> Result<f64> {
        Ok(0.0)
    }
}

/// `f(z) = z^{-α}` together with the constants `a` and `M₀ = a^{-α}` under which
/// it satisfies `f(z) ≤ z^{-α}` on `(0, a]` and `f ≤ M₀` on `[a, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    pub alpha: f64,
    pub a: f64,
}

impl Nonlinearity {
    pub fn new(alpha: f64, a: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha must lie in (0, 1)"));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("a must be positive"));
        }
        Ok(Self { alpha, a })
    }

    pub fn m0(&self) -> f64 {
        self.a.powf(-self.alpha)
    }

    /// `f(z)`, reporting the location when the argument leaves `(0, ∞)`.
    pub fn eval_at(&self, z: f64, location: Option<Point>) -> Result<f64> {
        if z > 0.0 {
            Ok(z.powf(-self.alpha))
        } else {
            Err(Error::ConeBreach { value: z, location })
        }
    }

    /// Sampled check of the growth and boundedness conditions and of convex decrease.
    pub fn certify(&self) -> bool {
        let m0 = self.m0();
        let mut prev = f64::INFINITY;
        let mut prev_slope = f64::NEG_INFINITY;
        let mut z_prev = 0.0;
        for k in -40..=40 {
            let z = libm::exp2(k as f64 / 4.0) * self.a;
            let v = z.powf(-self.alpha);
            if z <= self.a && v > z.powf(-self.alpha) {
                return false;
            }
            if z >= self.a && v > m0 * (1.0 + 1e-14) {
                return false;
            }
            if v >= prev {
                return false;
            }
            if z_prev > 0.0 {
                let slope = (v - prev) / (z - z_prev);
                if slope < prev_slope {
                    return false;
                }
                prev_slope = slope;
            }
            prev = v;
            z_prev = z;
        }
        true
    }
}

impl Reaction for Nonlinearity {
    fn f(&self, z: f64) -> Result<f64> {
        self.eval_at(z, None)
    }
}

/// `h₀ = λ·P[g]` with `g(ξ) = geodesic distance from ξ to the cap A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorantH0 {
    pub ball: BallDomain,
    pub cap: CapSet,
    pub x0: Point,
    lambda: f64,
    rule: GaussLegendre,
}

/// Polar coordinates of `x` about the cap axis: `(|x − c|, ψ)`.
#[inline]
fn polar(ball: &BallDomain, x: Point) -> (f64, f64) {
    ((x - ball.center).norm(), CapSet::polar_angle(ball, x))
}

const H0_ORDER: usize = 12;

impl MinorantH0 {
    pub fn new(ball: BallDomain, cap: CapSet, x0: Point) -> Result<Self> {
        if !ball.contains(x0) {
            return Err(Error::Exterior { point: x0 });
        }
        let mut h = Self {
            ball,
            cap,
            x0,
            lambda: 1.0,
            rule: GaussLegendre::new(H0_ORDER),
        };
        let (r, psi) = polar(&ball, x0);
        let raw = h.raw(r, psi, &h.rule.clone());
        if !(raw > 0.0) {
            return Err(Error::invalid("h0 profile vanishes at x0"));
        }
        h.lambda = 0.5 / raw;
        Ok(h)
    }

    /// The normaliser `λ`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Unnormalised boundary profile `g` at polar angle `ψ`.
    #[inline]
    pub fn profile(&self, psi: f64) -> f64 {
        self.cap.geodesic_distance_at(self.ball.radius, psi)
    }

    /// `λ·g(ξ)` for `ξ ∈ ∂B` (the radial projection is used for other points).
    pub fn boundary_value(&self, xi: Point) -> f64 {
        self.lambda * self.profile(CapSet::polar_angle(&self.ball, xi))
    }

    /// `max_{∂B} h₀ = λ·R(π − θ_A)`, which is also `max_{D̄} h₀`.
    pub fn max_value(&self) -> f64 {
        self.lambda * self.profile(PI)
    }

    /// Poisson integral of `g` at radius `r`, polar angle `ψ`.
    fn raw(&self, r: f64, psi: f64, rule: &GaussLegendre) -> f64 {
        let big_r = self.ball.radius;
        if r >= big_r {
            return self.profile(psi);
        }
        let theta_a = self.cap.half_angle;
        let depth = big_r - r;
        let mut bps = Vec::with_capacity(64);
        graded_about(theta_a, PI, psi, 0.5 * depth / big_r, &mut bps);
        let sp = psi.sin();
        let rr = 2.0 * r * big_r;
        let base = depth * depth;
        let sum = rule.integrate_panels(&bps, |t| {
            let st = t.sin();
            let half = 0.5 * (psi - t);
            let s_half = half.sin();
            // a − b = |x − ξ|² at the nearest azimuth, written without cancellation
            let amb = base + 2.0 * rr * s_half * s_half;
            let b = rr * sp * st;
            let apb = amb + 2.0 * b;
            let e = elliptic_e_complement(amb / apb);
            self.profile(t) * st * 4.0 * e / (amb * apb.sqrt())
        });
        (big_r * big_r - r * r) * big_r / (4.0 * PI) * sum
    }

    /// `h₀(x)` for `x ∈ B̄`; points outside the closed ball are rejected.
    pub fn eval(&self, x: Point) -> Result<f64> {
        let (r, psi) = polar(&self.ball, x);
        if r > self.ball.radius * (1.0 + 1e-12) {
            return Err(Error::Exterior { point: x });
        }
        Ok(self.lambda * self.raw(r, psi, &self.rule))
    }

    /// `h₀(x)` computed twice (nodes doubled); disagreement beyond `tol`
    /// (relative) is reported.
    pub fn eval_checked(&self, x: Point, tol: f64) -> Result<f64> {
        let coarse = self.eval(x)?;
        let (r, psi) = polar(&self.ball, x);
        let fine = self.lambda * self.raw(r, psi, &GaussLegendre::new(2 * H0_ORDER));
        let scale = fine.abs().max(1e-300);
        if (coarse - fine).abs() <= tol * scale {
            Ok(fine)
        } else {
            Err(Error::QuadratureUnstable {
                coarse,
                refined: fine,
                tolerance: tol,
            })
        }
    }

    /// Log-log slope of `h₀` against the distance to `∂B` along the inward
    /// normal at the boundary point with polar angle `psi`, sampled at the
    /// given distances.
    pub fn linear_growth_check(&self, psi: f64, distances: &[f64]) -> Result<LineFit> {
        let axis = CapSet::axis();
        let (e1, _) = axis.orthonormal_frame();
        let dir = axis * psi.cos() + e1 * psi.sin();
        let mut xs = Vec::with_capacity(distances.len());
        let mut ys = Vec::with_capacity(distances.len());
        for &d in distances {
            if !(d > 0.0 && d < self.ball.radius) {
                return Err(Error::invalid("sample distances must lie in (0, R)"));
            }
            let x = self.ball.center + dir * (self.ball.radius - d);
            let h = self.eval(x)?;
            xs.push(d.log2());
            ys.push(h.log2());
        }
        fit_line(&xs, &ys).ok_or_else(|| Error::invalid("need at least two distinct distances"))
    }

    /// Smallest `h₀` over lattice points of spacing `spacing` at distance at
    /// least `clearance` from the cap, with its location.
    pub fn min_away_from_cap(&self, clearance: f64, spacing: f64) -> Result<(f64, Point)> {
        if !(spacing > 0.0) {
            return Err(Error::invalid("spacing must be positive"));
        }
        let r = self.ball.radius;
        let n = (r / spacing).ceil() as i64;
        let mut best = (f64::INFINITY, self.ball.center);
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let x = self.ball.center + Point::new(i as f64, j as f64, k as f64) * spacing;
                    if !self.ball.contains(x) || self.distance_to_cap(x) < clearance {
                        continue;
                    }
                    let h = self.eval(x)?;
                    if h < best.0 {
                        best = (h, x);
                    }
                }
            }
        }
        Ok(best)
    }

    /// Euclidean distance from `x` to the cap `A ⊂ ∂B`.
    pub fn distance_to_cap(&self, x: Point) -> f64 {
        let (r, psi) = polar(&self.ball, x);
        let big_r = self.ball.radius;
        let theta = psi.min(self.cap.half_angle);
        // nearest cap point lies in the meridian plane of x
        let d2 = r * r + big_r * big_r - 2.0 * r * big_r * (psi - theta).cos();
        d2.max(0.0).sqrt()
    }

    /// Check of the standing assumption that `h₀ ≥ 1/2` away from the
    /// neighbourhood `{dist(·, A) < 1/2}` of the cap, and that `h₀ ≤ 1`.
    pub fn s4_check(&self, spacing: f64) -> Result<S4Report> {
        let (min_h0, location) = self.min_away_from_cap(0.5, spacing)?;
        Ok(S4Report {
            min_h0,
            location,
            max_h0: self.max_value(),
        })
    }
}

/// Outcome of [`MinorantH0::s4_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S4Report {
    pub min_h0: f64,
    pub location: Point,
    pub max_h0: f64,
}

impl S4Report {
    pub fn holds(&self) -> bool {
        self.min_h0 >= 0.5 && self.max_h0 <= 1.0
    }
}

/// Tabulated `h₀` for bulk evaluation.
///
/// Stores `Q = h₀ / (λ(dist + g(ψ)))`, which stays bounded above and below up
/// to the boundary, on a grid in `(log₂ s, u)` with `s = dist/R`. The angular
/// coordinate `u ∈ [0, 1]` is a normalised
/// `ζ(ψ) = asinh((ψ − θ_A)/s) − asinh((π − ψ)/s)`, which stretches the layers
/// of width `~s` at the cap edge and at the antipode, where the boundary
/// profile has a kink. Lookups are bicubic; depths below the table are clamped
/// to the last row. Points with `s > 1/8` are cheap to evaluate directly and are
/// not tabulated.
#[derive(Debug, Clone, PartialEq)]
pub struct H0Table {
    h0: MinorantH0,
    rows: usize,
    cols: usize,
    rows_per_octave: f64,
    q: Vec<f64>,
}

const TABLE_TOP_OCTAVE: u32 = 2;

/// The stretched angle and its range over `[0, π]`.
#[inline]
fn zeta(theta_a: f64, s: f64, psi: f64) -> f64 {
    ((psi - theta_a) / s).asinh() - ((PI - psi) / s).asinh()
}

#[inline]
fn unit_angle(theta_a: f64, s: f64, psi: f64) -> f64 {
    let lo = zeta(theta_a, s, 0.0);
    let hi = zeta(theta_a, s, PI);
    (zeta(theta_a, s, psi) - lo) / (hi - lo)
}

impl H0Table {
    /// Table from `s = 1/4` down to `s = 2^{-octaves}` with `cols` angular nodes per row.
    pub fn build(h0: &MinorantH0, octaves: u32, rows_per_octave: u32, cols: usize) -> Result<Self> {
        if octaves <= TABLE_TOP_OCTAVE || rows_per_octave == 0 || cols < 4 {
            return Err(Error::invalid("table resolution too small"));
        }
        let big_r = h0.ball.radius;
        let rows = ((octaves - TABLE_TOP_OCTAVE) * rows_per_octave + 1) as usize;
        let rpo = rows_per_octave as f64;
        let theta_a = h0.cap.half_angle;
        let mut q = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let s = libm::exp2(-(TABLE_TOP_OCTAVE as f64) - i as f64 / rpo);
            let r = big_r * (1.0 - s);
            for j in 0..cols {
                let target = j as f64 / (cols - 1) as f64;
                // invert the monotone map u(ψ) by bisection
                let (mut lo, mut hi) = (0.0, PI);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if unit_angle(theta_a, s, mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let psi = 0.5 * (lo + hi);
                let h = h0.lambda * h0.raw(r, psi, &h0.rule);
                q.push(h / (h0.lambda * (big_r * s + h0.profile(psi))));
            }
        }
        Ok(Self {
            h0: h0.clone(),
            rows,
            cols,
            rows_per_octave: rpo,
            q,
        })
    }

    /// Default resolution: down to `s ≈ 10⁻⁶`.
    pub fn new(h0: &MinorantH0) -> Result<Self> {
        Self::build(h0, 20, 4, 512)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Catmull-Rom interpolation at fractional indices `(t, u)`.
    fn bicubic(&self, t: f64, u: f64) -> f64 {
        let i = (t.floor() as usize).min(self.rows - 2);
        let j = (u.floor() as usize).min(self.cols - 2);
        let (ft, fu) = (t - i as f64, u - j as f64);
        let wt = catmull_rom(ft);
        let wu = catmull_rom(fu);
        let mut acc = 0.0;
        for (a, wa) in wt.iter().enumerate() {
            let ii = (i as isize + a as isize - 1).clamp(0, self.rows as isize - 1) as usize;
            let row = &self.q[ii * self.cols..(ii + 1) * self.cols];
            let mut inner = 0.0;
            for (b, wb) in wu.iter().enumerate() {
                let jj = (j as isize + b as isize - 1).clamp(0, self.cols as isize - 1) as usize;
                inner += wb * row[jj];
            }
            acc += wa * inner;
        }
        acc
    }

    /// Interpolated `h₀(x)` for `x ∈ B̄` (no interior check; exterior points
    /// are treated as boundary points).
    pub fn eval(&self, x: Point) -> f64 {
        let h0 = &self.h0;
        let big_r = h0.ball.radius;
        let (r, psi) = polar(&h0.ball, x);
        let depth = (big_r - r).max(0.0);
        let g = h0.profile(psi);
        if depth == 0.0 {
            return h0.lambda * g;
        }
        let s = depth / big_r;
        // the first octave of rows only serves as interpolation support
        if s > libm::exp2(-(TABLE_TOP_OCTAVE as f64) - 1.0) {
            return h0.lambda * h0.raw(r, psi, &h0.rule);
        }
        let t = ((-s.log2() - TABLE_TOP_OCTAVE as f64) * self.rows_per_octave).clamp(0.0, (self.rows - 1) as f64);
        let last = (self.cols - 1) as f64;
        let u = (unit_angle(h0.cap.half_angle, s, psi) * last).clamp(0.0, last);
        self.bicubic(t, u) * h0.lambda * (depth + g)
    }
}

/// Weights of the four neighbours `-1, 0, 1, 2` at fraction `f`.
#[inline]
fn catmull_rom(f: f64) -> [f64; 4] {
    let f2 = f * f;
    let f3 = f2 * f;
    [
        0.5 * (-f3 + 2.0 * f2 - f),
        0.5 * (3.0 * f3 - 5.0 * f2 + 2.0),
        0.5 * (-3.0 * f3 + 4.0 * f2 + f),
        0.5 * (f3 - f2),
    ]
}

/// `K(x) = h₀(x)^{-α} ∨ M₀`, the bound on `f(u)` for every `u ≥ h₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularMajorant {
    pub nl: Nonlinearity,
    pub table: H0Table,
}

impl SingularMajorant {
    pub fn new(nl: Nonlinearity, table: H0Table) -> Self {
        Self { nl, table }
    }

    /// `K` as a function of the value `h₀(x)`.
    #[inline]
    pub fn from_h0(&self, h: f64) -> f64 {
        if h > 0.0 {
            h.powf(-self.nl.alpha).max(self.nl.m0())
        } else {
            f64::INFINITY
        }
    }

    /// `K(x)` with `h₀` from the table.
    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        self.from_h0(self.table.eval(x))
    }
}

/// The nonnegative perturbation `ψ` in `φ = (1 + C₁)h₀ + margin·ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    /// `ψ ≡ 1`.
    Constant,
    /// `ψ = g / max g`, the normalised distance to the cap.
    CapDistance,
}

/// Boundary data `φ = factor·((1 + C₁)h₀ + margin·ψ)` on `∂B`.
///
/// Its harmonic extension is known in closed form in terms of `h₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub c1: f64,
    pub margin: f64,
    pub psi: Perturbation,
    pub factor: f64,
}

impl BoundaryData {
    pub fn new(c1: f64, margin: f64, psi: Perturbation) -> Result<Self> {
        if !(c1 >= 0.0 && c1.is_finite()) {
            return Err(Error::invalid("C1 must be finite and nonnegative"));
        }
        if !margin.is_finite() {
            return Err(Error::invalid("margin must be finite"));
        }
        Ok(Self {
            c1,
            margin,
            psi,
            factor: 1.0,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            factor: self.factor * factor,
            ..self.clone()
        }
    }

    /// True when `φ ≥ (1 + C₁)h₀` holds for the given `C₁`.
    pub fn satisfies_hypothesis(&self, c1_required: f64) -> bool {
        self.margin >= 0.0 && self.factor >= 1.0 && self.c1 >= c1_required
    }

    /// `φ` as a function of the boundary value `h₀(ξ)`.
    fn combine(&self, h0_value: f64, h0: &MinorantH0) -> f64 {
        let psi = match self.psi {
            Perturbation::Constant => 1.0,
            Perturbation::CapDistance => h0_value / h0.max_value(),
        };
        self.factor * ((1.0 + self.c1) * h0_value + self.margin * psi)
    }

    /// `φ(ξ)` at a boundary point.
    pub fn eval(&self, h0: &MinorantH0, xi: Point) -> f64 {
        self.combine(h0.boundary_value(xi), h0)
    }

    /// The harmonic extension `h_φ` at `x ∈ B̄`, given `h₀(x)`.
    pub fn extension_from_h0(&self, h0: &MinorantH0, h0_value: f64) -> f64 {
        self.combine(h0_value, h0)
    }

    /// The harmonic extension `h_φ(x)`.
    pub fn extension(&self, h0: &MinorantH0, x: Point) -> Result<f64> {
        Ok(self.combine(h0.eval(x)?, h0))
    }
}
