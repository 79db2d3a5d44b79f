//! Boundary-Harnack comparisons of two fixed points `u₁`, `u₂` near the cap.


use crate::error::{Error, Result};
use crate::geometry::{CapSet, Point};
use crate::solver::{DiscreteProblem, GridField};

/// Closed axis-aligned cube `{y : |y − center|_∞ ≤ half_width}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeRegion {
    pub center: Point,
    pub half_width: f64,
}

impl CubeRegion {
    pub fn contains(&self, x: Point) -> bool {
        (0..crate::geometry::DIM).all(|a| (x.0[a] - self.center.0[a]).abs() <= self.half_width)
    }

    /// A cube over the cap pole, `depth` below `∂B`.
    pub fn over_cap(h0: &crate::problem::MinorantH0, depth: f64, half_width: f64) -> Self {
        Self {
            center: h0.ball.center + CapSet::axis() * (h0.ball.radius - depth),
            half_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BhpReport {
    /// Nodes of the grid inside the region.
    pub nodes: usize,
    /// Nodes skipped because `u₂ < 10⁻¹⁰`.
    pub excluded: usize,
    pub lower_violations: usize,
    pub upper_violations: usize,
    /// Inner sandwich `h₀ − ε ≤ u_i ≤ h_i + ε` failures over the region, both fields.
    pub inner_violations: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `sup u₁/u₂ / inf u₁/u₂` over the region.
    pub c_hat: f64,
    /// Smallest `c₁` with `u₁/u₂ ≤ c₁ E_{x₀} φ₁` on the region.
    pub c1_fit: f64,
    /// Largest `c₂` with `c₂ / E_{x₀} φ₂ ≤ u₁/u₂` on the region.
    pub c2_fit: f64,
}

impl BhpReport {
    pub fn holds(&self) -> bool {
        self.nodes > self.excluded && self.lower_violations == 0 && self.upper_violations == 0 && self.inner_violations == 0
    }
}

/// Check `h₀/h₂ ≤ u₁/u₂ ≤ h₁/h₀` at the grid nodes in `region`, allowing each
/// of `u₁`, `u₂` an error of `eps` in the direction that favours the bound.
///
/// `e1`, `e2` are `E_{x₀} φ₁(X_τ)` and `E_{x₀} φ₂(X_τ)`.
#[allow(clippy::too_many_arguments)]
pub fn bhp_check(p1: &DiscreteProblem, u1: &GridField, p2: &DiscreteProblem, u2: &GridField, region: &CubeRegion, eps: f64, e1: f64, e2: f64) -> Result<BhpReport> {
    if !(u1.conformable(u2) && u1.conformable(p1.harmonic()) && u2.conformable(p2.harmonic())) {
        return Err(Error::NonConformable);
    }
    let h0 = p1.h0_nodes().values();
    let h1 = p1.harmonic_exact();
    let h2 = p2.harmonic_exact();
    let mut rep = BhpReport {
        nodes: 0,
        excluded: 0,
        lower_violations: 0,
        upper_violations: 0,
        inner_violations: 0,
        ratio_min: f64::INFINITY,
        ratio_max: 0.0,
        c_hat: f64::NAN,
        c1_fit: f64::NAN,
        c2_fit: f64::NAN,
    };
    for (i, &x) in u1.grid().nodes().iter().enumerate() {
        if !region.contains(x) {
            continue;
        }
        rep.nodes += 1;
        let (a, b) = (u1.values()[i], u2.values()[i]);
        let (g0, g1, g2) = (h0[i], h1.values()[i], h2.values()[i]);
        if a < g0 - eps || b < g0 - eps || a > g1 + eps || b > g2 + eps {
            rep.inner_violations += 1;
        }
        if b < 1e-10 {
            rep.excluded += 1;
            continue;
        }
        let ratio = a / b;
        rep.ratio_min = rep.ratio_min.min(ratio);
        rep.ratio_max = rep.ratio_max.max(ratio);
        let most = (a + eps) / (b - eps).max(1e-300);
        let least = (a - eps) / (b + eps);
        if g2 > 0.0 && most < g0 / g2 {
            rep.lower_violations += 1;
        }
        if g0 > 0.0 && least > g1 / g0 {
            rep.upper_violations += 1;
        }
    }
    if rep.nodes > rep.excluded {
        rep.c_hat = rep.ratio_max / rep.ratio_min;
        rep.c1_fit = rep.ratio_max / e1;
        rep.c2_fit = rep.ratio_min * e2;
    }
    Ok(rep)
}
