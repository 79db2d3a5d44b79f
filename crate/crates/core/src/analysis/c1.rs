//! Estimate of `C₁ = sup_x E_x ∫₀^τ K(X_s) ds / h₀(x)`.
//!
//! `h₀` and `K` are symmetric about the cap axis, so probes only need to cover
//! one meridian half-plane.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{CapSet, Point};
use crate::kernels::{green_integral, QuadratureSpec};
use crate::problem::{MinorantH0, SingularMajorant};

/// Probe layout: depths `2^{-1} .. 2^{-k_max}` below `∂B`, each at a uniform
/// set of polar angles plus a set packed over the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct C1Probes {
    pub k_max: u32,
    pub angles: usize,
    pub cap_angles: usize,
}

impl Default for C1Probes {
    fn default() -> Self {
        Self {
            k_max: 8,
            angles: 12,
            cap_angles: 6,
        }
    }
}

/// The point at distance `r` from the centre and polar angle `psi` from the cap axis.
pub fn meridian_point(h0: &MinorantH0, r: f64, psi: f64) -> Point {
    let axis = CapSet::axis();
    let (e1, _) = axis.orthonormal_frame();
    h0.ball.center + (axis * psi.cos() + e1 * psi.sin()) * r
}

pub fn c1_probe_points(h0: &MinorantH0, probes: &C1Probes) -> Vec<Point> {
    let big_r = h0.ball.radius;
    let theta = h0.cap.half_angle;
    let mut psis: Vec<f64> = (0..probes.angles)
        .map(|i| core::f64::consts::PI * (i as f64 + 0.5) / probes.angles as f64)
        .collect();
    psis.extend((0..=probes.cap_angles).map(|i| theta * i as f64 / probes.cap_angles.max(1) as f64));
    let mut pts = alloc::vec![h0.ball.center];
    for k in 1..=probes.k_max {
        let r = big_r * (1.0 - libm::ldexp(1.0, -(k as i32)));
        pts.extend(psis.iter().map(|&psi| meridian_point(h0, r, psi)));
    }
    pts
}

/// One probe of the ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Sample {
    pub x: Point,
    pub h0: f64,
    pub green: f64,
    pub ratio: f64,
}

/// One probe: `E_x ∫ k / h₀(x)`, usually with `k = K`.
pub fn c1_ratio(h0: &MinorantH0, k: &dyn Fn(Point) -> f64, x: Point, q: &QuadratureSpec) -> Result<C1Sample> {
    let h = h0.eval(x)?;
    let green = green_integral(&h0.ball, x, k, q)?;
    Ok(C1Sample {
        x,
        h0: h,
        green,
        ratio: green / h,
    })
}

/// `Ĉ₁` with its maximiser, from probes evaluated at successive quadrature
/// refinement levels.
#[derive(Debug, Clone, PartialEq)]
pub struct C1Estimate {
    pub value: f64,
    pub location: Point,
    pub probes: C1Probes,
    /// `Ĉ₁` at each refinement level, coarsest first; `value` is the last.
    pub history: Vec<f64>,
    /// Samples at the finest level.
    pub samples: Vec<C1Sample>,
}

impl C1Estimate {
    /// Assemble from per-level sample sets (same probes at every level).
    pub fn from_levels(probes: C1Probes, levels: Vec<Vec<C1Sample>>) -> Result<Self> {
        let mut history = Vec::with_capacity(levels.len());
        let mut last = None;
        for samples in levels {
            let best = samples
                .iter()
                .copied()
                .filter(|s| s.ratio.is_finite())
                .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
                .ok_or_else(|| Error::InsufficientSamples("no finite C1 probe".into()))?;
            history.push(best.ratio);
            last = Some((best, samples));
        }
        let (best, samples) = last.ok_or_else(|| Error::InsufficientSamples("no refinement levels".into()))?;
        if !(best.ratio > 0.0) {
            return Err(Error::InsufficientSamples("C1 estimate is not positive".into()));
        }
        Ok(Self {
            value: best.ratio,
            location: best.x,
            probes,
            history,
            samples,
        })
    }

    /// Relative change of `Ĉ₁` over the last refinement.
    pub fn refinement_change(&self) -> f64 {
        match self.history.as_slice() {
            [.., a, b] => (b - a).abs() / b.abs(),
            _ => f64::INFINITY,
        }
    }
}

/// Sequential [`C1Estimate`] over the probe set, once per quadrature level
/// (coarsest first).
pub fn estimate_c1(h0: &MinorantH0, m: &SingularMajorant, probes: &C1Probes, levels: &[QuadratureSpec]) -> Result<C1Estimate> {
    let pts = c1_probe_points(h0, probes);
    let k = |y: Point| m.eval(y);
    let levels = levels
        .iter()
        .map(|q| pts.iter().map(|&x| c1_ratio(h0, &k, x, q)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    C1Estimate::from_levels(*probes, levels)
}
