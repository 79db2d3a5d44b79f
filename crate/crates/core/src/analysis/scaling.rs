//! Excursion and occupation scaling laws of Brownian motion conditioned to
//! leave a strip box through its bottom face.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{DyadicStrips, Point, StripBox};
use crate::math::{fit_line, LineFit};
use crate::stochastic::{conditioned_paths_rejection, ConditionedRun, ExcursionTracker, ExitSide, McAccumulator, McEstimate, PathConfig};

/// A log₂-slope fit over levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// Abscissae (level index or `log₂` scale).
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl ScalingReport {
    /// Fit `log₂ value` against `x`; needs four levels with positive values.
    pub fn fit(x: Vec<f64>, values: Vec<f64>, stderr: Vec<f64>, counts: Vec<u64>, expected: f64, tolerance: f64) -> Result<Self> {
        if x.len() < 4 || values.len() != x.len() {
            return Err(Error::InsufficientSamples("a scaling fit needs at least 4 levels".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InsufficientSamples("non-positive level value".into()));
        }
        let ys: Vec<f64> = values.iter().map(|v| v.log2()).collect();
        let LineFit { slope, intercept, r_squared } = fit_line(&x, &ys).ok_or_else(|| Error::invalid("degenerate levels"))?;
        Ok(Self {
            x,
            values,
            stderr,
            counts,
            slope,
            intercept,
            r_squared,
            expected,
            tolerance,
        })
    }

    pub fn pass(&self) -> bool {
        (self.slope - self.expected).abs() <= self.tolerance
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }

    /// Smallest `Ĉ` with `value ≤ Ĉ·2^{expected·x}` at every level.
    pub fn envelope_constant(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.values)
            .map(|(x, v)| v / (self.expected * x).exp2())
            .fold(0.0, f64::max)
    }
}

/// The excursion experiment: paths from `U_1` in `Q(y₀, 1, 1)`, conditioned to
/// leave through the bottom, with levels `U_1 .. U_{k_max}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionSetup {
    pub region: StripBox,
    pub strips: DyadicStrips,
    pub start: Point,
}

impl ExcursionSetup {
    pub fn new(anchor: Point, k_max: u32) -> Result<Self> {
        let strips = DyadicStrips::new(anchor, k_max)?;
        Ok(Self {
            region: strips.q(0),
            strips,
            start: anchor + Point::new(0.0, 0.0, DyadicStrips::level_depth(1)),
        })
    }
}

/// Per-level visit counts and visit durations, mergeable across batches.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionTally {
    pub paths: u64,
    /// `reached[j][i − 1]`: paths with at least `i` visits to level `j`.
    pub reached: Vec<Vec<u64>>,
    /// Durations `D_i^j − C_i^j` of visits that ended on a neighbouring level.
    pub durations: Vec<McAccumulator>,
    pub run: ConditionedRun,
}

impl ExcursionTally {
    pub fn new(k_max: u32) -> Self {
        let n = k_max as usize + 1;
        Self {
            paths: 0,
            reached: alloc::vec![Vec::new(); n],
            durations: alloc::vec![McAccumulator::new(); n],
            run: ConditionedRun::default(),
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.paths += other.paths;
        for (a, b) in self.reached.iter_mut().zip(&other.reached) {
            if a.len() < b.len() {
                a.resize(b.len(), 0);
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.durations.iter_mut().zip(&other.durations) {
            a.merge(b);
        }
        self.run.attempts += other.run.attempts;
        self.run.accepted += other.run.accepted;
        self.run.truncated += other.run.truncated;
    }
}

/// Simulate `n_accept` conditioned paths and tally their excursions.
pub fn excursion_batch<R: Rng + ?Sized>(setup: &ExcursionSetup, n_accept: u64, cfg: &PathConfig, rng: &mut R, floor: f64) -> Result<ExcursionTally> {
    let k_max = setup.strips.k_max;
    let mut tally = ExcursionTally::new(k_max);
    let mut tracker = ExcursionTracker::new(setup.strips);
    let mut visits = alloc::vec![0usize; k_max as usize + 1];
    let run = conditioned_paths_rejection(&setup.region, setup.start, n_accept, cfg, rng, floor, 200, |path, out| {
        tracker.reset();
        for &(t, x) in path {
            tracker.push(t, x);
        }
        visits.iter_mut().for_each(|v| *v = 0);
        for rec in tracker.finish(out.exit_time) {
            let j = rec.level as usize;
            visits[j] = visits[j].max(rec.visit as usize);
            if rec.side != ExitSide::Absorbed {
                tally.durations[j].push(rec.duration());
            }
        }
        for (j, &v) in visits.iter().enumerate() {
            let row = &mut tally.reached[j];
            if row.len() < v {
                row.resize(v, 0);
            }
            row[..v].iter_mut().for_each(|c| *c += 1);
        }
        tally.paths += 1;
    })?;
    tally.run = run;
    Ok(tally)
}

/// Survival of returns to one level: `P̂(C_i^j < ∞)` against `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalFit {
    pub level: u32,
    pub p_hat: Vec<f64>,
    pub counts: Vec<u64>,
    /// Geometric ratio `ρ̂` from the fit of `ln P̂` against `i`.
    pub rho: f64,
    pub r_squared: f64,
}

impl SurvivalFit {
    pub fn is_nonincreasing(&self) -> bool {
        self.p_hat.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn pass(&self, min_r_squared: f64) -> bool {
        self.is_nonincreasing() && self.rho > 0.0 && self.rho < 1.0 && self.r_squared >= min_r_squared
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionReport {
    pub survival: Vec<SurvivalFit>,
    /// Mean visit duration against level `j`; the expected slope is −2.
    pub duration: ScalingReport,
}

/// Fits over `levels`; visit indices `i` with fewer than `min_count` paths are dropped.
pub fn excursion_stats(tally: &ExcursionTally, levels: core::ops::RangeInclusive<u32>, min_count: u64, tolerance: f64) -> Result<ExcursionReport> {
    if tally.paths == 0 {
        return Err(Error::InsufficientSamples("no accepted paths".into()));
    }
    let n = tally.paths as f64;
    let mut survival = Vec::new();
    let (mut xs, mut vals, mut errs, mut counts) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for j in levels {
        let row = tally
            .reached
            .get(j as usize)
            .ok_or_else(|| Error::invalid("level beyond k_max"))?;
        let kept: Vec<u64> = row.iter().copied().take_while(|&c| c >= min_count).collect();
        if kept.is_empty() {
            return Err(Error::InsufficientSamples(alloc::format!("level {j}: fewer than {min_count} visits")));
        }
        let p_hat: Vec<f64> = kept.iter().map(|&c| c as f64 / n).collect();
        let (rho, r_squared) = if kept.len() >= 2 {
            let is: Vec<f64> = (1..=kept.len()).map(|i| i as f64).collect();
            let ls: Vec<f64> = p_hat.iter().map(|p| p.ln()).collect();
            let fit = fit_line(&is, &ls).ok_or_else(|| Error::invalid("degenerate survival fit"))?;
            (fit.slope.exp(), fit.r_squared)
        } else {
            (f64::NAN, f64::NAN)
        };
        survival.push(SurvivalFit {
            level: j,
            p_hat,
            counts: kept,
            rho,
            r_squared,
        });
        let d = tally.durations[j as usize].finish(0.0);
        xs.push(j as f64);
        vals.push(d.mean);
        errs.push(d.stderr);
        counts.push(d.n);
    }
    let duration = ScalingReport::fit(xs, vals, errs, counts, -2.0, tolerance)?;
    Ok(ExcursionReport { survival, duration })
}

/// The occupation experiment at depth `ε = 2^{-k}`: paths from depth `ε` in
/// `Q(y₀, 2ε, 1)`, conditioned to leave through the bottom, accumulating
/// `∫ K(X_s) ds` with `K = δ^{-α} ∧ cap` by a left-point Riemann sum.
#[allow(clippy::too_many_arguments)]
pub fn occupation_batch<R: Rng + ?Sized>(anchor: Point, k: u32, alpha: f64, cap: f64, n_accept: u64, cfg: &PathConfig, rng: &mut R, floor: f64) -> Result<(McAccumulator, ConditionedRun)> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid("alpha must lie in [0, 1)"));
    }
    let eps = DyadicStrips::level_depth(k);
    let region = StripBox::new(anchor, 2.0 * eps, 1.0)?;
    let start = anchor + Point::new(0.0, 0.0, eps);
    let mut acc = McAccumulator::new();
    let kf = |d: f64| if d > 0.0 { d.powf(-alpha).min(cap) } else { cap };
    let run = conditioned_paths_rejection(&region, start, n_accept, cfg, rng, floor, 200, |path, _| {
        let sum: f64 = path.windows(2).map(|w| kf(region.depth(w[0].1)) * (w[1].0 - w[0].0)).sum();
        acc.push(sum);
    })?;
    acc.truncated = run.truncated;
    Ok((acc, run))
}

/// Fit `log₂ E∫K` against `log₂ ε` over the depths; expected slope `2 − α`.
pub fn occupation_scaling(per_depth: &[(u32, McEstimate)], alpha: f64, tolerance: f64) -> Result<ScalingReport> {
    let x = per_depth.iter().map(|(k, _)| -(*k as f64)).collect();
    let values = per_depth.iter().map(|(_, e)| e.mean).collect();
    let stderr = per_depth.iter().map(|(_, e)| e.stderr).collect();
    let counts = per_depth.iter().map(|(_, e)| e.n).collect();
    ScalingReport::fit(x, values, stderr, counts, 2.0 - alpha, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RngStream;

    fn cfg() -> PathConfig {
        PathConfig::new(1e-3, 1e-4, 10_000_000).unwrap().with_adaptive(0.02).unwrap()
    }

    #[test]
    fn fit_recovers_exact_power_laws() {
        let x: Vec<f64> = (2..=6).map(|k| -(k as f64)).collect();
        let v: Vec<f64> = x.iter().map(|x| 3.0 * (1.5 * x).exp2()).collect();
        let r = ScalingReport::fit(x.clone(), v, alloc::vec![0.0; 5], alloc::vec![1; 5], 1.5, 0.4).unwrap();
        assert!((r.slope - 1.5).abs() < 1e-12 && r.pass() && r.is_monotone_decreasing());
        assert!((r.envelope_constant() - 3.0).abs() < 1e-12);
        assert!(ScalingReport::fit(x[..3].to_vec(), alloc::vec![1.0; 3], alloc::vec![], alloc::vec![], 0.0, 1.0).is_err());
    }

    #[test]
    fn every_level_is_visited_once_and_tallies_merge() {
        let setup = ExcursionSetup::new(Point::ORIGIN, 5).unwrap();
        let a = excursion_batch(&setup, 100, &cfg(), &mut RngStream::new(3, 0), 0.01).unwrap();
        let b = excursion_batch(&setup, 100, &cfg(), &mut RngStream::new(3, 1), 0.01).unwrap();
        for t in [&a, &b] {
            assert_eq!(t.paths, 100);
            for j in 1..=5 {
                assert_eq!(t.reached[j][0], 100, "level {j}");
                assert!(t.reached[j].windows(2).all(|w| w[1] <= w[0]));
            }
        }
        let mut m = a.clone();
        m.merge(&b);
        assert_eq!(m.paths, 200);
        assert_eq!(m.reached[3][0], 200);
        assert_eq!(m.durations[2].count(), a.durations[2].count() + b.durations[2].count());
        let rep = excursion_stats(&m, 1..=4, 10, 0.4).unwrap();
        assert!(rep.survival.iter().all(|s| s.p_hat[0] == 1.0));
        assert!(rep.duration.values.iter().all(|&d| d > 0.0));
        assert!(excursion_stats(&ExcursionTally::new(5), 1..=4, 10, 0.4).is_err());
    }

    #[test]
    fn occupation_shrinks_with_depth() {
        let mut rng = RngStream::new(9, 0);
        let mut prev = f64::INFINITY;
        for k in 2..=4 {
            let (acc, run) = occupation_batch(Point::ORIGIN, k, 0.5, 1e6, 200, &cfg(), &mut rng, 0.01).unwrap();
            assert_eq!(run.accepted, 200);
            assert!(acc.mean() < prev);
            prev = acc.mean();
        }
    }
}
