//! Brownian motion conditioned to leave a strip box through its bottom face,
//! realised by rejection: run ordinary paths in `Q` and keep those that exit
//! through the bottom. The kept paths have exactly the law of the Doob
//! h-transform with `h = P_·(exit through the bottom)`.

use alloc::vec::Vec;

use rand::Rng;

use super::paths::{em_path_collect, PathConfig, PathOutcome};
use super::stats::{ks_two_sample, KsResult};
use crate::error::{Error, Result};
use crate::geometry::{Domain, DyadicStrips, Point, StripBox, StripExit};

/// Counters of a rejection run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConditionedRun {
    pub attempts: u64,
    pub accepted: u64,
    pub truncated: u64,
}

impl ConditionedRun {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

/// Draw paths from `x` in `region` until `n_accept` have left through the
/// bottom face, passing each accepted path to `on_accept`.
///
/// Once `min_attempts` paths have been tried, an acceptance rate below `floor`
/// aborts the run.
#[allow(clippy::too_many_arguments)]
pub fn conditioned_paths_rejection<R: Rng + ?Sized>(
    region: &StripBox,
    x: Point,
    n_accept: u64,
    cfg: &PathConfig,
    rng: &mut R,
    floor: f64,
    min_attempts: u64,
    mut on_accept: impl FnMut(&[(f64, Point)], &PathOutcome),
) -> Result<ConditionedRun> {
    if n_accept == 0 {
        return Err(Error::invalid("n_accept must be positive"));
    }
    if !region.contains(x) {
        return Err(Error::Exterior { point: x });
    }
    let mut run = ConditionedRun::default();
    let mut path = Vec::new();
    while run.accepted < n_accept {
        let out = em_path_collect(region, x, cfg, rng, &mut path)?;
        run.attempts += 1;
        if out.truncated {
            run.truncated += 1;
        } else if region.nearest_face(out.exit).0 == StripExit::Bottom {
            run.accepted += 1;
            on_accept(&path, &out);
        }
        if run.attempts >= min_attempts && run.acceptance_rate() < floor {
            return Err(Error::AcceptanceFloor {
                rate: run.acceptance_rate(),
                floor,
                attempts: run.attempts,
            });
        }
    }
    Ok(run)
}

/// Strong-Markov check of the conditioned law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovCheck {
    pub pairs: usize,
    pub ks: KsResult,
}

/// Split each conditioned path from `x` at its first sample at or below
/// `U_level`, and compare the remaining lifetime with that of a fresh
/// conditioned path started at the split point.
pub fn markov_consistency<R: Rng + ?Sized>(
    region: &StripBox,
    x: Point,
    level: u32,
    n: u64,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<MarkovCheck> {
    let depth = DyadicStrips::level_depth(level);
    if !(region.depth(x) > depth && depth < region.height) {
        return Err(Error::invalid("start must lie above the split level"));
    }
    let mut splits: Vec<(Point, f64)> = Vec::with_capacity(n as usize);
    conditioned_paths_rejection(region, x, n, cfg, rng, 0.0, u64::MAX, |path, out| {
        // split at the first sample past the level: a stopping time of the
        // discrete path, so the restart point is exactly where the path was
        let hit = path.iter().find(|(_, p)| region.depth(*p) <= depth);
        if let Some(&(t, p)) = hit {
            if region.contains(p) {
                splits.push((p, out.exit_time - t));
            }
        }
    })?;
    let continued: Vec<f64> = splits.iter().map(|s| s.1).collect();
    let mut fresh = Vec::with_capacity(splits.len());
    for &(p, _) in &splits {
        conditioned_paths_rejection(region, p, 1, cfg, rng, 0.0, u64::MAX, |_, out| fresh.push(out.exit_time))?;
    }
    let ks = ks_two_sample(&continued, &fresh).ok_or_else(|| Error::InsufficientSamples("no split paths".into()))?;
    Ok(MarkovCheck {
        pairs: splits.len(),
        ks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{wos_harmonic, RngStream};

    fn cfg() -> PathConfig {
        PathConfig::new(1e-3, 1e-4, 10_000_000).unwrap().with_adaptive(0.01).unwrap()
    }

    fn unit_region() -> StripBox {
        StripBox::new(Point::ORIGIN, 1.0, 1.0).unwrap()
    }

    #[test]
    fn acceptance_matches_bottom_harmonic_measure() {
        let q = unit_region();
        let x = Point::new(0.0, 0.0, 0.5);
        let mut rng = RngStream::new(11, 0);
        let mut at_bottom = 0;
        let run = conditioned_paths_rejection(&q, x, 1000, &cfg(), &mut rng, 0.01, 100, |path, out| {
            assert!(q.depth(out.exit) <= 1e-12);
            assert_eq!(path.last().unwrap().1, out.exit);
            at_bottom += 1;
        })
        .unwrap();
        assert_eq!(at_bottom, 1000);
        let p = run.acceptance_rate();
        assert!(p > 0.0 && p < 1.0);
        // direct estimate of P_x(exit through bottom) by walk on spheres
        let mut rng = RngStream::new(11, 1);
        let wos_cfg = PathConfig::new(1e-3, 1e-5, 100_000).unwrap();
        let direct = wos_harmonic(&q, x, |xi| (q.nearest_face(xi).0 == StripExit::Bottom) as u8 as f64, 20_000, &wos_cfg, &mut rng).unwrap();
        let se_rej = (p * (1.0 - p) / run.attempts as f64).sqrt();
        let se = (se_rej * se_rej + direct.stderr * direct.stderr).sqrt();
        assert!((p - direct.mean).abs() < 3.0 * se + 2e-3, "{p} vs {direct:?}");
    }

    #[test]
    fn reflection_leaves_acceptance_invariant() {
        let q = unit_region();
        let run = |x: Point, task| {
            let mut rng = RngStream::new(12, task);
            conditioned_paths_rejection(&q, x, 1500, &cfg(), &mut rng, 0.0, u64::MAX, |_, _| {}).unwrap()
        };
        let a = run(Point::new(0.4, 0.2, 0.3), 0);
        let b = run(Point::new(-0.4, -0.2, 0.3), 1);
        let (pa, pb) = (a.acceptance_rate(), b.acceptance_rate());
        let se = (pa * (1.0 - pa) / a.attempts as f64 + pb * (1.0 - pb) / b.attempts as f64).sqrt();
        assert!((pa - pb).abs() < 3.0 * se, "{pa} vs {pb}");
    }

    #[test]
    fn acceptance_floor_and_validation() {
        let q = unit_region();
        let mut rng = RngStream::new(13, 0);
        let err = conditioned_paths_rejection(&q, Point::new(0.0, 0.0, 0.95), 10, &cfg(), &mut rng, 0.9, 50, |_, _| {});
        assert!(matches!(err, Err(Error::AcceptanceFloor { .. })));
        let err = conditioned_paths_rejection(&q, Point::new(0.0, 0.0, 0.5), 0, &cfg(), &mut rng, 0.0, 1, |_, _| {});
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn conditioned_law_is_markov() {
        let q = unit_region();
        let mut rng = RngStream::new(14, 0);
        let check = markov_consistency(&q, Point::new(0.0, 0.0, 0.5), 2, 1500, &cfg(), &mut rng).unwrap();
        assert_eq!(check.pairs, 1500);
        assert!(check.ks.p_value > 0.01, "{:?}", check.ks);
    }
}
