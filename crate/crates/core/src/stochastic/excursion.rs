//! Level-hit sequence and per-level visits of a path in the dyadic strips.
//!
//! `V₀` is the first hit of any level `U_k`, and `V_{n+1}` the first hit after
//! `V_n` of a level other than the one hit at `V_n`. A visit to level `j` starts
//! at a `V_n` on `U_j` (`C_i^j`) and ends at `V_{n+1}` (`D_i^j`), which by
//! continuity lies on `U_{j+1}` or `U_{j−1}`; if the path ends first, the visit
//! is closed at the end time.

use alloc::vec::Vec;

use crate::geometry::{DyadicStrips, Point};

/// How a visit to a level ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExitSide {
    /// Reached the next deeper level `U_{j+1}`.
    Deeper,
    /// Reached the next shallower level `U_{j−1}`.
    Shallower,
    /// The path ended first (absorbed at `∂D` or left the region).
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionRecord {
    pub level: u32,
    /// 1-based visit count at this level.
    pub visit: u32,
    pub entry: f64,
    pub exit: f64,
    pub side: ExitSide,
}

impl ExcursionRecord {
    pub fn duration(&self) -> f64 {
        self.exit - self.entry
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelHit {
    pub level: u32,
    pub time: f64,
}

/// Streaming level-crossing detector; feed samples in time order.
#[derive(Debug, Clone)]
pub struct ExcursionTracker {
    strips: DyadicStrips,
    prev: Option<(f64, f64)>,
    hits: Vec<LevelHit>,
}

impl ExcursionTracker {
    pub fn new(strips: DyadicStrips) -> Self {
        Self {
            strips,
            prev: None,
            hits: Vec::new(),
        }
    }

    pub fn reset(&mut self) {
        self.prev = None;
        self.hits.clear();
    }

    pub fn hits(&self) -> &[LevelHit] {
        &self.hits
    }

    fn record(&mut self, level: u32, time: f64) {
        if self.hits.last().map(|h| h.level) != Some(level) {
            self.hits.push(LevelHit { level, time });
        }
    }

    /// Add the sample `X_t = x`. Crossings of `δ = 2^{-k}` between the previous
    /// sample and this one are located by linear interpolation in `δ`.
    pub fn push(&mut self, t: f64, x: Point) {
        let d1 = x.height() - self.strips.anchor.height();
        let inside = (x - self.strips.anchor).lateral_norm() < self.strips.radius;
        let k_max = self.strips.k_max;
        match self.prev {
            None => {
                if inside {
                    if let Some(k) = (1..=k_max).find(|&k| DyadicStrips::level_depth(k) == d1) {
                        self.record(k, t);
                    }
                }
            }
            Some((t0, d0)) if inside && d0 != d1 => {
                let crossing = |k: u32| {
                    let level = DyadicStrips::level_depth(k);
                    let hit = (d0 > level && d1 <= level) || (d0 < level && d1 >= level);
                    hit.then(|| (k, t0 + (t - t0) * (d0 - level) / (d0 - d1)))
                };
                if d1 < d0 {
                    for k in 1..=k_max {
                        if let Some((k, tc)) = crossing(k) {
                            self.record(k, tc);
                        }
                    }
                } else {
                    for k in (1..=k_max).rev() {
                        if let Some((k, tc)) = crossing(k) {
                            self.record(k, tc);
                        }
                    }
                }
            }
            _ => {}
        }
        self.prev = Some((t, d1));
    }

    /// Close the path at `t_end` and group the hits into visits.
    pub fn finish(&self, t_end: f64) -> Vec<ExcursionRecord> {
        let mut visits = alloc::vec![0u32; self.strips.k_max as usize + 1];
        let mut out = Vec::with_capacity(self.hits.len());
        for (n, hit) in self.hits.iter().enumerate() {
            visits[hit.level as usize] += 1;
            let (exit, side) = match self.hits.get(n + 1) {
                Some(next) if next.level > hit.level => (next.time, ExitSide::Deeper),
                Some(next) => (next.time, ExitSide::Shallower),
                None => (t_end, ExitSide::Absorbed),
            };
            out.push(ExcursionRecord {
                level: hit.level,
                visit: visits[hit.level as usize],
                entry: hit.time,
                exit,
                side,
            });
        }
        out
    }
}

/// Excursion records of a sampled path `[(t, X_t)]`.
pub fn excursion_decompose(path: &[(f64, Point)], strips: &DyadicStrips) -> Vec<ExcursionRecord> {
    let mut tracker = ExcursionTracker::new(*strips);
    for &(t, x) in path {
        tracker.push(t, x);
    }
    tracker.finish(path.last().map_or(0.0, |p| p.0))
}
