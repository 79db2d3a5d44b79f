use std::path::{Path, PathBuf};
use std::sync::Arc;

use sbvp_core::analysis::{c1_probe_points, c1_ratio, C1Estimate, C1Probes};
use sbvp_core::problem::{H0Table, Reaction};
use sbvp_core::solver::{DiscreteProblem, PicardOptions};
use sbvp_core::{BallGrid, GridField, MinorantH0, QuadratureSpec, SingularMajorant, SolveReport};

use crate::config::RunConfig;
use crate::error::{LabError, LabResult};
use crate::parallel::par_map;

/// Everything a command needs besides its own parameters.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub cfg: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunContext {
    pub fn new(cfg: RunConfig, config_hash: String, seed: Option<u64>, out: impl Into<PathBuf>) -> Self {
        let seed = seed.unwrap_or(cfg.mc.seed);
        Self {
            cfg,
            config_hash,
            seed,
            out: out.into(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }
}

pub fn majorant(cfg: &RunConfig, h0: &MinorantH0) -> LabResult<SingularMajorant> {
    Ok(SingularMajorant::new(cfg.nonlinearity()?, H0Table::new(h0)?))
}

/// `Ĉ₁` over the probe set, one quadrature level after another, with the
/// probes of each level spread over the pool.
pub fn estimate_c1_parallel(h0: &MinorantH0, m: &SingularMajorant, probes: &C1Probes, levels: &[QuadratureSpec]) -> LabResult<C1Estimate> {
    let pts = c1_probe_points(h0, probes);
    let k = |y| m.eval(y);
    let mut per_level = Vec::with_capacity(levels.len());
    for q in levels {
        per_level.push(par_map(&pts, |&x| Ok(c1_ratio(h0, &k, x, q)?))?);
    }
    Ok(C1Estimate::from_levels(*probes, per_level)?)
}

/// The configured `C₁`, or an estimate when none is given.
pub fn resolve_c1(cfg: &RunConfig, h0: &MinorantH0) -> LabResult<(f64, Option<C1Estimate>)> {
    if let Some(c1) = cfg.problem.c1 {
        return Ok((c1, None));
    }
    let m = majorant(cfg, h0)?;
    let est = estimate_c1_parallel(h0, &m, &cfg.c1_probes(), &cfg.quad_levels()?)?;
    Ok((est.value, Some(est)))
}

pub fn picard_options(cfg: &RunConfig) -> PicardOptions {
    PicardOptions {
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
        damping: cfg.solver.damping,
        ..PicardOptions::default()
    }
}

pub struct Solved {
    pub prob: DiscreteProblem,
    pub u: GridField,
    pub report: SolveReport,
}

/// Damped Picard solve of the problem with `φ` built from `c1` and scaled by
/// `factor`, on a grid of spacing `h`.
pub fn solve_on(cfg: &RunConfig, h0: &MinorantH0, grid: &Arc<BallGrid>, c1: f64, factor: f64, f: &dyn Reaction) -> LabResult<Solved> {
    let phi = cfg.boundary_data(c1)?.scaled(factor);
    let mut prob = DiscreteProblem::new(grid.clone(), h0, &phi)?;
    let (u, report) = prob.picard_solve(f, &picard_options(cfg)).map_err(|e| match e {
        sbvp_core::Error::ConeBreach { value, location } => LabError::Convergence(format!(
            "an iterate left the admissible cone (f evaluated at {value} at {location:?})"
        )),
        other => other.into(),
    })?;
    Ok(Solved { prob, u, report })
}

/// A second problem with the same `h₀` on the same grid, reusing the nodal
/// `h₀` values.
pub fn sibling(prob: &DiscreteProblem, cfg: &RunConfig, c1: f64, factor: f64) -> LabResult<DiscreteProblem> {
    let phi = cfg.boundary_data(c1)?.scaled(factor);
    Ok(DiscreteProblem::with_h0_nodes(prob.h0(), &phi, prob.h0_nodes().clone())?)
}
