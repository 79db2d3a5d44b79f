use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use sbvp_core::solver::fit_eps_disc;
use sbvp_core::{BallGrid, MinorantH0};

use crate::config::RunConfig;

use super::common::{estimate_c1_parallel, majorant, resolve_c1, solve_on, RunContext};
use super::Outcome;
use crate::error::{LabError, LabResult};
use crate::output::{ensure_dir, num, write_json, CsvOut};

const S4_SPACING: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub u_sup_norm: f64,
    pub min_u_minus_h0: f64,
    pub min_location: [f64; 3],
    pub clamp_count: u64,
    pub clamp_count_tail: u64,
    pub clamp_history: Vec<u64>,
    pub damping: f64,
    pub linear_iterations: usize,
    pub nodes: usize,
    pub h_grid: f64,
    pub c1_hat: f64,
    /// `"config"` or `"estimated"`.
    pub c1_source: &'static str,
    pub c1_history: Vec<f64>,
    pub eps_disc: f64,
    /// Smallest `h₀` at distance at least 1/2 from the cap, and `max h₀`.
    pub h0_min_off_cap: f64,
    pub h0_max: f64,
    pub wall_time: f64,
    pub config_hash: String,
    pub seed: u64,
    pub status: String,
}

/// Solve on the ball, write `solution.csv` and `report.json`.
///
/// The run succeeds when the iteration converged and `u − h₀ ≥ −ε_disc`
/// everywhere; a negative margin is refused before any work is done.
pub fn solve(ctx: &RunContext) -> LabResult<(SolveSummary, Outcome)> {
    let start = Instant::now();
    let cfg = &ctx.cfg;
    cfg.require_ball()?;
    if cfg.problem.margin < 0.0 {
        return Err(LabError::Hypothesis(format!(
            "margin {} < 0 puts the boundary data below (1 + C1)·h0 near the cap",
            cfg.problem.margin
        )));
    }
    ensure_dir(ctx.out_dir())?;
    let h0 = cfg.h0()?;
    let s4 = h0.s4_check(S4_SPACING * cfg.domain.radius)?;
    if !s4.holds() {
        eprintln!(
            "warning: h0 ranges over [{:.3}, {:.3}] away from the cap; the bounds 1/2 <= h0 <= 1 assumed there do not hold for this cap and x0",
            s4.min_h0, s4.max_h0
        );
    }
    let nl = cfg.nonlinearity()?;
    let (c1, est) = resolve_c1(cfg, &h0)?;
    let grid = Arc::new(BallGrid::new(cfg.ball()?, cfg.solver.h_grid)?);
    let solved = match solve_on(cfg, &h0, &grid, c1, 1.0, &nl) {
        Ok(s) => s,
        Err(LabError::Convergence(msg)) => return Err(classify_failure(cfg, &h0, c1, est.is_some(), msg)),
        Err(e) => return Err(e),
    };
    let disc = fit_eps_disc(&solved.prob)?;
    let (prob, u, rep) = (&solved.prob, &solved.u, &solved.report);

    let mut csv = CsvOut::create(
        &ctx.path("solution.csv"),
        "solution",
        &ctx.config_hash,
        ctx.seed,
        &["x1", "x2", "x3", "u", "h0", "h_phi", "u_minus_h0"],
    )?;
    let h0v = prob.h0_nodes().values();
    let hphi = prob.harmonic_exact();
    for (i, x) in grid.nodes().iter().enumerate() {
        let ui = u.values()[i];
        csv.row([num(x.0[0]), num(x.0[1]), num(x.0[2]), num(ui), num(h0v[i]), num(hphi.values()[i]), num(ui - h0v[i])])?;
    }
    csv.finish()?;

    let outcome = if !rep.converged {
        let msg = format!("no convergence in {} iterations (residual {:e})", rep.iterations, rep.final_residual());
        let err = classify_failure(cfg, &h0, c1, est.is_some(), msg);
        Outcome::failure(err.exit_code(), err.to_string())
    } else if rep.min_u_minus_h0 < -disc.eps {
        Outcome::failure(
            4,
            format!(
                "u - h0 reaches {:e} < -eps_disc = {:e} at {:?}; C1 is too small for this data",
                rep.min_u_minus_h0, -disc.eps, rep.min_location
            ),
        )
    } else {
        Outcome::success(format!("converged in {} iterations", rep.iterations))
    };
    let summary = SolveSummary {
        converged: rep.converged,
        iterations: rep.iterations,
        residual_history: rep.residual_history.clone(),
        final_residual: rep.final_residual(),
        u_sup_norm: u.sup_norm(),
        min_u_minus_h0: rep.min_u_minus_h0,
        min_location: rep.min_location.0,
        clamp_count: rep.clamp_count,
        clamp_count_tail: rep.clamp_count_tail,
        clamp_history: rep.clamp_history.clone(),
        damping: rep.damping,
        linear_iterations: rep.linear_iterations,
        nodes: grid.len(),
        h_grid: grid.h(),
        c1_hat: c1,
        c1_source: if est.is_some() { "estimated" } else { "config" },
        c1_history: est.map(|e| e.history).unwrap_or_default(),
        eps_disc: disc.eps,
        h0_min_off_cap: s4.min_h0,
        h0_max: s4.max_h0,
        wall_time: start.elapsed().as_secs_f64(),
        config_hash: ctx.config_hash.clone(),
        seed: ctx.seed,
        status: outcome.message.clone(),
    };
    write_json(&ctx.path("report.json"), &summary)?;
    Ok((summary, outcome))
}

/// A failed solve with a supplied `C₁` is a hypothesis violation when a quick
/// coarse-quadrature `Ĉ₁` exceeds it, and a plain convergence failure otherwise.
fn classify_failure(cfg: &RunConfig, h0: &MinorantH0, c1: f64, estimated: bool, msg: String) -> LabError {
    if estimated {
        return LabError::Convergence(msg);
    }
    let coarse = majorant(cfg, h0).and_then(|m| {
        let q = cfg.quad(cfg.analysis.quad_coarse)?;
        estimate_c1_parallel(h0, &m, &cfg.c1_probes(), &[q])
    });
    match coarse {
        Ok(est) if est.value > c1 => LabError::Hypothesis(format!("{msg}; the supplied C1 = {c1} is below the estimate {:.3}", est.value)),
        _ => LabError::Convergence(msg),
    }
}
