use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use sbvp_core::analysis::{
    bhp_check, c1_ratio, excursion_batch, excursion_stats, in_cap_region, lemma43_integral, meridian_point, occupation_batch, occupation_scaling, sample_cap_region,
    ui_diagnostic, CubeRegion, ExcursionSetup, ExcursionTally, UiFamily,
};
use sbvp_core::geometry::Domain;
use sbvp_core::solver::{fit_eps_disc, mc_t_with};
use sbvp_core::stochastic::{occupation_shell_bias, wos_occupation, ConditionedRun, McAccumulator};
use sbvp_core::{BallGrid, BoxDomain, CapSet, McEstimate, MinorantH0, Point, RngStream};

use super::common::{estimate_c1_parallel, majorant, resolve_c1, sibling, solve_on, RunContext};
use super::{Experiment, Outcome};
use crate::config::RunConfig;
use crate::error::{LabError, LabResult};
use crate::output::{ensure_dir, num, write_json, CsvOut};
use crate::parallel::{par_map, run_batches};

// disjoint RNG stream ranges per experiment
const C1_STREAMS: u64 = 1 << 40;
const ORACLE_STREAMS: u64 = 2 << 40;
const EXCURSION_STREAMS: u64 = 3 << 40;
const OCCUPATION_STREAMS: u64 = 4 << 40;
const EQ27_STREAMS: u64 = 5 << 40;
const PER_PROBE: u64 = 1 << 24;

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub experiment: Experiment,
    pub pass: bool,
    pub fitted: Value,
    pub tolerance: Value,
    pub seed: u64,
    pub config_hash: String,
}

/// Run one diagnostic, write `<name>.csv` and `verdict.json`; a failed
/// verdict exits with 1.
pub fn verify(ctx: &RunContext, which: Experiment) -> LabResult<(Verdict, Outcome)> {
    ensure_dir(ctx.out_dir())?;
    let mut csv = CsvOut::create(&ctx.path(&format!("{which}.csv")), which.name(), &ctx.config_hash, ctx.seed, columns(which))?;
    let (pass, fitted, tolerance) = match which {
        Experiment::C1 => c1(ctx, &mut csv)?,
        Experiment::Ui => ui(ctx, &mut csv)?,
        Experiment::Bhp => bhp(ctx, &mut csv)?,
        Experiment::Eq27 => eq27(ctx, &mut csv)?,
        Experiment::Excursions => excursions(ctx, &mut csv)?,
        Experiment::Occupation => occupation(ctx, &mut csv)?,
        Experiment::Oracle => oracle(ctx, &mut csv)?,
    };
    csv.finish()?;
    let verdict = Verdict {
        experiment: which,
        pass,
        fitted,
        tolerance,
        seed: ctx.seed,
        config_hash: ctx.config_hash.clone(),
    };
    write_json(&ctx.path("verdict.json"), &verdict)?;
    let outcome = if pass {
        Outcome::success(format!("{which}: pass"))
    } else {
        Outcome::failure(1, format!("{which}: fail"))
    };
    Ok((verdict, outcome))
}

fn columns(which: Experiment) -> &'static [&'static str] {
    match which {
        Experiment::C1 => &["kind", "x1", "x2", "x3", "depth", "polar_angle", "h0", "integral", "stderr", "ratio"],
        Experiment::Ui => &["family", "n", "size", "measure", "value", "argmax_x1", "argmax_x2", "argmax_x3"],
        Experiment::Bhp => &["h_grid", "x1", "x2", "x3", "h0", "u1", "u2", "h1", "h2", "ratio"],
        Experiment::Eq27 => &["pair", "a1", "a2", "a3", "b1", "b2", "b3", "coarse", "fine", "rel_change"],
        Experiment::Excursions => &["kind", "level", "visit", "value", "stderr", "count"],
        Experiment::Occupation => &["k", "depth", "mean", "stderr", "n", "attempts", "acceptance"],
        Experiment::Oracle => &["x1", "x2", "x3", "u", "mc", "stderr", "bias_bound", "diff", "tolerance"],
    }
}

type Judged = (bool, Value, Value);

fn xyz(p: Point) -> [String; 3] {
    p.0.map(num)
}

fn depth_of(h0: &MinorantH0, x: Point) -> f64 {
    h0.ball.boundary_distance(x)
}

/// Pool estimates of one mean from independent batches.
fn pool(parts: &[McEstimate]) -> McEstimate {
    let n: u64 = parts.iter().map(|e| e.n).sum();
    let nf = n as f64;
    let mean = parts.iter().map(|e| e.n as f64 * e.mean).sum::<f64>() / nf;
    let var = parts.iter().map(|e| (e.n as f64 / nf).powi(2) * e.stderr * e.stderr).sum::<f64>();
    McEstimate {
        mean,
        stderr: var.sqrt(),
        n,
        bias_bound: parts.iter().map(|e| e.bias_bound).fold(0.0, f64::max),
        truncated: parts.iter().map(|e| e.truncated).sum(),
    }
}

fn c1(ctx: &RunContext, csv: &mut CsvOut) -> LabResult<Judged> {
    let cfg = &ctx.cfg;
    let a = &cfg.analysis;
    let h0 = cfg.h0()?;
    let m = majorant(cfg, &h0)?;
    let levels = cfg.quad_levels()?;
    let est = estimate_c1_parallel(&h0, &m, &cfg.c1_probes(), &levels)?;
    for s in &est.samples {
        let psi = CapSet::polar_angle(&h0.ball, s.x);
        csv.row([&["quad".to_string()][..], &xyz(s.x), &[num(depth_of(&h0, s.x)), num(psi), num(s.h0), num(s.green), num(0.0), num(s.ratio)]].concat())?;
    }

    // walk-on-spheres cross-check of E_x ∫ K at a few probes
    let alpha = cfg.problem.alpha;
    let big_r = h0.ball.radius;
    let c_k = est
        .samples
        .iter()
        .map(|s| m.eval(s.x) * depth_of(&h0, s.x).powf(alpha))
        .fold(m.nl.m0() * (2.0 * big_r).powf(alpha), f64::max);
    let shell_bias = occupation_shell_bias(c_k, alpha, cfg.mc.eps_shell, 2.0 * big_r);
    let mut probes = vec![est.location, h0.ball.center];
    for (k, psi) in [(2, 0.0), (4, 0.5 * h0.cap.half_angle), (3, 0.5 * PI), (1, PI), (5, 0.0)] {
        probes.push(meridian_point(&h0, big_r * (1.0 - (-(k as f64)).exp2()), psi));
    }
    probes.truncate(a.c1_mc_probes);
    let wos = cfg.wos_config()?;
    let k = |y: Point| m.eval(y);
    let mut mc_rows = Vec::new();
    let mut all_agree = true;
    for (i, &x) in probes.iter().enumerate() {
        let quad = c1_ratio(&h0, &k, x, &levels[1])?;
        let parts = run_batches(ctx.seed, C1_STREAMS + i as u64 * PER_PROBE, cfg.mc.n_paths, cfg.mc.batch, |rng, n| {
            Ok(wos_occupation(&h0.ball, x, k, n.max(2), &wos, rng)?)
        })?;
        let mc = pool(&parts);
        // the shell bound is reported, not used: it is far looser than the noise
        let tol = 3.0 * mc.stderr + a.quad_tol * quad.green.abs();
        let agree = (mc.mean - quad.green).abs() <= tol;
        all_agree &= agree;
        let psi = CapSet::polar_angle(&h0.ball, x);
        csv.row([&["mc".to_string()][..], &xyz(x), &[num(depth_of(&h0, x)), num(psi), num(quad.h0), num(mc.mean), num(mc.stderr), num(mc.mean / quad.h0)]].concat())?;
        mc_rows.push(json!({"x": x.0, "quadrature": quad.green, "mc": mc.mean, "stderr": mc.stderr, "agree": agree}));
    }

    let change = est.refinement_change();
    let located = in_cap_region(&h0, est.location);
    let pass = est.value.is_finite() && change <= a.c1_change_tol && located && all_agree;
    Ok((
        pass,
        json!({
            "c1_hat": est.value,
            "location": est.location.0,
            "location_depth": depth_of(&h0, est.location),
            "location_polar_angle": CapSet::polar_angle(&h0.ball, est.location),
            "in_cap_region": located,
            "history": est.history,
            "refinement_change": change,
            "mc_check": mc_rows,
            "mc_shell_bias": shell_bias,
        }),
        json!({"refinement_change": a.c1_change_tol, "mc_sigmas": 3.0, "quad_tol": a.quad_tol}),
    ))
}

fn ui(ctx: &RunContext, csv: &mut CsvOut) -> LabResult<Judged> {
    let cfg = &ctx.cfg;
    let a = &cfg.analysis;
    let h0 = cfg.h0()?;
    let m = majorant(cfg, &h0)?;
    let q = cfg.quad(a.quad_fine)?;
    let ball = h0.ball;
    // probes at depth at least R/8: the sup over shells sits deep inside
    let mut probes = sbvp_core::analysis::c1_probe_points(
        &h0,
        &sbvp_core::analysis::C1Probes {
            k_max: 3,
            angles: a.c1_angles,
            cap_angles: a.c1_cap_angles,
        },
    );
    probes.dedup();
    let shells = UiFamily::BoundaryShells { n_max: a.ui_levels };
    let balls = UiFamily::InteriorBalls {
        center: meridian_point(&h0, 0.5 * ball.radius, 0.4),
        r0: 0.25 * ball.radius,
        n_max: a.ui_levels,
    };
    let tables = par_map(&[shells, balls], |fam| Ok(ui_diagnostic(&ball, &m, fam, &probes, &q)?))?;
    for (name, t) in ["shells", "balls"].iter().zip(&tables) {
        for r in &t.rows {
            csv.row([&[name.to_string(), r.n.to_string(), num(r.size), num(r.measure), num(r.value)][..], &xyz(r.argmax)].concat())?;
        }
    }
    let (s, b) = (&tables[0], &tables[1]);
    let slope = b.log_slope().map(|f| f.slope).unwrap_or(f64::NAN);
    let pass = s.is_strictly_decreasing() && s.decay_ratio() <= a.ui_decay && b.is_nonincreasing() && (slope - 2.0).abs() <= a.slope_tol;
    Ok((
        pass,
        json!({
            "shells": s.rows.iter().map(|r| r.value).collect::<Vec<_>>(),
            "shells_strictly_decreasing": s.is_strictly_decreasing(),
            "shells_decay_ratio": s.decay_ratio(),
            "balls": b.rows.iter().map(|r| r.value).collect::<Vec<_>>(),
            "balls_log_slope": slope,
            "probes": s.probes,
        }),
        json!({"decay_ratio": a.ui_decay, "expected_slope": 2.0, "slope_tol": a.slope_tol}),
    ))
}

fn bhp(ctx: &RunContext, csv: &mut CsvOut) -> LabResult<Judged> {
    let cfg = &ctx.cfg;
    let a = &cfg.analysis;
    cfg.require_ball()?;
    let h0 = cfg.h0()?;
    let nl = cfg.nonlinearity()?;
    let (c1, _) = resolve_c1(cfg, &h0)?;
    let region = CubeRegion::over_cap(&h0, a.bhp_depth * h0.ball.radius, a.bhp_half_width * h0.ball.radius);
    let everywhere = CubeRegion {
        center: h0.ball.center,
        half_width: h0.ball.radius,
    };
    let phi = cfg.boundary_data(c1)?;
    let e1 = phi.extension(&h0, h0.x0)?;
    let e2 = phi.scaled(2.0).extension(&h0, h0.x0)?;
    let mut per_grid = Vec::new();
    for h in [cfg.solver.h_grid, 2.0 * cfg.solver.h_grid] {
        let grid = Arc::new(BallGrid::new(h0.ball, h)?);
        let s1 = solve_on(cfg, &h0, &grid, c1, 1.0, &nl)?;
        let mut p2 = sibling(&s1.prob, cfg, c1, 2.0)?;
        let (u2, r2) = p2.picard_solve(&nl, &super::common::picard_options(cfg))?;
        let eps = fit_eps_disc(&s1.prob)?.eps.max(fit_eps_disc(&p2)?.eps);
        let local = bhp_check(&s1.prob, &s1.u, &p2, &u2, &region, eps, e1, e2)?;
        let global = bhp_check(&s1.prob, &s1.u, &p2, &u2, &everywhere, eps, e1, e2)?;
        if per_grid.is_empty() {
            let h1v = s1.prob.harmonic_exact();
            let h2v = p2.harmonic_exact();
            for (i, &x) in grid.nodes().iter().enumerate().filter(|(_, x)| region.contains(**x)) {
                let (u1, u2) = (s1.u.values()[i], u2.values()[i]);
                csv.row([&[num(h)][..], &xyz(x), &[num(s1.prob.h0_nodes().values()[i]), num(u1), num(u2), num(h1v.values()[i]), num(h2v.values()[i]), num(u1 / u2)]].concat())?;
            }
        }
        let converged = s1.report.converged && r2.converged;
        // ĉ against the size of the box, for the record only
        let mut by_size = Vec::new();
        for frac in [0.5, 1.0, 1.5] {
            let cube = CubeRegion {
                half_width: region.half_width * frac,
                ..region
            };
            by_size.push((cube.half_width, bhp_check(&s1.prob, &s1.u, &p2, &u2, &cube, eps, e1, e2)?.c_hat));
        }
        per_grid.push((h, eps, local, global, converged, by_size));
    }
    let (c_fine, c_coarse) = (per_grid[0].2.c_hat, per_grid[1].2.c_hat);
    let stability = (c_fine - c_coarse).abs() / c_fine;
    let pass = per_grid.iter().all(|(_, _, l, g, conv, _)| *conv && l.holds() && g.inner_violations == 0) && stability <= a.bhp_stability;
    let grids: Vec<Value> = per_grid
        .iter()
        .map(|(h, eps, l, g, conv, by_size)| {
            json!({
                "h_grid": h, "eps_disc": eps, "converged": conv,
                "region_nodes": l.nodes, "excluded": l.excluded,
                "lower_violations": l.lower_violations, "upper_violations": l.upper_violations,
                "sandwich_violations": g.inner_violations, "nodes": g.nodes,
                "ratio_min": l.ratio_min, "ratio_max": l.ratio_max, "c_hat": l.c_hat,
                "c1_fit": l.c1_fit, "c2_fit": l.c2_fit,
                "c_hat_by_half_width": by_size,
            })
        })
        .collect();
    Ok((
        pass,
        json!({"c1": c1, "grids": grids, "c_hat_change": stability}),
        json!({"c_hat_change": a.bhp_stability, "eps": "eps_disc per grid"}),
    ))
}

fn eq27(ctx: &RunContext, csv: &mut CsvOut) -> LabResult<Judged> {
    let cfg = &ctx.cfg;
    let a = &cfg.analysis;
    let h0 = cfg.h0()?;
    let m = majorant(cfg, &h0)?;
    let [coarse, fine] = cfg.quad_levels()?;
    let mut rng = RngStream::new(ctx.seed, EQ27_STREAMS);
    let mut pairs = Vec::with_capacity(a.eq27_pairs);
    while pairs.len() < a.eq27_pairs {
        let x1 = sample_cap_region(&h0, a.eq27_min_depth * h0.ball.radius, &mut rng);
        let x2 = sample_cap_region(&h0, a.eq27_min_depth * h0.ball.radius, &mut rng);
        if x1 != x2 {
            pairs.push((x1, x2));
        }
    }
    let ball = h0.ball;
    let k = |y: Point| m.eval(y);
    let values = par_map(&pairs, |&(x1, x2)| Ok((lemma43_integral(&ball, x1, x2, k, &coarse)?, lemma43_integral(&ball, x1, x2, k, &fine)?)))?;
    let mut worst_change: f64 = 0.0;
    let mut all_finite = true;
    for (i, (&(x1, x2), &(c, f))) in pairs.iter().zip(&values).enumerate() {
        let change = (c - f).abs() / f.abs();
        worst_change = worst_change.max(change);
        all_finite &= c.is_finite() && f.is_finite() && f > 0.0;
        csv.row([&[i.to_string()][..], &xyz(x1), &xyz(x2), &[num(c), num(f), num(change)]].concat())?;
    }
    let cap = values.iter().map(|v| v.1).fold(0.0, f64::max);
    // with K ≡ 1 the integral is symmetric in the two points
    let sym = par_map(&pairs[..pairs.len().min(3)], |&(x1, x2)| {
        let ab = lemma43_integral(&ball, x1, x2, |_| 1.0, &fine)?;
        let ba = lemma43_integral(&ball, x2, x1, |_| 1.0, &fine)?;
        Ok((ab - ba).abs() / ab.abs())
    })?;
    let worst_sym = sym.iter().copied().fold(0.0, f64::max);
    let pass = all_finite && worst_change <= a.eq27_stability && worst_sym <= a.eq27_symmetry;
    Ok((
        pass,
        json!({
            "pairs": pairs.len(), "all_finite": all_finite, "cap": cap,
            "max_refinement_change": worst_change, "max_symmetry_defect": worst_sym,
        }),
        json!({"refinement_change": a.eq27_stability, "symmetry": a.eq27_symmetry}),
    ))
}

fn box_anchor(cfg: &RunConfig) -> LabResult<Point> {
    Ok(BoxDomain::new(cfg.domain.half_width, cfg.domain.height)?.anchor())
}

fn excursions(ctx: &RunContext, csv: &mut CsvOut) -> LabResult<Judged> {
    let cfg = &ctx.cfg;
    let a = &cfg.analysis;
    let setup = ExcursionSetup::new(box_anchor(cfg)?, a.k_max)?;
    let pc = cfg.path_config()?;
    let parts = run_batches(ctx.seed, EXCURSION_STREAMS, a.n_accept, a.accept_batch, |rng, n| {
        Ok(excursion_batch(&setup, n, &pc, rng, a.acceptance_floor)?)
    })?;
    let mut tally = ExcursionTally::new(a.k_max);
    for p in &parts {
        tally.merge(p);
    }
    let (lo, hi) = level_range(&a.levels)?;
    let rep = excursion_stats(&tally, lo..=hi, a.min_visits, a.slope_tol)?;
    for s in &rep.survival {
        for (i, (p, c)) in s.p_hat.iter().zip(&s.counts).enumerate() {
            csv.row(["survival".to_string(), s.level.to_string(), (i + 1).to_string(), num(*p), String::new(), c.to_string()])?;
        }
    }
    let d = &rep.duration;
    for i in 0..d.x.len() {
        csv.row(["duration".to_string(), num(d.x[i]), String::new(), num(d.values[i]), num(d.stderr[i]), d.counts[i].to_string()])?;
    }
    let survival_ok = rep.survival.iter().all(|s| s.pass(a.min_r_squared));
    let pass = tally.paths >= a.n_accept && survival_ok && d.pass();
    Ok((
        pass,
        json!({
            "accepted": tally.paths,
            "attempts": tally.run.attempts,
            "truncated": tally.run.truncated,
            "rho": rep.survival.iter().map(|s| s.rho).collect::<Vec<_>>(),
            "r_squared": rep.survival.iter().map(|s| s.r_squared).collect::<Vec<_>>(),
            "nonincreasing": rep.survival.iter().all(|s| s.is_nonincreasing()),
            "duration_slope": d.slope,
            "duration_r_squared": d.r_squared,
        }),
        json!({"min_accepted": a.n_accept, "min_r_squared": a.min_r_squared, "expected_slope": -2.0, "slope_tol": a.slope_tol}),
    ))
}

fn level_range(levels: &[u32]) -> LabResult<(u32, u32)> {
    let lo = *levels.iter().min().ok_or_else(|| LabError::Config("analysis.levels is empty".into()))?;
    let hi = *levels.iter().max().unwrap_or(&lo);
    if (hi - lo + 1) as usize != levels.len() {
        return Err(LabError::Config("analysis.levels must be consecutive".into()));
    }
    Ok((lo, hi))
}

fn occupation(ctx: &RunContext, csv: &mut CsvOut) -> LabResult<Judged> {
    let cfg = &ctx.cfg;
    let a = &cfg.analysis;
    let anchor = box_anchor(cfg)?;
    let pc = cfg.path_config()?;
    let alpha = cfg.problem.alpha;
    let mut per_depth = Vec::new();
    for &k in &a.depths {
        let parts = run_batches(ctx.seed, OCCUPATION_STREAMS + k as u64 * PER_PROBE, a.n_accept, a.accept_batch, |rng, n| {
            Ok(occupation_batch(anchor, k, alpha, a.occupation_cap, n, &pc, rng, a.acceptance_floor)?)
        })?;
        let mut acc = McAccumulator::new();
        let mut run = ConditionedRun::default();
        for (p, r) in &parts {
            acc.merge(p);
            run.attempts += r.attempts;
            run.accepted += r.accepted;
            run.truncated += r.truncated;
        }
        let est = acc.finish(0.0);
        csv.row([k.to_string(), num((-(k as f64)).exp2()), num(est.mean), num(est.stderr), est.n.to_string(), run.attempts.to_string(), num(run.acceptance_rate())])?;
        per_depth.push((k, est));
    }
    let rep = occupation_scaling(&per_depth, alpha, a.slope_tol)?;
    let pass = rep.pass() && rep.is_monotone_decreasing();
    Ok((
        pass,
        json!({
            "slope": rep.slope, "intercept": rep.intercept, "r_squared": rep.r_squared,
            "monotone": rep.is_monotone_decreasing(), "envelope_constant": rep.envelope_constant(),
            "means": rep.values,
        }),
        json!({"expected_slope": 2.0 - alpha, "slope_tol": a.slope_tol}),
    ))
}

/// Grid nodes near a fixed spread of target points, from the centre out to
/// depth `R/20`, alternating between the cap side and the far side.
fn oracle_probes(h0: &MinorantH0, grid: &BallGrid, n: usize) -> Vec<(usize, Point)> {
    let big_r = h0.ball.radius;
    let mut out: Vec<(usize, Point)> = Vec::with_capacity(n);
    for i in 0..n {
        let r = 0.95 * big_r * i as f64 / (n.max(2) - 1) as f64;
        let psi = PI * ((i as f64 * 0.618_033_988_749_895) % 1.0);
        let target = meridian_point(h0, r, psi);
        let best = grid
            .nodes()
            .iter()
            .enumerate()
            .filter(|(j, _)| out.iter().all(|(k, _)| k != j))
            .min_by(|a, b| a.1.dist(target).total_cmp(&b.1.dist(target)));
        if let Some((j, &x)) = best {
            out.push((j, x));
        }
    }
    out
}

fn oracle(ctx: &RunContext, csv: &mut CsvOut) -> LabResult<Judged> {
    let cfg = &ctx.cfg;
    cfg.require_ball()?;
    let h0 = cfg.h0()?;
    let nl = cfg.nonlinearity()?;
    let (c1, _) = resolve_c1(cfg, &h0)?;
    let grid = Arc::new(BallGrid::new(h0.ball, cfg.solver.h_grid)?);
    let s = solve_on(cfg, &h0, &grid, c1, 1.0, &nl)?;
    let eps = fit_eps_disc(&s.prob)?.eps;
    let lattice = s.prob.interpolant(&s.u);
    let wos = cfg.wos_config()?;
    let probes = oracle_probes(&h0, &grid, cfg.analysis.oracle_probes);
    let mut worst: f64 = 0.0;
    let mut pass = s.report.converged;
    for (i, &(j, x)) in probes.iter().enumerate() {
        let parts = run_batches(ctx.seed, ORACLE_STREAMS + i as u64 * PER_PROBE, cfg.mc.n_paths, cfg.mc.batch, |rng, n| {
            Ok(mc_t_with(&s.prob, &lattice, &nl, x, n.max(2), &wos, rng)?)
        })?;
        let mc = pool(&parts);
        let u = s.u.values()[j];
        let diff = (mc.mean - u).abs();
        let tol = 3.0 * mc.stderr + eps;
        pass &= diff <= tol;
        worst = worst.max(diff / tol);
        csv.row([&xyz(x)[..], &[num(u), num(mc.mean), num(mc.stderr), num(mc.bias_bound), num(diff), num(tol)]].concat())?;
    }
    Ok((
        pass,
        json!({
            "c1": c1, "eps_disc": eps, "converged": s.report.converged,
            "probes": probes.len(), "worst_diff_over_tolerance": worst,
        }),
        json!({"sigmas": 3.0, "slack": "eps_disc"}),
    ))
}
