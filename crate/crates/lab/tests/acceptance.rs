//! The acceptance suite: every criterion runs at its stated scale and prints
//! one PASS/FAIL line. Tolerances are written out here rather than taken from
//! the configuration defaults, so that a change of defaults cannot loosen them.

use std::f64::consts::FRAC_PI_4;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;

use sbvp_core::kernels::{expected_exit_time, green_integral, harmonic_extension};
use sbvp_core::stochastic::{wos_harmonic, wos_occupation};
use sbvp_core::{BallDomain, CapSet, MinorantH0, PathConfig, Point, QuadratureSpec, RngStream};
use sbvp_lab::commands::{estimate_c1_parallel, majorant};
use sbvp_lab::parallel::run_batches;
use sbvp_lab::{solve, verify, Experiment, RunConfig, RunContext, Verdict};

type Check = Result<(bool, String), String>;

const SEED: u64 = 20_240_601;

fn unit_h0() -> MinorantH0 {
    MinorantH0::new(BallDomain::unit(), CapSet::new(FRAC_PI_4).unwrap(), Point::new(0.0, 0.0, 0.5)).unwrap()
}

fn config(text: &str) -> Result<RunConfig, String> {
    RunConfig::from_toml(text).map(|(c, _)| c).map_err(|e| e.to_string())
}

fn context(text: &str, out: &Path) -> Result<RunContext, String> {
    let (cfg, hash) = RunConfig::from_toml(text).map_err(|e| e.to_string())?;
    Ok(RunContext::new(cfg, hash, Some(SEED), out))
}

fn run_verify(text: &str, which: Experiment) -> Result<Verdict, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ctx = context(text, dir.path())?;
    verify(&ctx, which).map(|(v, _)| v).map_err(|e| e.to_string())
}

/// Pooled walk-on-spheres estimate over parallel batches.
fn pooled(n: u64, stream: u64, f: impl Fn(&mut RngStream, u64) -> sbvp_core::Result<sbvp_core::McEstimate> + Sync + Send) -> Result<(f64, f64), String> {
    let parts = run_batches(SEED, stream, n, 10_000, |rng, m| Ok(f(rng, m)?)).map_err(|e| e.to_string())?;
    let total: u64 = parts.iter().map(|e| e.n).sum();
    let mean = parts.iter().map(|e| e.n as f64 * e.mean).sum::<f64>() / total as f64;
    let var: f64 = parts.iter().map(|e| (e.n as f64 / total as f64).powi(2) * e.stderr * e.stderr).sum();
    Ok((mean, var.sqrt()))
}

fn kernel_normalisation() -> Check {
    let start = Instant::now();
    let ball = BallDomain::unit();
    let cfg = PathConfig::new(1e-3, 1e-6, 10_000_000).map_err(|e| e.to_string())?;
    let q = QuadratureSpec::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, r) in [0.0, 0.4, 0.8].into_iter().enumerate() {
        let x = Point::new(0.0, r, 0.0);
        let exact = expected_exit_time(&ball, x);
        let (mc, se) = pooled(100_000, 100 + i as u64 * 1000, |rng, n| wos_occupation(&ball, x, |_| 1.0, n, &cfg, rng))?;
        let quad = green_integral(&ball, x, |_| 1.0, &q).map_err(|e| e.to_string())?;
        // from the centre the first sphere is the ball itself, every walk scores
        // exactly R²/3 and the standard error vanishes; allow for rounding only
        let mc_ok = (mc - exact).abs() <= 3.0 * se + 1e-12;
        let quad_ok = (quad - exact).abs() <= 1e-3 * exact;
        ok &= mc_ok && quad_ok;
        notes.push(format!("|x|={r}: wos diff {:.1e} (3σ = {:.1e}), quad rel {:.1e}", (mc - exact).abs(), 3.0 * se, (quad - exact).abs() / exact));
    }
    let t = start.elapsed();
    ok &= t < Duration::from_secs(120);
    Ok((ok, format!("{}; {:.1}s (limit 120s)", notes.join("; "), t.as_secs_f64())))
}

fn harmonic_consistency() -> Check {
    let ball = BallDomain::unit();
    let cfg = PathConfig::new(1e-3, 1e-6, 10_000_000).map_err(|e| e.to_string())?;
    let q = QuadratureSpec::default();
    let mut rng = RngStream::new(SEED, 1);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for case in 0..10u64 {
        // smooth data: affine part, a quadratic and a bounded oscillation
        let c: [f64; 7] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
        let phi = move |p: Point| {
            let [x, y, z] = p.0;
            c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * y + c[5] * (z * z - x * x) + 0.5 * (c[6] * 3.0 * z).sin()
        };
        let x = loop {
            let p = Point::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
            if p.norm() < 0.9 {
                break p;
            }
        };
        let exact = harmonic_extension(&ball, phi, x, &q).map_err(|e| e.to_string())?;
        let (mc, se) = pooled(100_000, 1000 + case * 1000, |rng, n| wos_harmonic(&ball, x, phi, n, &cfg, rng))?;
        let diff = (mc - exact).abs();
        ok &= diff <= 3.0 * se + 1e-4;
        worst = worst.max(diff / (3.0 * se + 1e-4));
    }
    let h0 = unit_h0();
    let (mc, se) = pooled(100_000, 50_000, |rng, n| wos_harmonic(&ball, h0.x0, |xi| h0.boundary_value(xi), n, &cfg, rng))?;
    let quad = h0.eval(h0.x0).map_err(|e| e.to_string())?;
    let h0_ok = (mc - 0.5).abs() <= 3.0 * se + 1e-4 && (quad - 0.5).abs() <= 1e-4;
    Ok((
        ok && h0_ok,
        format!("10 cases, worst |diff|/(3σ+1e-4) = {worst:.2}; h0(x0): wos {mc:.5} ± {se:.1e}, quadrature {quad:.6}"),
    ))
}

/// `Ĉ₁` for the unit-ball problem at each α, shared by several criteria.
struct C1Table(Vec<(f64, f64)>);

impl C1Table {
    fn build() -> Result<Self, String> {
        let mut out = Vec::new();
        for alpha in [0.25, 0.5, 0.75] {
            let cfg = config(&format!("[problem]\nalpha = {alpha}\n"))?;
            let h0 = cfg.h0().map_err(|e| e.to_string())?;
            let m = majorant(&cfg, &h0).map_err(|e| e.to_string())?;
            let est = estimate_c1_parallel(&h0, &m, &cfg.c1_probes(), &cfg.quad_levels().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            out.push((alpha, est.value));
        }
        Ok(Self(out))
    }

    fn get(&self, alpha: f64) -> f64 {
        self.0.iter().find(|(a, _)| *a == alpha).map(|p| p.1).unwrap()
    }
}

fn existence_runs(c1: &C1Table, c1_time: &[(f64, Duration)]) -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for &(alpha, est_time) in c1_time {
        let start = Instant::now();
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let text = format!(
            "[problem]\nalpha = {alpha}\nmargin = 0.05\nc1 = {}\n[solver]\nh_grid = 0.03125\ntol = 1e-5\nmax_iter = 200\n",
            c1.get(alpha)
        );
        let ctx = context(&text, dir.path())?;
        let (s, _) = solve(&ctx).map_err(|e| e.to_string())?;
        let t = start.elapsed() + est_time;
        let pass = s.converged
            && s.iterations <= 200
            && s.final_residual <= 1e-5 * s.u_sup_norm
            && s.min_u_minus_h0 >= -s.eps_disc
            && s.clamp_count_tail == 0
            && t < Duration::from_secs(300);
        ok &= pass;
        notes.push(format!(
            "α={alpha}: Ĉ₁={:.2}, {} it, res/‖u‖={:.1e}, min(u−h0)={:.3} vs −ε_disc={:.3}, tail clamps {}, {:.0}s",
            s.c1_hat,
            s.iterations,
            s.final_residual / s.u_sup_norm,
            s.min_u_minus_h0,
            -s.eps_disc,
            s.clamp_count_tail,
            t.as_secs_f64()
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn sandwich(c1: f64) -> Check {
    let v = run_verify(&format!("[problem]\nc1 = {c1}\n[analysis]\nbhp_stability = 0.1\n"), Experiment::Bhp)?;
    let f = &v.fitted;
    let g = f["grids"].as_array().cloned().unwrap_or_default();
    let pinned = v.tolerance["c_hat_change"] == 0.1;
    let desc: Vec<String> = g
        .iter()
        .map(|g| {
            format!(
                "h={}: ĉ={:.4}, sandwich violations {}, BHP violations {}/{} over {} nodes",
                g["h_grid"], g["c_hat"].as_f64().unwrap_or(f64::NAN), g["sandwich_violations"], g["lower_violations"], g["upper_violations"], g["region_nodes"]
            )
        })
        .collect();
    Ok((v.pass && pinned, format!("{}; ĉ change {:.2e} (limit 0.1)", desc.join("; "), f["c_hat_change"].as_f64().unwrap_or(f64::NAN))))
}

fn oracle(c1: f64) -> Check {
    let v = run_verify(&format!("[problem]\nc1 = {c1}\n[mc]\nn_paths = 100000\n[analysis]\noracle_probes = 10\n"), Experiment::Oracle)?;
    let f = &v.fitted;
    let ok = v.pass && f["probes"] == 10;
    Ok((ok, format!("10 probes, worst |u − MC|/(3σ + ε_disc) = {:.2}, ε_disc = {:.4}", f["worst_diff_over_tolerance"].as_f64().unwrap_or(f64::NAN), f["eps_disc"].as_f64().unwrap_or(f64::NAN))))
}

fn uniform_integrability() -> Check {
    let v = run_verify("[analysis]\nui_levels = 6\nui_decay = 0.05\nslope_tol = 0.4\n", Experiment::Ui)?;
    let f = &v.fitted;
    let ok = v.pass && f["shells"].as_array().map(|a| a.len()) == Some(6) && v.tolerance["decay_ratio"] == 0.05 && v.tolerance["slope_tol"] == 0.4;
    Ok((
        ok,
        format!(
            "shells strictly decreasing {}, final/initial {:.4} (limit 0.05); interior-ball slope {:.3} (2 ± 0.4)",
            f["shells_strictly_decreasing"], f["shells_decay_ratio"].as_f64().unwrap_or(f64::NAN), f["balls_log_slope"].as_f64().unwrap_or(f64::NAN)
        ),
    ))
}

fn c1_estimate() -> Check {
    let v = run_verify("[analysis]\nc1_change_tol = 0.1\n", Experiment::C1)?;
    let f = &v.fitted;
    let ok = v.pass && v.tolerance["refinement_change"] == 0.1;
    Ok((
        ok,
        format!(
            "Ĉ₁ = {:.3}, refinement change {:.2e} (limit 0.1), sup at depth {:.4} polar angle {:.3}, in cap region {}",
            f["c1_hat"].as_f64().unwrap_or(f64::NAN),
            f["refinement_change"].as_f64().unwrap_or(f64::NAN),
            f["location_depth"].as_f64().unwrap_or(f64::NAN),
            f["location_polar_angle"].as_f64().unwrap_or(f64::NAN),
            f["in_cap_region"]
        ),
    ))
}

fn excursions() -> Check {
    let v = run_verify(
        "[analysis]\nn_accept = 2000\nk_max = 8\nlevels = [2, 3, 4, 5, 6]\nmin_r_squared = 0.9\nslope_tol = 0.4\n",
        Experiment::Excursions,
    )?;
    let f = &v.fitted;
    let ok = v.pass && f["accepted"].as_u64().is_some_and(|n| n >= 2000) && v.tolerance["min_r_squared"] == 0.9;
    let rho: Vec<String> = f["rho"].as_array().into_iter().flatten().map(|r| format!("{:.2}", r.as_f64().unwrap_or(f64::NAN))).collect();
    let r2 = f["r_squared"].as_array().into_iter().flatten().filter_map(|r| r.as_f64()).fold(1.0, f64::min);
    Ok((
        ok,
        format!(
            "{} accepted, ρ̂ = [{}], min R² {:.4}, duration slope {:.3} (−2 ± 0.4)",
            f["accepted"],
            rho.join(", "),
            r2,
            f["duration_slope"].as_f64().unwrap_or(f64::NAN)
        ),
    ))
}

fn occupation() -> Check {
    let start = Instant::now();
    let v = run_verify("[problem]\nalpha = 0.5\n[analysis]\ndepths = [2, 3, 4, 5, 6]\nslope_tol = 0.4\n", Experiment::Occupation)?;
    let t = start.elapsed();
    let f = &v.fitted;
    let ok = v.pass && v.tolerance["expected_slope"] == 1.5 && t < Duration::from_secs(600);
    Ok((ok, format!("slope {:.3} (1.5 ± 0.4), monotone {}, {:.1}s", f["slope"].as_f64().unwrap_or(f64::NAN), f["monotone"], t.as_secs_f64())))
}

fn pair_integrals() -> Check {
    let v = run_verify("[analysis]\neq27_pairs = 20\neq27_stability = 0.05\neq27_symmetry = 1e-3\n", Experiment::Eq27)?;
    let f = &v.fitted;
    let ok = v.pass && f["pairs"] == 20;
    Ok((
        ok,
        format!(
            "20 pairs finite {}, cap {:.4}, worst refinement change {:.1e} (limit 0.05), K≡1 swap defect {:.1e} (limit 1e-3)",
            f["all_finite"],
            f["cap"].as_f64().unwrap_or(f64::NAN),
            f["max_refinement_change"].as_f64().unwrap_or(f64::NAN),
            f["max_symmetry_defect"].as_f64().unwrap_or(f64::NAN)
        ),
    ))
}

fn reproducibility(c1: f64) -> Check {
    let runs: [(&str, Option<Experiment>, &str); 4] = [
        ("solve", None, "solution.csv"),
        ("excursions", Some(Experiment::Excursions), "excursions.csv"),
        ("occupation", Some(Experiment::Occupation), "occupation.csv"),
        ("oracle", Some(Experiment::Oracle), "oracle.csv"),
    ];
    let text = format!("[problem]\nc1 = {c1}\n[solver]\nh_grid = 0.0625\n[mc]\nn_paths = 20000\n[analysis]\nn_accept = 500\n");
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, which, file) in runs {
        let mut bytes = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let ctx = context(&text, dir.path())?;
            match which {
                None => solve(&ctx).map(|_| ()),
                Some(w) => verify(&ctx, w).map(|_| ()),
            }
            .map_err(|e| e.to_string())?;
            bytes.push(std::fs::read(dir.path().join(file)).map_err(|e| e.to_string())?);
        }
        let same = bytes[0] == bytes[1] && !bytes[0].is_empty();
        ok &= same;
        notes.push(format!("{name}: {}", if same { "identical" } else { "DIFFERENT" }));
    }
    Ok((ok, notes.join(", ")))
}

fn report(id: u32, name: &str, start: Instant, result: Check) -> bool {
    let (pass, detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {id:>2} {name:<28} {}  [{:.1}s] {detail}",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    pass
}

fn main() {
    // the libtest protocol asks for a listing first in some runners
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut all = true;
    let t = Instant::now();
    all &= report(1, "kernel normalisation", t, kernel_normalisation());
    let t = Instant::now();
    all &= report(2, "harmonic consistency", t, harmonic_consistency());

    let t = Instant::now();
    let table = C1Table::build();
    // the shared estimation time is charged evenly to the three runs
    let share = t.elapsed() / 3;
    let c1_time = [0.25, 0.5, 0.75].map(|a| (a, share));
    let c1_half = table.as_ref().map(|t| t.get(0.5)).ok();
    all &= report(3, "existence runs", t, table.and_then(|tab| existence_runs(&tab, &c1_time)));

    let need_c1 = |f: fn(f64) -> Check| move || match c1_half {
        Some(c) => f(c),
        None => Err("no C1 estimate".into()),
    };
    let t = Instant::now();
    all &= report(4, "sandwich and BHP ratio", t, need_c1(sandwich)());
    let t = Instant::now();
    all &= report(5, "oracle equivalence", t, need_c1(oracle)());
    let t = Instant::now();
    all &= report(6, "uniform integrability", t, uniform_integrability());
    let t = Instant::now();
    all &= report(7, "C1 estimate", t, c1_estimate());
    let t = Instant::now();
    all &= report(8, "excursion survival", t, excursions());
    let t = Instant::now();
    all &= report(9, "occupation scaling", t, occupation());
    let t = Instant::now();
    all &= report(10, "pair integrals", t, pair_integrals());
    let t = Instant::now();
    all &= report(11, "reproducibility", t, need_c1(reproducibility)());
    if !all {
        println!("acceptance: some criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 11 criteria passed");
}
