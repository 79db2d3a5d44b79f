//! The run configuration: one TOML file, every block optional, unknown keys
//! rejected, ranges checked at load.

use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sbvp_core::analysis::C1Probes;
use sbvp_core::problem::Perturbation;
use sbvp_core::{BallDomain, BoundaryData, CapSet, MinorantH0, Nonlinearity, PathConfig, Point, QuadratureSpec};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub mc: McConfig,
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Ball,
    Box,
}

/// `kind` picks the domain of `solve`; the excursion experiments always run
/// in the box `{|x̃| < half_width, 0 < x₃ < height}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub radius: f64,
    pub half_width: f64,
    pub height: f64,
    pub dim: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            kind: DomainKind::Ball,
            radius: 1.0,
            half_width: 2.0,
            height: 2.0,
            dim: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiProfile {
    Constant,
    CapDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub alpha: f64,
    pub a: f64,
    pub cap_angle: f64,
    pub x0: [f64; 3],
    pub margin: f64,
    pub psi: PsiProfile,
    /// A known `Ĉ₁`; when absent it is estimated.
    pub c1: Option<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            a: 1.0,
            cap_angle: FRAC_PI_4,
            x0: [0.0, 0.0, 0.5],
            margin: 0.05,
            psi: PsiProfile::Constant,
            c1: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub h_grid: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h_grid: 1.0 / 32.0,
            tol: 1e-5,
            max_iter: 200,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: u64,
    pub dt: f64,
    pub eps_shell: f64,
    /// Adaptive time step `min(dt, kappa·dist²)` for discretised paths.
    pub kappa: f64,
    pub max_steps: u64,
    pub seed: u64,
    /// Paths per parallel batch.
    pub batch: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            dt: 1e-3,
            eps_shell: 1e-4,
            kappa: 0.01,
            max_steps: 10_000_000,
            seed: 1,
            batch: 10_000,
        }
    }
}

/// `[gl_order, azimuth_nodes, boundary_levels]`.
pub type QuadLevel = [u32; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Coarse and fine quadrature levels of every refinement study.
    pub quad_coarse: QuadLevel,
    pub quad_fine: QuadLevel,
    pub quad_tol: f64,
    pub c1_depths: u32,
    pub c1_angles: usize,
    pub c1_cap_angles: usize,
    pub c1_change_tol: f64,
    pub c1_mc_probes: usize,
    pub ui_levels: u32,
    pub ui_decay: f64,
    pub eq27_pairs: usize,
    pub eq27_min_depth: f64,
    pub eq27_stability: f64,
    pub eq27_symmetry: f64,
    /// Deepest dyadic level tracked by the excursion experiment.
    pub k_max: u32,
    /// Levels used in the excursion fits.
    pub levels: Vec<u32>,
    /// Occupation depths `ε = 2^{-k}`.
    pub depths: Vec<u32>,
    pub n_accept: u64,
    /// Truncation level of `δ^{-α}` in the occupation experiment.
    pub occupation_cap: f64,
    pub accept_batch: u64,
    pub acceptance_floor: f64,
    pub min_visits: u64,
    pub min_r_squared: f64,
    pub slope_tol: f64,
    pub oracle_probes: usize,
    pub bhp_depth: f64,
    pub bhp_half_width: f64,
    pub bhp_stability: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            quad_coarse: [6, 24, 12],
            quad_fine: [8, 32, 14],
            quad_tol: 1e-3,
            c1_depths: 8,
            c1_angles: 12,
            c1_cap_angles: 6,
            c1_change_tol: 0.1,
            c1_mc_probes: 5,
            ui_levels: 6,
            ui_decay: 0.05,
            eq27_pairs: 20,
            eq27_min_depth: 1.0 / 64.0,
            eq27_stability: 0.05,
            eq27_symmetry: 1e-3,
            k_max: 8,
            levels: vec![2, 3, 4, 5, 6],
            depths: vec![2, 3, 4, 5, 6],
            n_accept: 2000,
            occupation_cap: 1e6,
            accept_batch: 250,
            acceptance_floor: 0.01,
            min_visits: 30,
            min_r_squared: 0.9,
            slope_tol: 0.4,
            oracle_probes: 10,
            bhp_depth: 0.3,
            bhp_half_width: 0.25,
            bhp_stability: 0.1,
        }
    }
}

fn check(ok: bool, msg: &str) -> LabResult<()> {
    if ok {
        Ok(())
    } else {
        Err(LabError::Config(msg.to_string()))
    }
}

impl RunConfig {
    /// Parse and validate; the digest of the raw text is returned alongside.
    pub fn from_toml(text: &str) -> LabResult<(Self, String)> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok((cfg, config_hash(text.as_bytes())))
    }

    pub fn load(path: &Path) -> LabResult<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> LabResult<()> {
        let d = &self.domain;
        check(d.dim == 3, "domain.dim: only d = 3 is implemented")?;
        check(d.radius > 0.0 && d.radius.is_finite(), "domain.radius must be positive")?;
        check(d.half_width >= 1.0 && d.height >= 1.0, "domain: the box needs half_width >= 1 and height >= 1 to hold the strips")?;
        let p = &self.problem;
        check(p.alpha > 0.0 && p.alpha < 1.0, "problem.alpha must lie in (0, 1)")?;
        check(p.a > 0.0 && p.a.is_finite(), "problem.a must be positive")?;
        check(p.cap_angle > 0.0 && p.cap_angle < std::f64::consts::PI, "problem.cap_angle must lie in (0, pi)")?;
        check(p.x0.iter().map(|v| v * v).sum::<f64>().sqrt() < d.radius, "problem.x0 must lie inside the ball")?;
        check(p.margin.is_finite(), "problem.margin must be finite")?;
        check(p.c1.is_none_or(|c| c >= 0.0 && c.is_finite()), "problem.c1 must be finite and nonnegative")?;
        let s = &self.solver;
        check(s.h_grid > 0.0 && s.h_grid < 0.5 * d.radius, "solver.h_grid must lie in (0, R/2)")?;
        check(s.tol > 0.0 && s.max_iter > 0, "solver.tol and solver.max_iter must be positive")?;
        check(s.damping > 0.0 && s.damping <= 1.0, "solver.damping must lie in (0, 1]")?;
        let m = &self.mc;
        check(m.n_paths > 0 && m.batch > 0, "mc.n_paths and mc.batch must be positive")?;
        check(m.dt > 0.0 && m.eps_shell > 0.0 && m.max_steps > 0, "mc.dt, mc.eps_shell and mc.max_steps must be positive")?;
        check(m.kappa > 0.0 && m.kappa <= 1.0, "mc.kappa must lie in (0, 1]")?;
        let a = &self.analysis;
        for q in [a.quad_coarse, a.quad_fine] {
            check(q[0] >= 1 && q[0] <= 64 && q[1] >= 4, "analysis quadrature levels need 1 <= gl_order <= 64 and azimuth_nodes >= 4")?;
        }
        check(a.quad_tol > 0.0, "analysis.quad_tol must be positive")?;
        check(a.c1_depths >= 1 && a.c1_angles >= 1, "analysis.c1_depths and c1_angles must be positive")?;
        check(a.ui_levels >= 4, "analysis.ui_levels must be at least 4")?;
        check(a.eq27_pairs >= 1 && a.eq27_min_depth > 0.0 && a.eq27_min_depth < 0.5, "analysis.eq27_pairs must be positive and eq27_min_depth in (0, 1/2)")?;
        check(a.n_accept > 0, "analysis.n_accept must be positive")?;
        check(a.occupation_cap > 0.0, "analysis.occupation_cap must be positive")?;
        check(a.accept_batch > 0, "analysis.accept_batch must be positive")?;
        check(a.k_max >= 2 && a.k_max <= 30, "analysis.k_max must lie in 2..=30")?;
        check(a.levels.len() >= 4 && a.levels.iter().all(|&j| j >= 1 && j <= a.k_max), "analysis.levels: at least 4 levels within 1..=k_max")?;
        check(a.depths.len() >= 4 && a.depths.iter().all(|&k| (1..=20).contains(&k)), "analysis.depths: at least 4 values within 1..=20")?;
        check(a.acceptance_floor >= 0.0 && a.acceptance_floor < 1.0, "analysis.acceptance_floor must lie in [0, 1)")?;
        check(a.oracle_probes >= 1, "analysis.oracle_probes must be positive")?;
        check(a.slope_tol > 0.0, "analysis.slope_tol must be positive")?;
        Ok(())
    }

    pub fn ball(&self) -> LabResult<BallDomain> {
        Ok(BallDomain::new(Point::ORIGIN, self.domain.radius)?)
    }

    pub fn require_ball(&self) -> LabResult<()> {
        check(self.domain.kind == DomainKind::Ball, "domain.kind: the solver only handles the ball")
    }

    pub fn h0(&self) -> LabResult<MinorantH0> {
        let [x, y, z] = self.problem.x0;
        Ok(MinorantH0::new(self.ball()?, CapSet::new(self.problem.cap_angle)?, Point::new(x, y, z))?)
    }

    pub fn nonlinearity(&self) -> LabResult<Nonlinearity> {
        Ok(Nonlinearity::new(self.problem.alpha, self.problem.a)?)
    }

    pub fn boundary_data(&self, c1: f64) -> LabResult<BoundaryData> {
        let psi = match self.problem.psi {
            PsiProfile::Constant => Perturbation::Constant,
            PsiProfile::CapDistance => Perturbation::CapDistance,
        };
        Ok(BoundaryData::new(c1, self.problem.margin, psi)?)
    }

    pub fn quad(&self, level: QuadLevel) -> LabResult<QuadratureSpec> {
        Ok(QuadratureSpec::new(level[0] as usize, level[1] as usize, level[2], self.analysis.quad_tol)?)
    }

    pub fn quad_levels(&self) -> LabResult<[QuadratureSpec; 2]> {
        Ok([self.quad(self.analysis.quad_coarse)?, self.quad(self.analysis.quad_fine)?])
    }

    /// Walk-on-spheres configuration (fixed step, unused by walks).
    pub fn wos_config(&self) -> LabResult<PathConfig> {
        Ok(PathConfig::new(self.mc.dt, self.mc.eps_shell, self.mc.max_steps)?)
    }

    /// Discretised-path configuration with adaptive steps.
    pub fn path_config(&self) -> LabResult<PathConfig> {
        Ok(self.wos_config()?.with_adaptive(self.mc.kappa)?)
    }

    pub fn c1_probes(&self) -> C1Probes {
        C1Probes {
            k_max: self.analysis.c1_depths,
            angles: self.analysis.c1_angles,
            cap_angles: self.analysis.c1_cap_angles,
        }
    }
}

/// Hex SHA-256 of the configuration text.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
