//! The grid realisation of `Tu = E_x φ(X_τ) − E_x ∫₀^τ f(u(X_s)) ds` and the
//! damped Picard iteration for its fixed point.
//!
//! On the grid, `Tu = h_φ − w` where `A h_φ = Bφ` (the discrete harmonic
//! extension) and `A w = f(u)` with zero boundary values.

use alloc::sync::Arc;
use alloc::vec::Vec;


use super::grid::{BallGrid, GridField, LatticeField};
use super::linear::pcg;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kernels::expected_exit_time;
use crate::problem::{BoundaryData, MinorantH0, Perturbation, Reaction};

/// Relative residual demanded from every linear solve.
pub const LINEAR_TOL: f64 = 1e-10;

/// Knobs of [`DiscreteProblem::picard_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Stop at the first iterate with `‖u − Tu‖_∞ ≤ tol·‖u‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial damping `θ ∈ (0, 1]`.
    pub damping: f64,
    /// Clamp `Tu` from below by `h₀`.
    pub clamp: bool,
    /// Halve `θ` after this many iterations without a new best residual.
    pub stall_window: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 200,
            damping: 1.0,
            clamp: true,
            stall_window: 20,
        }
    }
}

impl PicardOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.damping > 0.0 && self.damping <= 1.0) || self.stall_window == 0 {
            return Err(Error::invalid("picard options: need tol > 0, max_iter > 0, damping in (0, 1], stall_window > 0"));
        }
        Ok(())
    }
}

/// Outcome of a Picard run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Number of updates `u_n → u_{n+1}` performed.
    pub iterations: usize,
    /// `‖u_n − Tu_n‖_∞` for every iterate visited.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `min (u − h₀)` over interior nodes of the returned iterate.
    pub min_u_minus_h0: f64,
    pub min_location: Point,
    /// Clamp activations per update.
    pub clamp_history: Vec<u64>,
    pub clamp_count: u64,
    /// Activations over the last ten updates.
    pub clamp_count_tail: u64,
    pub damping: f64,
    pub linear_iterations: usize,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Grid, boundary data and cached fields for one boundary-value problem.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    grid: Arc<BallGrid>,
    h0: MinorantH0,
    phi: BoundaryData,
    h0_nodes: GridField,
    hphi: GridField,
    warm: Vec<f64>,
    linear_iterations: usize,
}

impl DiscreteProblem {
    /// Evaluates `h₀` at every node, then solves for the discrete `h_φ`.
    pub fn new(grid: Arc<BallGrid>, h0: &MinorantH0, phi: &BoundaryData) -> Result<Self> {
        let h0_nodes = GridField::try_from_fn(grid, |p| h0.eval(p))?;
        Self::with_h0_nodes(h0, phi, h0_nodes)
    }

    /// Reuse precomputed nodal values of `h₀`.
    pub fn with_h0_nodes(h0: &MinorantH0, phi: &BoundaryData, h0_nodes: GridField) -> Result<Self> {
        let grid = h0_nodes.grid().clone();
        if grid.ball != h0.ball {
            return Err(Error::NonConformable);
        }
        let b = grid.boundary_rhs(|xi| phi.eval(h0, xi));
        let mut v = h0_nodes.values().iter().map(|&h| phi.extension_from_h0(h0, h)).collect::<Vec<_>>();
        let rep = pcg(&grid, &b, &mut v, LINEAR_TOL, 20 * grid.len().max(100))?;
        let hphi = GridField::new(grid.clone(), v)?;
        let n = grid.len();
        Ok(Self {
            grid,
            h0: h0.clone(),
            phi: phi.clone(),
            h0_nodes,
            hphi,
            warm: alloc::vec![0.0; n],
            linear_iterations: rep.iterations,
        })
    }

    pub fn grid(&self) -> &Arc<BallGrid> {
        &self.grid
    }

    pub fn h0(&self) -> &MinorantH0 {
        &self.h0
    }

    pub fn phi(&self) -> &BoundaryData {
        &self.phi
    }

    pub fn h0_nodes(&self) -> &GridField {
        &self.h0_nodes
    }

    /// The discrete harmonic extension `h_φ,h`.
    pub fn harmonic(&self) -> &GridField {
        &self.hphi
    }

    /// The exact harmonic extension `h_φ` at the nodes.
    pub fn harmonic_exact(&self) -> GridField {
        self.h0_nodes.map(|h| self.phi.extension_from_h0(&self.h0, h))
    }

    pub fn boundary_value(&self, xi: Point) -> f64 {
        self.phi.eval(&self.h0, xi)
    }

    /// Linear solver iterations spent so far.
    pub fn linear_iterations(&self) -> usize {
        self.linear_iterations
    }

    /// `w` with `A w = g` and zero boundary values, warm-started from the last solve.
    pub fn green_solve(&mut self, g: &[f64]) -> Result<GridField> {
        let mut w = core::mem::take(&mut self.warm);
        let rep = pcg(&self.grid, g, &mut w, LINEAR_TOL, 20 * self.grid.len().max(100))?;
        self.linear_iterations += rep.iterations;
        self.warm = w.clone();
        GridField::new(self.grid.clone(), w)
    }

    /// `Tu`; a node with `u ≤ 0` is reported as a cone breach.
    pub fn apply_t<F: Reaction + ?Sized>(&mut self, u: &GridField, f: &F) -> Result<GridField> {
        if !u.conformable(&self.hphi) {
            return Err(Error::NonConformable);
        }
        let rhs = u
            .values()
            .iter()
            .zip(self.grid.nodes())
            .map(|(&v, &p)| match f.f(v) {
                Err(Error::ConeBreach { value, .. }) => Err(Error::ConeBreach {
                    value,
                    location: Some(p),
                }),
                other => other,
            })
            .collect::<Result<Vec<_>>>()?;
        let w = self.green_solve(&rhs)?;
        self.hphi.zip_map(&w, |a, b| a - b)
    }

    /// `‖u − Tu‖_∞`.
    pub fn residual<F: Reaction + ?Sized>(&mut self, u: &GridField, f: &F) -> Result<f64> {
        let tu = self.apply_t(u, f)?;
        u.max_abs_diff(&tu)
    }

    /// Damped Picard iteration `u ← (1−θ)u + θ·max(Tu, h₀)` from `u₀ = h_φ,h`.
    ///
    /// Exhausting `max_iter` is not an error: the iterate with the smallest
    /// residual is returned with `converged = false`.
    pub fn picard_solve<F: Reaction + ?Sized>(&mut self, f: &F, opts: &PicardOptions) -> Result<(GridField, SolveReport)> {
        opts.validate()?;
        let mut u = self.hphi.clone();
        let mut theta = opts.damping;
        let mut history = Vec::new();
        let mut clamps = Vec::new();
        let mut best = (f64::INFINITY, u.clone());
        let mut since_best = 0;
        let mut converged = false;
        let mut updates = 0;
        loop {
            let tu = self.apply_t(&u, f)?;
            let r = u.max_abs_diff(&tu)?;
            history.push(r);
            if r < best.0 {
                best = (r, u.clone());
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= opts.stall_window {
                    theta *= 0.5;
                    since_best = 0;
                }
            }
            if r <= opts.tol * u.sup_norm() {
                converged = true;
                best = (r, u);
                break;
            }
            if updates == opts.max_iter {
                break;
            }
            let mut count = 0u64;
            let h0 = self.h0_nodes.values();
            for ((ui, &ti), &hi) in u.values_mut().iter_mut().zip(tu.values()).zip(h0) {
                let mut v = ti;
                if opts.clamp && v < hi {
                    v = hi;
                    count += 1;
                }
                *ui = (1.0 - theta) * *ui + theta * v;
            }
            clamps.push(count);
            updates += 1;
        }
        let u = best.1;
        let diff = u.zip_map(&self.h0_nodes, |a, b| a - b)?;
        let (min_gap, loc) = diff.argmin().unwrap_or((f64::INFINITY, Point::ORIGIN));
        let tail = clamps.iter().rev().take(10).sum();
        let report = SolveReport {
            iterations: updates,
            residual_history: history,
            converged,
            min_u_minus_h0: min_gap,
            min_location: loc,
            clamp_count: clamps.iter().sum(),
            clamp_history: clamps,
            clamp_count_tail: tail,
            damping: theta,
            linear_iterations: self.linear_iterations,
        };
        Ok((u, report))
    }

    /// Trilinear interpolant of a field, with boundary data on lattice points
    /// outside the node set.
    pub fn interpolant(&self, u: &GridField) -> LatticeField {
        let ball = self.grid.ball;
        self.grid
            .lattice_field(u.values(), |p| self.boundary_value(ball.project_to_boundary(p)))
    }

    /// Lipschitz constant of `φ` along `∂B`.
    pub fn boundary_lipschitz(&self) -> f64 {
        let h0 = &self.h0;
        let slope = h0.lambda();
        let psi = match self.phi.psi {
            Perturbation::Constant => 0.0,
            Perturbation::CapDistance => slope / h0.max_value(),
        };
        self.phi.factor * ((1.0 + self.phi.c1) * slope + self.phi.margin * psi)
    }
}

/// `ε_disc = c·h²`, with `c` fitted on problems with known solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretisationError {
    pub c: f64,
    pub h: f64,
    pub eps: f64,
    /// `(h, ‖h_φ,h − h_φ‖_∞, ‖𝒢_h 1 − E τ‖_∞)` per grid.
    pub samples: Vec<(f64, f64, f64)>,
}

fn linear_errors(prob: &mut DiscreteProblem) -> Result<(f64, f64)> {
    let harm = prob.harmonic().max_abs_diff(&prob.harmonic_exact())?;
    let ones = alloc::vec![1.0; prob.grid().len()];
    let w = prob.green_solve(&ones)?;
    let ball = prob.grid().ball;
    let exact = GridField::from_fn(prob.grid().clone(), |p| expected_exit_time(&ball, p))?;
    Ok((harm, w.max_abs_diff(&exact)?))
}

/// Fit `ε_disc` from the discrete-vs-exact errors of `h_φ` and of the exit time
/// on the problem's grid and on the grid with twice the spacing.
pub fn fit_eps_disc(prob: &DiscreteProblem) -> Result<DiscretisationError> {
    let h = prob.grid().h();
    let mut fine = prob.clone();
    let (a1, b1) = linear_errors(&mut fine)?;
    let coarse_grid = Arc::new(BallGrid::new(prob.grid().ball, 2.0 * h)?);
    let mut coarse = DiscreteProblem::new(coarse_grid, prob.h0(), prob.phi())?;
    let (a2, b2) = linear_errors(&mut coarse)?;
    let c = (a1.max(b1) / (h * h)).max(a2.max(b2) / (4.0 * h * h));
    Ok(DiscretisationError {
        c,
        h,
        eps: c * h * h,
        samples: alloc::vec![(h, a1, b1), (2.0 * h, a2, b2)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BallDomain, CapSet};
    use crate::kernels::{harmonic_extension, QuadratureSpec};
    use crate::problem::{Nonlinearity, NoReaction, Perturbation};
    use core::f64::consts::FRAC_PI_4;

    fn setup(h: f64, c1: f64, margin: f64) -> DiscreteProblem {
        let ball = BallDomain::unit();
        let h0 = MinorantH0::new(ball, CapSet::new(FRAC_PI_4).unwrap(), Point::new(0.0, 0.0, 0.5)).unwrap();
        let phi = BoundaryData::new(c1, margin, Perturbation::Constant).unwrap();
        DiscreteProblem::new(Arc::new(BallGrid::new(ball, h).unwrap()), &h0, &phi).unwrap()
    }

    #[test]
    fn linear_case_reproduces_the_poisson_integral() {
        let mut errs = Vec::new();
        for h in [0.125, 0.0625] {
            let mut p = setup(h, 0.5, 0.05);
            let u = GridField::constant(p.grid().clone(), 1.0).unwrap();
            let tu = p.apply_t(&u, &NoReaction).unwrap();
            assert_eq!(tu, *p.harmonic());
            let q = QuadratureSpec::new(16, 96, 12, 1e-6).unwrap();
            let mut worst: f64 = 0.0;
            for (i, &x) in p.grid().nodes().iter().enumerate() {
                if x.norm() < 0.5 && i % 7 == 0 {
                    let pi = harmonic_extension(&p.grid().ball, |xi| p.boundary_value(xi), x, &q).unwrap();
                    worst = worst.max((tu.values()[i] - pi).abs());
                }
            }
            errs.push(worst);
        }
        // second order in the interior
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
    }

    #[test]
    fn constant_field_matches_radial_closed_form() {
        // u ≡ c: ½Δv = c^{-α}, v = φ on ∂B, so h_φ − v = c^{-α}(1 − |x|²)/3
        let mut errs = Vec::new();
        for h in [0.125, 0.0625] {
            let mut p = setup(h, 0.5, 0.05);
            let nl = Nonlinearity::new(0.5, 1.0).unwrap();
            let c: f64 = 2.0;
            let u = GridField::constant(p.grid().clone(), c).unwrap();
            let tu = p.apply_t(&u, &nl).unwrap();
            let w = p.harmonic().zip_map(&tu, |a, b| a - b).unwrap();
            let exact = GridField::from_fn(p.grid().clone(), |x| c.powf(-0.5) * (1.0 - x.norm2()) / 3.0).unwrap();
            errs.push(w.max_abs_diff(&exact).unwrap());
        }
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
        assert!(errs[1] < 1e-3, "{errs:?}");
    }

    #[test]
    fn t_is_order_preserving() {
        let mut p = setup(0.125, 0.5, 0.05);
        let nl = Nonlinearity::new(0.5, 1.0).unwrap();
        let u1 = p.h0_nodes().map(|h| h + 0.01);
        let u2 = u1.zip_map(p.harmonic(), |a, b| a.max(b) + 0.1).unwrap();
        let t1 = p.apply_t(&u1, &nl).unwrap();
        let t2 = p.apply_t(&u2, &nl).unwrap();
        assert!(t1.values().iter().zip(t2.values()).all(|(a, b)| a <= b));
    }

    #[test]
    fn residual_examples() {
        let mut p = setup(0.125, 0.5, 0.05);
        let hphi = p.harmonic().clone();
        assert!(p.residual(&hphi, &NoReaction).unwrap() < 1e-12);
        let nl = Nonlinearity::new(0.5, 1.0).unwrap();
        let v = p.apply_t(&hphi, &nl).unwrap();
        assert_eq!(v.max_abs_diff(&v).unwrap(), 0.0);
        let bad = GridField::constant(p.grid().clone(), -1.0).unwrap();
        match p.apply_t(&bad, &nl) {
            Err(Error::ConeBreach { location: Some(_), .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn picard_converges_and_stays_above_h0() {
        let mut p = setup(0.125, 8.0, 0.05);
        let nl = Nonlinearity::new(0.5, 1.0).unwrap();
        let (u, rep) = p.picard_solve(&nl, &PicardOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.final_residual() <= 1e-5 * u.sup_norm());
        assert_eq!(rep.clamp_count_tail, 0);
        assert!(rep.min_u_minus_h0 > 0.0);
        // f ≡ 0: one update reaches the fixed point
        let (_, lin) = p.picard_solve(&NoReaction, &PicardOptions::default()).unwrap();
        assert!(lin.converged && lin.iterations == 0);
    }

    #[test]
    fn picard_iterates_decrease_from_the_harmonic_extension() {
        let mut p = setup(0.125, 8.0, 0.05);
        let nl = Nonlinearity::new(0.5, 1.0).unwrap();
        let mut u = p.harmonic().clone();
        for _ in 0..5 {
            let next = p.apply_t(&u, &nl).unwrap();
            assert!(next.values().iter().zip(u.values()).all(|(a, b)| *a <= *b + 1e-12));
            u = next;
        }
    }

    #[test]
    fn negative_control_keeps_clamping() {
        let mut p = setup(0.125, 0.0, 0.0);
        let nl = Nonlinearity::new(0.5, 1.0).unwrap();
        let opts = PicardOptions {
            max_iter: 30,
            ..PicardOptions::default()
        };
        let (_, rep) = p.picard_solve(&nl, &opts).unwrap();
        assert!(!rep.converged);
        assert!(rep.clamp_count_tail > 0);
    }

    #[test]
    fn eps_disc_is_second_order_sized() {
        let p = setup(0.125, 0.5, 0.05);
        let e = fit_eps_disc(&p).unwrap();
        assert!(e.eps > 0.0 && e.eps < 0.05, "{e:?}");
        assert!(e.samples.iter().all(|s| s.1 <= e.c * s.0 * s.0 + 1e-15 && s.2 <= e.c * s.0 * s.0 + 1e-15));
    }
}
