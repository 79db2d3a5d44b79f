use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use sbvp_core::analysis::{bhp_check, c1_probe_points, c1_ratio, excursion_batch, excursion_stats, CubeRegion, C1Probes, ExcursionSetup};
use sbvp_core::kernels::green_integral;
use sbvp_core::problem::Perturbation;
use sbvp_core::solver::{fit_eps_disc, mc_t_at_point, DiscreteProblem};
use sbvp_core::stochastic::wos_occupation;
use sbvp_core::{BallDomain, BallGrid, BoundaryData, CapSet, H0Table, MinorantH0, Nonlinearity, PathConfig, PicardOptions, Point, QuadratureSpec, RngStream, SingularMajorant};

fn h0() -> MinorantH0 {
    MinorantH0::new(BallDomain::unit(), CapSet::new(FRAC_PI_4).unwrap(), Point::new(0.0, 0.0, 0.5)).unwrap()
}

#[test]
fn occupation_of_the_majorant_agrees_with_quadrature() {
    let h = h0();
    let m = SingularMajorant::new(Nonlinearity::new(0.5, 1.0).unwrap(), H0Table::new(&h).unwrap());
    let q = QuadratureSpec::default();
    let cfg = PathConfig::new(1e-3, 1e-5, 1_000_000).unwrap();
    let mut rng = RngStream::new(4, 0);
    for x in [Point::new(0.0, 0.0, -0.75), Point::new(0.3, 0.0, 0.2)] {
        let quad = green_integral(&h.ball, x, |y| m.eval(y), &q).unwrap();
        let mc = wos_occupation(&h.ball, x, |y| m.eval(y), 40_000, &cfg, &mut rng).unwrap();
        assert!(mc.agrees_with(quad, 3.5, 1e-3 * quad), "{quad} vs {mc:?}");
    }
}

#[test]
fn coarse_solve_sits_in_the_sandwich_and_matches_walks() {
    let h = h0();
    let nl = Nonlinearity::new(0.5, 1.0).unwrap();
    let m = SingularMajorant::new(nl, H0Table::new(&h).unwrap());
    // a C1 large enough for this grid, from the deepest probes on the axis
    let q = QuadratureSpec::new(6, 24, 12, 1e-3).unwrap();
    let probes = C1Probes { k_max: 6, angles: 4, cap_angles: 2 };
    let c1 = c1_probe_points(&h, &probes)
        .into_iter()
        .map(|x| c1_ratio(&h, &|y| m.eval(y), x, &q).unwrap().ratio)
        .fold(0.0, f64::max);
    assert!(c1 > 20.0 && c1 < 40.0, "{c1}");

    let grid = Arc::new(BallGrid::new(h.ball, 0.125).unwrap());
    let phi = BoundaryData::new(c1, 0.05, Perturbation::Constant).unwrap();
    let mut p1 = DiscreteProblem::new(grid.clone(), &h, &phi).unwrap();
    let (u1, rep) = p1.picard_solve(&nl, &PicardOptions::default()).unwrap();
    assert!(rep.converged && rep.clamp_count_tail == 0);
    let eps = fit_eps_disc(&p1).unwrap().eps;
    assert!(rep.min_u_minus_h0 >= -eps);

    let mut p2 = DiscreteProblem::with_h0_nodes(&h, &phi.scaled(2.0), p1.h0_nodes().clone()).unwrap();
    let (u2, _) = p2.picard_solve(&nl, &PicardOptions::default()).unwrap();
    let all = CubeRegion { center: Point::ORIGIN, half_width: 1.0 };
    let e1 = phi.extension(&h, h.x0).unwrap();
    let e2 = phi.scaled(2.0).extension(&h, h.x0).unwrap();
    let r = bhp_check(&p1, &u1, &p2, &u2, &all, 2.0 * eps, e1, e2).unwrap();
    assert!(r.holds(), "{r:?}");

    let cfg = PathConfig::new(1e-3, 1e-4, 1_000_000).unwrap();
    let x = Point::ORIGIN;
    let i = grid.nodes().iter().position(|&p| p == x).unwrap();
    let mc = mc_t_at_point(&p1, &u1, &nl, x, 20_000, &cfg, &mut RngStream::new(8, 0)).unwrap();
    assert!(mc.agrees_with(u1.values()[i], 3.0, eps), "{} vs {mc:?}", u1.values()[i]);
}

#[test]
fn excursion_tallies_reproduce_per_seed() {
    let setup = ExcursionSetup::new(Point::ORIGIN, 6).unwrap();
    let cfg = PathConfig::new(1e-3, 1e-4, 10_000_000).unwrap().with_adaptive(0.02).unwrap();
    let run = |seed| excursion_batch(&setup, 300, &cfg, &mut RngStream::new(seed, 0), 0.01).unwrap();
    let (a, b, c) = (run(1), run(1), run(2));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let rep = excursion_stats(&a, 2..=5, 20, 0.6).unwrap();
    assert!(rep.survival.iter().all(|s| s.is_nonincreasing() && s.rho > 0.0 && s.rho < 1.0));
}
