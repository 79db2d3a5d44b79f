//! Uniform integrability of `y ↦ G(x, y) K(y)`: the mass `sup_x ∫_{A_n} G(x,·) K`
//! over sets `A_n` of vanishing volume.

use alloc::vec::Vec;

use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{BallDomain, Domain, Point};
use crate::kernels::{green_ball_unchecked, green_integral_over, integrate_about, QuadratureSpec, Window};
use crate::math::{fit_line, LineFit};
use crate::problem::SingularMajorant;

/// A nested family `A_1 ⊃ A_2 ⊃ …`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UiFamily {
    /// `A = B`, a single row.
    Full,
    /// `A_n = {dist(·, ∂B) < 2^{-n}}`, `n = 1..=n_max`.
    BoundaryShells { n_max: u32 },
    /// `A_n = B(center, r₀ 2^{-n})`, `n = 1..=n_max`.
    ///
    /// Probes other than `center` must stay at least `2 r₀` away from it, so
    /// that the integrand is smooth on every `A_n`; closer ones are skipped.
    InteriorBalls { center: Point, r0: f64, n_max: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UiRow {
    pub n: u32,
    /// Shell width or ball radius.
    pub size: f64,
    /// Lebesgue measure of `A_n`.
    pub measure: f64,
    pub value: f64,
    pub argmax: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UiTable {
    pub rows: Vec<UiRow>,
    /// Probes actually used.
    pub probes: usize,
}

impl UiTable {
    pub fn is_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].value <= w[0].value)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].value < w[0].value)
    }

    /// Last value over first value.
    pub fn decay_ratio(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.value / a.value,
            _ => f64::NAN,
        }
    }

    /// Fit of `log₂ value` against `log₂ size`.
    pub fn log_slope(&self) -> Option<LineFit> {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.size.log2()).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.value.log2()).collect();
        fit_line(&xs, &ys)
    }
}

pub fn ui_diagnostic(ball: &BallDomain, m: &SingularMajorant, family: &UiFamily, probes: &[Point], q: &QuadratureSpec) -> Result<UiTable> {
    if probes.iter().any(|&x| !ball.contains(x)) {
        return Err(Error::invalid("ui probes must be interior"));
    }
    let k = |y: Point| m.eval(y);
    let mut rows = Vec::new();
    let sup = |vals: &mut dyn Iterator<Item = Result<(f64, Point)>>| -> Result<(f64, Point)> {
        let mut best = (f64::NEG_INFINITY, Point::ORIGIN);
        for v in vals {
            let v = v?;
            if v.0 > best.0 {
                best = v;
            }
        }
        Ok(best)
    };
    let r = ball.radius;
    let mut used = probes.len();
    match *family {
        UiFamily::Full => {
            let (value, argmax) = sup(&mut probes.iter().map(|&x| Ok((green_integral_over(ball, x, &Window::full(), k, q)?, x))))?;
            rows.push(UiRow {
                n: 0,
                size: r,
                measure: ball.volume(),
                value,
                argmax,
            });
        }
        UiFamily::BoundaryShells { n_max } => {
            for n in 1..=n_max {
                let w = r * libm::ldexp(1.0, -(n as i32));
                let win = Window::boundary_shell(ball, w);
                let (value, argmax) = sup(&mut probes.iter().map(|&x| Ok((green_integral_over(ball, x, &win, k, q)?, x))))?;
                rows.push(UiRow {
                    n,
                    size: w,
                    measure: 4.0 / 3.0 * PI * (r.powi(3) - (r - w).powi(3)),
                    value,
                    argmax,
                });
            }
        }
        UiFamily::InteriorBalls { center, r0, n_max } => {
            if !(r0 > 0.0 && ball.contains(center) && ball.boundary_distance(center) > r0) {
                return Err(Error::invalid("interior balls must lie inside the domain"));
            }
            let mut pts: Vec<Point> = probes.iter().copied().filter(|&x| x != center && x.dist(center) >= 2.0 * r0).collect();
            pts.push(center);
            used = pts.len();
            for n in 1..=n_max {
                let rad = r0 * libm::ldexp(1.0, -(n as i32));
                let win = Window::around_pole(rad);
                let (value, argmax) = sup(&mut pts.iter().map(|&x| {
                    let v = integrate_about(ball, center, &win, q, |y| if y == x { 0.0 } else { green_ball_unchecked(ball, x, y) * k(y) });
                    Ok((v, x))
                }))?;
                rows.push(UiRow {
                    n,
                    size: rad,
                    measure: 4.0 / 3.0 * PI * rad.powi(3),
                    value,
                    argmax,
                });
            }
        }
    }
    Ok(UiTable { rows, probes: used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::meridian_point;
    use crate::geometry::CapSet;
    use crate::kernels::green_integral;
    use crate::problem::{H0Table, MinorantH0, Nonlinearity};
    use core::f64::consts::FRAC_PI_4;

    fn setup() -> (MinorantH0, SingularMajorant) {
        let h = MinorantH0::new(BallDomain::unit(), CapSet::new(FRAC_PI_4).unwrap(), Point::new(0.0, 0.0, 0.5)).unwrap();
        let m = SingularMajorant::new(Nonlinearity::new(0.5, 1.0).unwrap(), H0Table::build(&h, 6, 2, 128).unwrap());
        (h, m)
    }

    #[test]
    fn full_domain_is_the_plain_green_integral() {
        let (h, m) = setup();
        let q = QuadratureSpec::new(6, 16, 10, 1e-3).unwrap();
        let probes = [Point::ORIGIN, meridian_point(&h, 0.7, 0.2)];
        let t = ui_diagnostic(&h.ball, &m, &UiFamily::Full, &probes, &q).unwrap();
        let direct = probes.iter().map(|&x| green_integral(&h.ball, x, |y| m.eval(y), &q).unwrap()).fold(0.0, f64::max);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].value, direct);
    }

    #[test]
    fn nested_families_shrink() {
        let (h, m) = setup();
        let q = QuadratureSpec::new(6, 16, 10, 1e-3).unwrap();
        let probes = [meridian_point(&h, 0.75, 0.0), meridian_point(&h, 0.5, 1.0)];
        let shells = ui_diagnostic(&h.ball, &m, &UiFamily::BoundaryShells { n_max: 4 }, &probes, &q).unwrap();
        assert!(shells.is_strictly_decreasing(), "{shells:?}");
        let c = meridian_point(&h, 0.4, 0.5);
        let balls = ui_diagnostic(&h.ball, &m, &UiFamily::InteriorBalls { center: c, r0: 0.2, n_max: 4 }, &probes, &q).unwrap();
        assert!(balls.is_nonincreasing());
        let slope = balls.log_slope().unwrap().slope;
        assert!((slope - 2.0).abs() < 0.2, "{slope}");
    }
}
