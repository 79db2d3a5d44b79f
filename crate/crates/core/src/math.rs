//! Small numerical building blocks: Gauss-Legendre rules, graded panel
//! breakpoints, the complete elliptic integral of the second kind and
//! least-squares line fits.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n`, starting from the usual cosine guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-15 {
                    let (_, d) = legendre_with_derivative(n, z);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f` with the rule mapped onto `[a, b]`.
    #[inline]
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * t);
        }
        acc * half
    }

    /// Sum of the rule over consecutive panels `[bps[i], bps[i+1]]`.
    pub fn integrate_panels(&self, bps: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        bps.windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let nf = n as f64;
    let d = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Breakpoints of `[a, b]` refined geometrically (ratio 2) toward either end.
///
/// `w_a` / `w_b` are the widths of the smallest panel touching `a` / `b`;
/// `None` leaves that end unrefined. Grading stops at the midpoint.
pub fn graded_breakpoints(a: f64, b: f64, w_a: Option<f64>, w_b: Option<f64>, out: &mut Vec<f64>) {
    out.clear();
    let len = b - a;
    out.push(a);
    if len <= 0.0 {
        out.push(b);
        return;
    }
    let mid = a + 0.5 * len;
    let usable = |w: Option<f64>| w.filter(|&w| w > 0.0 && w < 0.5 * len);
    if let Some(w) = usable(w_a) {
        let mut t = w;
        while a + t < mid {
            out.push(a + t);
            t *= 2.0;
        }
    }
    out.push(mid);
    if let Some(w) = usable(w_b) {
        let start = out.len();
        let mut t = w;
        while b - t > mid {
            out.push(b - t);
            t *= 2.0;
        }
        out[start..].reverse();
    }
    out.push(b);
}

/// Breakpoints of `[a, b]` refined geometrically toward an interior focus `p`.
pub fn graded_about(a: f64, b: f64, p: f64, w: f64, out: &mut Vec<f64>) {
    out.clear();
    let p = p.clamp(a, b);
    let mut left = Vec::new();
    let mut right = Vec::new();
    if p > a {
        graded_breakpoints(a, p, None, Some(w), &mut left);
    } else {
        left.push(a);
    }
    if b > p {
        graded_breakpoints(p, b, Some(w), None, &mut right);
    }
    out.extend_from_slice(&left);
    if !right.is_empty() {
        out.extend_from_slice(&right[1..]);
    }
}

/// Complete elliptic integral of the second kind `E(m)`, taking the
/// complementary parameter `m₁ = 1 − m` so that `m → 1` loses no digits.
///
/// Arithmetic-geometric mean with the Legendre correction sum.
pub fn elliptic_e_complement(m1: f64) -> f64 {
    let m1 = m1.clamp(0.0, 1.0);
    if m1 == 0.0 {
        return 1.0;
    }
    let mut a = 1.0;
    let mut b = m1.sqrt();
    let mut sum = 0.5 * (1.0 - m1);
    let mut pow = 0.5;
    for _ in 0..40 {
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        pow *= 2.0;
        sum += pow * c * c;
        a = an;
        b = bn;
        if c.abs() < 1e-16 * a {
            break;
        }
    }
    PI / (2.0 * a) * (1.0 - sum)
}

/// Least-squares line `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 for an exact fit (and for constant data).
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..12 {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.weights().iter().sum();
            assert_relative_eq!(wsum, 2.0, epsilon = 1e-13);
            // degree 2n - 1 is exact
            let deg = 2 * n - 1;
            let got = rule.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert_relative_eq!(got, 1.0 / (deg as f64 + 1.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn elliptic_e_reference_values() {
        // E(0) = π/2, E(1) = 1, E(1/2) = 1.3506438810476755
        assert_relative_eq!(elliptic_e_complement(1.0), PI / 2.0, epsilon = 1e-14);
        assert_relative_eq!(elliptic_e_complement(0.0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(elliptic_e_complement(0.5), 1.350_643_881_047_675_5, epsilon = 1e-13);
    }

    #[test]
    fn elliptic_e_matches_direct_quadrature() {
        let rule = GaussLegendre::new(40);
        for &m in &[0.1, 0.3, 0.7, 0.9] {
            let direct = rule.integrate(0.0, PI / 2.0, |t| (1.0 - m * t.sin().powi(2)).sqrt());
            assert_relative_eq!(elliptic_e_complement(1.0 - m), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn graded_breakpoints_are_sorted_and_cover() {
        let mut bps = Vec::new();
        graded_breakpoints(0.0, 1.0, Some(1e-3), Some(1e-4), &mut bps);
        assert_eq!(bps[0], 0.0);
        assert_eq!(*bps.last().unwrap(), 1.0);
        assert!(bps.windows(2).all(|w| w[1] > w[0]));
        assert!((bps[1] - 1e-3).abs() < 1e-15);
        assert!((1.0 - bps[bps.len() - 2] - 1e-4).abs() < 1e-15);

        graded_about(0.0, 2.0, 0.5, 1e-2, &mut bps);
        assert!(bps.windows(2).all(|w| w[1] > w[0]));
        assert!(bps.iter().any(|&b| (b - 0.5).abs() < 1e-15));
    }

    #[test]
    fn panels_resolve_endpoint_singularity() {
        let rule = GaussLegendre::new(8);
        let mut bps = Vec::new();
        graded_breakpoints(0.0, 1.0, None, Some(1.0 / 65536.0), &mut bps);
        // ∫_0^1 (1 - x)^{-1/2} dx = 2
        let got = rule.integrate_panels(&bps, |x| (1.0 - x).powf(-0.5));
        assert_relative_eq!(got, 2.0, epsilon = 1e-2);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let fit = fit_line(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.intercept, 1.0, epsilon = 1e-14);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-14);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }
}
