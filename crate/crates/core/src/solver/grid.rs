//! Cartesian lattice over the ball, the discrete operator `A = −½Δ_h` and
//! fields on the interior nodes.
//!
//! Near `∂B` an axis arm from a node may reach the sphere at `θh`, `0 < θ ≤ 1`,
//! before the next lattice node. The arm then contributes `1/(2hθh)` to the
//! diagonal and `φ(ξ)/(2hθh)` to the right-hand side, with `ξ` the crossing
//! point. This is the symmetric ghost-value treatment: the matrix stays a
//! symmetric M-matrix, so the discrete maximum principle holds and conjugate
//! gradients apply.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{BallDomain, Domain, Point, DIM};

/// A lattice arm that ends on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryArm {
    pub node: u32,
    /// `1/(2h·arm)`.
    pub coef: f64,
    /// Where the arm meets `∂B`.
    pub point: Point,
}

/// Lattice `c + h·(i − m, j − m, k − m)`, `0 ≤ i, j, k ≤ 2m`, restricted to the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallGrid {
    pub ball: BallDomain,
    h: f64,
    m: usize,
    nodes: Vec<Point>,
    lattice: Vec<i32>,
    neighbors: Vec<[i32; 2 * DIM]>,
    diag: Vec<f64>,
    arms: Vec<BoundaryArm>,
}

/// Nodes closer than this fraction of `h` to `∂B` are treated as boundary points.
const MIN_ARM: f64 = 1e-6;

impl BallGrid {
    pub fn new(ball: BallDomain, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < ball.radius) {
            return Err(Error::invalid("grid spacing must lie in (0, R)"));
        }
        let m = (ball.radius / h).ceil() as usize + 1;
        let side = 2 * m + 1;
        let at = |i: usize, j: usize, k: usize| {
            ball.center + Point::new(i as f64 - m as f64, j as f64 - m as f64, k as f64 - m as f64) * h
        };
        let mut lattice = alloc::vec![-1i32; side * side * side];
        let mut nodes = Vec::new();
        for i in 0..side {
            for j in 0..side {
                for k in 0..side {
                    let p = at(i, j, k);
                    if ball.contains(p) && ball.boundary_distance(p) > MIN_ARM * h {
                        lattice[(i * side + j) * side + k] = nodes.len() as i32;
                        nodes.push(p);
                    }
                }
            }
        }
        let off = 1.0 / (2.0 * h * h);
        let mut neighbors = Vec::with_capacity(nodes.len());
        let mut diag = Vec::with_capacity(nodes.len());
        let mut arms = Vec::new();
        for (n, &p) in nodes.iter().enumerate() {
            let idx = Self::index_of(&ball, h, m, p);
            let mut nb = [-1i32; 2 * DIM];
            let mut d = 0.0;
            for axis in 0..DIM {
                for (s, sign) in [-1.0f64, 1.0].iter().enumerate() {
                    let mut q = idx;
                    q[axis] = (q[axis] as isize + *sign as isize) as usize;
                    let id = lattice[(q[0] * side + q[1]) * side + q[2]];
                    if id >= 0 {
                        nb[2 * axis + s] = id;
                        d += off;
                    } else {
                        // distance along ±e_axis to the sphere
                        let v = p - ball.center;
                        let b = sign * v.0[axis];
                        let c = v.norm2() - ball.radius * ball.radius;
                        let t = (-b + (b * b - c).max(0.0).sqrt()).clamp(MIN_ARM * h, h);
                        let coef = 1.0 / (2.0 * h * t);
                        let mut xi = p;
                        xi.0[axis] += sign * t;
                        d += coef;
                        arms.push(BoundaryArm {
                            node: n as u32,
                            coef,
                            point: xi,
                        });
                    }
                }
            }
            neighbors.push(nb);
            diag.push(d);
        }
        Ok(Self {
            ball,
            h,
            m,
            nodes,
            lattice,
            neighbors,
            diag,
            arms,
        })
    }

    fn index_of(ball: &BallDomain, h: f64, m: usize, p: Point) -> [usize; DIM] {
        core::array::from_fn(|a| ((p.0[a] - ball.center.0[a]) / h + m as f64).round() as usize)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn arms(&self) -> &[BoundaryArm] {
        &self.arms
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `y = A x` with `A = −½Δ_h` and zero boundary values.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let off = 1.0 / (2.0 * self.h * self.h);
        for (n, (nb, yn)) in self.neighbors.iter().zip(y.iter_mut()).enumerate() {
            let mut acc = self.diag[n] * x[n];
            for &j in nb {
                if j >= 0 {
                    acc -= off * x[j as usize];
                }
            }
            *yn = acc;
        }
    }

    /// Right-hand side contributed by boundary values `φ`: `Σ_arms φ(ξ)/(2h·arm)`.
    pub fn boundary_rhs(&self, phi: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut b = alloc::vec![0.0; self.len()];
        for arm in &self.arms {
            b[arm.node as usize] += arm.coef * phi(arm.point);
        }
        b
    }

    /// `½Δ_h v` at interior nodes, for `v` given at nodes and `φ` on the boundary.
    pub fn half_laplacian(&self, v: &[f64], phi: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut av = alloc::vec![0.0; self.len()];
        self.apply(v, &mut av);
        let b = self.boundary_rhs(phi);
        av.iter().zip(&b).map(|(a, b)| b - a).collect()
    }

    /// Trilinear interpolation of node values; lattice points that are not
    /// interior nodes take `exterior(point)`.
    pub fn lattice_field(&self, values: &[f64], exterior: impl Fn(Point) -> f64) -> LatticeField {
        let side = 2 * self.m + 1;
        let mut full = Vec::with_capacity(self.lattice.len());
        for i in 0..side {
            for j in 0..side {
                for k in 0..side {
                    let id = self.lattice[(i * side + j) * side + k];
                    full.push(if id >= 0 {
                        values[id as usize]
                    } else {
                        let p = self.ball.center
                            + Point::new(i as f64 - self.m as f64, j as f64 - self.m as f64, k as f64 - self.m as f64) * self.h;
                        exterior(p)
                    });
                }
            }
        }
        LatticeField {
            origin: self.ball.center - Point::new(1.0, 1.0, 1.0) * (self.m as f64 * self.h),
            h: self.h,
            side,
            values: full,
        }
    }
}

/// Values on the full lattice, for trilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    origin: Point,
    h: f64,
    side: usize,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn eval(&self, y: Point) -> f64 {
        let mut base = [0usize; DIM];
        let mut frac = [0.0; DIM];
        for a in 0..DIM {
            let s = ((y.0[a] - self.origin.0[a]) / self.h).clamp(0.0, (self.side - 1) as f64);
            let i = (s.floor() as usize).min(self.side - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8usize {
            let mut w = 1.0;
            let mut idx = 0;
            for a in 0..DIM {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx = idx * self.side + base[a] + bit;
            }
            acc += w * self.values[idx];
        }
        acc
    }
}

/// Values at the interior nodes of a [`BallGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Arc<BallGrid>,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Arc<BallGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::NonConformable);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<BallGrid>, f: impl FnMut(Point) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().copied().map(f).collect();
        Self::new(grid, values)
    }

    pub fn try_from_fn(grid: Arc<BallGrid>, mut f: impl FnMut(Point) -> Result<f64>) -> Result<Self> {
        let values = grid.nodes().iter().map(|&p| f(p)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<BallGrid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, alloc::vec![c; n])
    }

    pub fn grid(&self) -> &Arc<BallGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn conformable(&self, other: &GridField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn zip_map(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField> {
        if !self.conformable(other) {
            return Err(Error::NonConformable);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest value and the node where it is attained.
    pub fn argmin(&self) -> Option<(f64, Point)> {
        self.values
            .iter()
            .zip(self.grid.nodes())
            .min_by(|a, b| a.0.total_cmp(b.0))
            .map(|(&v, &p)| (v, p))
    }

    pub fn max_abs_diff(&self, other: &GridField) -> Result<f64> {
        Ok(self.zip_map(other, |a, b| a - b)?.sup_norm())
    }
}
