//! Jacobi-preconditioned conjugate gradients for `A x = b` on a [`BallGrid`].

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::grid::BallGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// `‖b − Ax‖₂ / ‖b‖₂` at exit.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve in place, starting from the contents of `x`.
pub fn pcg(grid: &BallGrid, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgReport> {
    let n = grid.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = grid.diag().iter().map(|d| 1.0 / d).collect();
    let mut r = alloc::vec![0.0; n];
    grid.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = alloc::vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(CgReport {
                iterations: it,
                relative_residual: res,
            });
        }
        grid.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
    }
    if res <= tol {
        Ok(CgReport {
            iterations: max_iter,
            relative_residual: res,
        })
    } else {
        Err(Error::LinearSolve {
            iterations: max_iter,
            residual: res,
        })
    }
}
