//! Unpreconditioned conjugate gradient for symmetric positive definite systems.

use ndarray::Array2;

use crate::error::{Error, Result};

/// A symmetric positive definite operator `y = A x`.
pub trait LinearOperator {
    /// Number of unknowns.
    fn size(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for Array2<f64> {
    fn size(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (row, out) in self.rows().into_iter().zip(y.iter_mut()) {
            *out = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||b - A x|| / ||b||` at exit (0 when `b` vanishes).
    pub relative_residual: f64,
}

/// Solves `A x = b` from the initial guess `x0`.
///
/// Stops once the recursively updated residual satisfies
/// `||r|| <= tol * ||b||`, then verifies it against the true residual.
pub fn cg_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<CgSolution> {
    let n = a.size();
    if b.len() != n || x0.len() != n {
        return Err(Error::invalid("right-hand side does not match operator size"));
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let threshold = tol * b_norm;

    let mut x = x0;
    let mut ap = vec![0.0; n];
    a.apply(&x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let mut iterations = 0;

    while rs.sqrt() > threshold {
        if iterations == max_iters {
            return Err(Error::Solver { iterations, residual: rs.sqrt() / b_norm });
        }
        a.apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 || !curvature.is_finite() {
            return Err(Error::Solver { iterations, residual: rs.sqrt() / b_norm });
        }
        let step = rs / curvature;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += step * pi;
            *ri -= step * api;
        }
        let rs_next = dot(&r, &r);
        let beta = rs_next / rs;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rs = rs_next;
        iterations += 1;
    }

    a.apply(&x, &mut ap);
    let true_residual = b.iter().zip(&ap).map(|(bi, ai)| (bi - ai).powi(2)).sum::<f64>().sqrt();
    Ok(CgSolution { x, iterations, relative_residual: true_residual / b_norm })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
