//! Conjugate gradient and flexible conjugate gradient drivers.
//!
//! Convergence is measured as `||b - A x||_2 / ||b - A x_0||_2 <= tol`. The
//! recurrence residual is replaced by the true residual every
//! `true_residual_every` iterations.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, CsrMatrix};

/// `z = B r` for some approximation `B` of `A^{-1}`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()>;

    fn name(&self) -> String {
        "custom".into()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }

    fn name(&self) -> String {
        "none".into()
    }
}

#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let d = a.diagonal();
        if let Some(row) = d.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroDiagonal { row });
        }
        Ok(Self { inv_diag: d.iter().map(|v| 1.0 / v).collect() })
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
        Ok(())
    }

    fn name(&self) -> String {
        "jacobi".into()
    }
}

/// Wraps a closure as a preconditioner.
pub struct FnPreconditioner<F>(pub F);

impl<F> Preconditioner for FnPreconditioner<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        (self.0)(r, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgPreconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Number of previous directions the new FCG direction is
    /// A-orthogonalized against.
    pub fcg_window: usize,
    pub true_residual_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-3, max_iters: 1000, fcg_window: 1, true_residual_every: 25 }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64, max_iters: usize) -> Self {
        Self { tol, max_iters, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.fcg_window == 0 {
            return Err(Error::Config("FCG window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub preconditioner: String,
    pub tol: f64,
    /// Always `"initial"`: residuals are relative to `||b - A x_0||`.
    pub residual_normalization: String,
    pub iterations: usize,
    /// Relative residual before the first iteration (1.0) and after each one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

impl SolveReport {
    fn new(method: &str, preconditioner: String, tol: f64) -> Self {
        Self {
            method: method.into(),
            preconditioner,
            tol,
            residual_normalization: "initial".into(),
            iterations: 0,
            residual_history: vec![1.0],
            converged: false,
            setup_seconds: 0.0,
            solve_seconds: 0.0,
        }
    }

    pub fn final_relative_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&1.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_dims(a: &CsrMatrix, b: &[f64], x0: &[f64]) -> Result<()> {
    if !a.is_square() || a.nrows() != b.len() || b.len() != x0.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} system with rhs {} and initial guess {}",
            a.nrows(),
            a.ncols(),
            b.len(),
            x0.len()
        )));
    }
    Ok(())
}

/// Unpreconditioned or Jacobi-preconditioned CG.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    prec: CgPreconditioner,
    opts: &SolveOptions,
    x0: &[f64],
) -> Result<(Vec<f64>, SolveReport)> {
    match prec {
        CgPreconditioner::None => pcg_solve(a, b, &IdentityPreconditioner, opts, x0),
        CgPreconditioner::Jacobi => pcg_solve(a, b, &JacobiPreconditioner::new(a)?, opts, x0),
    }
}

pub fn pcg_solve(
    a: &CsrMatrix,
    b: &[f64],
    prec: &dyn Preconditioner,
    opts: &SolveOptions,
    x0: &[f64],
) -> Result<(Vec<f64>, SolveReport)> {
    pcg_solve_monitored(a, b, prec, opts, x0, &mut |_, _| {})
}

/// Preconditioned CG; `monitor(k, x_k)` is called after every iteration.
pub fn pcg_solve_monitored(
    a: &CsrMatrix,
    b: &[f64],
    prec: &dyn Preconditioner,
    opts: &SolveOptions,
    x0: &[f64],
    monitor: &mut dyn FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, SolveReport)> {
    opts.validate()?;
    check_dims(a, b, x0)?;
    let start = Instant::now();
    let n = b.len();
    let mut report = SolveReport::new("cg", prec.name(), opts.tol);
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.residual_into(b, &x, &mut r);
    let r0 = norm2(&r);
    if r0 == 0.0 {
        report.converged = true;
        report.solve_seconds = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }
    let mut z = vec![0.0; n];
    prec.apply(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for k in 1..=opts.max_iters {
        a.spmv_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Breakdown { iteration: k, value: pq });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        if opts.true_residual_every > 0 && k % opts.true_residual_every == 0 {
            a.residual_into(b, &x, &mut r);
        } else {
            axpy(-alpha, &q, &mut r);
        }
        let rel = norm2(&r) / r0;
        report.iterations = k;
        report.residual_history.push(rel);
        monitor(k, &x);
        if rel <= opts.tol {
            report.converged = true;
            break;
        }
        prec.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    report.solve_seconds = start.elapsed().as_secs_f64();
    Ok((x, report))
}

/// Flexible CG: each new direction is A-orthogonalized against the last
/// `opts.fcg_window` directions, so a variable or nonlinear preconditioner
/// is tolerated.
pub fn fcg_solve(
    a: &CsrMatrix,
    b: &[f64],
    prec: &dyn Preconditioner,
    opts: &SolveOptions,
    x0: &[f64],
) -> Result<(Vec<f64>, SolveReport)> {
    fcg_solve_monitored(a, b, prec, opts, x0, &mut |_, _| {})
}

pub fn fcg_solve_monitored(
    a: &CsrMatrix,
    b: &[f64],
    prec: &dyn Preconditioner,
    opts: &SolveOptions,
    x0: &[f64],
    monitor: &mut dyn FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, SolveReport)> {
    opts.validate()?;
    check_dims(a, b, x0)?;
    let start = Instant::now();
    let n = b.len();
    let mut report = SolveReport::new("fcg", prec.name(), opts.tol);
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.residual_into(b, &x, &mut r);
    let r0 = norm2(&r);
    if r0 == 0.0 {
        report.converged = true;
        report.solve_seconds = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }
    // (d, A d, d^T A d) for the most recent directions
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.fcg_window);
    let mut z = vec![0.0; n];
    for k in 1..=opts.max_iters {
        prec.apply(&r, &mut z)?;
        let mut d = z.clone();
        for (dj, qj, djqj) in &history {
            let c = dot(&z, qj) / djqj;
            axpy(-c, dj, &mut d);
        }
        // recycle the buffer of the direction leaving the window
        let mut q = if history.len() == opts.fcg_window {
            history.pop_front().expect("full window").1
        } else {
            vec![0.0; n]
        };
        a.spmv_into(&d, &mut q);
        let dq = dot(&d, &q);
        if !(dq > 0.0) {
            return Err(Error::Breakdown { iteration: k, value: dq });
        }
        let alpha = dot(&d, &r) / dq;
        axpy(alpha, &d, &mut x);
        if opts.true_residual_every > 0 && k % opts.true_residual_every == 0 {
            a.residual_into(b, &x, &mut r);
        } else {
            axpy(-alpha, &q, &mut r);
        }
        history.push_back((d, q, dq));
        let rel = norm2(&r) / r0;
        report.iterations = k;
        report.residual_history.push(rel);
        monitor(k, &x);
        if rel <= opts.tol {
            report.converged = true;
            break;
        }
    }
    report.solve_seconds = start.elapsed().as_secs_f64();
    Ok((x, report))
}
