//! Hybrid forward/backward Gauss-Seidel: block-Jacobi over the rank-local
//! diagonal blocks, with each block solved by a Gauss-Seidel sweep.
//!
//! With `A_pp = L_pp + D_pp + L_pp^T` the rank-local diagonal block, the
//! forward smoother uses `M = blockdiag(omega (L_pp + D_pp))` and the backward
//! smoother its transpose. Couplings between blocks only enter through the
//! residual. On a single rank this is plain damped Gauss-Seidel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::RankPartition;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmootherKind {
    HybridFgs,
    HybridBgs,
    /// `M = omega D`.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherSpec {
    pub kind: SmootherKind,
    pub sweeps: usize,
    pub omega: f64,
}

impl Default for SmootherSpec {
    fn default() -> Self {
        Self { kind: SmootherKind::HybridFgs, sweeps: 4, omega: 1.0 }
    }
}

impl SmootherSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::Config("smoother needs at least one sweep".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::Config(format!("smoother damping must be positive, got {}", self.omega)));
        }
        Ok(())
    }

    pub fn default_direction(&self) -> Direction {
        match self.kind {
            SmootherKind::HybridBgs => Direction::Backward,
            _ => Direction::Forward,
        }
    }
}

/// Smoother prepared for one matrix and one row-ownership map.
#[derive(Debug, Clone)]
pub struct BlockSmoother {
    spec: SmootherSpec,
    owner: Option<Vec<usize>>,
    inv_diag: Vec<f64>,
}

impl BlockSmoother {
    /// `owner[i]` is the rank owning row `i`; blocks are the sets of rows with
    /// equal owner, ordered by global index.
    pub fn new(a: &CsrMatrix, owner: &[usize], spec: SmootherSpec) -> Result<Self> {
        spec.validate()?;
        if !a.is_square() || owner.len() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "smoother: {}x{} matrix with {} owners",
                a.nrows(),
                a.ncols(),
                owner.len()
            )));
        }
        let diag = a.diagonal();
        if let Some(row) = diag.iter().position(|&d| d == 0.0) {
            return Err(Error::ZeroDiagonal { row });
        }
        let single = owner.windows(2).all(|w| w[0] == w[1]);
        Ok(Self {
            spec,
            owner: (!single).then(|| owner.to_vec()),
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
        })
    }

    pub fn spec(&self) -> &SmootherSpec {
        &self.spec
    }

    #[inline]
    fn same_block(&self, i: usize, j: usize) -> bool {
        self.owner.as_ref().is_none_or(|o| o[i] == o[j])
    }

    /// Solves `M' delta = rho` in place where `M'` is `L + D` (forward) or
    /// `U + D` (backward) restricted to the diagonal blocks, or `D` for Jacobi.
    fn block_solve(&self, a: &CsrMatrix, direction: Direction, delta: &mut [f64]) {
        let n = delta.len();
        match (self.spec.kind, direction) {
            (SmootherKind::Jacobi, _) => {
                for (d, inv) in delta.iter_mut().zip(&self.inv_diag) {
                    *d *= inv;
                }
            }
            (_, Direction::Forward) => {
                for i in 0..n {
                    let (cols, vals) = a.row(i);
                    let mut s = delta[i];
                    for (&j, &v) in cols.iter().zip(vals) {
                        if j >= i {
                            break;
                        }
                        if self.same_block(i, j) {
                            s -= v * delta[j];
                        }
                    }
                    delta[i] = s * self.inv_diag[i];
                }
            }
            (_, Direction::Backward) => {
                for i in (0..n).rev() {
                    let (cols, vals) = a.row(i);
                    let mut s = delta[i];
                    for (&j, &v) in cols.iter().zip(vals).rev() {
                        if j <= i {
                            break;
                        }
                        if self.same_block(i, j) {
                            s -= v * delta[j];
                        }
                    }
                    delta[i] = s * self.inv_diag[i];
                }
            }
        }
    }

    /// `sweeps` steps of `x <- x + M^{-1} (b - A x)`. When `x_is_zero` the first
    /// residual is `b` and the matrix product is skipped.
    pub fn smooth(
        &self,
        a: &CsrMatrix,
        b: &[f64],
        x: &mut [f64],
        direction: Direction,
        sweeps: usize,
        x_is_zero: bool,
    ) {
        let scale = 1.0 / self.spec.omega;
        let mut rho = vec![0.0; b.len()];
        for sweep in 0..sweeps {
            if sweep == 0 && x_is_zero {
                rho.copy_from_slice(b);
            } else {
                a.residual_into(b, x, &mut rho);
            }
            self.block_solve(a, direction, &mut rho);
            if scale == 1.0 {
                for (xi, d) in x.iter_mut().zip(&rho) {
                    *xi += d;
                }
            } else {
                for (xi, d) in x.iter_mut().zip(&rho) {
                    *xi += scale * d;
                }
            }
        }
    }

    /// `z = (smoother)(r)` from a zero initial guess with the configured sweeps.
    pub fn apply(&self, a: &CsrMatrix, r: &[f64], direction: Direction) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        self.smooth(a, r, &mut z, direction, self.spec.sweeps, true);
        z
    }
}

/// `spec.sweeps` hybrid Gauss-Seidel steps for `A z = r` from `z = 0`, blocks
/// taken from `part`.
pub fn hybrid_gs_apply(
    a: &CsrMatrix,
    part: &RankPartition,
    spec: &SmootherSpec,
    r: &[f64],
    direction: Direction,
) -> Result<Vec<f64>> {
    if r.len() != a.nrows() || part.n() != a.nrows() {
        return Err(Error::DimensionMismatch("hybrid_gs_apply: sizes differ".into()));
    }
    let s = BlockSmoother::new(a, part.owner(), *spec)?;
    Ok(s.apply(a, r, direction))
}
