//! V-cycle application of an [`AmgHierarchy`] and the coarsest-level solver.

use crate::config::{CoarseMethod, CoarsestSolverSpec};
use crate::dense::DenseCholesky;
use crate::error::{Error, Result};
use crate::hierarchy::AmgHierarchy;
use crate::ilu::IluFactor;
use crate::krylov::{fcg_solve, Preconditioner, SolveOptions};
use crate::partition::RankPartition;
use crate::smoother::Direction;
use crate::sparse::CsrMatrix;

/// Block-Jacobi with an ILU factorization of each rank's diagonal block.
#[derive(Debug, Clone)]
pub struct BlockJacobiIlu {
    blocks: Vec<(Vec<usize>, IluFactor)>,
}

impl BlockJacobiIlu {
    pub fn new(a: &CsrMatrix, part: &RankPartition, level: usize) -> Result<Self> {
        let blocks = part
            .diagonal_blocks(a)
            .iter()
            .enumerate()
            .filter(|(p, _)| !part.local_rows(*p).is_empty())
            .map(|(p, block)| {
                let rows = part.local_rows(p).to_vec();
                let f = IluFactor::new(block, level).map_err(|e| match e {
                    Error::ZeroPivot { row } => Error::ZeroPivot { row: rows[row] },
                    e => e,
                })?;
                Ok((rows, f))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }
}

impl Preconditioner for BlockJacobiIlu {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let mut local = Vec::new();
        for (rows, f) in &self.blocks {
            local.clear();
            local.extend(rows.iter().map(|&i| r[i]));
            f.solve_in_place(&mut local);
            for (&i, &v) in rows.iter().zip(&local) {
                z[i] = v;
            }
        }
        Ok(())
    }

    fn name(&self) -> String {
        "block_jacobi_ilu".into()
    }
}

#[derive(Debug, Clone)]
pub enum CoarseSolver {
    Fcg { prec: BlockJacobiIlu, opts: SolveOptions },
    Exact(DenseCholesky),
}

impl CoarseSolver {
    pub fn new(a: &CsrMatrix, owner: &[usize], n_ranks: usize, spec: &CoarsestSolverSpec) -> Result<Self> {
        match spec.method {
            CoarseMethod::Exact => Ok(CoarseSolver::Exact(DenseCholesky::new(a)?)),
            CoarseMethod::Fcg => {
                let part = RankPartition::from_owner(owner.to_vec(), n_ranks)?;
                Ok(CoarseSolver::Fcg {
                    prec: BlockJacobiIlu::new(a, &part, spec.ilu_level)?,
                    opts: SolveOptions::with_tol(spec.rel_tol, spec.max_iters),
                })
            }
        }
    }

    /// Approximate solution of `A x = b`; hitting the iteration cap is not an
    /// error.
    pub fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            CoarseSolver::Exact(c) => Ok(c.solve(b)),
            CoarseSolver::Fcg { prec, opts } => {
                let (x, _) = fcg_solve(a, b, prec, opts, &vec![0.0; b.len()])?;
                Ok(x)
            }
        }
    }
}

fn opposite(d: Direction) -> Direction {
    match d {
        Direction::Forward => Direction::Backward,
        Direction::Backward => Direction::Forward,
    }
}

fn cycle(h: &AmgHierarchy, l: usize, b: &[f64]) -> Result<Vec<f64>> {
    let Some(level) = h.levels.get(l) else {
        return h.coarse_solver.solve(&h.coarsest, b);
    };
    let spec = level.smoother.spec();
    let pre = spec.default_direction();
    let mut x = vec![0.0; b.len()];
    level.smoother.smooth(&level.a, b, &mut x, pre, spec.sweeps, true);
    let mut r = vec![0.0; b.len()];
    level.a.residual_into(b, &x, &mut r);
    let mut rc = vec![0.0; level.p.n_coarse()];
    level.r.spmv_into(&r, &mut rc);
    let ec = cycle(h, l + 1, &rc)?;
    let mut e = vec![0.0; b.len()];
    level.p.p.spmv_into(&ec, &mut e);
    for (xi, ei) in x.iter_mut().zip(&e) {
        *xi += ei;
    }
    level.smoother.smooth(&level.a, b, &mut x, opposite(pre), spec.sweeps, false);
    Ok(x)
}

/// One V-cycle for `A z = r` from `z = 0`.
pub fn v_cycle_apply(h: &AmgHierarchy, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != h.matrix(0).nrows() {
        return Err(Error::DimensionMismatch(format!(
            "V-cycle on a vector of length {} for {} unknowns",
            r.len(),
            h.matrix(0).nrows()
        )));
    }
    cycle(h, 0, r)
}

impl Preconditioner for AmgHierarchy {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(&v_cycle_apply(self, r)?);
        Ok(())
    }

    fn name(&self) -> String {
        self.config.label.to_string()
    }
}
